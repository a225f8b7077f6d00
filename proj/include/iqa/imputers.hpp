#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iqa/estimators.hpp"
#include "iqa/table.hpp"

namespace iqa {

enum class ImputerFamily { Mean, Median, Mode, Random, Knn, Iterative };

std::string to_string(ImputerFamily family);
ImputerFamily parse_imputer_family(const std::string& name);  // throws InvalidArgument

struct ImputerSpec {
    std::string id;
    ImputerFamily family = ImputerFamily::Mean;
    int n_neighbors = 5;
    int max_iter = 20;
    EstimatorSpec estimator;
    std::uint64_t seed = 0;
};

// KNN and Iterative look at predictor columns; the rest only at the target.
bool is_multivariate(const ImputerSpec& spec);

enum class RoundingRule { None, AdaptiveBinary, CensorToObserved };

std::string to_string(RoundingRule rule);
RoundingRule parse_rounding_rule(const std::string& name);
RoundingRule rounding_rule_for(ColumnKind kind);

struct SimpleState {
    double fill = 0.0;
};

struct RandomState {
    std::vector<double> observed;  // training multiset, in row order
};

struct KnnState {
    Matrix predictors;  // reference rows with the target observed; NaN = missing
    Vector target;
    double global_mean = 0.0;
};

struct IterativeState {
    // Working columns: target first, then the usable predictors.
    std::vector<std::string> columns;
    std::vector<double> init_values;  // mode of each working column
    // Working-column visiting order during fit; transform runs the same
    // chain with the target (index 0) moved last.
    std::vector<std::size_t> order;
    // models[j] predicts working column j from all the others; empty
    // when max_iter is zero.
    std::vector<Model> models;
    // Largest absolute change of any imputed cell, per round.
    std::vector<double> round_deltas;
    int rounds_run = 0;
};

using ImputerState = std::variant<SimpleState, RandomState, KnnState, IterativeState>;

struct FittedImputer {
    ImputerSpec spec;
    std::string target;
    std::vector<std::string> predictors;
    ColumnKind target_kind = ColumnKind::Continuous;
    RoundingRule rounding = RoundingRule::None;
    std::vector<double> observed_set;  // sorted distinct observed target values
    ImputerState state;
    std::vector<std::string> flags;
};

// Trains on the observed target cells of `train`. Columns must be numeric
// (label-encode text first). Throws UntrainableImputer when the target has
// no observed cell and ImputerTrainingError when an estimator fails.
FittedImputer fit_imputer(const ImputerSpec& spec, const Table& train, const std::string& target,
                          const std::vector<std::string>& predictors);

// Completed target column: observed cells copied, missing cells filled and
// pseudo-rounded.
std::vector<double> impute_column(const FittedImputer& imputer, const Table& table);

// `table` with the target column replaced by impute_column's result.
Table transform(const FittedImputer& imputer, const Table& table);

// I.i.d. draws with replacement from the observed multiset.
std::vector<double> apprandom_sample(std::span<const double> observed, std::size_t n,
                                     std::uint64_t seed);

// Nan-aware Euclidean distance: sqrt(p / shared * sum of squared
// differences over the coordinates observed in both rows). Infinity when
// no coordinate is shared.
double nan_euclidean(std::span<const double> a, std::span<const double> b);

// Mean target of the k nearest references; ties keep reference order.
// Falls back to the global mean (setting `fell_back`) when the query
// shares no coordinate with any reference.
double knn_impute(const KnnState& state, std::span<const double> query, int k,
                  bool* fell_back = nullptr);

// Values in 0/1 scale. Cut-off c = m - Phi^-1(m) * sqrt(m (1 - m)); v maps
// to 1 iff v >= c. A marginal outside (0, 1) gives constant output.
std::vector<double> adaptive_round_binary(std::span<const double> values, double marginal);
double adaptive_cutoff(double marginal);

// Nearest member of the sorted set; exact midpoints go to the smaller one.
std::vector<double> censor_to_observed(std::span<const double> values,
                                       std::span<const double> observed_set);

// Most frequent value, ties to the smallest. NaN when `values` is empty.
double mode_of(std::span<const double> values);
double median_of(std::vector<double> values);

}  // namespace iqa
