#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iqa/depgraph.hpp"
#include "iqa/imputers.hpp"
#include "iqa/metrics.hpp"
#include "iqa/stat_tests.hpp"
#include "iqa/table.hpp"

namespace iqa {

// omega = mu + (1 - mu) * delta. Both inputs must lie in [0, 1].
double quality_score(double completeness, double imputation_score);

// epsilon = (1 + gamma / m)^-1.
double efficiency(double gamma, double m);
// m = gamma / (1 / epsilon - 1), before rounding.
double recommend_imputations_exact(double gamma, double target_efficiency);
// Smallest integer m reaching the target; 1 when gamma is zero.
int recommend_imputations(double gamma, double target_efficiency);

enum class VetoMode {
    Pooled,   // one test on the predictions pooled over all folds
    PerFold,  // rejected when any fold rejects at alpha / k
};

std::string to_string(VetoMode mode);
VetoMode parse_veto_mode(const std::string& name);

struct AssessConfig {
    std::vector<ImputerSpec> imputers;
    std::map<ColumnKind, ScorerKind> scorers = default_scorers();
    std::size_t k = 5;
    std::uint64_t split_seed = 0;
    std::optional<double> threshold;
    double alpha = 0.05;
    VetoMode veto = VetoMode::Pooled;
    std::uint64_t seed = 0;
    // Predictor lists for multivariate imputers; nullopt lets every
    // imputer see all other features.
    std::optional<DependencyDict> dependencies;

    static std::map<ColumnKind, ScorerKind> default_scorers();
};

// Ensures a Random imputer is present; returns true when one was added.
bool ensure_apprandom(std::vector<ImputerSpec>& imputers);

struct ImputerEvaluation {
    std::string imputer_id;
    bool skipped = false;
    double delta_mean = 0.0;  // clamped to [0, 1]
    double delta_raw = 0.0;   // before clamping
    double delta_std = 0.0;   // population std over folds
    std::vector<double> fold_scores;
    std::size_t n_predictors = 0;
    std::optional<TestResult> verdict;
    bool vetoed = false;
    std::vector<std::string> flags;
    // Pooled over folds, aligned with each other.
    std::vector<double> truth;
    std::vector<double> imputed;
    std::vector<std::size_t> fold_sizes;
};

struct QualityRecord {
    std::string feature;
    ColumnKind kind = ColumnKind::Continuous;
    double completeness = 0.0;
    std::vector<ImputerEvaluation> evaluations;
    std::string chosen_imputer;
    double delta = 0.0;
    double delta_std = 0.0;
    double omega = 0.0;
    bool kept = true;
    bool fallback_used = false;
    std::vector<std::string> predictors;
    std::vector<std::string> flags;
};

// Which predictors a spec sees for `feature`; empty for univariate specs.
std::vector<std::string> predictors_for(const Table& table, const std::string& feature,
                                        const ImputerSpec& spec,
                                        const std::optional<DependencyDict>& deps);

// Mask-and-reimpute score of one imputer on one feature. For each fold
// the imputer is fit on the training rows; every originally observed
// test cell of the feature is masked, re-imputed and scored.
ImputerEvaluation imputation_score(const Table& table, const std::string& feature,
                                   const ImputerSpec& spec, const SplitIndices& splits,
                                   ScorerKind scorer, const std::optional<DependencyDict>& deps,
                                   std::uint64_t seed);

struct Selection {
    std::size_t index = 0;  // into the evaluations
    bool fallback_used = false;
};

// Vetoes candidates whose imputed values fail distribution_compatible,
// then takes the best mean score (ties: fewer predictors, then order).
// With no survivor the Random imputer is chosen and flagged. Fills the
// verdict/vetoed fields of `evals`.
Selection select_imputer(std::vector<ImputerEvaluation>& evals,
                         const std::vector<ImputerSpec>& specs, const Column& column,
                         double alpha, VetoMode veto = VetoMode::Pooled, std::size_t k = 5);

// Label-encoded table with kinds assigned. Features are assessed
// independently; a failure is recorded on its record.
std::vector<QualityRecord> assess(const Table& table, const AssessConfig& config);

}  // namespace iqa
