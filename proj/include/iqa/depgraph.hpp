#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "iqa/estimators.hpp"
#include "iqa/table.hpp"

namespace iqa {

// `from` helps predict `to`.
struct DependencyEdge {
    std::string from;
    std::string to;
    double weight = 0.0;
};

struct DepGraphParams {
    std::size_t top_n = 8;
    double min_importance = 0.01;
    double holdout_fraction = 0.25;  // scoring-fold share; 1/fraction CV folds
    int n_repeats = 5;
    std::size_t min_rows = 10;
    EstimatorSpec estimator = default_estimator();

    // Random forest, 100 trees, every feature considered at each split.
    static EstimatorSpec default_estimator();
};

struct DependencyGraph {
    std::vector<std::string> nodes;
    std::vector<DependencyEdge> edges;  // grouped by target, in node order
    DepGraphParams params;
    // Per-node notes such as "insufficient_rows" or "no_predictive_skill".
    std::map<std::string, std::vector<std::string>> flags;
    // Hold-out R^2 of each node's regressor (absent when not fitted).
    std::map<std::string, double> baseline_scores;

    std::vector<DependencyEdge> incoming(std::string_view node) const;
};

// For every column x, fits the regressor on the rows where x is observed
// (other columns mode-filled), scores it on a hold-out split and adds an
// edge i -> x for the top_n predictors whose permutation importance is at
// least min_importance. A regressor without hold-out skill (R^2 <= 0)
// contributes no edges. Columns must be numeric.
DependencyGraph build_dependency_graph(const Table& table, const DepGraphParams& params,
                                       std::uint64_t seed);

// Feature -> ordered predictor list.
using DependencyDict = std::map<std::string, std::vector<std::string>>;

// Direct predecessors by descending weight (then name), followed by the
// transitively reachable ones in breadth-first layers sorted by name.
DependencyDict transitive_dependencies(const DependencyGraph& graph);

// Columns Δ[target] followed by the target.
Table restrict_training_view(const Table& table, const std::string& target,
                             const DependencyDict& dict);

std::string dependency_dict_to_json(const DependencyDict& dict);
// Throws SchemaError on anything but an object of string arrays, and on
// lists containing their own key or duplicates.
DependencyDict dependency_dict_from_json(std::string_view text);

}  // namespace iqa
