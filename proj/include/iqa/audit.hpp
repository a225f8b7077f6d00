#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iqa/engine.hpp"
#include "iqa/estimators.hpp"
#include "iqa/pipeline.hpp"
#include "iqa/table.hpp"

namespace iqa {

// Fits a pipeline on a (label-encoded) training slice. Plans used for
// auditing must keep every feature.
struct Strategy {
    std::string name;
    std::function<PipelinePlan(const Table& train, std::uint64_t seed)> fit;
};

// Every feature imputed with `spec`; multivariate specs see the features
// listed in `deps` (all other features when nullopt).
Strategy fixed_strategy(std::string name, ImputerSpec spec,
                        std::optional<DependencyDict> deps = std::nullopt);

// Per-feature IQA selection on each training slice. The threshold is
// ignored so that no feature is dropped.
Strategy iqa_strategy(std::string name, AssessConfig config);

struct CompletedDataset {
    Table table;  // no missing cells, rows in input order
    std::vector<Mask> original_masks;  // per column
};

// k-fold: fit on the training rows, fill the test rows, reassemble.
CompletedDataset build_completed_dataset(const Table& table, const Strategy& strategy,
                                         std::size_t k, std::uint64_t seed);

struct FeatureAudit {
    std::string feature;
    bool skipped = false;
    double mean = 0.0;        // fold-mean AUROC
    double half_width = 0.0;  // 95% Student-t half width
    std::vector<double> fold_auroc;
    std::vector<std::string> flags;
};

struct AuditParams {
    std::size_t k = 5;
    GbtParams classifier = default_classifier();
    double ci_level = 0.95;

    static GbtParams default_classifier();
};

// Minimum count of both imputed and observed cells for a feature to be
// audited.
std::size_t audit_min_class_count(std::size_t k);

// Trains the classifier to tell imputed (mask = 1) from observed cells
// using every column of the completed table; fold AUROCs on a stratified
// split. Skipped when either class has fewer than audit_min_class_count.
FeatureAudit audit_feature(const Table& completed, const std::string& feature, const Mask& mask,
                           const AuditParams& params, std::uint64_t seed);

struct StrategyAudit {
    std::string strategy;
    std::vector<FeatureAudit> features;
    std::optional<double> average;  // over non-skipped features
    std::vector<std::string> flags;
};

struct AuditReport {
    double level = 0.0;
    std::vector<StrategyAudit> strategies;
};

// For each level: MCAR-mask observed cells at that rate on top of the
// original gaps (level 0 keeps the data as is), complete the table with
// every strategy and audit every feature. Lower AUROC is better.
std::vector<AuditReport> audit_all(const Table& table, const std::vector<Strategy>& strategies,
                                   const std::vector<double>& levels, const AuditParams& params,
                                   std::uint64_t seed);

}  // namespace iqa
