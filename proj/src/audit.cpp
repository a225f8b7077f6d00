#include "iqa/audit.hpp"

#include <algorithm>
#include <numeric>

#include "iqa/errors.hpp"
#include "iqa/metrics.hpp"
#include "iqa/parallel.hpp"
#include "iqa/rng.hpp"

namespace iqa {

Strategy fixed_strategy(std::string name, ImputerSpec spec, std::optional<DependencyDict> deps) {
    Strategy s;
    s.name = std::move(name);
    s.fit = [spec = std::move(spec), deps = std::move(deps)](const Table& train, std::uint64_t seed) {
        AssessConfig cfg;
        cfg.imputers = {spec};
        cfg.seed = seed;
        cfg.dependencies = deps;
        std::vector<QualityRecord> records;
        for (const auto& c : train.columns()) {
            QualityRecord r;
            r.feature = c.name;
            r.kind = c.kind;
            r.chosen_imputer = spec.id;
            records.push_back(std::move(r));
        }
        return fit_pipeline(train, records, cfg);
    };
    return s;
}

Strategy iqa_strategy(std::string name, AssessConfig config) {
    Strategy s;
    s.name = std::move(name);
    config.threshold.reset();
    s.fit = [config = std::move(config)](const Table& train, std::uint64_t seed) {
        AssessConfig cfg = config;
        cfg.seed = derive_seed({config.seed, seed});
        cfg.split_seed = derive_seed({config.split_seed, seed});
        const auto records = assess(train, cfg);
        return fit_pipeline(train, records, cfg);
    };
    return s;
}

CompletedDataset build_completed_dataset(const Table& table, const Strategy& strategy,
                                         std::size_t k, std::uint64_t seed) {
    CompletedDataset out;
    for (const auto& c : table.columns()) out.original_masks.push_back(c.mask);
    if (table.missing_count() == 0) {
        out.table = table;
        return out;
    }
    const SplitIndices splits = kfold_split(table.n_rows(), k, seed);
    std::vector<Table> filled(splits.folds.size());
    parallel_for(splits.folds.size(), [&](std::size_t f) {
        const Fold& fold = splits.folds[f];
        const PipelinePlan plan = strategy.fit(table.select_rows(fold.train), derive_seed({seed, f}));
        if (!plan.drop_list.empty())
            throw InvalidArgument("strategy '" + strategy.name + "' dropped feature '" + plan.drop_list.front() + "'");
        filled[f] = apply_pipeline(plan, table.select_rows(fold.test));
    });

    std::vector<Column> cols = table.columns();
    for (auto& c : cols) c.mask.assign(table.n_rows(), 0);
    for (std::size_t f = 0; f < splits.folds.size(); ++f) {
        const auto& test = splits.folds[f].test;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const Column& src = filled[f].column(cols[j].name);
            for (std::size_t i = 0; i < test.size(); ++i) {
                if (src.missing(i)) throw InvalidArgument("strategy '" + strategy.name + "' left a gap in '" + src.name + "'");
                cols[j].values[test[i]] = src.values[i];
            }
        }
    }
    out.table = Table(std::move(cols), table.n_rows());
    return out;
}

GbtParams AuditParams::default_classifier() {
    GbtParams p;
    p.loss = GbtLoss::Logistic;
    p.n_estimators = 100;
    p.max_depth = 6;
    p.learning_rate = 0.1;
    return p;
}

std::size_t audit_min_class_count(std::size_t k) { return std::max<std::size_t>(10, 2 * k); }

FeatureAudit audit_feature(const Table& completed, const std::string& feature, const Mask& mask,
                           const AuditParams& params, std::uint64_t seed) {
    FeatureAudit fa;
    fa.feature = feature;
    const std::size_t n = completed.n_rows();
    if (mask.size() != n) throw InvalidArgument("audit_feature: mask length differs from table");
    const auto pos = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
    const std::size_t need = audit_min_class_count(params.k);
    if (pos < need || n - pos < need) {
        fa.skipped = true;
        fa.flags.push_back("insufficient_missing");
        return fa;
    }

    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(completed.n_cols()));
    for (std::size_t j = 0; j < completed.n_cols(); ++j) {
        const Column& c = completed.column(j);
        for (std::size_t r = 0; r < n; ++r) {
            if (c.missing(r)) throw InvalidArgument("audit_feature: completed table has gaps");
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = c.values[r];
        }
    }
    Vector y(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) y[static_cast<Eigen::Index>(r)] = mask[r] ? 1.0 : 0.0;

    const SplitIndices splits = stratified_kfold_split(mask, params.k, seed);
    fa.fold_auroc.resize(splits.folds.size());
    parallel_for(splits.folds.size(), [&](std::size_t f) {
        const Fold& fold = splits.folds[f];
        auto rows_of = [&](const std::vector<std::size_t>& idx, Matrix& xs, Vector& ys) {
            xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
            ys.resize(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i) {
                xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
                ys[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
            }
        };
        Matrix x_train, x_test;
        Vector y_train, y_test;
        rows_of(fold.train, x_train, y_train);
        rows_of(fold.test, x_test, y_test);
        const GbtModel model = gbt_fit(x_train, y_train, params.classifier, derive_seed({seed, f}));
        const Vector score = gbt_predict(model, x_test);
        std::vector<std::uint8_t> labels(fold.test.size());
        for (std::size_t i = 0; i < fold.test.size(); ++i) labels[i] = mask[fold.test[i]] ? 1 : 0;
        fa.fold_auroc[f] = auroc(labels, std::span<const double>(score.data(), static_cast<std::size_t>(score.size())));
    });
    const ConfidenceInterval ci = mean_ci(fa.fold_auroc, params.ci_level);
    fa.mean = ci.mean;
    fa.half_width = ci.half_width;
    return fa;
}

std::vector<AuditReport> audit_all(const Table& table, const std::vector<Strategy>& strategies,
                                   const std::vector<double>& levels, const AuditParams& params,
                                   std::uint64_t seed) {
    std::vector<AuditReport> reports;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double level = levels[l];
        if (!(level >= 0.0 && level < 1.0)) throw InvalidArgument("audit levels must lie in [0, 1)");
        const Table data = level > 0.0 ? inject_mcar(table, level, derive_seed({seed, l, 0x1e7})) : table;

        AuditReport report;
        report.level = level;
        for (std::size_t s = 0; s < strategies.size(); ++s) {
            StrategyAudit sa;
            sa.strategy = strategies[s].name;
            try {
                const CompletedDataset done =
                    build_completed_dataset(data, strategies[s], params.k, derive_seed({seed, l, s}));
                sa.features.resize(data.n_cols());
                parallel_for(data.n_cols(), [&](std::size_t j) {
                    try {
                        sa.features[j] = audit_feature(done.table, data.column(j).name, done.original_masks[j],
                                                       params, derive_seed({seed, l, s, j}));
                    } catch (const std::exception& e) {
                        sa.features[j].feature = data.column(j).name;
                        sa.features[j].skipped = true;
                        sa.features[j].flags.push_back(std::string("error: ") + e.what());
                    }
                });
            } catch (const std::exception& e) {
                sa.flags.push_back(std::string("error: ") + e.what());
                sa.features.clear();
                for (const auto& c : data.columns()) {
                    FeatureAudit fa;
                    fa.feature = c.name;
                    fa.skipped = true;
                    sa.features.push_back(fa);
                }
            }
            double total = 0.0;
            std::size_t used = 0;
            for (const auto& fa : sa.features)
                if (!fa.skipped) {
                    total += fa.mean;
                    ++used;
                }
            if (used) sa.average = total / static_cast<double>(used);
            report.strategies.push_back(std::move(sa));
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace iqa
