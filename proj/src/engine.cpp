#include "iqa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iqa/errors.hpp"
#include "iqa/parallel.hpp"
#include "iqa/rng.hpp"

namespace iqa {

double quality_score(double completeness, double imputation_score) {
    if (!(completeness >= 0.0 && completeness <= 1.0))
        throw InvalidArgument("quality_score: completeness must lie in [0, 1]");
    if (!(imputation_score >= 0.0 && imputation_score <= 1.0))
        throw InvalidArgument("quality_score: imputation score must lie in [0, 1]");
    return completeness + (1.0 - completeness) * imputation_score;
}

double efficiency(double gamma, double m) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("efficiency: gamma must lie in [0, 1]");
    if (!(m > 0.0)) throw InvalidArgument("efficiency: m must be positive");
    return 1.0 / (1.0 + gamma / m);
}

double recommend_imputations_exact(double gamma, double target_efficiency) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw InvalidArgument("recommend_imputations: gamma must lie in [0, 1]");
    if (!(target_efficiency > 0.0 && target_efficiency < 1.0))
        throw InvalidArgument("recommend_imputations: efficiency must lie in (0, 1)");
    return gamma / (1.0 / target_efficiency - 1.0);
}

int recommend_imputations(double gamma, double target_efficiency) {
    const double m = recommend_imputations_exact(gamma, target_efficiency);
    if (gamma == 0.0) return 1;
    // Absorb the rounding noise of efficiency(gamma, m) for integer m.
    const double rounded = std::ceil(m * (1.0 - 1e-9));
    return std::max(1, static_cast<int>(rounded));
}

std::string to_string(VetoMode mode) { return mode == VetoMode::Pooled ? "pooled" : "per_fold"; }

VetoMode parse_veto_mode(const std::string& name) {
    if (name == "pooled") return VetoMode::Pooled;
    if (name == "per_fold") return VetoMode::PerFold;
    throw InvalidArgument("unknown veto mode '" + name + "'");
}

std::map<ColumnKind, ScorerKind> AssessConfig::default_scorers() {
    return {{ColumnKind::Continuous, ScorerKind::Nrmse},
            {ColumnKind::Discrete, ScorerKind::Nrmse},
            {ColumnKind::Binary, ScorerKind::BalancedAccuracy},
            {ColumnKind::Categorical, ScorerKind::MacroBalancedAccuracy}};
}

bool ensure_apprandom(std::vector<ImputerSpec>& imputers) {
    for (const auto& s : imputers)
        if (s.family == ImputerFamily::Random) return false;
    ImputerSpec random;
    random.id = "random";
    random.family = ImputerFamily::Random;
    for (const auto& s : imputers)
        if (s.id == random.id) random.id = "apprandom";
    imputers.push_back(random);
    return true;
}

std::vector<std::string> predictors_for(const Table& table, const std::string& feature,
                                        const ImputerSpec& spec,
                                        const std::optional<DependencyDict>& deps) {
    if (!is_multivariate(spec)) return {};
    std::vector<std::string> out;
    if (deps) {
        if (const auto it = deps->find(feature); it != deps->end())
            for (const auto& name : it->second)
                if (name != feature && table.has_column(name)) out.push_back(name);
        return out;
    }
    for (const auto& name : table.names())
        if (name != feature) out.push_back(name);
    return out;
}

namespace {

double population_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

ImputerEvaluation imputation_score(const Table& table, const std::string& feature,
                                   const ImputerSpec& spec, const SplitIndices& splits,
                                   ScorerKind scorer, const std::optional<DependencyDict>& deps,
                                   std::uint64_t seed) {
    ImputerEvaluation ev;
    ev.imputer_id = spec.id;
    const std::vector<std::string> predictors = predictors_for(table, feature, spec, deps);
    ev.n_predictors = predictors.size();
    if (is_multivariate(spec) && predictors.empty()) {
        ev.skipped = true;
        ev.flags.push_back("no_predictors");
        return ev;
    }
    std::vector<std::string> view_names = predictors;
    view_names.push_back(feature);
    const Table view = table.select_columns(view_names);
    const Column& target = view.column(feature);

    for (std::size_t f = 0; f < splits.folds.size(); ++f) {
        const Fold& fold = splits.folds[f];
        ImputerSpec fold_spec = spec;
        fold_spec.seed = derive_seed({seed, spec.seed, f});

        std::vector<std::size_t> test_rows;
        for (auto r : fold.test)
            if (!target.missing(r)) test_rows.push_back(r);
        if (test_rows.empty()) continue;

        FittedImputer fitted;
        try {
            fitted = fit_imputer(fold_spec, view.select_rows(fold.train), feature, predictors);
        } catch (const UntrainableImputer& e) {
            ev.flags.push_back(std::string("untrainable: ") + e.what());
            ev.skipped = true;
            break;
        } catch (const ImputerTrainingError& e) {
            ev.flags.push_back(std::string("training_error: ") + e.what());
            ev.skipped = true;
            break;
        }

        const Table test = view.select_rows(test_rows);
        Column masked = test.column(feature);
        std::vector<double> truth = masked.values;
        std::fill(masked.values.begin(), masked.values.end(), std::numeric_limits<double>::quiet_NaN());
        std::fill(masked.mask.begin(), masked.mask.end(), 1);
        const std::vector<double> pred = impute_column(fitted, test.replace_column(std::move(masked)));

        double s;
        try {
            s = score(scorer, ScorePair{truth, pred});
        } catch (const DegenerateInput&) {
            ev.flags.push_back("degenerate_fold:" + std::to_string(f));
            continue;
        }
        ev.fold_scores.push_back(s);
        ev.truth.insert(ev.truth.end(), truth.begin(), truth.end());
        ev.imputed.insert(ev.imputed.end(), pred.begin(), pred.end());
        ev.fold_sizes.push_back(truth.size());
    }

    if (ev.skipped || ev.fold_scores.empty()) {
        ev.skipped = true;
        ev.truth.clear();
        ev.imputed.clear();
        ev.fold_sizes.clear();
        if (ev.flags.empty()) ev.flags.push_back("no_scorable_fold");
        return ev;
    }
    ev.delta_raw = std::accumulate(ev.fold_scores.begin(), ev.fold_scores.end(), 0.0) /
                   static_cast<double>(ev.fold_scores.size());
    ev.delta_mean = std::clamp(ev.delta_raw, 0.0, 1.0);
    if (ev.delta_mean != ev.delta_raw) ev.flags.push_back("delta_clamped");
    ev.delta_std = population_std(ev.fold_scores);
    return ev;
}

Selection select_imputer(std::vector<ImputerEvaluation>& evals,
                         const std::vector<ImputerSpec>& specs, const Column& column,
                         double alpha, VetoMode veto, std::size_t k) {
    std::optional<std::size_t> best;
    std::optional<std::size_t> random;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        auto& ev = evals[i];
        if (i < specs.size() && specs[i].family == ImputerFamily::Random && !random) random = i;
        if (ev.skipped) continue;

        if (veto == VetoMode::Pooled) {
            ev.verdict = distribution_compatible(column, ev.truth, ev.imputed, alpha);
            ev.vetoed = ev.verdict->rejected;
        } else {
            const double fold_alpha = alpha / static_cast<double>(std::max<std::size_t>(1, k));
            std::size_t offset = 0;
            ev.vetoed = false;
            for (std::size_t size : ev.fold_sizes) {
                const std::span<const double> t(ev.truth.data() + offset, size);
                const std::span<const double> p(ev.imputed.data() + offset, size);
                offset += size;
                TestResult r = distribution_compatible(column, t, p, fold_alpha);
                if (!ev.verdict || r.p_value < ev.verdict->p_value) ev.verdict = r;
                if (r.rejected) ev.vetoed = true;
            }
        }
        if (ev.vetoed) continue;

        if (!best) {
            best = i;
            continue;
        }
        const auto& b = evals[*best];
        if (ev.delta_mean > b.delta_mean ||
            (ev.delta_mean == b.delta_mean && ev.n_predictors < b.n_predictors))
            best = i;
    }
    if (best) return {*best, false};
    if (!random) throw InvalidArgument("select_imputer: no Random imputer to fall back on");
    return {*random, true};
}

std::vector<QualityRecord> assess(const Table& table, const AssessConfig& config) {
    if (config.imputers.empty()) throw InvalidArgument("assess: no imputers configured");
    std::vector<ImputerSpec> specs = config.imputers;
    const bool appended = ensure_apprandom(specs);
    for (const auto& c : table.columns())
        if (c.is_text) throw InvalidArgument("assess: column '" + c.name + "' is not label-encoded");

    const SplitIndices splits = kfold_split(table.n_rows(), config.k, config.split_seed);
    const std::size_t n_feat = table.n_cols();
    const std::size_t n_imp = specs.size();

    std::vector<ImputerEvaluation> grid(n_feat * n_imp);
    std::vector<std::string> errors(n_feat * n_imp);
    parallel_for(n_feat * n_imp, [&](std::size_t task) {
        const std::size_t f = task / n_imp, i = task % n_imp;
        const Column& col = table.column(f);
        try {
            grid[task] = imputation_score(table, col.name, specs[i], splits, config.scorers.at(col.kind),
                                          config.dependencies, derive_seed({config.seed, f, i}));
        } catch (const std::exception& e) {
            grid[task].imputer_id = specs[i].id;
            grid[task].skipped = true;
            grid[task].flags.push_back(std::string("error: ") + e.what());
            errors[task] = e.what();
        }
    });

    std::vector<QualityRecord> records;
    records.reserve(n_feat);
    for (std::size_t f = 0; f < n_feat; ++f) {
        const Column& col = table.column(f);
        QualityRecord rec;
        rec.feature = col.name;
        rec.kind = col.kind;
        rec.completeness = completeness(col);
        rec.flags = col.flags;
        if (appended) rec.flags.push_back("apprandom_appended");
        for (std::size_t i = 0; i < n_imp; ++i) rec.evaluations.push_back(std::move(grid[f * n_imp + i]));

        try {
            if (col.missing_count() == col.size()) {
                const Selection s = select_imputer(rec.evaluations, specs, col, config.alpha, config.veto, config.k);
                rec.chosen_imputer = specs[s.index].id;
                rec.fallback_used = true;
                rec.delta = 0.0;
                if (!col.has_flag("all_missing")) rec.flags.push_back("all_missing");
            } else {
                const Selection s = select_imputer(rec.evaluations, specs, col, config.alpha, config.veto, config.k);
                const auto& ev = rec.evaluations[s.index];
                rec.chosen_imputer = specs[s.index].id;
                rec.fallback_used = s.fallback_used;
                rec.delta = ev.skipped ? 0.0 : ev.delta_mean;
                rec.delta_std = ev.skipped ? 0.0 : ev.delta_std;
                rec.predictors = predictors_for(table, col.name, specs[s.index], config.dependencies);
                if (ev.skipped) rec.flags.push_back("chosen_imputer_unscored");
            }
        } catch (const std::exception& e) {
            rec.flags.push_back(std::string("error: ") + e.what());
            rec.delta = 0.0;
        }
        rec.omega = quality_score(rec.completeness, rec.delta);
        rec.kept = !config.threshold || rec.omega >= *config.threshold;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace iqa
