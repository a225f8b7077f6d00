#include "iqa/imputers.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include "iqa/errors.hpp"
#include "iqa/rng.hpp"

namespace iqa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Column& numeric_column(const Table& t, const std::string& name) {
    const auto idx = t.index_of(name);
    if (!idx) throw SchemaMismatch("column '" + name + "' not found");
    const Column& c = t.column(*idx);
    if (c.is_text) throw InvalidArgument("column '" + name + "' is not label-encoded");
    return c;
}

double population_sd(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

std::vector<double> sorted_distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Matrix without_column(const Matrix& w, Eigen::Index skip, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), w.cols() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index c_out = 0;
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            if (c == skip) continue;
            out(static_cast<Eigen::Index>(i), c_out++) = w(static_cast<Eigen::Index>(rows[i]), c);
        }
    }
    return out;
}

struct Working {
    Matrix values;
    std::vector<std::vector<std::size_t>> missing_rows;  // per column
};

Working load_working(const Table& t, const std::vector<std::string>& columns) {
    Working w;
    const auto n = static_cast<Eigen::Index>(t.n_rows());
    w.values.resize(n, static_cast<Eigen::Index>(columns.size()));
    w.missing_rows.resize(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const Column& c = numeric_column(t, columns[j]);
        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            const bool miss = c.missing(r);
            w.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = miss ? kNaN : c.values[r];
            if (miss) w.missing_rows[j].push_back(r);
        }
    }
    return w;
}

Model fit_column_model(const EstimatorSpec& spec, const Matrix& w, std::size_t j,
                       const std::vector<std::size_t>& observed_rows, std::uint64_t seed) {
    const auto col = static_cast<Eigen::Index>(j);
    const Matrix x = without_column(w, col, observed_rows);
    Vector y(static_cast<Eigen::Index>(observed_rows.size()));
    for (std::size_t i = 0; i < observed_rows.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = w(static_cast<Eigen::Index>(observed_rows[i]), col);
    try {
        return fit_estimator(spec, x, y, seed);
    } catch (const std::exception& e) {
        throw ImputerTrainingError(std::string("estimator failed: ") + e.what());
    }
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& rows) {
    std::vector<std::uint8_t> in(n, 0);
    for (auto r : rows) in[r] = 1;
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < n; ++r)
        if (!in[r]) out.push_back(r);
    return out;
}

IterativeState fit_iterative(const ImputerSpec& spec, const Table& train, const std::string& target,
                             const std::vector<std::string>& predictors,
                             std::vector<std::string>& flags) {
    IterativeState st;
    st.columns.push_back(target);
    for (const auto& p : predictors) {
        if (numeric_column(train, p).missing_count() == train.n_rows()) {
            flags.push_back("dropped_empty_predictor:" + p);
            continue;
        }
        st.columns.push_back(p);
    }
    Working w = load_working(train, st.columns);
    const std::size_t q = st.columns.size();
    const std::size_t n = train.n_rows();

    std::vector<std::vector<std::size_t>> observed_rows(q);
    std::vector<double> sigma(q);
    for (std::size_t j = 0; j < q; ++j) {
        observed_rows[j] = complement(n, w.missing_rows[j]);
        std::vector<double> obs;
        for (auto r : observed_rows[j])
            obs.push_back(w.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
        sigma[j] = population_sd(obs);
        st.init_values.push_back(mode_of(obs));
        for (auto r : w.missing_rows[j])
            w.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = st.init_values[j];
    }

    std::vector<std::size_t> with_missing;
    for (std::size_t j = 0; j < q; ++j)
        if (!w.missing_rows[j].empty()) with_missing.push_back(j);
    std::stable_sort(with_missing.begin(), with_missing.end(), [&](std::size_t a, std::size_t b) {
        return w.missing_rows[a].size() > w.missing_rows[b].size();
    });
    st.order = with_missing;
    for (std::size_t j = 0; j < q; ++j)
        if (w.missing_rows[j].empty()) st.order.push_back(j);

    if (spec.max_iter <= 0) return st;

    std::vector<std::optional<Model>> models(q);
    for (int round = 0; round < spec.max_iter; ++round) {
        bool converged = true;
        double round_delta = 0.0;
        for (std::size_t j : with_missing) {
            const auto col = static_cast<Eigen::Index>(j);
            Model m = fit_column_model(spec.estimator, w.values, j, observed_rows[j],
                                       derive_seed({spec.seed, static_cast<std::uint64_t>(round), j}));
            const Vector pred = predict(m, without_column(w.values, col, w.missing_rows[j]));
            double delta = 0.0;
            for (std::size_t i = 0; i < w.missing_rows[j].size(); ++i) {
                double& cell = w.values(static_cast<Eigen::Index>(w.missing_rows[j][i]), col);
                delta = std::max(delta, std::abs(pred[static_cast<Eigen::Index>(i)] - cell));
                cell = pred[static_cast<Eigen::Index>(i)];
            }
            if (delta > 1e-3 * sigma[j]) converged = false;
            round_delta = std::max(round_delta, delta);
            models[j] = std::move(m);
        }
        st.round_deltas.push_back(round_delta);
        st.rounds_run = round + 1;
        if (converged) break;
    }
    // Columns complete in training still need a model for transform.
    for (std::size_t j = 0; j < q; ++j)
        if (!models[j])
            models[j] = fit_column_model(spec.estimator, w.values, j, observed_rows[j],
                                         derive_seed({spec.seed, 0xfffffffULL, j}));
    for (auto& m : models) st.models.push_back(std::move(*m));
    return st;
}

std::vector<double> transform_iterative(const IterativeState& st, const Table& t) {
    Working w = load_working(t, st.columns);
    const std::size_t q = st.columns.size();
    for (std::size_t j = 0; j < q; ++j)
        for (auto r : w.missing_rows[j])
            w.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = st.init_values[j];
    if (!st.models.empty()) {
        // Predictors first so the target sees their refined values.
        std::vector<std::size_t> chain;
        for (std::size_t j : st.order)
            if (j != 0) chain.push_back(j);
        chain.push_back(0);
        for (std::size_t j : chain) {
            if (w.missing_rows[j].empty()) continue;
            const auto col = static_cast<Eigen::Index>(j);
            const Vector pred = predict(st.models[j], without_column(w.values, col, w.missing_rows[j]));
            for (std::size_t i = 0; i < w.missing_rows[j].size(); ++i)
                w.values(static_cast<Eigen::Index>(w.missing_rows[j][i]), col) = pred[static_cast<Eigen::Index>(i)];
        }
    }
    std::vector<double> out(t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) out[r] = w.values(static_cast<Eigen::Index>(r), 0);
    return out;
}

}  // namespace

std::string to_string(ImputerFamily family) {
    switch (family) {
        case ImputerFamily::Mean: return "mean";
        case ImputerFamily::Median: return "median";
        case ImputerFamily::Mode: return "mode";
        case ImputerFamily::Random: return "random";
        case ImputerFamily::Knn: return "knn";
        case ImputerFamily::Iterative: return "iterative";
    }
    return "mean";
}

ImputerFamily parse_imputer_family(const std::string& name) {
    for (auto f : {ImputerFamily::Mean, ImputerFamily::Median, ImputerFamily::Mode,
                   ImputerFamily::Random, ImputerFamily::Knn, ImputerFamily::Iterative})
        if (to_string(f) == name) return f;
    if (name == "apprandom") return ImputerFamily::Random;
    throw InvalidArgument("unknown imputer family '" + name + "'");
}

bool is_multivariate(const ImputerSpec& spec) {
    return spec.family == ImputerFamily::Knn || spec.family == ImputerFamily::Iterative;
}

std::string to_string(RoundingRule rule) {
    switch (rule) {
        case RoundingRule::None: return "none";
        case RoundingRule::AdaptiveBinary: return "adaptive_binary";
        case RoundingRule::CensorToObserved: return "censor_to_observed";
    }
    return "none";
}

RoundingRule parse_rounding_rule(const std::string& name) {
    for (auto r : {RoundingRule::None, RoundingRule::AdaptiveBinary, RoundingRule::CensorToObserved})
        if (to_string(r) == name) return r;
    throw InvalidArgument("unknown rounding rule '" + name + "'");
}

RoundingRule rounding_rule_for(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Binary: return RoundingRule::AdaptiveBinary;
        case ColumnKind::Discrete:
        case ColumnKind::Categorical: return RoundingRule::CensorToObserved;
        case ColumnKind::Continuous: return RoundingRule::None;
    }
    return RoundingRule::None;
}

double mode_of(std::span<const double> values) {
    if (values.empty()) return kNaN;
    std::map<double, std::size_t> counts;
    for (double v : values) ++counts[v];
    double best = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [v, c] : counts)
        if (c > best_count) {
            best = v;
            best_count = c;
        }
    return best;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> apprandom_sample(std::span<const double> observed, std::size_t n,
                                     std::uint64_t seed) {
    if (observed.empty()) throw UntrainableImputer("no observed values to sample from");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = observed[static_cast<std::size_t>(uniform_index(rng, observed.size()))];
    return out;
}

double nan_euclidean(std::span<const double> a, std::span<const double> b) {
    double ss = 0.0;
    std::size_t shared = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) continue;
        ss += (a[i] - b[i]) * (a[i] - b[i]);
        ++shared;
    }
    if (shared == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(static_cast<double>(a.size()) / static_cast<double>(shared) * ss);
}

double knn_impute(const KnnState& state, std::span<const double> query, int k, bool* fell_back) {
    if (fell_back) *fell_back = false;
    const Eigen::Index n = state.predictors.rows();
    std::vector<std::pair<double, Eigen::Index>> cand;
    std::vector<double> ref(static_cast<std::size_t>(state.predictors.cols()));
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < state.predictors.cols(); ++c)
            ref[static_cast<std::size_t>(c)] = state.predictors(r, c);
        const double d = nan_euclidean(query, ref);
        if (std::isfinite(d)) cand.emplace_back(d, r);
    }
    if (cand.empty()) {
        if (fell_back) *fell_back = true;
        return state.global_mean;
    }
    const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(std::max(1, k)));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += state.target[cand[i].second];
    return sum / static_cast<double>(take);
}

double adaptive_cutoff(double marginal) {
    const boost::math::normal_distribution<double> std_normal;
    return marginal - boost::math::quantile(std_normal, marginal) * std::sqrt(marginal * (1.0 - marginal));
}

std::vector<double> adaptive_round_binary(std::span<const double> values, double marginal) {
    std::vector<double> out(values.size());
    if (!(marginal > 0.0)) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    if (!(marginal < 1.0)) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    const double c = adaptive_cutoff(marginal);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] >= c ? 1.0 : 0.0;
    return out;
}

std::vector<double> censor_to_observed(std::span<const double> values,
                                       std::span<const double> observed_set) {
    if (observed_set.empty()) throw InvalidArgument("censor_to_observed: empty observed set");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        auto it = std::lower_bound(observed_set.begin(), observed_set.end(), v);
        if (it == observed_set.end()) {
            out[i] = observed_set.back();
        } else if (it == observed_set.begin() || *it == v) {
            out[i] = *it;
        } else {
            const double hi = *it, lo = *(it - 1);
            out[i] = (hi - v) < (v - lo) ? hi : lo;
        }
    }
    return out;
}

FittedImputer fit_imputer(const ImputerSpec& spec, const Table& train, const std::string& target,
                          const std::vector<std::string>& predictors) {
    if (train.n_rows() == 0) throw DegenerateInput("fit_imputer: empty training table");
    const Column& col = numeric_column(train, target);
    for (const auto& p : predictors)
        if (p == target) throw InvalidArgument("fit_imputer: predictors include the target");

    FittedImputer f;
    f.spec = spec;
    f.target = target;
    f.target_kind = col.kind;
    f.rounding = rounding_rule_for(col.kind);
    const std::vector<double> observed = observed_values(col);
    if (observed.empty())
        throw UntrainableImputer("target '" + target + "' has no observed training value");
    f.observed_set = sorted_distinct(observed);
    if (is_multivariate(spec)) f.predictors = predictors;

    switch (spec.family) {
        case ImputerFamily::Mean:
            f.state = SimpleState{std::accumulate(observed.begin(), observed.end(), 0.0) /
                                  static_cast<double>(observed.size())};
            break;
        case ImputerFamily::Median: f.state = SimpleState{median_of(observed)}; break;
        case ImputerFamily::Mode: f.state = SimpleState{mode_of(observed)}; break;
        case ImputerFamily::Random: f.state = RandomState{observed}; break;
        case ImputerFamily::Knn: {
            if (spec.n_neighbors < 1) throw InvalidArgument("knn: n_neighbors must be >= 1");
            KnnState st;
            const auto p = static_cast<Eigen::Index>(predictors.size());
            st.predictors.resize(static_cast<Eigen::Index>(observed.size()), p);
            st.target.resize(static_cast<Eigen::Index>(observed.size()));
            std::vector<const Column*> pcols;
            for (const auto& name : predictors) pcols.push_back(&numeric_column(train, name));
            Eigen::Index i = 0;
            for (std::size_t r = 0; r < train.n_rows(); ++r) {
                if (col.missing(r)) continue;
                for (Eigen::Index c = 0; c < p; ++c) {
                    const Column& pc = *pcols[static_cast<std::size_t>(c)];
                    st.predictors(i, c) = pc.missing(r) ? kNaN : pc.values[r];
                }
                st.target[i++] = col.values[r];
            }
            st.global_mean = st.target.mean();
            f.state = std::move(st);
            break;
        }
        case ImputerFamily::Iterative:
            f.state = fit_iterative(spec, train, target, predictors, f.flags);
            break;
    }
    return f;
}

std::vector<double> impute_column(const FittedImputer& f, const Table& t) {
    const Column& col = numeric_column(t, f.target);
    std::vector<std::size_t> missing;
    for (std::size_t r = 0; r < t.n_rows(); ++r)
        if (col.missing(r)) missing.push_back(r);

    std::vector<double> out(t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) out[r] = col.missing(r) ? kNaN : col.values[r];
    if (missing.empty()) return out;

    std::vector<double> fills(missing.size());
    if (const auto* s = std::get_if<SimpleState>(&f.state)) {
        std::fill(fills.begin(), fills.end(), s->fill);
    } else if (const auto* s = std::get_if<RandomState>(&f.state)) {
        fills = apprandom_sample(s->observed, missing.size(),
                                 derive_seed({f.spec.seed, fnv1a64(f.target)}));
    } else if (const auto* s = std::get_if<KnnState>(&f.state)) {
        std::vector<const Column*> pcols;
        for (const auto& name : f.predictors) pcols.push_back(&numeric_column(t, name));
        std::vector<double> query(pcols.size());
        for (std::size_t i = 0; i < missing.size(); ++i) {
            for (std::size_t c = 0; c < pcols.size(); ++c)
                query[c] = pcols[c]->missing(missing[i]) ? kNaN : pcols[c]->values[missing[i]];
            fills[i] = knn_impute(*s, query, f.spec.n_neighbors);
        }
    } else if (const auto* s = std::get_if<IterativeState>(&f.state)) {
        const std::vector<double> full = transform_iterative(*s, t);
        for (std::size_t i = 0; i < missing.size(); ++i) fills[i] = full[missing[i]];
    }

    switch (f.rounding) {
        case RoundingRule::None: break;
        case RoundingRule::CensorToObserved: fills = censor_to_observed(fills, f.observed_set); break;
        case RoundingRule::AdaptiveBinary: {
            if (f.observed_set.size() < 2) {
                fills = censor_to_observed(fills, f.observed_set);
                break;
            }
            const double lo = f.observed_set.front(), hi = f.observed_set.back();
            auto scale = [&](double v) { return (v - lo) / (hi - lo); };
            double total = 0.0;
            for (std::size_t r = 0; r < t.n_rows(); ++r)
                if (!col.missing(r)) total += scale(col.values[r]);
            std::vector<double> scaled(fills.size());
            for (std::size_t i = 0; i < fills.size(); ++i) {
                scaled[i] = scale(fills[i]);
                total += scaled[i];
            }
            const double marginal = total / static_cast<double>(t.n_rows());
            const auto rounded = adaptive_round_binary(scaled, marginal);
            for (std::size_t i = 0; i < fills.size(); ++i) fills[i] = rounded[i] > 0.5 ? hi : lo;
            break;
        }
    }
    for (std::size_t i = 0; i < missing.size(); ++i) out[missing[i]] = fills[i];
    return out;
}

Table transform(const FittedImputer& f, const Table& t) {
    Column c = t.column(f.target);
    c.values = impute_column(f, t);
    c.mask.assign(c.values.size(), 0);
    return t.replace_column(std::move(c));
}

}  // namespace iqa
