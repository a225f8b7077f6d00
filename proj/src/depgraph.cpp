#include "iqa/depgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "iqa/errors.hpp"
#include "iqa/imputers.hpp"
#include "iqa/metrics.hpp"
#include "iqa/parallel.hpp"
#include "iqa/rng.hpp"
#include "json.hpp"

namespace iqa {

EstimatorSpec DepGraphParams::default_estimator() {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::Forest;
    spec.forest.n_estimators = 100;
    spec.forest.max_features = std::numeric_limits<std::size_t>::max();
    return spec;
}

std::vector<DependencyEdge> DependencyGraph::incoming(std::string_view node) const {
    std::vector<DependencyEdge> out;
    for (const auto& e : edges)
        if (e.to == node) out.push_back(e);
    return out;
}

namespace {

struct TargetResult {
    std::vector<DependencyEdge> edges;
    std::vector<std::string> flags;
    std::optional<double> baseline;
};

double r2_vectors(const Vector& y, const Vector& pred) {
    return r2(ScorePair{std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                        std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size()))});
}

TargetResult fit_target(const Table& t, std::size_t target, const DepGraphParams& params,
                        std::uint64_t seed) {
    TargetResult res;
    const Column& col = t.column(target);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.n_rows(); ++r)
        if (!col.missing(r)) rows.push_back(r);
    if (t.n_cols() < 2) return res;
    if (rows.size() < std::max<std::size_t>(params.min_rows, 2)) {
        res.flags.push_back("insufficient_rows");
        return res;
    }

    std::vector<std::size_t> preds;
    for (std::size_t c = 0; c < t.n_cols(); ++c)
        if (c != target) preds.push_back(c);

    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix x(n, static_cast<Eigen::Index>(preds.size()));
    Vector y(n);
    for (std::size_t j = 0; j < preds.size(); ++j) {
        const Column& p = t.column(preds[j]);
        std::vector<double> obs;
        for (auto r : rows)
            if (!p.missing(r)) obs.push_back(p.values[r]);
        const double fill = obs.empty() ? 0.0 : mode_of(obs);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = rows[static_cast<std::size_t>(i)];
            x(i, static_cast<Eigen::Index>(j)) = p.missing(r) ? fill : p.values[r];
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) y[i] = col.values[rows[static_cast<std::size_t>(i)]];

    // Cross-validated: every fold of size ~holdout_fraction serves once as
    // the scoring set and baseline and importances are fold averages.
    const auto n_folds = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(1.0 / params.holdout_fraction)), 2, rows.size());
    const SplitIndices splits = kfold_split(rows.size(), n_folds, derive_seed({seed, target, 1}));

    auto take = [&](const std::vector<std::size_t>& idx, Matrix& xs, Vector& ys) {
        xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
        ys.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
            ys[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
        }
    };
    Vector imp = Vector::Zero(static_cast<Eigen::Index>(preds.size()));
    double baseline = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < splits.folds.size(); ++f) {
        Matrix x_train, x_test;
        Vector y_train, y_test;
        take(splits.folds[f].train, x_train, y_train);
        take(splits.folds[f].test, x_test, y_test);
        if ((y_test.array() == y_test[0]).all()) continue;
        const Model model = fit_estimator(params.estimator, x_train, y_train, derive_seed({seed, target, 2, f}));
        baseline += r2_vectors(y_test, predict(model, x_test));
        imp += permutation_importance(model, x_test, y_test, r2_vectors, derive_seed({seed, target, 3, f}),
                                      params.n_repeats);
        ++used;
    }
    if (used == 0) {
        res.flags.push_back("constant_holdout");
        return res;
    }
    baseline /= static_cast<double>(used);
    imp /= static_cast<double>(used);
    res.baseline = baseline;
    if (!(baseline > 0.0)) {
        res.flags.push_back("no_predictive_skill");
        return res;
    }

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < preds.size(); ++j)
        if (imp[static_cast<Eigen::Index>(j)] >= params.min_importance) keep.push_back(j);
    std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
        return imp[static_cast<Eigen::Index>(a)] > imp[static_cast<Eigen::Index>(b)];
    });
    if (keep.size() > params.top_n) keep.resize(params.top_n);
    for (auto j : keep)
        res.edges.push_back({t.column(preds[j]).name, col.name, imp[static_cast<Eigen::Index>(j)]});
    return res;
}

}  // namespace

DependencyGraph build_dependency_graph(const Table& table, const DepGraphParams& params,
                                       std::uint64_t seed) {
    if (!(params.holdout_fraction > 0.0 && params.holdout_fraction < 1.0))
        throw InvalidArgument("holdout_fraction must lie in (0, 1)");
    for (const auto& c : table.columns())
        if (c.is_text) throw InvalidArgument("column '" + c.name + "' is not label-encoded");

    DependencyGraph g;
    g.params = params;
    g.nodes = table.names();
    std::vector<TargetResult> results(table.n_cols());
    parallel_for(table.n_cols(), [&](std::size_t i) { results[i] = fit_target(table, i, params, seed); });
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (auto& e : results[i].edges) g.edges.push_back(std::move(e));
        if (!results[i].flags.empty()) g.flags[g.nodes[i]] = results[i].flags;
        if (results[i].baseline) g.baseline_scores[g.nodes[i]] = *results[i].baseline;
    }
    return g;
}

DependencyDict transitive_dependencies(const DependencyGraph& graph) {
    std::map<std::string, std::vector<DependencyEdge>> in;
    for (const auto& e : graph.edges) in[e.to].push_back(e);

    DependencyDict dict;
    for (const auto& node : graph.nodes) {
        std::vector<std::string> list;
        std::set<std::string> seen{node};
        auto direct = in[node];
        std::stable_sort(direct.begin(), direct.end(), [](const auto& a, const auto& b) {
            return a.weight != b.weight ? a.weight > b.weight : a.from < b.from;
        });
        std::vector<std::string> layer;
        for (const auto& e : direct)
            if (seen.insert(e.from).second) layer.push_back(e.from);
        while (!layer.empty()) {
            list.insert(list.end(), layer.begin(), layer.end());
            std::set<std::string> next;
            for (const auto& v : layer)
                for (const auto& e : in[v])
                    if (!seen.count(e.from)) next.insert(e.from);
            seen.insert(next.begin(), next.end());
            layer.assign(next.begin(), next.end());
        }
        dict[node] = std::move(list);
    }
    return dict;
}

Table restrict_training_view(const Table& table, const std::string& target,
                             const DependencyDict& dict) {
    std::vector<std::string> names;
    if (const auto it = dict.find(target); it != dict.end()) names = it->second;
    names.push_back(target);
    return table.select_columns(names);
}

std::string dependency_dict_to_json(const DependencyDict& dict) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : dict) j[k] = v;
    return j.dump(2);
}

DependencyDict dependency_dict_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("", "dependency dictionary must be an object");
    DependencyDict dict;
    for (const auto& [key, value] : j.items()) {
        const std::string path = "/" + key;
        if (!value.is_array()) throw SchemaError(path, "expected an array of feature names");
        std::vector<std::string> list;
        std::set<std::string> seen;
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (!value[i].is_string()) throw SchemaError(path + "/" + std::to_string(i), "expected a string");
            const std::string name = value[i].get<std::string>();
            if (name == key) throw SchemaError(path + "/" + std::to_string(i), "feature lists itself");
            if (!seen.insert(name).second) throw SchemaError(path + "/" + std::to_string(i), "duplicate entry");
            list.push_back(name);
        }
        dict[key] = std::move(list);
    }
    return dict;
}

}  // namespace iqa
