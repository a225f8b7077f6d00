#include "iqa/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "iqa/errors.hpp"
#include "iqa/rng.hpp"
#include "json.hpp"

namespace iqa {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- codecs

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_of(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw CorruptModel(std::string("missing field '") + key + "'");
    return j.at(key);
}

json encode_reals(std::span<const double> v) {
    json out = json::array();
    for (double x : v) out.push_back(real(x));
    return out;
}

std::vector<double> decode_reals(const json& j) {
    if (!j.is_array()) throw CorruptModel("expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(real_of(x));
    return out;
}

json encode_vector(const Vector& v) {
    return encode_reals(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Vector decode_vector(const json& j) {
    const auto v = decode_reals(j);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json encode_matrix(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(real(m(r, c)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix decode_matrix(const json& j) {
    const auto rows = field(j, "rows").get<Eigen::Index>();
    const auto cols = field(j, "cols").get<Eigen::Index>();
    const auto data = decode_reals(field(j, "data"));
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
        throw CorruptModel("matrix shape does not match its data");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    return m;
}

json encode_tree(const RegressionTree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), value = json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(real(n.threshold));
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(real(n.value));
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree decode_tree(const json& j) {
    const auto& feature = field(j, "feature");
    const auto threshold = decode_reals(field(j, "threshold"));
    const auto& left = field(j, "left");
    const auto& right = field(j, "right");
    const auto value = decode_reals(field(j, "value"));
    const std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0)
        throw CorruptModel("tree arrays have inconsistent lengths");
    RegressionTree t;
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node.feature = feature[i].get<int>();
        node.threshold = threshold[i];
        node.left = left[i].get<int>();
        node.right = right[i].get<int>();
        node.value = value[i];
        if (node.feature >= 0) {
            const auto bad = [n](int c) { return c <= 0 || static_cast<std::size_t>(c) >= n; };
            if (bad(node.left) || bad(node.right)) throw CorruptModel("tree child index out of range");
        }
    }
    return t;
}

json encode_trees(const std::vector<RegressionTree>& trees) {
    json out = json::array();
    for (const auto& t : trees) out.push_back(encode_tree(t));
    return out;
}

std::vector<RegressionTree> decode_trees(const json& j) {
    if (!j.is_array()) throw CorruptModel("expected an array of trees");
    std::vector<RegressionTree> out;
    for (const auto& t : j) out.push_back(decode_tree(t));
    return out;
}

json encode_forest_params(const ForestParams& p) {
    return {{"n_estimators", p.n_estimators},
            {"max_depth", p.max_depth},
            {"bootstrap", p.bootstrap},
            {"max_features", p.max_features ? json(*p.max_features) : json(nullptr)}};
}

ForestParams decode_forest_params(const json& j) {
    ForestParams p;
    p.n_estimators = field(j, "n_estimators").get<int>();
    p.max_depth = field(j, "max_depth").get<int>();
    p.bootstrap = field(j, "bootstrap").get<bool>();
    const auto& mf = field(j, "max_features");
    if (!mf.is_null()) p.max_features = mf.get<std::size_t>();
    return p;
}

std::string loss_name(GbtLoss l) { return l == GbtLoss::Logistic ? "logistic" : "squared"; }

GbtLoss parse_loss(const std::string& s) {
    if (s == "logistic") return GbtLoss::Logistic;
    if (s == "squared") return GbtLoss::Squared;
    throw CorruptModel("unknown loss '" + s + "'");
}

json encode_gbt_params(const GbtParams& p) {
    return {{"n_estimators", p.n_estimators},
            {"max_depth", p.max_depth},
            {"learning_rate", p.learning_rate},
            {"loss", loss_name(p.loss)}};
}

GbtParams decode_gbt_params(const json& j) {
    GbtParams p;
    p.n_estimators = field(j, "n_estimators").get<int>();
    p.max_depth = field(j, "max_depth").get<int>();
    p.learning_rate = field(j, "learning_rate").get<double>();
    p.loss = parse_loss(field(j, "loss").get<std::string>());
    return p;
}

EstimatorKind parse_estimator_kind(const std::string& s) {
    for (auto k : {EstimatorKind::Ridge, EstimatorKind::Forest, EstimatorKind::Gbt})
        if (to_string(k) == s) return k;
    throw CorruptModel("unknown estimator '" + s + "'");
}

json encode_estimator_spec(const EstimatorSpec& s) {
    return {{"kind", to_string(s.kind)},
            {"reg_strength", s.reg_strength},
            {"forest", encode_forest_params(s.forest)},
            {"gbt", encode_gbt_params(s.gbt)}};
}

EstimatorSpec decode_estimator_spec(const json& j) {
    EstimatorSpec s;
    s.kind = parse_estimator_kind(field(j, "kind").get<std::string>());
    s.reg_strength = field(j, "reg_strength").get<double>();
    s.forest = decode_forest_params(field(j, "forest"));
    s.gbt = decode_gbt_params(field(j, "gbt"));
    return s;
}

json encode_model(const Model& m) {
    if (const auto* r = std::get_if<RidgeModel>(&m))
        return {{"kind", "ridge"}, {"weights", encode_vector(r->weights)},
                {"intercept", r->intercept}, {"reg_strength", r->reg_strength}};
    if (const auto* f = std::get_if<ForestModel>(&m))
        return {{"kind", "forest"}, {"params", encode_forest_params(f->params)},
                {"n_features", f->n_features}, {"trees", encode_trees(f->trees)}};
    const auto& g = std::get<GbtModel>(m);
    return {{"kind", "gbt"}, {"params", encode_gbt_params(g.params)}, {"base_score", g.base_score},
            {"n_features", g.n_features}, {"trees", encode_trees(g.trees)}};
}

Model decode_model(const json& j) {
    const auto kind = parse_estimator_kind(field(j, "kind").get<std::string>());
    switch (kind) {
        case EstimatorKind::Ridge: {
            RidgeModel r;
            r.weights = decode_vector(field(j, "weights"));
            r.intercept = field(j, "intercept").get<double>();
            r.reg_strength = field(j, "reg_strength").get<double>();
            return r;
        }
        case EstimatorKind::Forest: {
            ForestModel f;
            f.params = decode_forest_params(field(j, "params"));
            f.n_features = field(j, "n_features").get<std::size_t>();
            f.trees = decode_trees(field(j, "trees"));
            if (f.trees.empty()) throw CorruptModel("forest without trees");
            return f;
        }
        case EstimatorKind::Gbt: {
            GbtModel g;
            g.params = decode_gbt_params(field(j, "params"));
            g.base_score = field(j, "base_score").get<double>();
            g.n_features = field(j, "n_features").get<std::size_t>();
            g.trees = decode_trees(field(j, "trees"));
            return g;
        }
    }
    throw CorruptModel("unknown model");
}

json encode_spec(const ImputerSpec& s) {
    return {{"id", s.id},
            {"family", to_string(s.family)},
            {"n_neighbors", s.n_neighbors},
            {"max_iter", s.max_iter},
            {"estimator", encode_estimator_spec(s.estimator)},
            {"seed", s.seed}};
}

ImputerSpec decode_spec(const json& j) {
    ImputerSpec s;
    s.id = field(j, "id").get<std::string>();
    try {
        s.family = parse_imputer_family(field(j, "family").get<std::string>());
    } catch (const InvalidArgument& e) {
        throw CorruptModel(e.what());
    }
    s.n_neighbors = field(j, "n_neighbors").get<int>();
    s.max_iter = field(j, "max_iter").get<int>();
    s.estimator = decode_estimator_spec(field(j, "estimator"));
    s.seed = field(j, "seed").get<std::uint64_t>();
    return s;
}

json encode_state(const ImputerState& state) {
    if (const auto* s = std::get_if<SimpleState>(&state)) return {{"type", "simple"}, {"fill", real(s->fill)}};
    if (const auto* s = std::get_if<RandomState>(&state))
        return {{"type", "random"}, {"observed", encode_reals(s->observed)}};
    if (const auto* s = std::get_if<KnnState>(&state))
        return {{"type", "knn"}, {"predictors", encode_matrix(s->predictors)},
                {"target", encode_vector(s->target)}, {"global_mean", real(s->global_mean)}};
    const auto& s = std::get<IterativeState>(state);
    json models = json::array();
    for (const auto& m : s.models) models.push_back(encode_model(m));
    return {{"type", "iterative"},   {"columns", s.columns},
            {"init_values", encode_reals(s.init_values)},
            {"order", s.order},      {"models", models},
            {"round_deltas", encode_reals(s.round_deltas)},
            {"rounds_run", s.rounds_run}};
}

ImputerState decode_state(const json& j) {
    const auto type = field(j, "type").get<std::string>();
    if (type == "simple") return SimpleState{real_of(field(j, "fill"))};
    if (type == "random") {
        RandomState s{decode_reals(field(j, "observed"))};
        if (s.observed.empty()) throw CorruptModel("random imputer without observed values");
        return s;
    }
    if (type == "knn") {
        KnnState s;
        s.predictors = decode_matrix(field(j, "predictors"));
        s.target = decode_vector(field(j, "target"));
        s.global_mean = real_of(field(j, "global_mean"));
        if (s.target.size() != s.predictors.rows()) throw CorruptModel("knn reference sizes differ");
        return s;
    }
    if (type == "iterative") {
        IterativeState s;
        s.columns = field(j, "columns").get<std::vector<std::string>>();
        s.init_values = decode_reals(field(j, "init_values"));
        s.order = field(j, "order").get<std::vector<std::size_t>>();
        for (const auto& m : field(j, "models")) s.models.push_back(decode_model(m));
        s.round_deltas = decode_reals(field(j, "round_deltas"));
        s.rounds_run = field(j, "rounds_run").get<int>();
        const std::size_t q = s.columns.size();
        if (q == 0 || s.init_values.size() != q || s.order.size() != q ||
            (!s.models.empty() && s.models.size() != q))
            throw CorruptModel("iterative state sizes are inconsistent");
        for (auto o : s.order)
            if (o >= q) throw CorruptModel("iterative visit order out of range");
        return s;
    }
    throw CorruptModel("unknown imputer state '" + type + "'");
}

json encode_imputer(const FittedImputer& f) {
    return {{"spec", encode_spec(f.spec)},
            {"target", f.target},
            {"predictors", f.predictors},
            {"target_kind", to_string(f.target_kind)},
            {"rounding", to_string(f.rounding)},
            {"observed_set", encode_reals(f.observed_set)},
            {"state", encode_state(f.state)},
            {"flags", f.flags}};
}

FittedImputer decode_imputer(const json& j) {
    FittedImputer f;
    f.spec = decode_spec(field(j, "spec"));
    f.target = field(j, "target").get<std::string>();
    f.predictors = field(j, "predictors").get<std::vector<std::string>>();
    try {
        f.target_kind = parse_column_kind(field(j, "target_kind").get<std::string>());
        f.rounding = parse_rounding_rule(field(j, "rounding").get<std::string>());
    } catch (const InvalidArgument& e) {
        throw CorruptModel(e.what());
    }
    f.observed_set = decode_reals(field(j, "observed_set"));
    f.state = decode_state(field(j, "state"));
    f.flags = field(j, "flags").get<std::vector<std::string>>();
    return f;
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void note(std::vector<std::string>* notes, std::string text) {
    if (notes) notes->push_back(std::move(text));
}

}  // namespace

PipelinePlan fit_pipeline(const Table& encoded, const std::vector<QualityRecord>& records,
                          const AssessConfig& config, std::string hash) {
    for (const auto& c : encoded.columns())
        if (c.is_text) throw InvalidArgument("fit_pipeline: column '" + c.name + "' is not label-encoded");
    std::vector<ImputerSpec> specs = config.imputers;
    ensure_apprandom(specs);

    PipelinePlan plan;
    plan.seed = config.seed;
    plan.config_hash = std::move(hash);
    plan.dependencies = config.dependencies;
    for (const auto& c : encoded.columns()) plan.columns.push_back({c.name, c.kind, c.labels});

    std::map<std::string, const QualityRecord*> by_feature;
    for (const auto& r : records) by_feature[r.feature] = &r;

    for (std::size_t f = 0; f < encoded.n_cols(); ++f) {
        const Column& col = encoded.column(f);
        const auto it = by_feature.find(col.name);
        if (it == by_feature.end()) throw InvalidArgument("fit_pipeline: no quality record for '" + col.name + "'");
        const QualityRecord& rec = *it->second;
        if (!rec.kept) {
            plan.drop_list.push_back(col.name);
            continue;
        }
        const ImputerSpec* chosen = nullptr;
        for (const auto& s : specs)
            if (s.id == rec.chosen_imputer) chosen = &s;
        if (!chosen) throw InvalidArgument("fit_pipeline: unknown imputer '" + rec.chosen_imputer + "'");

        ImputerSpec spec = *chosen;
        spec.seed = derive_seed({config.seed, f, spec.seed, 0x70});
        const auto predictors = predictors_for(encoded, col.name, spec, config.dependencies);
        std::vector<std::string> view = predictors;
        view.push_back(col.name);
        try {
            plan.imputers.push_back(fit_imputer(spec, encoded.select_columns(view), col.name, predictors));
        } catch (const UntrainableImputer&) {
            plan.drop_list.push_back(col.name);
            plan.flags.push_back("untrainable_dropped:" + col.name);
        }
    }
    return plan;
}

Table encode_with_plan(const PipelinePlan& plan, const Table& raw, std::vector<std::string>* notes) {
    std::map<std::string, const ColumnSchema*> schema;
    for (const auto& c : plan.columns) schema[c.name] = &c;
    for (const auto& c : plan.columns)
        if (!raw.has_column(c.name)) throw SchemaMismatch("column '" + c.name + "' is missing");

    std::vector<Column> out;
    for (const auto& in : raw.columns()) {
        const auto it = schema.find(in.name);
        if (it == schema.end()) {
            note(notes, "passthrough_column:" + in.name);
            out.push_back(in);
            continue;
        }
        const ColumnSchema& s = *it->second;
        Column c;
        c.name = in.name;
        c.kind = s.kind;
        c.kind_locked = true;
        c.mask = in.mask;
        if (s.labels && !in.is_text && in.labels) {
            if (*in.labels != *s.labels) throw SchemaMismatch("column '" + in.name + "' uses a different encoding");
            c.labels = s.labels;
            c.values = in.values;
        } else if (s.labels) {
            std::map<std::string, std::size_t> code;
            for (std::size_t i = 0; i < s.labels->size(); ++i) code[(*s.labels)[i]] = i;
            c.labels = s.labels;
            c.values.assign(in.size(), kNaN);
            std::size_t unseen = 0;
            for (std::size_t r = 0; r < in.size(); ++r) {
                if (in.missing(r)) continue;
                const std::string cell = in.is_text ? in.text[r] : shortest(in.values[r]);
                const auto k = code.find(cell);
                if (k == code.end()) {
                    c.mask[r] = 1;
                    ++unseen;
                } else {
                    c.values[r] = static_cast<double>(k->second);
                }
            }
            if (unseen) note(notes, "unseen_category:" + c.name + ":" + std::to_string(unseen));
        } else {
            if (in.is_text) throw SchemaMismatch("column '" + in.name + "' was numeric at fit time");
            c.values = in.values;
        }
        out.push_back(std::move(c));
    }
    return Table(std::move(out), raw.n_rows());
}

Table apply_pipeline(const PipelinePlan& plan, const Table& raw, std::vector<std::string>* notes) {
    const Table encoded = encode_with_plan(plan, raw, notes);
    Table result = encoded;
    for (const auto& imp : plan.imputers) {
        Column c = encoded.column(imp.target);
        c.values = impute_column(imp, encoded);
        c.mask.assign(c.values.size(), 0);
        result = result.replace_column(std::move(c));
    }
    return result.drop_columns(std::set<std::string>(plan.drop_list.begin(), plan.drop_list.end()));
}

std::string serialize_pipeline(const PipelinePlan& plan) {
    json columns = json::array();
    for (const auto& c : plan.columns) {
        json col = {{"name", c.name}, {"kind", to_string(c.kind)}};
        col["labels"] = c.labels ? json(*c.labels) : json(nullptr);
        columns.push_back(col);
    }
    json imputers = json::array();
    for (const auto& f : plan.imputers) imputers.push_back(encode_imputer(f));
    json deps = nullptr;
    if (plan.dependencies) {
        deps = json::object();
        for (const auto& [k, v] : *plan.dependencies) deps[k] = v;
    }
    const json j = {{"schema_version", plan.schema_version},
                    {"config_hash", plan.config_hash},
                    {"seed", plan.seed},
                    {"columns", columns},
                    {"drop_list", plan.drop_list},
                    {"dependencies", deps},
                    {"imputers", imputers},
                    {"flags", plan.flags}};
    return j.dump(1) + "\n";
}

PipelinePlan deserialize_pipeline(std::string_view text, const std::string& expected_hash,
                                  std::vector<std::string>* warnings) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptModel(std::string("pipeline is not valid JSON: ") + e.what());
    }
    try {
        PipelinePlan plan;
        plan.schema_version = field(j, "schema_version").get<int>();
        if (plan.schema_version != kPipelineSchemaVersion)
            throw VersionMismatch("pipeline schema_version " + std::to_string(plan.schema_version) +
                                  " is not supported (expected " +
                                  std::to_string(kPipelineSchemaVersion) + ")");
        plan.config_hash = field(j, "config_hash").get<std::string>();
        plan.seed = field(j, "seed").get<std::uint64_t>();
        for (const auto& c : field(j, "columns")) {
            ColumnSchema s;
            s.name = field(c, "name").get<std::string>();
            try {
                s.kind = parse_column_kind(field(c, "kind").get<std::string>());
            } catch (const InvalidArgument& e) {
                throw CorruptModel(e.what());
            }
            const auto& labels = field(c, "labels");
            if (!labels.is_null()) s.labels = labels.get<std::vector<std::string>>();
            plan.columns.push_back(std::move(s));
        }
        plan.drop_list = field(j, "drop_list").get<std::vector<std::string>>();
        const auto& deps = field(j, "dependencies");
        if (!deps.is_null()) plan.dependencies = deps.get<DependencyDict>();
        for (const auto& f : field(j, "imputers")) plan.imputers.push_back(decode_imputer(f));
        plan.flags = field(j, "flags").get<std::vector<std::string>>();

        std::set<std::string> names;
        for (const auto& c : plan.columns) names.insert(c.name);
        for (const auto& f : plan.imputers) {
            if (!names.count(f.target)) throw CorruptModel("imputer targets unknown column '" + f.target + "'");
            for (const auto& p : f.predictors)
                if (!names.count(p)) throw CorruptModel("imputer uses unknown predictor '" + p + "'");
        }
        if (!expected_hash.empty() && expected_hash != plan.config_hash && warnings)
            warnings->push_back("config hash differs: pipeline " + plan.config_hash + ", current " +
                                expected_hash);
        return plan;
    } catch (const json::exception& e) {
        throw CorruptModel(std::string("malformed pipeline: ") + e.what());
    }
}

std::string config_hash(std::string_view canonical_text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(canonical_text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return out;
}

}  // namespace iqa
