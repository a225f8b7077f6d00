#include "iqa/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "iqa/errors.hpp"
#include "json.hpp"

namespace iqa {

using nlohmann::json;

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw SchemaError(child(path, key), "unknown key");
    }
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    return v.get<double>();
}

long long integer(const json& v, const std::string& path, long long min_value) {
    if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value) throw SchemaError(path, "must be at least " + std::to_string(min_value));
    return x;
}

std::uint64_t seed_value(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    return static_cast<std::uint64_t>(integer(v, path, 0));
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> strings(const json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaError(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(text(v[i], child(path, i)));
    return out;
}

template <typename F>
auto rethrow_as_schema(const std::string& path, F&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        throw SchemaError(path, e.what());
    }
}

EstimatorSpec parse_estimator(const json& j, const std::string& path, EstimatorSpec spec) {
    allow_keys(j, path,
               {"kind", "reg_strength", "n_estimators", "max_depth", "learning_rate", "max_features", "bootstrap"});
    if (j.contains("kind")) {
        const std::string kind = text(j["kind"], child(path, "kind"));
        if (kind == "ridge")
            spec.kind = EstimatorKind::Ridge;
        else if (kind == "forest")
            spec.kind = EstimatorKind::Forest;
        else if (kind == "gbt")
            spec.kind = EstimatorKind::Gbt;
        else
            throw SchemaError(child(path, "kind"), "unknown estimator '" + kind + "'");
    }
    if (j.contains("reg_strength")) {
        spec.reg_strength = number(j["reg_strength"], child(path, "reg_strength"));
        if (!(spec.reg_strength >= 0.0)) throw SchemaError(child(path, "reg_strength"), "must be non-negative");
    }
    if (j.contains("n_estimators")) {
        const auto n = static_cast<int>(integer(j["n_estimators"], child(path, "n_estimators"), 1));
        spec.forest.n_estimators = n;
        spec.gbt.n_estimators = n;
    }
    if (j.contains("max_depth")) {
        const auto d = static_cast<int>(integer(j["max_depth"], child(path, "max_depth"), -1));
        spec.forest.max_depth = d;
        spec.gbt.max_depth = d;
    }
    if (j.contains("learning_rate")) {
        spec.gbt.learning_rate = number(j["learning_rate"], child(path, "learning_rate"));
        if (!(spec.gbt.learning_rate >= 0.0)) throw SchemaError(child(path, "learning_rate"), "must be non-negative");
    }
    if (j.contains("max_features")) {
        if (j["max_features"].is_null())
            spec.forest.max_features.reset();
        else
            spec.forest.max_features = static_cast<std::size_t>(integer(j["max_features"], child(path, "max_features"), 1));
    }
    if (j.contains("bootstrap")) {
        if (!j["bootstrap"].is_boolean()) throw SchemaError(child(path, "bootstrap"), "expected a boolean");
        spec.forest.bootstrap = j["bootstrap"].get<bool>();
    }
    return spec;
}

ImputerSpec parse_imputer(const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        return rethrow_as_schema(path, [&] { return preset_imputer(name); });
    }
    allow_keys(j, path, {"id", "preset", "family", "n_neighbors", "max_iter", "estimator", "seed"});
    ImputerSpec spec;
    if (j.contains("preset")) {
        const std::string name = text(j["preset"], child(path, "preset"));
        spec = rethrow_as_schema(child(path, "preset"), [&] { return preset_imputer(name); });
    } else if (!j.contains("family")) {
        throw SchemaError(child(path, "family"), "required when no preset is given");
    }
    if (j.contains("family")) {
        const std::string fam = text(j["family"], child(path, "family"));
        spec.family = rethrow_as_schema(child(path, "family"), [&] { return parse_imputer_family(fam); });
    }
    if (j.contains("id"))
        spec.id = text(j["id"], child(path, "id"));
    else if (spec.id.empty())
        spec.id = to_string(spec.family);
    if (spec.id.empty()) throw SchemaError(child(path, "id"), "must not be empty");
    if (j.contains("n_neighbors"))
        spec.n_neighbors = static_cast<int>(integer(j["n_neighbors"], child(path, "n_neighbors"), 1));
    if (j.contains("max_iter")) spec.max_iter = static_cast<int>(integer(j["max_iter"], child(path, "max_iter"), 0));
    if (j.contains("estimator")) spec.estimator = parse_estimator(j["estimator"], child(path, "estimator"), spec.estimator);
    if (j.contains("seed")) spec.seed = seed_value(j["seed"], child(path, "seed"));
    return spec;
}

ColumnKind kind_from_key(const std::string& key, const std::string& path) {
    return rethrow_as_schema(path, [&] { return parse_column_kind(key); });
}

}  // namespace

ImputerSpec preset_imputer(const std::string& name) {
    ImputerSpec s;
    s.id = name;
    if (name == "mean") {
        s.family = ImputerFamily::Mean;
    } else if (name == "median") {
        s.family = ImputerFamily::Median;
    } else if (name == "mode") {
        s.family = ImputerFamily::Mode;
    } else if (name == "random" || name == "apprandom") {
        s.family = ImputerFamily::Random;
    } else if (name == "knn3" || name == "knn5" || name == "knn10") {
        s.family = ImputerFamily::Knn;
        s.n_neighbors = std::stoi(name.substr(3));
    } else if (name == "iter_br") {
        s.family = ImputerFamily::Iterative;
        s.estimator.kind = EstimatorKind::Ridge;
    } else if (name == "iter_rf") {
        s.family = ImputerFamily::Iterative;
        s.estimator.kind = EstimatorKind::Forest;
        s.estimator.forest.n_estimators = 100;
    } else if (name == "iter_xgb") {
        s.family = ImputerFamily::Iterative;
        s.estimator.kind = EstimatorKind::Gbt;
        s.estimator.gbt = GbtParams{100, 6, 0.1, GbtLoss::Squared};
    } else {
        throw InvalidArgument("unknown imputer preset '" + name + "'");
    }
    return s;
}

std::vector<std::string> preset_names() {
    return {"mean", "median", "mode", "random", "knn3", "knn5", "knn10", "iter_br", "iter_rf", "iter_xgb"};
}

Config parse_config(std::string_view input, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(input);
    } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("invalid JSON: ") + e.what());
    }
    allow_keys(j, "", {"schema_version", "data", "splitter", "scorers", "imputers", "threshold", "alpha", "veto",
                       "seed", "encoder", "dependency_graph"});
    Config cfg;
    cfg.canonical = j.dump();

    if (j.contains("schema_version") && integer(j["schema_version"], "/schema_version", 0) != kConfigSchemaVersion)
        throw SchemaError("/schema_version", "unsupported version");

    if (!j.contains("data")) throw SchemaError("/data", "required");
    {
        const json& d = j["data"];
        allow_keys(d, "/data", {"path", "missing", "exclude", "kinds", "delimiter"});
        if (d.contains("path")) {
            std::filesystem::path p = text(d["path"], "/data/path");
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            cfg.data.path = p.string();
        }
        if (d.contains("missing")) cfg.data.missing = strings(d["missing"], "/data/missing");
        if (d.contains("exclude")) cfg.data.exclude = strings(d["exclude"], "/data/exclude");
        if (d.contains("kinds") && !d["kinds"].is_object()) throw SchemaError("/data/kinds", "expected an object");
        if (d.contains("delimiter")) {
            const std::string delim = text(d["delimiter"], "/data/delimiter");
            if (delim.size() != 1) throw SchemaError("/data/delimiter", "must be a single character");
            cfg.data.delimiter = delim[0];
        }
    }

    if (j.contains("splitter")) {
        const json& s = j["splitter"];
        allow_keys(s, "/splitter", {"type", "k", "seed"});
        if (s.contains("type") && text(s["type"], "/splitter/type") != "kfold")
            throw SchemaError("/splitter/type", "only 'kfold' is supported");
        if (s.contains("k")) cfg.k = static_cast<std::size_t>(integer(s["k"], "/splitter/k", 2));
        if (s.contains("seed")) cfg.split_seed = seed_value(s["seed"], "/splitter/seed");
    }

    if (j.contains("scorers")) {
        const json& s = j["scorers"];
        allow_keys(s, "/scorers", {"continuous", "discrete", "binary", "categorical"});
        for (const auto& [key, value] : s.items()) {
            const std::string path = "/scorers/" + key;
            const std::string name = text(value, path);
            cfg.scorers[kind_from_key(key, path)] = rethrow_as_schema(path, [&] { return parse_scorer_kind(name); });
        }
    }

    if (!j.contains("imputers")) throw SchemaError("/imputers", "required");
    {
        const json& list = j["imputers"];
        if (!list.is_array() || list.empty()) throw SchemaError("/imputers", "expected a non-empty array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < list.size(); ++i) {
            ImputerSpec spec = parse_imputer(list[i], child("/imputers", i));
            if (!ids.insert(spec.id).second)
                throw SchemaError(child("/imputers", i), "duplicate imputer id '" + spec.id + "'");
            cfg.imputers.push_back(std::move(spec));
        }
        if (ensure_apprandom(cfg.imputers)) cfg.flags.push_back("apprandom_appended");
    }

    if (j.contains("threshold") && !j["threshold"].is_null()) {
        const double t = number(j["threshold"], "/threshold");
        if (!(t >= 0.0 && t <= 1.0)) throw SchemaError("/threshold", "must lie in [0, 1]");
        cfg.threshold = t;
    }
    if (j.contains("alpha")) {
        cfg.alpha = number(j["alpha"], "/alpha");
        if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw SchemaError("/alpha", "must lie in (0, 1)");
    }
    if (j.contains("veto")) {
        const std::string v = text(j["veto"], "/veto");
        cfg.veto = rethrow_as_schema("/veto", [&] { return parse_veto_mode(v); });
    }
    if (j.contains("seed")) cfg.seed = seed_value(j["seed"], "/seed");
    if (j.contains("encoder")) {
        allow_keys(j["encoder"], "/encoder", {"type"});
        if (j["encoder"].contains("type") && text(j["encoder"]["type"], "/encoder/type") != "label")
            throw SchemaError("/encoder/type", "only 'label' is supported");
    }

    if (j.contains("dependency_graph") && !j["dependency_graph"].is_null()) {
        const json& g = j["dependency_graph"];
        const std::string path = "/dependency_graph";
        if (g.is_string()) {
            if (g.get<std::string>() != "auto") throw SchemaError(path, "expected 'auto' or an object");
            cfg.graph.mode = GraphMode::Auto;
        } else {
            allow_keys(g, path, {"mode", "top_n", "min_importance", "n_repeats", "holdout_fraction", "dict", "path"});
            const std::string mode = g.contains("mode") ? text(g["mode"], path + "/mode") : "auto";
            if (mode == "none")
                cfg.graph.mode = GraphMode::None;
            else if (mode == "auto")
                cfg.graph.mode = GraphMode::Auto;
            else if (mode == "inline")
                cfg.graph.mode = GraphMode::Inline;
            else if (mode == "path")
                cfg.graph.mode = GraphMode::Path;
            else
                throw SchemaError(path + "/mode", "unknown mode '" + mode + "'");
            auto& p = cfg.graph.params;
            if (g.contains("top_n")) p.top_n = static_cast<std::size_t>(integer(g["top_n"], path + "/top_n", 1));
            if (g.contains("min_importance")) p.min_importance = number(g["min_importance"], path + "/min_importance");
            if (g.contains("n_repeats")) p.n_repeats = static_cast<int>(integer(g["n_repeats"], path + "/n_repeats", 1));
            if (g.contains("holdout_fraction")) {
                p.holdout_fraction = number(g["holdout_fraction"], path + "/holdout_fraction");
                if (!(p.holdout_fraction > 0.0 && p.holdout_fraction < 1.0))
                    throw SchemaError(path + "/holdout_fraction", "must lie in (0, 1)");
            }
            if (cfg.graph.mode == GraphMode::Inline) {
                if (!g.contains("dict")) throw SchemaError(path + "/dict", "required for inline mode");
                try {
                    cfg.graph.dict = dependency_dict_from_json(g["dict"].dump());
                } catch (const SchemaError& e) {
                    throw SchemaError(path + "/dict" + e.path(), e.what());
                }
            }
            if (cfg.graph.mode == GraphMode::Path) {
                if (!g.contains("path")) throw SchemaError(path + "/path", "required for path mode");
                std::filesystem::path p2 = text(g["path"], path + "/path");
                if (p2.is_relative() && !base_dir.empty()) p2 = base_dir / p2;
                cfg.graph.path = p2.string();
            }
        }
    }

    if (j["data"].contains("kinds")) {
        for (const auto& [col, value] : j["data"]["kinds"].items()) {
            const std::string path = "/data/kinds/" + col;
            cfg.data.kinds[col] = kind_from_key(text(value, path), path);
        }
    }
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

Table load_dataset(const Config& config, const std::filesystem::path& override_path) {
    const std::filesystem::path path = override_path.empty() ? std::filesystem::path(config.data.path) : override_path;
    if (path.empty()) throw SchemaError("/data/path", "no data path given");
    CsvOptions opts;
    opts.delimiter = config.data.delimiter;
    opts.missing_tokens = config.data.missing;
    opts.kind_hints = config.data.kinds;
    Table t = load_csv(path, opts);
    for (const auto& name : config.data.exclude)
        if (!t.has_column(name)) throw SchemaError("/data/exclude", "unknown column '" + name + "'");
    t = t.drop_columns(std::set<std::string>(config.data.exclude.begin(), config.data.exclude.end()));
    return infer_column_kinds(label_encode(t));
}

std::optional<DependencyDict> resolve_dependencies(const Config& config, const Table& table) {
    switch (config.graph.mode) {
        case GraphMode::None: return std::nullopt;
        case GraphMode::Inline: return config.graph.dict;
        case GraphMode::Path: {
            std::ifstream in(config.graph.path, std::ios::binary);
            if (!in) throw IoError("cannot open dependency dictionary '" + config.graph.path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            return dependency_dict_from_json(ss.str());
        }
        case GraphMode::Auto:
            return transitive_dependencies(build_dependency_graph(table, config.graph.params, config.seed));
    }
    return std::nullopt;
}

AssessConfig to_assess_config(const Config& config, std::optional<DependencyDict> deps) {
    AssessConfig a;
    a.imputers = config.imputers;
    a.scorers = config.scorers;
    a.k = config.k;
    a.split_seed = config.split_seed;
    a.threshold = config.threshold;
    a.alpha = config.alpha;
    a.veto = config.veto;
    a.seed = config.seed;
    a.dependencies = std::move(deps);
    return a;
}

}  // namespace iqa
