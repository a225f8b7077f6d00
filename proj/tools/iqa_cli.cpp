#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iqa/audit.hpp"
#include "iqa/config.hpp"
#include "iqa/depgraph.hpp"
#include "iqa/engine.hpp"
#include "iqa/errors.hpp"
#include "iqa/pipeline.hpp"
#include "iqa/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

// Errors raised while reading the configuration map to exit code 2 no
// matter their type.
struct ConfigFailure {
    std::string code;
    std::string message;
    std::string path;
};

struct Options {
    std::string data;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::vector<double> levels = {0.25, 0.5, 0.75};
    double gamma = 0.0;
    double efficiency = 0.0;
    std::string format;
    std::string pipeline;
    std::string records;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw iqa::IoError("cannot open '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

iqa::Config load_cli_config(const Options& o) {
    try {
        if (o.config.empty()) throw iqa::SchemaError("/", "--config is required");
        iqa::Config c = iqa::load_config(o.config);
        if (o.seed) c.seed = *o.seed;
        if (o.threshold) {
            if (!(*o.threshold >= 0.0 && *o.threshold <= 1.0))
                throw iqa::SchemaError("/threshold", "threshold must lie in [0, 1]");
            c.threshold = *o.threshold;
        }
        return c;
    } catch (const iqa::SchemaError& e) {
        throw ConfigFailure{e.code(), e.what(), e.path()};
    } catch (const iqa::Error& e) {
        throw ConfigFailure{e.code(), e.what(), {}};
    }
}

fs::path out_dir(const Options& o) {
    fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    return dir;
}

void report_flags(const std::vector<std::string>& flags) {
    for (const auto& f : flags) std::cerr << "note: " << f << '\n';
}

std::vector<iqa::QualityRecord> run_assess(const iqa::Config& config, const iqa::Table& table,
                                           std::optional<iqa::DependencyDict>& deps) {
    deps = iqa::resolve_dependencies(config, table);
    return iqa::assess(table, iqa::to_assess_config(config, deps));
}

iqa::QualityReport make_report(const iqa::Config& config, std::vector<iqa::QualityRecord> records) {
    iqa::QualityReport rep;
    rep.threshold = config.threshold;
    rep.records = std::move(records);
    rep.flags = config.flags;
    return rep;
}

int cmd_assess(const Options& o) {
    const iqa::Config config = load_cli_config(o);
    const iqa::Table table = iqa::load_dataset(config, o.data);
    std::optional<iqa::DependencyDict> deps;
    const auto rep = make_report(config, run_assess(config, table, deps));
    const fs::path dir = out_dir(o);
    iqa::write_file_atomic(dir / "quality_records.json", iqa::quality_report_to_json(rep));
    iqa::write_file_atomic(dir / "missingness.json", iqa::missingness_to_json(table));
    report_flags(config.flags);
    std::cout << iqa::quality_summary(rep);
    return kExitOk;
}

int cmd_graph(const Options& o) {
    const iqa::Config config = load_cli_config(o);
    const iqa::Table table = iqa::load_dataset(config, o.data);
    const iqa::DependencyGraph g = iqa::build_dependency_graph(table, config.graph.params, config.seed);
    const fs::path dir = out_dir(o);
    iqa::write_file_atomic(dir / "dependency_dict.json", iqa::dependency_dict_to_json(iqa::transitive_dependencies(g)));

    json edges = json::array();
    for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    json flags = json::object();
    for (const auto& [node, fl] : g.flags) flags[node] = fl;
    json baseline = json::object();
    for (const auto& [node, score] : g.baseline_scores) baseline[node] = score;
    const json graph = {{"schema_version", iqa::kReportSchemaVersion},
                        {"nodes", g.nodes},
                        {"edges", edges},
                        {"baseline_r2", baseline},
                        {"flags", flags}};
    iqa::write_file_atomic(dir / "dependency_graph.json", graph.dump(2) + "\n");
    std::cout << g.edges.size() << " edges over " << g.nodes.size() << " features\n";
    return kExitOk;
}

int cmd_fit(const Options& o) {
    const iqa::Config config = load_cli_config(o);
    const iqa::Table table = iqa::load_dataset(config, o.data);
    std::optional<iqa::DependencyDict> deps;
    auto records = run_assess(config, table, deps);
    const iqa::PipelinePlan plan = iqa::fit_pipeline(table, records, iqa::to_assess_config(config, deps),
                                                     iqa::config_hash(config.canonical));
    const fs::path dir = out_dir(o);
    iqa::write_file_atomic(dir / "quality_records.json",
                           iqa::quality_report_to_json(make_report(config, std::move(records))));
    iqa::write_file_atomic(dir / "pipeline.json", iqa::serialize_pipeline(plan));
    report_flags(config.flags);
    report_flags(plan.flags);
    std::cout << plan.imputers.size() << " imputers fitted, " << plan.drop_list.size() << " features dropped\n";
    return kExitOk;
}

int cmd_apply(const Options& o) {
    std::string expected_hash;
    std::optional<iqa::Config> config;
    if (!o.config.empty()) {
        config = load_cli_config(o);
        expected_hash = iqa::config_hash(config->canonical);
    }
    std::vector<std::string> notes;
    const iqa::PipelinePlan plan = iqa::deserialize_pipeline(read_text(o.pipeline), expected_hash, &notes);

    iqa::CsvOptions csv;
    if (config) {
        csv.delimiter = config->data.delimiter;
        csv.missing_tokens = config->data.missing;
    }
    if (o.data.empty()) throw ConfigFailure{"SchemaError", "--data is required", "/data/path"};
    const iqa::Table raw = iqa::load_csv(o.data, csv);
    const iqa::Table done = iqa::apply_pipeline(plan, raw, &notes);
    std::ostringstream s;
    iqa::write_csv(s, done);
    if (o.out.empty()) {
        std::cout << s.str();
    } else {
        const fs::path target(o.out);
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        iqa::write_file_atomic(target, s.str());
    }
    report_flags(notes);
    return kExitOk;
}

int cmd_audit(const Options& o) {
    const iqa::Config config = load_cli_config(o);
    const iqa::Table table = iqa::load_dataset(config, o.data);
    const auto deps = iqa::resolve_dependencies(config, table);

    std::vector<iqa::Strategy> strategies;
    for (const auto& spec : config.imputers) strategies.push_back(iqa::fixed_strategy(spec.id, spec, deps));
    strategies.push_back(iqa::iqa_strategy("iqa", iqa::to_assess_config(config, deps)));

    iqa::AuditParams params;
    params.k = config.k;
    const auto reports = iqa::audit_all(table, strategies, o.levels, params, config.seed);
    const fs::path dir = out_dir(o);
    iqa::write_file_atomic(dir / "audit_report.json", iqa::audit_reports_to_json(reports));
    const std::string tables = iqa::audit_reports_to_csv(reports);
    if (o.format == "csv") iqa::write_file_atomic(dir / "audit_tables.csv", tables);
    std::cout << tables;
    return kExitOk;
}

int cmd_recommend_m(const Options& o) {
    try {
        std::cout << iqa::recommend_imputations(o.gamma, o.efficiency) << '\n';
    } catch (const iqa::InvalidArgument& e) {
        throw ConfigFailure{e.code(), e.what(), {}};
    }
    return kExitOk;
}

int cmd_report(const Options& o) {
    const std::string path = o.records.empty() ? (fs::path(o.out.empty() ? "." : o.out) / "quality_records.json").string()
                                               : o.records;
    iqa::QualityReport rep = iqa::quality_report_from_json(read_text(path));
    if (o.threshold) rep.threshold = *o.threshold;
    const fs::path dir = out_dir(o);
    if (o.format == "json") {
        iqa::write_file_atomic(dir / "quality_records.json", iqa::quality_report_to_json(rep));
    } else {
        if (rep.records.empty()) throw iqa::InvalidArgument("no quality records to plot");
        iqa::write_file_atomic(dir / "quality_chart.svg", iqa::emit_quality_svg(rep.records, rep.threshold));
    }
    const std::string summary = iqa::quality_summary(rep);
    iqa::write_file_atomic(dir / "summary.txt", summary);
    std::cout << summary;
    return kExitOk;
}

void emit_error(const std::string& code, const std::string& message, int exit_code, const std::string& path = {}) {
    json j = {{"error", code}, {"message", message}, {"exit_code", exit_code}};
    if (!path.empty()) j["path"] = path;
    std::cerr << j.dump() << '\n';
}

int data_exit_code(const std::string& code) {
    return code == "InvalidArgument" ? kExitConfig : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Imputation quality assessment toolbox"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "JSON configuration file");
        if (needs_config) c->required();
        sub->add_option("--data", o.data, "CSV file (overrides data.path)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "overrides the config seed");
        sub->add_option("--threshold", o.threshold, "quality threshold in [0, 1]");
    };

    auto* assess = app.add_subcommand("assess", "score every imputer on every feature");
    add_common(assess, true);
    auto* graph = app.add_subcommand("graph", "build the dependency dictionary");
    add_common(graph, true);
    auto* fit = app.add_subcommand("fit", "assess and fit the imputation pipeline");
    add_common(fit, true);

    auto* apply = app.add_subcommand("apply", "impute a CSV with a fitted pipeline");
    apply->add_option("--pipeline", o.pipeline, "pipeline.json written by fit")->required();
    apply->add_option("--data", o.data, "CSV to impute")->required();
    apply->add_option("--out", o.out, "output CSV (stdout when omitted)");
    apply->add_option("--config", o.config, "config used at fit time, for the provenance check");

    auto* audit = app.add_subcommand("audit", "observed-vs-imputed detectability audit");
    add_common(audit, true);
    audit->add_option("--levels", o.levels, "MCAR rates, comma separated")->delimiter(',');
    audit->add_option("--format", o.format, "also write audit_tables.csv when csv")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* recommend = app.add_subcommand("recommend_m", "number of imputations for a target efficiency");
    recommend->alias("recommend-m");
    recommend->add_option("--gamma", o.gamma, "fraction of missing information")->required();
    recommend->add_option("--efficiency", o.efficiency, "target efficiency")->required();

    auto* report = app.add_subcommand("report", "render quality_records.json");
    report->add_option("--records", o.records, "quality_records.json (default: <out>/quality_records.json)");
    report->add_option("--out", o.out, "output directory");
    report->add_option("--threshold", o.threshold, "quality threshold to draw");
    report->add_option("--format", o.format, "svg (default) or json")->check(CLI::IsMember({"json", "svg"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("UsageError", e.what(), kExitConfig);
        return kExitConfig;
    }

    try {
        if (assess->parsed()) return cmd_assess(o);
        if (graph->parsed()) return cmd_graph(o);
        if (fit->parsed()) return cmd_fit(o);
        if (apply->parsed()) return cmd_apply(o);
        if (audit->parsed()) return cmd_audit(o);
        if (recommend->parsed()) return cmd_recommend_m(o);
        if (report->parsed()) return cmd_report(o);
    } catch (const ConfigFailure& e) {
        emit_error(e.code, e.message, kExitConfig, e.path);
        return kExitConfig;
    } catch (const iqa::SchemaError& e) {
        emit_error(e.code(), e.what(), kExitData, e.path());
        return kExitData;
    } catch (const iqa::Error& e) {
        const int code = data_exit_code(e.code());
        emit_error(e.code(), e.what(), code);
        return code;
    } catch (const fs::filesystem_error& e) {
        emit_error("IoError", e.what(), kExitData);
        return kExitData;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what(), kExitInternal);
        return kExitInternal;
    }
    return kExitInternal;
}
