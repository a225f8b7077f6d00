#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqa/depgraph.hpp"
#include "iqa/engine.hpp"
#include "iqa/imputers.hpp"
#include "iqa/table.hpp"

namespace iqa {

inline constexpr int kConfigSchemaVersion = 1;

struct DataConfig {
    std::string path;  // resolved against the config file's directory
    std::vector<std::string> missing = {"", "NA", "NaN", "?"};
    std::vector<std::string> exclude;
    std::map<std::string, ColumnKind> kinds;
    char delimiter = ',';
};

enum class GraphMode { None, Auto, Inline, Path };

struct GraphConfig {
    GraphMode mode = GraphMode::None;
    DepGraphParams params;
    DependencyDict dict;  // Inline
    std::string path;     // Path
};

struct Config {
    DataConfig data;
    std::size_t k = 5;
    std::uint64_t split_seed = 0;
    std::map<ColumnKind, ScorerKind> scorers = AssessConfig::default_scorers();
    std::vector<ImputerSpec> imputers;
    std::optional<double> threshold;
    double alpha = 0.05;
    VetoMode veto = VetoMode::Pooled;
    std::uint64_t seed = 0;
    GraphConfig graph;
    std::vector<std::string> flags;
    // Compact dump of the parsed input, used for the provenance hash.
    std::string canonical;
};

// Named imputer presets: mean, median, mode, random, knn3, knn5, knn10,
// iter_br (ridge), iter_rf (random forest) and iter_xgb (boosted trees).
ImputerSpec preset_imputer(const std::string& name);  // throws InvalidArgument
std::vector<std::string> preset_names();

// Parses and validates a JSON configuration. Unknown keys and invalid
// values raise SchemaError carrying the JSON pointer of the offending key.
Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

// Reads the CSV named by the config (or `override_path`), drops excluded
// columns, label-encodes text and infers kinds.
Table load_dataset(const Config& config, const std::filesystem::path& override_path = {});

// Resolves the dependency dictionary the config asks for. Auto builds a
// graph from `table`.
std::optional<DependencyDict> resolve_dependencies(const Config& config, const Table& table);

AssessConfig to_assess_config(const Config& config, std::optional<DependencyDict> deps);

}  // namespace iqa
