#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqa/engine.hpp"
#include "iqa/imputers.hpp"
#include "iqa/table.hpp"

namespace iqa {

inline constexpr int kPipelineSchemaVersion = 1;

// Training-time schema of one column.
struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::optional<std::vector<std::string>> labels;
};

struct PipelinePlan {
    int schema_version = kPipelineSchemaVersion;
    std::vector<ColumnSchema> columns;
    std::vector<std::string> drop_list;
    std::vector<FittedImputer> imputers;  // one per kept feature, in column order
    std::optional<DependencyDict> dependencies;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::string> flags;
};

// Fits the chosen imputer of every kept feature on the whole (encoded)
// table. Dropped features stay available as predictors.
PipelinePlan fit_pipeline(const Table& encoded, const std::vector<QualityRecord>& records,
                          const AssessConfig& config, std::string config_hash = {});

// Encodes `raw` with the plan's dictionaries (text cells outside a
// dictionary become missing and are imputed), imputes every kept feature
// from the encoded input and removes the drop list. SchemaMismatch when
// a planned column is absent. Notes such as unseen categories are
// appended to `notes`.
Table apply_pipeline(const PipelinePlan& plan, const Table& raw,
                     std::vector<std::string>* notes = nullptr);

// Encodes `raw` with the plan's dictionaries and kinds, nothing else.
Table encode_with_plan(const PipelinePlan& plan, const Table& raw,
                       std::vector<std::string>* notes = nullptr);

std::string serialize_pipeline(const PipelinePlan& plan);

// VersionMismatch on a different schema_version, CorruptModel on missing
// or malformed fields. A config hash differing from `expected_hash`
// (when given) only adds a warning.
PipelinePlan deserialize_pipeline(std::string_view text, const std::string& expected_hash = {},
                                  std::vector<std::string>* warnings = nullptr);

// Hex FNV-1a of the canonical text of a configuration.
std::string config_hash(std::string_view canonical_text);

}  // namespace iqa
