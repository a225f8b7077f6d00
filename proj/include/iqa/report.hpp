#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqa/audit.hpp"
#include "iqa/engine.hpp"

namespace iqa {

inline constexpr int kReportSchemaVersion = 1;

struct QualityReport {
    std::optional<double> threshold;
    std::vector<QualityRecord> records;
    std::vector<std::string> flags;
};

// Pooled per-imputer predictions are not written.
std::string quality_report_to_json(const QualityReport& report);
QualityReport quality_report_from_json(std::string_view text);  // SchemaError / VersionMismatch

struct SvgLayout {
    double axis_length = 500.0;
    double label_width = 170.0;
    double row_height = 26.0;
    double bar_height = 18.0;
    double margin = 20.0;
};

// Horizontal stacked bars sorted by descending quality: a blue segment of
// length mu*L, an orange one of (1-mu)*delta*L, a whisker of +/-
// (1-mu)*delta_std*L, a dashed line at the threshold and red names for
// features imputed by the fallback.
std::string emit_quality_svg(const std::vector<QualityRecord>& records,
                             std::optional<double> threshold, const SvgLayout& layout = {});

// Plain-text table: feature, kind, mu, delta, omega, imputer, kept.
std::string quality_summary(const QualityReport& report);

std::string audit_reports_to_json(const std::vector<AuditReport>& reports);
// One block per level: a row per feature, a column per strategy with
// "mean±ci" cells ("---" when skipped) and a closing average row.
std::string audit_reports_to_csv(const std::vector<AuditReport>& reports);

// Per-column missing counts and fractions.
std::string missingness_to_json(const Table& table);

// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace iqa
