#include "iqa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "iqa/errors.hpp"
#include "json.hpp"

namespace iqa {

using nlohmann::json;

namespace {

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_of(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

TestKind parse_test_kind(const std::string& s) {
    if (s == to_string(TestKind::KolmogorovSmirnov)) return TestKind::KolmogorovSmirnov;
    if (s == to_string(TestKind::ChiSquare)) return TestKind::ChiSquare;
    throw SchemaError("/records/*/evaluations/*/verdict/test", "unknown test '" + s + "'");
}

json verdict_json(const TestResult& r) {
    return {{"test", to_string(r.test)}, {"statistic", real(r.statistic)}, {"p_value", real(r.p_value)},
            {"alpha", r.alpha},          {"rejected", r.rejected},         {"flags", r.flags}};
}

TestResult verdict_from(const json& j) {
    TestResult r;
    r.test = parse_test_kind(j.at("test").get<std::string>());
    r.statistic = real_of(j.at("statistic"));
    r.p_value = real_of(j.at("p_value"));
    r.alpha = j.at("alpha").get<double>();
    r.rejected = j.at("rejected").get<bool>();
    r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

}  // namespace

std::string quality_report_to_json(const QualityReport& report) {
    json records = json::array();
    for (const auto& r : report.records) {
        json evals = json::array();
        for (const auto& e : r.evaluations) {
            evals.push_back({{"imputer_id", e.imputer_id},
                             {"skipped", e.skipped},
                             {"delta_mean", real(e.delta_mean)},
                             {"delta_raw", real(e.delta_raw)},
                             {"delta_std", real(e.delta_std)},
                             {"fold_scores", e.fold_scores},
                             {"n_predictors", e.n_predictors},
                             {"vetoed", e.vetoed},
                             {"verdict", e.verdict ? verdict_json(*e.verdict) : json(nullptr)},
                             {"flags", e.flags}});
        }
        records.push_back({{"feature", r.feature},
                           {"kind", to_string(r.kind)},
                           {"completeness", r.completeness},
                           {"delta", r.delta},
                           {"delta_std", r.delta_std},
                           {"omega", r.omega},
                           {"kept", r.kept},
                           {"fallback_used", r.fallback_used},
                           {"chosen_imputer", r.chosen_imputer},
                           {"predictors", r.predictors},
                           {"flags", r.flags},
                           {"evaluations", evals}});
    }
    const json j = {{"schema_version", kReportSchemaVersion},
                    {"threshold", report.threshold ? json(*report.threshold) : json(nullptr)},
                    {"flags", report.flags},
                    {"records", records}};
    return j.dump(2) + "\n";
}

QualityReport quality_report_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("invalid JSON: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion)
            throw VersionMismatch("unsupported quality report schema_version");
        QualityReport rep;
        if (!j.at("threshold").is_null()) rep.threshold = j.at("threshold").get<double>();
        rep.flags = j.at("flags").get<std::vector<std::string>>();
        for (const auto& rj : j.at("records")) {
            QualityRecord r;
            r.feature = rj.at("feature").get<std::string>();
            r.kind = parse_column_kind(rj.at("kind").get<std::string>());
            r.completeness = rj.at("completeness").get<double>();
            r.delta = rj.at("delta").get<double>();
            r.delta_std = rj.at("delta_std").get<double>();
            r.omega = rj.at("omega").get<double>();
            r.kept = rj.at("kept").get<bool>();
            r.fallback_used = rj.at("fallback_used").get<bool>();
            r.chosen_imputer = rj.at("chosen_imputer").get<std::string>();
            r.predictors = rj.at("predictors").get<std::vector<std::string>>();
            r.flags = rj.at("flags").get<std::vector<std::string>>();
            for (const auto& ej : rj.at("evaluations")) {
                ImputerEvaluation e;
                e.imputer_id = ej.at("imputer_id").get<std::string>();
                e.skipped = ej.at("skipped").get<bool>();
                e.delta_mean = real_of(ej.at("delta_mean"));
                e.delta_raw = real_of(ej.at("delta_raw"));
                e.delta_std = real_of(ej.at("delta_std"));
                e.fold_scores = ej.at("fold_scores").get<std::vector<double>>();
                e.n_predictors = ej.at("n_predictors").get<std::size_t>();
                e.vetoed = ej.at("vetoed").get<bool>();
                if (!ej.at("verdict").is_null()) e.verdict = verdict_from(ej.at("verdict"));
                e.flags = ej.at("flags").get<std::vector<std::string>>();
                r.evaluations.push_back(std::move(e));
            }
            rep.records.push_back(std::move(r));
        }
        return rep;
    } catch (const json::exception& e) {
        throw SchemaError("/", std::string("malformed quality report: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaError("/", std::string("malformed quality report: ") + e.what());
    }
}

std::string emit_quality_svg(const std::vector<QualityRecord>& records, std::optional<double> threshold,
                             const SvgLayout& layout) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].omega > records[b].omega; });

    const double L = layout.axis_length;
    const double x0 = layout.margin + layout.label_width;
    const double top = layout.margin + 10.0;
    const double plot_h = layout.row_height * static_cast<double>(records.size());
    const double width = x0 + L + layout.margin + 10.0;
    const double height = top + plot_h + 40.0;

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width, 0) << "\" height=\""
      << fmt(height, 0) << "\" viewBox=\"0 0 " << fmt(width, 0) << ' ' << fmt(height, 0) << "\">\n"
      << "<title>Feature quality</title>\n"
      << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

    for (std::size_t i = 0; i < order.size(); ++i) {
        const QualityRecord& r = records[order[i]];
        const double y = top + layout.row_height * static_cast<double>(i);
        const double blue = r.completeness * L;
        const double orange = (1.0 - r.completeness) * r.delta * L;
        const double cy = y + layout.bar_height / 2.0;
        s << "<g class=\"feature\" data-feature=\"" << xml_escape(r.feature) << "\">\n";
        s << "<text class=\"label\" x=\"" << fmt(x0 - 8.0) << "\" y=\"" << fmt(cy + 4.0)
          << "\" text-anchor=\"end\" fill=\"" << (r.fallback_used ? "#d62728" : "#000000") << "\">"
          << xml_escape(r.feature) << "</text>\n";
        s << "<rect class=\"completeness\" x=\"" << fmt(x0) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(blue)
          << "\" height=\"" << fmt(layout.bar_height) << "\" fill=\"#1f77b4\"/>\n";
        s << "<rect class=\"imputation\" x=\"" << fmt(x0 + blue) << "\" y=\"" << fmt(y) << "\" width=\""
          << fmt(orange) << "\" height=\"" << fmt(layout.bar_height) << "\" fill=\"#ff7f0e\"/>\n";
        const double spread = (1.0 - r.completeness) * r.delta_std * L;
        if (spread > 0.0) {
            const double end = x0 + blue + orange;
            s << "<line class=\"whisker\" x1=\"" << fmt(std::max(x0, end - spread)) << "\" y1=\"" << fmt(cy)
              << "\" x2=\"" << fmt(end + spread) << "\" y2=\"" << fmt(cy) << "\" stroke=\"#333333\"/>\n";
        }
        s << "</g>\n";
    }

    const double axis_y = top + plot_h + 4.0;
    s << "<line class=\"axis\" x1=\"" << fmt(x0) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(x0 + L)
      << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#000000\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double x = x0 + L * t / 4.0;
        s << "<text class=\"tick\" x=\"" << fmt(x) << "\" y=\"" << fmt(axis_y + 16.0)
          << "\" text-anchor=\"middle\">" << fmt(t / 4.0, 2) << "</text>\n";
    }
    if (threshold) {
        const double x = x0 + *threshold * L;
        s << "<line class=\"threshold\" x1=\"" << fmt(x) << "\" y1=\"" << fmt(top - 6.0) << "\" x2=\"" << fmt(x)
          << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#444444\" stroke-dasharray=\"6,4\"/>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

std::string quality_summary(const QualityReport& report) {
    std::ostringstream s;
    s << "feature\tkind\tmu\tdelta\tomega\timputer\tkept\n";
    for (const auto& r : report.records) {
        s << r.feature << '\t' << to_string(r.kind) << '\t' << fmt(r.completeness) << '\t' << fmt(r.delta) << '\t'
          << fmt(r.omega) << '\t' << r.chosen_imputer << (r.fallback_used ? " (fallback)" : "") << '\t'
          << (r.kept ? "yes" : "no") << '\n';
    }
    if (report.threshold) s << "threshold\t" << fmt(*report.threshold) << '\n';
    return s.str();
}

std::string audit_reports_to_json(const std::vector<AuditReport>& reports) {
    json out = json::array();
    for (const auto& rep : reports) {
        json strategies = json::array();
        for (const auto& sa : rep.strategies) {
            json features = json::array();
            for (const auto& f : sa.features)
                features.push_back({{"feature", f.feature},
                                    {"skipped", f.skipped},
                                    {"mean", f.skipped ? json(nullptr) : real(f.mean)},
                                    {"ci", f.skipped ? json(nullptr) : real(f.half_width)},
                                    {"fold_auroc", f.fold_auroc},
                                    {"flags", f.flags}});
            strategies.push_back({{"strategy", sa.strategy},
                                  {"average", sa.average ? real(*sa.average) : json(nullptr)},
                                  {"flags", sa.flags},
                                  {"features", features}});
        }
        out.push_back({{"level", rep.level}, {"strategies", strategies}});
    }
    const json j = {{"schema_version", kReportSchemaVersion},
                    {"metric", "auroc"},
                    {"note", "lower AUROC is better: imputed cells are harder to tell from observed ones"},
                    {"reports", out}};
    return j.dump(2) + "\n";
}

std::string audit_reports_to_csv(const std::vector<AuditReport>& reports) {
    std::ostringstream s;
    for (const auto& rep : reports) {
        s << "level,feature";
        for (const auto& sa : rep.strategies) s << ',' << csv_field(sa.strategy);
        s << '\n';
        const std::size_t n_feat = rep.strategies.empty() ? 0 : rep.strategies.front().features.size();
        for (std::size_t f = 0; f < n_feat; ++f) {
            s << fmt(rep.level, 2) << ',' << csv_field(rep.strategies.front().features[f].feature);
            for (const auto& sa : rep.strategies) {
                const auto& fa = sa.features[f];
                s << ',' << (fa.skipped ? std::string("---") : fmt(fa.mean) + "±" + fmt(fa.half_width));
            }
            s << '\n';
        }
        s << fmt(rep.level, 2) << ",average";
        for (const auto& sa : rep.strategies) s << ',' << (sa.average ? fmt(*sa.average) : std::string("---"));
        s << '\n';
    }
    return s.str();
}

std::string missingness_to_json(const Table& table) {
    json cols = json::array();
    for (const auto& c : table.columns()) {
        const auto missing = static_cast<std::size_t>(std::count_if(c.mask.begin(), c.mask.end(), [](auto m) { return m != 0; }));
        cols.push_back({{"feature", c.name},
                        {"kind", to_string(c.kind)},
                        {"missing", missing},
                        {"fraction", table.n_rows() ? static_cast<double>(missing) / static_cast<double>(table.n_rows()) : 0.0}});
    }
    const json j = {{"schema_version", kReportSchemaVersion}, {"n_rows", table.n_rows()}, {"columns", cols}};
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot replace '" + path.string() + "': " + ec.message());
    }
}

}  // namespace iqa
