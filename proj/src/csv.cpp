#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "iqa/errors.hpp"
#include "iqa/table.hpp"

namespace iqa {

namespace {

using Record = std::vector<std::string>;

// Splits RFC-4180 text into records. Quoted fields may contain the
// delimiter, doubled quotes and line breaks.
std::vector<Record> parse_records(const std::string& text, char delim) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current.clear();
    };

    while (i < n) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
            } else {
                field.push_back(ch);
            }
            ++i;
            continue;
        }
        if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == delim) {
            end_field();
        } else if (ch == '\r' || ch == '\n') {
            end_record();
            if (ch == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
        } else {
            field.push_back(ch);
            if (ch != ' ' && ch != '\t') field_started = true;
        }
        ++i;
    }
    if (in_quotes) throw ParseError(records.size() + 1, current.size(), "unterminated quoted field");
    if (!field.empty() || !current.empty()) end_record();
    return records;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && !std::isinf(out);
}

bool is_blank(const Record& r) { return r.size() == 1 && trim(r[0]).empty(); }

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

Table read_csv(std::istream& in, const CsvOptions& options) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<Record> records = parse_records(text, options.delimiter);
    if (records.empty()) throw ParseError(1, 0, "missing header row");

    Record header = records.front();
    for (auto& h : header) h = std::string(trim(h));
    const std::size_t n_cols = header.size();

    std::vector<Record> rows;
    rows.reserve(records.size() - 1);
    std::vector<std::size_t> line_of;  // record number of each kept row
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (n_cols > 1 && is_blank(records[r])) continue;
        if (records[r].size() != n_cols)
            throw RaggedRows("record " + std::to_string(r + 1) + " has " +
                             std::to_string(records[r].size()) + " fields, header has " +
                             std::to_string(n_cols));
        rows.push_back(std::move(records[r]));
        line_of.push_back(r + 1);
    }
    const std::size_t n_rows = rows.size();

    auto is_missing = [&](std::string_view cell) {
        for (const auto& tok : options.missing_tokens)
            if (cell == tok) return true;
        return false;
    };

    std::vector<Column> columns;
    columns.reserve(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        Mask mask(n_rows, 0);
        std::vector<std::string> cells(n_rows);
        std::vector<double> values(n_rows, std::numeric_limits<double>::quiet_NaN());
        std::size_t numeric = 0, textual = 0;
        std::size_t first_bad = n_rows;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const std::string_view cell = trim(rows[r][c]);
            if (is_missing(cell)) {
                mask[r] = 1;
                continue;
            }
            cells[r] = std::string(cell);
            double v;
            if (parse_double(cell, v)) {
                if (std::isnan(v)) {
                    mask[r] = 1;
                    continue;
                }
                values[r] = v;
                ++numeric;
            } else {
                ++textual;
                if (first_bad == n_rows) first_bad = r;
            }
        }

        const auto hint = options.kind_hints.find(header[c]);
        const bool has_hint = hint != options.kind_hints.end();
        const bool as_text = has_hint ? hint->second == ColumnKind::Categorical
                                      : (textual > 0 && numeric == 0);
        if (!as_text && textual > 0)
            throw ParseError(line_of[first_bad], c,
                             "unparseable value '" + cells[first_bad] + "' in numeric column '" +
                                 header[c] + "'");

        Column col = as_text ? Column::textual(header[c], std::move(cells), std::move(mask))
                             : Column::numeric(header[c], std::move(values), std::move(mask));
        if (has_hint) {
            col.kind = hint->second;
            col.kind_locked = true;
        }
        columns.push_back(std::move(col));
    }
    return Table(std::move(columns), n_rows);
}

Table load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_csv(in, options);
}

void write_csv(std::ostream& out, const Table& table) {
    const auto& cols = table.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out << ',';
        out << quote_if_needed(cols[c].name);
    }
    out << '\n';
    std::vector<std::vector<std::string>> decoded;
    decoded.reserve(cols.size());
    for (const auto& c : cols) decoded.push_back(decode_labels(c));
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            out << quote_if_needed(decoded[c][r]);
        }
        out << '\n';
    }
}

}  // namespace iqa
