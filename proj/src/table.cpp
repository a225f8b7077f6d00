#include "iqa/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "iqa/errors.hpp"
#include "iqa/rng.hpp"

namespace iqa {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMinLevelCount = 5;
}  // namespace

std::string to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Discrete: return "discrete";
        case ColumnKind::Binary: return "binary";
        case ColumnKind::Categorical: return "categorical";
    }
    return "continuous";
}

ColumnKind parse_column_kind(std::string_view name) {
    if (name == "continuous") return ColumnKind::Continuous;
    if (name == "discrete") return ColumnKind::Discrete;
    if (name == "binary") return ColumnKind::Binary;
    if (name == "categorical") return ColumnKind::Categorical;
    throw InvalidArgument("unknown column kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- Column

std::size_t Column::missing_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void Column::add_flag(std::string flag) {
    if (!has_flag(flag)) flags.push_back(std::move(flag));
}

bool Column::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

Column Column::numeric(std::string name, std::vector<double> values, Mask mask) {
    Column c;
    c.name = std::move(name);
    if (mask.empty()) {
        mask.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) mask[i] = std::isnan(values[i]) ? 1 : 0;
    }
    if (mask.size() != values.size())
        throw InvalidArgument("column '" + c.name + "': values and mask lengths differ");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) values[i] = kNaN;
    c.values = std::move(values);
    c.mask = std::move(mask);
    return c;
}

Column Column::textual(std::string name, std::vector<std::string> cells, Mask mask) {
    if (mask.size() != cells.size())
        throw InvalidArgument("column '" + name + "': cells and mask lengths differ");
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    c.is_text = true;
    c.text = std::move(cells);
    c.mask = std::move(mask);
    for (std::size_t i = 0; i < c.text.size(); ++i)
        if (c.mask[i]) c.text[i].clear();
    return c;
}

// ----------------------------------------------------------------- Table

Table::Table(std::vector<Column> columns)
    : columns_(std::move(columns)), n_rows_(columns_.empty() ? 0 : columns_.front().size()) {
    validate();
}

Table::Table(std::vector<Column> columns, std::size_t n_rows)
    : columns_(std::move(columns)), n_rows_(n_rows) {
    validate();
}

void Table::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (c.size() != n_rows_)
            throw InvalidArgument("column '" + c.name + "' has " + std::to_string(c.size()) +
                                  " rows, expected " + std::to_string(n_rows_));
        if (c.is_text ? c.text.size() != c.mask.size() : c.values.size() != c.mask.size())
            throw InvalidArgument("column '" + c.name + "': storage and mask lengths differ");
        if (!seen.insert(c.name).second)
            throw InvalidArgument("duplicate column name '" + c.name + "'");
    }
}

const Column& Table::column(std::string_view name) const {
    if (auto i = index_of(name)) return columns_[*i];
    throw InvalidArgument("no column named '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::string> Table::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

std::size_t Table::missing_count() const {
    std::size_t total = 0;
    for (const auto& c : columns_) total += c.missing_count();
    return total;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column s = c;
        s.mask.resize(rows.size());
        if (c.is_text) {
            s.text.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                s.text[i] = c.text.at(rows[i]);
                s.mask[i] = c.mask[rows[i]];
            }
        } else {
            s.values.resize(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                s.values[i] = c.values.at(rows[i]);
                s.mask[i] = c.mask[rows[i]];
            }
        }
        out.push_back(std::move(s));
    }
    return Table(std::move(out), rows.size());
}

Table Table::select_columns(std::span<const std::string> names) const {
    std::vector<Column> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(column(n));
    return Table(std::move(out), n_rows_);
}

Table Table::drop_columns(const std::set<std::string>& names) const {
    std::vector<Column> out;
    for (const auto& c : columns_)
        if (!names.count(c.name)) out.push_back(c);
    return Table(std::move(out), n_rows_);
}

Table Table::replace_column(Column column) const {
    auto idx = index_of(column.name);
    if (!idx) throw InvalidArgument("no column named '" + column.name + "'");
    std::vector<Column> out = columns_;
    out[*idx] = std::move(column);
    return Table(std::move(out), n_rows_);
}

// ------------------------------------------------------- kind inference

ColumnKind infer_kind(const Column& column) {
    std::map<std::string, std::size_t> text_counts;
    std::map<double, std::size_t> counts;
    std::size_t distinct = 0;
    bool rule_of_five = true;
    if (column.is_text) {
        for (std::size_t i = 0; i < column.size(); ++i)
            if (!column.missing(i)) ++text_counts[column.text[i]];
        distinct = text_counts.size();
        for (const auto& [_, n] : text_counts) rule_of_five = rule_of_five && n >= kMinLevelCount;
    } else {
        for (std::size_t i = 0; i < column.size(); ++i)
            if (!column.missing(i)) ++counts[column.values[i]];
        distinct = counts.size();
        for (const auto& [_, n] : counts) rule_of_five = rule_of_five && n >= kMinLevelCount;
    }
    if (distinct == 0) return ColumnKind::Continuous;

    // Nominal columns never become continuous: rare levels are pooled by
    // the chi-square test instead.
    if (column.is_text || column.labels) {
        return distinct == 2 ? ColumnKind::Binary : ColumnKind::Categorical;
    }
    if (!rule_of_five) return ColumnKind::Continuous;
    return distinct == 2 ? ColumnKind::Binary : ColumnKind::Discrete;
}

namespace {

bool has_rare_level(const Column& c) {
    std::map<std::string, std::size_t> tcounts;
    std::map<double, std::size_t> counts;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.missing(i)) continue;
        if (c.is_text)
            ++tcounts[c.text[i]];
        else
            ++counts[c.values[i]];
    }
    for (const auto& [_, n] : tcounts)
        if (n < kMinLevelCount) return true;
    for (const auto& [_, n] : counts)
        if (n < kMinLevelCount) return true;
    return false;
}

}  // namespace

Table infer_column_kinds(const Table& table) {
    std::vector<Column> out = table.columns();
    for (auto& c : out) {
        if (c.size() > 0 && c.missing_count() == c.size()) c.add_flag("all_missing");
        if (c.kind_locked) continue;
        c.kind = infer_kind(c);
        if ((c.is_text || c.labels) && has_rare_level(c)) c.add_flag("rare_levels");
    }
    return Table(std::move(out), table.n_rows());
}

// ------------------------------------------------------- label encoding

Column label_encode(const Column& column) {
    if (!column.is_text) return column;
    Column out;
    out.name = column.name;
    out.kind = column.kind_locked ? column.kind : ColumnKind::Categorical;
    out.kind_locked = column.kind_locked;
    out.flags = column.flags;
    out.mask = column.mask;
    out.values.assign(column.size(), kNaN);
    std::vector<std::string> labels;
    std::unordered_map<std::string, double> codes;
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column.missing(i)) continue;
        auto [it, inserted] = codes.try_emplace(column.text[i], static_cast<double>(labels.size()));
        if (inserted) labels.push_back(column.text[i]);
        out.values[i] = it->second;
    }
    out.labels = std::move(labels);
    return out;
}

Table label_encode(const Table& table) {
    std::vector<Column> out;
    out.reserve(table.n_cols());
    for (const auto& c : table.columns()) out.push_back(label_encode(c));
    return Table(std::move(out), table.n_rows());
}

std::vector<std::string> decode_labels(const Column& column) {
    std::vector<std::string> out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column.missing(i)) continue;
        if (column.is_text) {
            out[i] = column.text[i];
        } else if (column.labels) {
            const auto code = static_cast<std::size_t>(column.values[i]);
            if (column.values[i] < 0 || code >= column.labels->size())
                throw InvalidArgument("column '" + column.name + "': code outside label dictionary");
            out[i] = (*column.labels)[code];
        } else {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, column.values[i]);
            out[i].assign(buf, res.ptr);
        }
    }
    return out;
}

// -------------------------------------------------------- missingness

double missing_fraction(const Column& column) {
    if (column.size() == 0)
        throw DegenerateInput("column '" + column.name + "' has no rows");
    return static_cast<double>(column.missing_count()) / static_cast<double>(column.size());
}

double completeness(const Column& column) { return 1.0 - missing_fraction(column); }

std::vector<double> observed_values(const Column& column) {
    std::vector<double> out;
    out.reserve(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
        if (!column.missing(i)) out.push_back(column.values[i]);
    return out;
}

Table inject_mcar(const Table& table, double rate, std::uint64_t seed,
                  const std::set<std::string>& protect) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw InvalidArgument("MCAR rate must lie in [0, 1)");
    Rng rng(seed);
    std::vector<Column> out = table.columns();
    for (auto& c : out) {
        if (protect.count(c.name)) continue;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.mask[i]) continue;
            if (uniform_unit(rng) < rate) {
                c.mask[i] = 1;
                if (c.is_text)
                    c.text[i].clear();
                else
                    c.values[i] = kNaN;
            }
        }
    }
    return Table(std::move(out), table.n_rows());
}

// ------------------------------------------------------------ splitting

namespace {

Fold make_fold(std::vector<std::size_t> test, std::size_t n_rows) {
    std::sort(test.begin(), test.end());
    Fold f;
    f.train.reserve(n_rows - test.size());
    std::size_t t = 0;
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (t < test.size() && test[t] == i) {
            ++t;
            continue;
        }
        f.train.push_back(i);
    }
    f.test = std::move(test);
    return f;
}

}  // namespace

SplitIndices kfold_split(std::size_t n_rows, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n_rows)
        throw InvalidFoldCount("fold count " + std::to_string(k) + " invalid for " +
                               std::to_string(n_rows) + " rows");
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle_in_place(std::span<std::size_t>(order), rng);

    SplitIndices split;
    std::size_t start = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n_rows / k + (f < n_rows % k ? 1 : 0);
        std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(start + size));
        start += size;
        split.folds.push_back(make_fold(std::move(test), n_rows));
    }
    return split;
}

SplitIndices stratified_kfold_split(std::span<const std::uint8_t> labels, std::size_t k,
                                    std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2 || k > n)
        throw InvalidFoldCount("fold count " + std::to_string(k) + " invalid for " +
                               std::to_string(n) + " rows");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    shuffle_in_place(std::span<std::size_t>(pos), rng);
    shuffle_in_place(std::span<std::size_t>(neg), rng);

    std::vector<std::vector<std::size_t>> tests(k);
    std::size_t slot = 0;
    for (auto* group : {&pos, &neg})
        for (auto idx : *group) tests[slot++ % k].push_back(idx);

    SplitIndices split;
    for (auto& t : tests) split.folds.push_back(make_fold(std::move(t), n));
    return split;
}

}  // namespace iqa
