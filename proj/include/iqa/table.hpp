#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iqa {

enum class ColumnKind { Continuous, Discrete, Binary, Categorical };

std::string to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view name);  // throws InvalidArgument

// One byte per cell; 1 marks a missing cell.
using Mask = std::vector<std::uint8_t>;

// A single feature. Numeric columns keep their values in `values`
// (NaN at masked positions). Text columns, as read from a CSV before
// label encoding, keep raw cells in `text` and have an empty `values`.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    std::vector<double> values;
    Mask mask;
    bool is_text = false;
    std::vector<std::string> text;
    // Code i decodes to labels[i]. Present for label-encoded columns.
    std::optional<std::vector<std::string>> labels;
    // Set when the kind came from a user hint; inference leaves it alone.
    bool kind_locked = false;
    std::vector<std::string> flags;

    std::size_t size() const noexcept { return mask.size(); }
    bool missing(std::size_t row) const { return mask[row] != 0; }
    std::size_t missing_count() const;
    void add_flag(std::string flag);
    bool has_flag(std::string_view flag) const;

    static Column numeric(std::string name, std::vector<double> values, Mask mask = {});
    static Column textual(std::string name, std::vector<std::string> cells, Mask mask);
};

// Column-major table. Immutable once built: every transformation
// returns a new table.
class Table {
public:
    Table() = default;
    // Validates equal lengths and unique names (InvalidArgument).
    explicit Table(std::vector<Column> columns);
    Table(std::vector<Column> columns, std::size_t n_rows);

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return columns_.size(); }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    const Column& column(std::size_t i) const { return columns_.at(i); }
    const Column& column(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool has_column(std::string_view name) const { return index_of(name).has_value(); }
    std::vector<std::string> names() const;
    std::size_t missing_count() const;

    Table select_rows(std::span<const std::size_t> rows) const;
    Table select_columns(std::span<const std::string> names) const;
    Table drop_columns(const std::set<std::string>& names) const;
    Table replace_column(Column column) const;

private:
    void validate() const;

    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

struct CsvOptions {
    char delimiter = ',';
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "?"};
    std::map<std::string, ColumnKind> kind_hints;
};

// RFC-4180 reader. Columns whose observed cells are all numeric become
// numeric columns; columns with no numeric cells become text columns.
// A column mixing both (without a Categorical hint) raises ParseError.
Table load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Table read_csv(std::istream& in, const CsvOptions& options = {});

// Writes decoded labels for label-encoded columns, empty cells for
// missing values and shortest round-trip decimals otherwise.
void write_csv(std::ostream& out, const Table& table);

// Rule of five: a column is non-continuous iff every distinct observed
// value occurs at least five times. Two distinct values make it Binary,
// other numeric columns are Discrete, label columns Categorical.
Table infer_column_kinds(const Table& table);
ColumnKind infer_kind(const Column& column);

// Maps text columns to codes 0..V-1 in first-appearance order.
Table label_encode(const Table& table);
Column label_encode(const Column& column);
// Inverse of label_encode on observed cells; missing cells decode to "".
std::vector<std::string> decode_labels(const Column& column);

double missing_fraction(const Column& column);  // DegenerateInput on 0 rows
double completeness(const Column& column);
std::vector<double> observed_values(const Column& column);

// Masks every observed cell outside `protect` independently with
// probability `rate`. Existing masks are kept.
Table inject_mcar(const Table& table, double rate, std::uint64_t seed,
                  const std::set<std::string>& protect = {});

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct SplitIndices {
    std::vector<Fold> folds;
};

// Shuffled partition of 0..n_rows-1 into k test folds whose sizes
// differ by at most one. Indices inside each set are ascending.
SplitIndices kfold_split(std::size_t n_rows, std::size_t k, std::uint64_t seed);

// Like kfold_split but deals positives and negatives separately so each
// test fold receives a share of both classes.
SplitIndices stratified_kfold_split(std::span<const std::uint8_t> labels, std::size_t k,
                                    std::uint64_t seed);

}  // namespace iqa
