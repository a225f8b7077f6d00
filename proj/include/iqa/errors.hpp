#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iqa {

// Base of every error raised by the library. `code()` is the stable,
// machine-readable name written into CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define IQA_DEFINE_ERROR(Name)                                                 \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    };

IQA_DEFINE_ERROR(IoError)
IQA_DEFINE_ERROR(RaggedRows)
IQA_DEFINE_ERROR(DegenerateInput)
IQA_DEFINE_ERROR(InvalidArgument)
IQA_DEFINE_ERROR(InvalidFoldCount)
IQA_DEFINE_ERROR(UntrainableImputer)
IQA_DEFINE_ERROR(ImputerTrainingError)
IQA_DEFINE_ERROR(SchemaMismatch)
IQA_DEFINE_ERROR(VersionMismatch)
IQA_DEFINE_ERROR(CorruptModel)

#undef IQA_DEFINE_ERROR

class ParseError : public Error {
public:
    // `row` is the 1-based line number in the file (header is line 1),
    // `column` the 0-based field index.
    ParseError(std::size_t row, std::size_t column, const std::string& message)
        : Error("ParseError", message + " (line " + std::to_string(row) +
                                  ", column " + std::to_string(column) + ")"),
          row_(row),
          column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

// Configuration validation failure; `path` is a JSON pointer to the
// offending key.
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message)
        : Error("SchemaError", path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace iqa
