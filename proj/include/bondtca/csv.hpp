#pragma once

// Minimal RFC-4180 reader/writer helpers shared by every file format in the
// engine. Output files may start with '#' metadata lines; readers skip them.

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bondtca {

class CsvReader {
public:
    /// `text` must outlive the reader.
    explicit CsvReader(std::string_view text);

    /// Reads the next record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based physical line on which the last record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

/// Column lookup for a header row.
class CsvHeader {
public:
    CsvHeader() = default;
    explicit CsvHeader(const std::vector<std::string>& names);

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws DataError naming every missing column.
    void require(const std::vector<std::string_view>& names) const;
    std::size_t at(std::string_view name) const;
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

std::string read_text(std::istream& in);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Quotes a field only when RFC-4180 requires it.
std::string csv_field(std::string_view value);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);
void append_number(std::string& out, double value);

std::optional<double> try_parse_double(std::string_view text);
std::optional<long long> try_parse_int(std::string_view text);

}  // namespace bondtca
