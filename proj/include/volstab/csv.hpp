#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace volstab::csv {

/// Shortest decimal text that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

/// Splits one line on commas and trims surrounding whitespace and '\r'.
/// No quoting support: the formats handled here never need it.
[[nodiscard]] std::vector<std::string> split_line(std::string_view line);

[[nodiscard]] std::string_view trim(std::string_view s);

/// Strict numeric parse of a whole field; throws InputError citing line/column.
[[nodiscard]] double parse_double(std::string_view field, std::size_t line, std::size_t column,
                                  std::string_view source);
[[nodiscard]] long long parse_integer(std::string_view field, std::size_t line, std::size_t column,
                                      std::string_view source);

/// Line-oriented reader that skips blank lines and tracks 1-based line numbers.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path);

    /// Next non-blank row, or false at end of file.
    bool next(std::vector<std::string>& fields);

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }

    /// Reads the header row and checks it equals `expected` exactly.
    void expect_header(const std::vector<std::string>& expected);

private:
    std::ifstream in_;
    std::string source_;
    std::size_t line_ = 0;
};

}  // namespace volstab::csv
