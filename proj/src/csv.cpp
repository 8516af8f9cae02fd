#include "volstab/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "volstab/errors.hpp"

namespace volstab::csv {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return {buf.data(), end};
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(trim(line.substr(start)));
            break;
        }
        fields.emplace_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

namespace {

[[noreturn]] void bad_field(std::string_view what, std::string_view field, std::size_t line,
                            std::size_t column, std::string_view source) {
    throw InputError(std::string(source) + ": line " + std::to_string(line) + ", column " +
                     std::to_string(column) + ": " + std::string(what) + " '" +
                     std::string(field) + "'");
}

}  // namespace

double parse_double(std::string_view field, std::size_t line, std::size_t column,
                    std::string_view source) {
    field = trim(field);
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        bad_field("not a number", field, line, column, source);
    }
    return value;
}

long long parse_integer(std::string_view field, std::size_t line, std::size_t column,
                        std::string_view source) {
    field = trim(field);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        bad_field("not an integer", field, line, column, source);
    }
    return value;
}

Reader::Reader(const std::filesystem::path& path) : in_(path), source_(path.string()) {
    if (!in_) {
        throw InputError("cannot open " + source_);
    }
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        if (trim(text).empty()) {
            continue;
        }
        fields = split_line(text);
        return true;
    }
    return false;
}

void Reader::expect_header(const std::vector<std::string>& expected) {
    std::vector<std::string> header;
    if (!next(header)) {
        throw InputError(source_ + ": empty file");
    }
    if (header != expected) {
        std::string want;
        for (const auto& h : expected) {
            want += (want.empty() ? "" : ",") + h;
        }
        throw InputError(source_ + ": line " + std::to_string(line_) + ": expected header '" +
                         want + "'");
    }
}

}  // namespace volstab::csv
