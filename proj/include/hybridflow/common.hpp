#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hybridflow {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
    syntax,      // malformed document
    semantic,    // well-formed but invalid (cycle, dangling edge, ...)
    config,      // unreadable or inconsistent scenario
    capacity,    // resource pool exhausted
    not_found,   // unknown type / machine
    limits,      // oracle limits exceeded
    runtime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string element = {})
        : std::runtime_error(element.empty() ? message : message + " (" + element + ")"),
          kind_(kind), element_(std::move(element)) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Offending element id (task id, machine id, key), empty if not applicable.
    std::string const & element() const noexcept { return element_; }

private:
    ErrorKind kind_;
    std::string element_;
};

// Shortest representation that round-trips through parse_double.
inline std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw Error(ErrorKind::runtime, "number formatting failed");
    }
    return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<std::int64_t> parse_int(std::string_view text) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace hybridflow
