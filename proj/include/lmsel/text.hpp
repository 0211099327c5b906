#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Small formatting/parsing helpers shared by the text snapshot and CSV writers.
namespace lmsel::text {

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

/// Strict parsers; throw std::invalid_argument naming `what` on failure.
double parse_double(std::string_view token, std::string_view what);
std::uint64_t parse_u64(std::string_view token, std::string_view what);

std::string_view trim(std::string_view s);

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_ws(std::string_view s);

/// Splits on `sep`, trimming each field. An empty input yields no fields.
std::vector<std::string_view> split(std::string_view s, char sep);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace lmsel::text
