#pragma once

// Small text helpers shared by the file readers and writers. Doubles are
// written in shortest round-trip form so every text export is lossless and
// byte-stable.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pedghmm::text {

std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace pedghmm::text
