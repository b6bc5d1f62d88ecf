#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scamsim {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Advice length as used throughout the analysis: whitespace-separated tokens.
inline std::size_t word_count(std::string_view s) { return split_whitespace(s).size(); }

}  // namespace scamsim
