#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowaug {

// Shortest decimal that parses back to the same double; locale-independent.
std::string format_double(double value);
// Fixed-point with the given number of decimals; locale-independent.
std::string format_fixed(double value, int decimals);

std::optional<double> parse_double(std::string_view text) noexcept;
std::optional<std::int64_t> parse_int(std::string_view text) noexcept;

std::string_view trim(std::string_view text) noexcept;
std::vector<std::string_view> split(std::string_view text, char sep);

// Whole-file helpers; both throw IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace flowaug
