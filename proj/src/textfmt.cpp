#include "flowaug/textfmt.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flowaug/errors.hpp"

namespace flowaug {

std::string format_double(double value)
{
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof(buf), value);
	if (res.ec != std::errc()) {
		throw std::runtime_error("format_double: conversion failed");
	}
	return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int decimals)
{
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
	if (res.ec != std::errc()) {
		throw std::runtime_error("format_fixed: conversion failed");
	}
	std::string out(buf, res.ptr);
	if (out.size() > 1 && out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) {
		out.erase(0, 1); // no "-0.00"
	}
	return out;
}

std::optional<double> parse_double(std::string_view text) noexcept
{
	text = trim(text);
	if (!text.empty() && text.front() == '+') {
		text.remove_prefix(1);
	}
	double value = 0.0;
	const auto* end = text.data() + text.size();
	const auto res = std::from_chars(text.data(), end, value);
	if (res.ec != std::errc() || res.ptr != end || text.empty()) {
		return std::nullopt;
	}
	return value;
}

std::optional<std::int64_t> parse_int(std::string_view text) noexcept
{
	text = trim(text);
	if (!text.empty() && text.front() == '+') {
		text.remove_prefix(1);
	}
	std::int64_t value = 0;
	const auto* end = text.data() + text.size();
	const auto res = std::from_chars(text.data(), end, value);
	if (res.ec != std::errc() || res.ptr != end || text.empty()) {
		return std::nullopt;
	}
	return value;
}

std::string_view trim(std::string_view text) noexcept
{
	constexpr std::string_view ws = " \t\r\n";
	const auto first = text.find_first_not_of(ws);
	if (first == std::string_view::npos) {
		return {};
	}
	const auto last = text.find_last_not_of(ws);
	return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
	std::vector<std::string_view> parts;
	std::size_t start = 0;
	while (true) {
		const auto pos = text.find(sep, start);
		if (pos == std::string_view::npos) {
			parts.push_back(text.substr(start));
			return parts;
		}
		parts.push_back(text.substr(start, pos - start));
		start = pos + 1;
	}
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		throw IoError("cannot open '" + path.string() + "' for writing");
	}
	out << text;
	out.flush();
	if (!out) {
		throw IoError("write to '" + path.string() + "' failed");
	}
}

std::string read_text_file(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open '" + path.string() + "'");
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	return buf.str();
}

} // namespace flowaug
