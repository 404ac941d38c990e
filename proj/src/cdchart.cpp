#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>

#include "flowaug/stats.hpp"
#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

constexpr double kSideSpace = 200.0; // label room on either side of the axis
constexpr double kAxisY = 70.0;
constexpr double kRulerY = 25.0;
constexpr double kBarGap = 8.0;
constexpr double kRowGap = 20.0;
constexpr std::string_view kFont = "Helvetica, Arial, sans-serif";

std::string esc(std::string_view s)
{
	std::string out;
	out.reserve(s.size());
	for (char c : s) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		case '"': out += "&quot;"; break;
		case '\'': out += "&apos;"; break;
		default: out += c; break;
		}
	}
	return out;
}

std::string num(double v)
{
	return format_fixed(v, 2);
}

std::string line(std::string_view cls, double x1, double y1, double x2, double y2, std::string_view extra = {})
{
	std::string s = "<line class=\"" + std::string(cls) + "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\""
		+ num(x2) + "\" y2=\"" + num(y2) + "\"";
	if (!extra.empty()) {
		s += " ";
		s += extra;
	}
	return s + "/>\n";
}

std::string text(std::string_view cls, double x, double y, std::string_view anchor, std::string_view body)
{
	return "<text class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\""
		+ std::string(anchor) + "\">" + esc(body) + "</text>\n";
}

} // namespace

std::string render_cd_chart(const CdReport& report, const ChartOptions& options)
{
	const std::size_t k = report.methods.size();
	if (k < 2 || report.avg_ranks.size() != k) {
		throw UsageError("cd chart: report needs at least 2 methods with ranks");
	}
	if (!options.annotations.empty() && options.annotations.size() != k) {
		throw UsageError("cd chart: one annotation per method required");
	}
	const double width = std::max(options.width, 2.0 * kSideSpace + 100.0);
	const double axis_left = kSideSpace;
	const double axis_right = width - kSideSpace;
	const auto rank_x = [&](double rank) {
		return axis_left + (rank - 1.0) / static_cast<double>(k - 1) * (axis_right - axis_left);
	};

	std::vector<std::size_t> order(k);
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::stable_sort(order.begin(), order.end(),
		[&](std::size_t a, std::size_t b) { return report.avg_ranks[a] < report.avg_ranks[b]; });

	const double bars_top = kAxisY + 12.0;
	const double rows_top = bars_top + kBarGap * static_cast<double>(report.groups.size()) + 14.0;
	const std::size_t left_count = (k + 1) / 2;
	const std::size_t rows = std::max(left_count, k - left_count);
	const double height = rows_top + kRowGap * static_cast<double>(rows) + 10.0;

	std::string svg;
	svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
	svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height)
		+ "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"" + std::string(kFont)
		+ "\" font-size=\"12\">\n";
	svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

	// CD ruler
	const double ruler_len = report.cd / static_cast<double>(k - 1) * (axis_right - axis_left);
	svg += line("cd-ruler", axis_left, kRulerY, axis_left + ruler_len, kRulerY, "stroke=\"#111\" stroke-width=\"2\"");
	svg += line("cd-ruler-end", axis_left, kRulerY - 4, axis_left, kRulerY + 4, "stroke=\"#111\"");
	svg += line("cd-ruler-end", axis_left + ruler_len, kRulerY - 4, axis_left + ruler_len, kRulerY + 4, "stroke=\"#111\"");
	svg += text("cd-label", axis_left + ruler_len / 2.0, kRulerY - 8, "middle", "CD = " + format_fixed(report.cd, 3));

	// rank axis with integer ticks
	svg += line("axis", axis_left, kAxisY, axis_right, kAxisY, "stroke=\"#111\" stroke-width=\"1.5\"");
	for (std::size_t r = 1; r <= k; ++r) {
		const double x = rank_x(static_cast<double>(r));
		svg += line("axis-tick", x, kAxisY - 6, x, kAxisY, "stroke=\"#111\"");
		svg += text("axis-label", x, kAxisY - 10, "middle", std::to_string(r));
	}

	// one bar per group of statistically indistinguishable methods
	for (std::size_t g = 0; g < report.groups.size(); ++g) {
		double lo = 0.0;
		double hi = 0.0;
		bool first = true;
		for (const auto& name : report.groups[g]) {
			const auto it = std::find(report.methods.begin(), report.methods.end(), name);
			if (it == report.methods.end()) {
				throw UsageError("cd chart: group member '" + name + "' is not a method");
			}
			const double r = report.avg_ranks[static_cast<std::size_t>(it - report.methods.begin())];
			lo = first ? r : std::min(lo, r);
			hi = first ? r : std::max(hi, r);
			first = false;
		}
		const double y = bars_top + kBarGap * static_cast<double>(g);
		svg += line("group", rank_x(lo), y, rank_x(hi), y,
			"stroke=\"#d62728\" stroke-width=\"3\" stroke-linecap=\"round\"");
	}

	// method ticks and labels: best half on the left, rest on the right
	for (std::size_t pos = 0; pos < k; ++pos) {
		const std::size_t m = order[pos];
		const bool left = pos < left_count;
		const std::size_t row = left ? pos : k - 1 - pos;
		const double x = rank_x(report.avg_ranks[m]);
		const double y = rows_top + kRowGap * static_cast<double>(row);
		const double end_x = left ? axis_left - 10.0 : axis_right + 10.0;
		svg += "<polyline class=\"method-line\" points=\"" + num(x) + "," + num(kAxisY) + " " + num(x) + "," + num(y)
			+ " " + num(end_x) + "," + num(y) + "\" fill=\"none\" stroke=\"#555\"/>\n";
		std::string label = report.methods[m] + " (" + format_fixed(report.avg_ranks[m], 2) + ")";
		if (!options.annotations.empty() && !options.annotations[m].empty()) {
			label += " [" + options.annotations[m] + "]";
		}
		svg += text("method-label", left ? end_x - 4.0 : end_x + 4.0, y + 4.0, left ? "end" : "start", label);
	}
	svg += "</svg>\n";
	return svg;
}

void write_cd_chart(const CdReport& report, const std::filesystem::path& path, const ChartOptions& options)
{
	write_text_file(path, render_cd_chart(report, options));
}

} // namespace flowaug
