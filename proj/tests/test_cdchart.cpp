#include <doctest.h>

#include <regex>

#include "flowaug/stats.hpp"
#include "flowaug/textfmt.hpp"
#include "support.hpp"

using namespace flowaug;

namespace {

CdReport report_of(std::vector<std::string> methods, std::vector<double> ranks, double cd,
	std::vector<std::vector<std::string>> groups)
{
	CdReport r;
	r.methods = std::move(methods);
	r.avg_ranks = std::move(ranks);
	r.cd = cd;
	r.groups = std::move(groups);
	return r;
}

std::size_t count(const std::string& hay, const std::string& needle)
{
	std::size_t n = 0;
	for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
		++n;
	}
	return n;
}

std::string px(double v)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.2f", v);
	return buf;
}

} // namespace

TEST_CASE("two-method chart has exactly two labels")
{
	const auto svg = render_cd_chart(report_of({"noaug", "flip"}, {1.25, 1.75}, 0.36, {{"noaug", "flip"}}));
	CHECK(count(svg, "class=\"method-label\"") == 2);
	CHECK(svg.find("noaug (1.25)") != std::string::npos);
	CHECK(svg.find("flip (1.75)") != std::string::npos);
	CHECK(count(svg, "class=\"group\"") == 1);
	CHECK(svg.rfind("<?xml", 0) == 0);
	CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("chart bytes are deterministic")
{
	const auto r = report_of({"a", "b", "c", "d"}, {1.5, 2.25, 2.75, 3.5}, 1.0, {{"a", "b"}, {"b", "c", "d"}});
	CHECK(render_cd_chart(r) == render_cd_chart(r));
	const auto dir = testsupport::temp_dir("chart");
	write_cd_chart(r, dir / "a.svg");
	write_cd_chart(r, dir / "b.svg");
	CHECK(read_text_file(dir / "a.svg") == read_text_file(dir / "b.svg"));
	CHECK(read_text_file(dir / "a.svg") == render_cd_chart(r));
	std::filesystem::remove_all(dir);
}

TEST_CASE("group bars follow the rank-to-pixel map")
{
	for (double width : {800.0, 1000.0}) {
		const std::size_t k = 5;
		const auto r = report_of({"m1", "m2", "m3", "m4", "m5"}, {1.2, 2.0, 3.1, 3.9, 4.8}, 1.2,
			{{"m1", "m2"}, {"m2", "m3"}, {"m3", "m4"}, {"m4", "m5"}});
		ChartOptions opt;
		opt.width = width;
		const auto svg = render_cd_chart(r, opt);
		// axis spans [left, right] with 200 px label room either side
		const double left = 200.0;
		const double right = width - 200.0;
		auto x_of = [&](double rank) { return left + (rank - 1.0) / static_cast<double>(k - 1) * (right - left); };

		const std::regex bar(R"re(<line class="group" x1="([0-9.]+)" y1="[0-9.]+" x2="([0-9.]+)")re");
		std::vector<std::pair<std::string, std::string>> found;
		for (auto it = std::sregex_iterator(svg.begin(), svg.end(), bar); it != std::sregex_iterator(); ++it) {
			found.emplace_back((*it)[1], (*it)[2]);
		}
		REQUIRE(found.size() == r.groups.size());
		const std::vector<std::pair<double, double>> spans = {{1.2, 2.0}, {2.0, 3.1}, {3.1, 3.9}, {3.9, 4.8}};
		for (std::size_t g = 0; g < spans.size(); ++g) {
			CHECK(found[g].first == px(x_of(spans[g].first)));
			CHECK(found[g].second == px(x_of(spans[g].second)));
		}
		// CD ruler length is cd in rank units
		const std::regex ruler(R"re(<line class="cd-ruler" x1="([0-9.]+)" y1="[0-9.]+" x2="([0-9.]+)")re");
		std::smatch m;
		REQUIRE(std::regex_search(svg, m, ruler));
		CHECK(m[1] == px(left));
		CHECK(m[2] == px(left + 1.2 / 4.0 * (right - left)));
		// one tick per integer rank
		CHECK(count(svg, "class=\"axis-tick\"") == k);
	}
}

TEST_CASE("annotations and escaping")
{
	auto r = report_of({"a<b", "c&d"}, {1.0, 2.0}, 0.5, {{"a<b"}, {"c&d"}});
	ChartOptions opt;
	opt.annotations = {"", "+1.50%"};
	const auto svg = render_cd_chart(r, opt);
	CHECK(svg.find("a&lt;b (1.00)<") != std::string::npos);
	CHECK(svg.find("c&amp;d (2.00) [+1.50%]") != std::string::npos);
	opt.annotations = {"x"};
	CHECK_THROWS_AS(render_cd_chart(r, opt), UsageError);
}

TEST_CASE("chart rejects malformed reports and unwritable paths")
{
	CHECK_THROWS_AS(render_cd_chart(report_of({"a"}, {1.0}, 0.1, {{"a"}})), UsageError);
	CHECK_THROWS_AS(render_cd_chart(report_of({"a", "b"}, {1.0, 2.0}, 0.1, {{"zzz"}})), UsageError);
	CHECK_THROWS_AS(
		write_cd_chart(report_of({"a", "b"}, {1.0, 2.0}, 0.1, {{"a"}, {"b"}}), "/nonexistent-dir/x/y.svg"), IoError);
}
