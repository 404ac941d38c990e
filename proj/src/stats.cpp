#include "flowaug/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include <json.hpp>

#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

constexpr std::string_view kCsvHeader = "method,seed,weighted_f1";
constexpr std::string_view kFailedCell = "failed";

// Two-tailed Nemenyi constants q_alpha = studentized range quantile at
// infinite df divided by sqrt(2). k = 2..10 as printed in Demsar (2006),
// k = 11..20 rounded to three decimals from the studentized range.
constexpr std::array<double, 19> kQ005 = {
	1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, // k = 2..10
	3.219, 3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544, // k = 11..20
};
constexpr std::array<double, 19> kQ010 = {
	1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, // k = 2..10
	2.978, 3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319, // k = 11..20
};

constexpr double kGammaEps = 1e-16;
constexpr int kGammaMaxIter = 10000;

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x)
{
	double term = 1.0 / a;
	double sum = term;
	double ap = a;
	for (int n = 0; n < kGammaMaxIter; ++n) {
		ap += 1.0;
		term *= x / ap;
		sum += term;
		if (std::abs(term) < std::abs(sum) * kGammaEps) {
			break;
		}
	}
	return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); for x >= a + 1.
double gamma_q_fraction(double a, double x)
{
	constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
	double b = x + 1.0 - a;
	double c = 1.0 / tiny;
	double d = 1.0 / b;
	double h = d;
	for (int i = 1; i < kGammaMaxIter; ++i) {
		const double an = -i * (i - a);
		b += 2.0;
		d = an * d + b;
		if (std::abs(d) < tiny) {
			d = tiny;
		}
		c = b + an / c;
		if (std::abs(c) < tiny) {
			c = tiny;
		}
		d = 1.0 / d;
		const double delta = d * c;
		h *= delta;
		if (std::abs(delta - 1.0) < kGammaEps) {
			break;
		}
	}
	return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x)
{
	if (!(a > 0.0) || !(x >= 0.0)) {
		throw UsageError("incomplete gamma: need a > 0 and x >= 0");
	}
}

void check_rank_matrix(const ScoreMatrix& m)
{
	if (m.size() < 2) {
		throw UsageError("need at least 2 seeds (rows)");
	}
	const std::size_t k = m.front().size();
	if (k < 2) {
		throw UsageError("need at least 2 methods (columns)");
	}
	for (const auto& row : m) {
		if (row.size() != k) {
			throw UsageError("ragged score matrix");
		}
	}
}

} // namespace

// ------------------------------------------------------------- RunResult

void RunResult::check() const
{
	if (methods.size() < 2) {
		throw UsageError("run result needs at least 2 methods");
	}
	if (seeds.size() < 2) {
		throw UsageError("run result needs at least 2 seeds");
	}
	if (std::set<std::string>(methods.begin(), methods.end()).size() != methods.size()) {
		throw UsageError("duplicate method names in run result");
	}
	if (std::set<std::int64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
		throw UsageError("duplicate seeds in run result");
	}
	if (scores.size() != seeds.size()) {
		throw UsageError("score matrix must have one row per seed");
	}
	for (const auto& row : scores) {
		if (row.size() != methods.size()) {
			throw UsageError("score matrix must have one column per method");
		}
		for (double v : row) {
			if (!std::isfinite(v)) {
				throw UsageError("score matrix contains a non-finite value");
			}
		}
	}
}

std::vector<double> RunResult::method_means() const
{
	std::vector<double> means(methods.size(), 0.0);
	for (const auto& row : scores) {
		for (std::size_t j = 0; j < row.size(); ++j) {
			means[j] += row[j];
		}
	}
	for (auto& m : means) {
		m /= static_cast<double>(scores.size());
	}
	return means;
}

RunResult parse_run_csv(const std::string& text)
{
	RunResult result;
	std::map<std::pair<std::size_t, std::size_t>, double> cells;
	std::map<std::string, std::size_t> method_index;
	std::map<std::int64_t, std::size_t> seed_index;

	const auto lines = split(text, '\n');
	bool header_seen = false;
	for (std::size_t i = 0; i < lines.size(); ++i) {
		const std::size_t line_no = i + 1;
		const auto line = trim(lines[i]);
		if (line.empty()) {
			continue;
		}
		if (!header_seen) {
			if (line != kCsvHeader) {
				throw LoadError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
			}
			header_seen = true;
			continue;
		}
		const auto fields = split(line, ',');
		if (fields.size() != 3) {
			throw LoadError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
		}
		const std::string method(trim(fields[0]));
		if (method.empty()) {
			throw LoadError(line_no, "empty method name");
		}
		const auto seed = parse_int(fields[1]);
		if (!seed) {
			throw LoadError(line_no, "bad seed '" + std::string(fields[1]) + "'");
		}
		if (trim(fields[2]) == kFailedCell) {
			throw LoadError(line_no, "cell (" + method + ", " + std::to_string(*seed)
				+ ") failed during training; rerun it before analysis");
		}
		const auto score = parse_double(fields[2]);
		if (!score || !std::isfinite(*score)) {
			throw LoadError(line_no, "bad score '" + std::string(fields[2]) + "'");
		}
		auto [mit, new_method] = method_index.try_emplace(method, result.methods.size());
		if (new_method) {
			result.methods.push_back(method);
		}
		auto [sit, new_seed] = seed_index.try_emplace(*seed, result.seeds.size());
		if (new_seed) {
			result.seeds.push_back(*seed);
		}
		if (!cells.emplace(std::make_pair(sit->second, mit->second), *score).second) {
			throw LoadError(line_no, "duplicate cell (" + method + ", " + std::to_string(*seed) + ")");
		}
	}
	if (!header_seen) {
		throw LoadError(0, "empty results file");
	}
	result.scores.assign(result.seeds.size(), std::vector<double>(result.methods.size(), 0.0));
	for (std::size_t s = 0; s < result.seeds.size(); ++s) {
		for (std::size_t m = 0; m < result.methods.size(); ++m) {
			const auto it = cells.find({s, m});
			if (it == cells.end()) {
				throw LoadError(0, "missing cell (" + result.methods[m] + ", " + std::to_string(result.seeds[s]) + ")");
			}
			result.scores[s][m] = it->second;
		}
	}
	return result;
}

std::string run_csv_text(const RunResult& result)
{
	std::string out(kCsvHeader);
	out += "\n";
	for (std::size_t m = 0; m < result.methods.size(); ++m) {
		for (std::size_t s = 0; s < result.seeds.size(); ++s) {
			out += result.methods[m] + "," + std::to_string(result.seeds[s]) + ","
				+ format_double(result.scores[s][m]) + "\n";
		}
	}
	return out;
}

RunResult load_run_csv(const std::filesystem::path& path)
{
	return parse_run_csv(read_text_file(path));
}

void save_run_csv(const RunResult& result, const std::filesystem::path& path)
{
	write_text_file(path, run_csv_text(result));
}

// ------------------------------------------------------------ statistics

ScoreMatrix rank_rows(const ScoreMatrix& scores)
{
	ScoreMatrix ranks;
	ranks.reserve(scores.size());
	for (const auto& row : scores) {
		const std::size_t k = row.size();
		std::vector<std::size_t> order(k);
		std::iota(order.begin(), order.end(), std::size_t{0});
		std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
		std::vector<double> r(k, 0.0);
		std::size_t i = 0;
		while (i < k) {
			std::size_t j = i;
			while (j + 1 < k && row[order[j + 1]] == row[order[i]]) {
				++j;
			}
			// positions i..j (0-based) share the mean of ranks i+1..j+1
			const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
			for (std::size_t t = i; t <= j; ++t) {
				r[order[t]] = mid;
			}
			i = j + 1;
		}
		ranks.push_back(std::move(r));
	}
	return ranks;
}

FriedmanResult friedman(const ScoreMatrix& ranks, bool tie_correction)
{
	check_rank_matrix(ranks);
	const auto s = static_cast<double>(ranks.size());
	const std::size_t k = ranks.front().size();
	const auto kd = static_cast<double>(k);

	// sum_j Rbar_j^2 - k(k+1)^2/4 == sum_j (Rbar_j - (k+1)/2)^2 because the
	// mean ranks sum to k(k+1)/2; the centred form is exact for full ties.
	const double centre = (kd + 1.0) / 2.0;
	double spread = 0.0;
	for (std::size_t j = 0; j < k; ++j) {
		double mean = 0.0;
		for (const auto& row : ranks) {
			mean += row[j];
		}
		mean /= s;
		spread += (mean - centre) * (mean - centre);
	}
	double chi2 = 12.0 * s / (kd * (kd + 1.0)) * spread;

	if (tie_correction) {
		double tie_sum = 0.0;
		for (const auto& row : ranks) {
			std::map<double, double> groups;
			for (double r : row) {
				groups[r] += 1.0;
			}
			for (const auto& [rank, t] : groups) {
				tie_sum += t * t * t - t;
			}
		}
		const double denom = 1.0 - tie_sum / (s * kd * (kd * kd - 1.0));
		chi2 = denom > 0.0 ? chi2 / denom : 0.0;
	}
	FriedmanResult out;
	out.chi2 = chi2;
	out.p_value = chi_square_sf(chi2, kd - 1.0);
	return out;
}

double regularized_gamma_p(double a, double x)
{
	check_gamma_args(a, x);
	if (x == 0.0) {
		return 0.0;
	}
	if (x < a + 1.0) {
		return gamma_p_series(a, x);
	}
	return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x)
{
	check_gamma_args(a, x);
	if (x == 0.0) {
		return 1.0;
	}
	if (x < a + 1.0) {
		return 1.0 - gamma_p_series(a, x);
	}
	return gamma_q_fraction(a, x);
}

double chi_square_cdf(double x, double df)
{
	if (!(df > 0.0)) {
		throw UsageError("chi-square: df must be > 0");
	}
	return regularized_gamma_p(df / 2.0, std::max(0.0, x) / 2.0);
}

double chi_square_sf(double x, double df)
{
	if (!(df > 0.0)) {
		throw UsageError("chi-square: df must be > 0");
	}
	return regularized_gamma_q(df / 2.0, std::max(0.0, x) / 2.0);
}

double nemenyi_q(std::size_t k, double alpha)
{
	if (k < 2 || k > 20) {
		throw UsageError("Nemenyi table covers 2 <= k <= 20, got k = " + std::to_string(k));
	}
	if (std::abs(alpha - 0.05) < 1e-12) {
		return kQ005[k - 2];
	}
	if (std::abs(alpha - 0.10) < 1e-12) {
		return kQ010[k - 2];
	}
	throw UsageError("Nemenyi alpha must be 0.05 or 0.10, got " + format_double(alpha));
}

double nemenyi_cd(std::size_t k, std::size_t num_seeds, double alpha)
{
	if (num_seeds < 1) {
		throw UsageError("Nemenyi CD needs at least one seed");
	}
	const auto kd = static_cast<double>(k);
	return nemenyi_q(k, alpha) * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(num_seeds)));
}

CdReport build_report(const RunResult& result, double alpha, bool tie_correction)
{
	result.check();
	const std::size_t k = result.methods.size();
	const ScoreMatrix ranks = rank_rows(result.scores);
	const FriedmanResult fr = friedman(ranks, tie_correction);

	CdReport report;
	report.methods = result.methods;
	report.avg_ranks.assign(k, 0.0);
	for (const auto& row : ranks) {
		for (std::size_t j = 0; j < k; ++j) {
			report.avg_ranks[j] += row[j];
		}
	}
	for (auto& r : report.avg_ranks) {
		r /= static_cast<double>(ranks.size());
	}
	report.friedman_chi2 = fr.chi2;
	report.p_value = fr.p_value;
	report.alpha = alpha;
	report.cd = nemenyi_cd(k, result.seeds.size(), alpha);

	std::vector<std::size_t> order(k);
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::stable_sort(order.begin(), order.end(),
		[&](std::size_t a, std::size_t b) { return report.avg_ranks[a] < report.avg_ranks[b]; });

	// Interval per start position; later starts are nested in an earlier
	// interval exactly when their end does not move past it.
	std::size_t last_end = 0;
	bool any = false;
	for (std::size_t i = 0; i < k; ++i) {
		std::size_t j = i;
		while (j + 1 < k && report.avg_ranks[order[j + 1]] - report.avg_ranks[order[i]] <= report.cd) {
			++j;
		}
		if (any && j <= last_end) {
			continue;
		}
		std::vector<std::string> group;
		for (std::size_t t = i; t <= j; ++t) {
			group.push_back(report.methods[order[t]]);
		}
		report.groups.push_back(std::move(group));
		last_end = j;
		any = true;
	}
	return report;
}

// ------------------------------------------------------------------ JSON

std::string report_json(const CdReport& report)
{
	nlohmann::ordered_json j;
	auto ranks = nlohmann::ordered_json::array();
	for (std::size_t i = 0; i < report.methods.size(); ++i) {
		ranks.push_back({{"method", report.methods[i]}, {"rank", report.avg_ranks[i]}});
	}
	j["avg_ranks"] = ranks;
	j["friedman_chi2"] = report.friedman_chi2;
	j["p_value"] = report.p_value;
	j["alpha"] = report.alpha;
	j["cd"] = report.cd;
	j["groups"] = report.groups;
	return j.dump(2) + "\n";
}

CdReport parse_report_json(const std::string& text)
{
	try {
		const auto j = nlohmann::json::parse(text);
		static const std::set<std::string> expected = {"avg_ranks", "friedman_chi2", "p_value", "alpha", "cd", "groups"};
		std::set<std::string> keys;
		for (auto it = j.begin(); it != j.end(); ++it) {
			keys.insert(it.key());
		}
		if (keys != expected) {
			throw LoadError(0, "report JSON must have exactly the fields avg_ranks, friedman_chi2, p_value, alpha, cd, groups");
		}
		CdReport report;
		for (const auto& entry : j.at("avg_ranks")) {
			report.methods.push_back(entry.at("method").get<std::string>());
			report.avg_ranks.push_back(entry.at("rank").get<double>());
		}
		report.friedman_chi2 = j.at("friedman_chi2").get<double>();
		report.p_value = j.at("p_value").get<double>();
		report.alpha = j.at("alpha").get<double>();
		report.cd = j.at("cd").get<double>();
		report.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
		return report;
	} catch (const nlohmann::json::exception& e) {
		throw LoadError(0, std::string("report JSON: ") + e.what());
	}
}

} // namespace flowaug
