#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowaug/errors.hpp"

namespace flowaug {

// rows = seeds, columns = methods
using ScoreMatrix = std::vector<std::vector<double>>;

/**
 * Weighted-F1 score of every (seed, method) cell.
 *
 * CSV form: header `method,seed,weighted_f1`, one row per cell. Method and
 * seed order follow first appearance. A cell whose score field reads
 * `failed` marks a training abort; such files are rejected until rerun.
 */
struct RunResult {
	std::vector<std::string> methods;
	std::vector<std::int64_t> seeds;
	ScoreMatrix scores;

	// Throws UsageError unless k >= 2, S >= 2, the matrix is S x k, scores
	// are finite and method names are unique.
	void check() const;
	std::vector<double> method_means() const;

	bool operator==(const RunResult&) const = default;
};

RunResult parse_run_csv(const std::string& text);
std::string run_csv_text(const RunResult& result);
RunResult load_run_csv(const std::filesystem::path& path);
void save_run_csv(const RunResult& result, const std::filesystem::path& path);

// Per row, rank 1 = highest score; ties get the mean of their positions.
ScoreMatrix rank_rows(const ScoreMatrix& scores);

struct FriedmanResult {
	double chi2 = 0.0;
	double p_value = 1.0;
};

// chi2 = 12S/(k(k+1)) * (sum_j Rbar_j^2 - k(k+1)^2/4), df = k - 1.
// tie_correction divides by 1 - sum(t^3 - t) / (S k (k^2 - 1)).
FriedmanResult friedman(const ScoreMatrix& ranks, bool tie_correction = false);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
double chi_square_cdf(double x, double df);
double chi_square_sf(double x, double df);

// Two-tailed Nemenyi constant q_alpha(k) for 2 <= k <= 20, alpha in {0.05, 0.10}.
double nemenyi_q(std::size_t k, double alpha);
// CD = q_alpha(k) * sqrt(k (k + 1) / (6 S)).
double nemenyi_cd(std::size_t k, std::size_t num_seeds, double alpha);

struct CdReport {
	std::vector<std::string> methods;
	std::vector<double> avg_ranks;
	double friedman_chi2 = 0.0;
	double p_value = 1.0;
	double alpha = 0.05;
	double cd = 0.0;
	// Maximal sets of methods whose average ranks lie within cd, each listed
	// in rank order; groups are ordered by their best-ranked member.
	std::vector<std::vector<std::string>> groups;

	bool operator==(const CdReport&) const = default;
};

CdReport build_report(const RunResult& result, double alpha = 0.05, bool tie_correction = false);

// JSON with exactly: avg_ranks, friedman_chi2, p_value, alpha, cd, groups.
std::string report_json(const CdReport& report);
CdReport parse_report_json(const std::string& text);

struct ChartOptions {
	// Optional text per method (same order as report.methods), shown in brackets.
	std::vector<std::string> annotations;
	double width = 800.0;
};

std::string render_cd_chart(const CdReport& report, const ChartOptions& options = {});
void write_cd_chart(const CdReport& report, const std::filesystem::path& path, const ChartOptions& options = {});

} // namespace flowaug
