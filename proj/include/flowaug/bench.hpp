#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowaug/augment.hpp"
#include "flowaug/dataio.hpp"
#include "flowaug/model.hpp"
#include "flowaug/sampling.hpp"
#include "flowaug/stats.hpp"

namespace flowaug {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// One column of the benchmark grid.
struct MethodSpec {
	std::string name;
	SamplerMode sampler = SamplerMode::weighted;
	AugmentationSpec augmentation;

	// `noaug` = weighted sampler, no augmentation, batches of 2B.
	// `noaug_nosampler` = uniform sampler, no augmentation, batches of 2B.
	static std::optional<MethodSpec> preset(std::string_view name);
	// A preset name or an augmentation spec text; the method is named name.
	static MethodSpec parse(std::string_view name, std::string_view value);
	std::string value_text() const;
};

/**
 * Methods x seeds experiment plan.
 *
 * Text form is one `key = value` per line, `#` starts a comment:
 *
 *   dataset = flows.jsonl          # or the synth.* keys
 *   synth.classes = 10             # also synth.total, synth.zipf, synth.length,
 *                                  # synth.seed, synth.size_spread, synth.iat_spread
 *   seeds = 0-9                    # ranges and/or comma lists; repeated
 *                                  # seeds lines append
 *   method = noaug                 # preset or bare augmentation kind
 *   method.tr2 = translation:k_max=2
 *   split = 0.7,0.15,0.15
 *   train.epochs = 30              # also train.batch_size, train.lr, train.beta1,
 *                                  # train.beta2, train.epsilon, train.hidden,
 *                                  # train.time_budget
 */
struct BenchPlan {
	std::optional<std::filesystem::path> dataset_path;
	std::optional<SynthConfig> synth;
	std::vector<MethodSpec> methods;
	std::vector<std::int64_t> seeds;
	SplitFractions fractions;
	TrainConfig train;

	// Throws ConfigError.
	void check() const;

	static BenchPlan parse(const std::string& text);
	static BenchPlan load(const std::filesystem::path& path);
	std::string canonical_text() const;
	// FNV-1a of the canonical text, 16 hex digits.
	std::string hash() const;

	// Loads or synthesizes the dataset named by the plan.
	Dataset make_dataset() const;
};

// Stream id for a method's sampling/augmentation draws.
std::uint64_t method_stream_id(const MethodSpec& method);

// Trains and evaluates one (method, seed) cell; returns test weighted-F1 at
// the best validation epoch. Depends only on (dataset, plan settings, method, seed).
double run_cell(const Dataset& dataset, const BenchPlan& plan, const MethodSpec& method, std::int64_t seed);

struct CellFailure {
	std::string method;
	std::int64_t seed = 0;
	std::string message;
};

struct BenchOptions {
	std::size_t parallelism = 1;
	// Append-only per-cell record; finished cells found here are not rerun.
	std::optional<std::filesystem::path> journal;
	// Stop handing out new cells after this many finish in this call (0 = no limit).
	std::size_t stop_after = 0;
	std::function<void(const std::string&)> log;
};

struct BenchOutcome {
	std::vector<std::string> methods;
	std::vector<std::int64_t> seeds;
	// NaN marks a failed or not-yet-run cell.
	ScoreMatrix scores;
	std::vector<CellFailure> failures;
	std::size_t cells_resumed = 0;
	std::size_t cells_run = 0;

	bool complete() const;
	// Throws UsageError when any cell is failed or missing.
	RunResult run_result() const;
	// RunResult CSV; failed cells carry the value `failed`, missing ones are omitted.
	std::string csv_text() const;
};

BenchOutcome run_bench(const BenchPlan& plan, const Dataset& dataset, const BenchOptions& options = {});

// Run manifest JSON (plan hash, versions, timestamps, outcome summary).
std::string manifest_json(
	const BenchPlan& plan,
	const BenchOutcome& outcome,
	const BenchOptions& options,
	const std::string& started_at,
	const std::string& finished_at);

std::string utc_timestamp();

// Toolkit version followed by the file-format versions.
std::string version_text();

} // namespace flowaug
