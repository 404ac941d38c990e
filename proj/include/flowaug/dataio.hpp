#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "flowaug/flowcore.hpp"

namespace flowaug {

/*
 * Flow record file: one JSON object per line with the fields, in this order,
 *
 *   {"label":"app","valid_len":3,"sizes":[...],"dirs":[...],"iats":[...]}
 *
 * Every record of a file has the same series length N. Reals are written as
 * the shortest decimal that round-trips. Blank lines are ignored. Records are
 * validated with the relaxed contract, so augmented datasets (which may carry
 * fully zeroed packet positions) load as well.
 */
inline constexpr int kDatasetFormatVersion = 1;

Dataset parse_dataset(const std::string& text);
std::string dataset_text(const Dataset& dataset);
// One canonical record line (no trailing newline).
std::string record_line(const FlowSample& sample, const std::string& label);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Largest-remainder (Hamilton) apportionment of total over weights; ties in
// the fractional remainder go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights);

struct SplitFractions {
	double train = 0.70;
	double val = 0.15;
	double test = 0.15;
};

struct DatasetSplit {
	Dataset train;
	Dataset val;
	Dataset test;
};

/**
 * Stratified split: each class's samples are shuffled with a stream derived
 * from (seed, class) and apportioned over (train, val, test). Each part keeps
 * the full label vocabulary and the original sample order.
 */
DatasetSplit split_dataset(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

struct SynthConfig {
	std::size_t classes = 10;
	std::size_t total = 5000;
	double zipf = 1.0;
	std::size_t length = kDefaultSeriesLength;
	std::uint64_t seed = 0;
	// log-normal sigma of packet sizes around the class/direction mean
	double size_spread = 0.5;
	// log-normal sigma of inter-arrival times
	double iat_spread = 1.5;

	void check() const;
};

// Flow count per class: (c + 1)^-zipf apportioned to total.
std::vector<std::size_t> synth_class_counts(const SynthConfig& config);

/**
 * Imbalanced synthetic flows. Each class gets its own parameter tuple (mean
 * upstream/downstream size, IAT log-mean, first-direction and direction-run
 * probabilities); flows have valid_len ~ U{max(2, N/2)..N}, log-normal sizes
 * and IATs, and directions from a two-state Markov chain.
 */
Dataset synthesize(const SynthConfig& config);

} // namespace flowaug
