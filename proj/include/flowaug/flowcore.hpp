#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flowaug/errors.hpp"

namespace flowaug {

inline constexpr std::size_t kDefaultSeriesLength = 20;

/**
 * First N packets of one flow as three aligned series.
 *
 * Positions t < valid_len are real packets (size >= 1, dir = +1 upstream /
 * -1 downstream); positions >= valid_len are zero padding. iats[0] is 0 by
 * convention. Masking augmentations may leave positions t < valid_len with
 * all three features zeroed; such samples satisfy the relaxed contract only.
 */
struct FlowSample {
	std::vector<std::int64_t> sizes;
	std::vector<std::int8_t> dirs;
	std::vector<double> iats;
	std::size_t valid_len = 0;
	std::size_t label = 0;

	std::size_t length() const noexcept { return sizes.size(); }

	// Zero-filled sample with the given length.
	static FlowSample zeros(std::size_t n, std::size_t label = 0);

	bool operator==(const FlowSample&) const = default;
};

struct Dataset {
	std::vector<FlowSample> samples;
	std::vector<std::string> labels;
	std::vector<std::size_t> class_counts;

	std::size_t size() const noexcept { return samples.size(); }
	bool empty() const noexcept { return samples.empty(); }
	std::size_t num_classes() const noexcept { return labels.size(); }
	// Series length of the samples (0 for an empty dataset).
	std::size_t series_length() const noexcept { return samples.empty() ? 0 : samples.front().length(); }

	// Recomputes class_counts from samples; throws UsageError on a bad label.
	void recount();

	bool operator==(const Dataset&) const = default;
};

enum class Strictness {
	strict,
	// Positions t < valid_len may be fully zeroed (size, dir and iat all 0).
	relaxed,
};

struct Violation {
	std::string field;
	std::size_t position = 0;
	std::string rule;

	std::string to_string() const;
	bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate(const FlowSample& sample, Strictness mode = Strictness::strict);

struct NormConfig {
	double size_divisor = 1460.0;
	double iat_log_scale = std::log1p(10000.0);
};

// 3N feature encoding, blocks ordered (size, dir, iat).
struct FeatureVector {
	std::vector<double> values;
	std::size_t size() const noexcept { return values.size(); }
};

// Throws MalformedSampleError on non-finite input, ConfigError on a bad norm.
FeatureVector preprocess(const FlowSample& sample, const NormConfig& norm = {});

} // namespace flowaug
