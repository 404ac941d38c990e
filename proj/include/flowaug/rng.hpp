#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace flowaug {

/**
 * Seeded random stream with a fully specified output sequence.
 *
 * Engine is xoshiro256** seeded through SplitMix64. All derived draws
 * (uniform reals, bounded integers, normals) are defined here rather than
 * through <random> distributions, whose algorithms are implementation-defined,
 * so identical seeds give identical sequences on every platform.
 *
 * Draw costs, which replay oracles rely on:
 *   uniform(), uniform(a, b), uniform_int(): one or more next_u64() (rejection)
 *   normal(): exactly two uniform() calls (Box-Muller, cosine branch only)
 */
class RngStream {
public:
	explicit RngStream(std::uint64_t seed);

	std::uint64_t seed() const noexcept { return seed_; }

	// Independent stream keyed by (seed, stream_id).
	RngStream child(std::uint64_t stream_id) const;

	std::uint64_t next_u64();

	// [0, 1) with 53 random bits.
	double uniform();
	// [lo, hi); returns lo when lo == hi.
	double uniform(double lo, double hi);
	// Inclusive range [lo, hi]; lo <= hi required.
	std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
	double normal();
	double normal(double mean, double stddev) { return mean + stddev * normal(); }

	template<typename T>
	void shuffle(std::span<T> values)
	{
		for (std::size_t i = values.size(); i > 1; --i) {
			const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
			std::swap(values[i - 1], values[j]);
		}
	}

private:
	std::uint64_t seed_;
	std::uint64_t state_[4];
};

// SplitMix64 finalizer; also used to mix stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

// FNV-1a, used for stable stream ids derived from names.
std::uint64_t fnv1a64(std::string_view text) noexcept;

} // namespace flowaug
