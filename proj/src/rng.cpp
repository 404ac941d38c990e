#include "flowaug/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace flowaug {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t rotl(std::uint64_t x, int k) noexcept
{
	return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t mix64(std::uint64_t x) noexcept
{
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : text) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

RngStream::RngStream(std::uint64_t seed)
	: seed_(seed)
{
	std::uint64_t sm = seed;
	for (auto& word : state_) {
		sm += kGolden;
		word = mix64(sm);
	}
}

RngStream RngStream::child(std::uint64_t stream_id) const
{
	// Two rounds of mixing so that (seed, id) and (seed', id') with
	// seed ^ id == seed' ^ id' still land on unrelated states.
	return RngStream(mix64(mix64(seed_ + kGolden) ^ mix64(stream_id * kGolden + 1)));
}

std::uint64_t RngStream::next_u64()
{
	const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
	const std::uint64_t t = state_[1] << 17;
	state_[2] ^= state_[0];
	state_[3] ^= state_[1];
	state_[1] ^= state_[2];
	state_[0] ^= state_[3];
	state_[2] ^= t;
	state_[3] = rotl(state_[3], 45);
	return result;
}

double RngStream::uniform()
{
	return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi)
{
	return lo + (hi - lo) * uniform();
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi)
{
	const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
	if (span == 0) {
		// Full 64-bit range.
		return static_cast<std::int64_t>(next_u64());
	}
	const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
		- std::numeric_limits<std::uint64_t>::max() % span;
	std::uint64_t x;
	do {
		x = next_u64();
	} while (x >= limit);
	return lo + static_cast<std::int64_t>(x % span);
}

double RngStream::normal()
{
	const double u1 = 1.0 - uniform(); // (0, 1]
	const double u2 = uniform();
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace flowaug
