#include "flowaug/augment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

struct Gates {
	bool size = false;
	bool iat = false;
};

Gates draw_gates(const FeaturePolicy& policy, RngStream& rng)
{
	Gates g;
	g.size = rng.uniform() < policy.p_size;
	g.iat = rng.uniform() < policy.p_iat;
	return g;
}

std::int64_t round_size(double value)
{
	// round-half-up, then at least one byte for a real packet
	const double r = std::floor(value + 0.5);
	return std::max<std::int64_t>(1, static_cast<std::int64_t>(r));
}

std::size_t prefix_len(const FlowSample& s)
{
	return std::min(s.valid_len, s.length());
}

// Real (non-masked) packet positions inside the valid prefix.
bool is_packet(const FlowSample& s, std::size_t t)
{
	return s.dirs[t] != 0;
}

double prefix_stddev_sizes(const FlowSample& s)
{
	const std::size_t len = prefix_len(s);
	double mean = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		mean += static_cast<double>(s.sizes[t]);
	}
	mean /= static_cast<double>(len);
	double var = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		const double d = static_cast<double>(s.sizes[t]) - mean;
		var += d * d;
	}
	return std::sqrt(var / static_cast<double>(len));
}

double prefix_stddev_iats(const FlowSample& s)
{
	const std::size_t len = prefix_len(s);
	double mean = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		mean += s.iats[t];
	}
	mean /= static_cast<double>(len);
	double var = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		const double d = s.iats[t] - mean;
		var += d * d;
	}
	return std::sqrt(var / static_cast<double>(len));
}

// Applies f(t, value) -> new value to every real packet of the gated features.
void map_sizes(FlowSample& s, const std::function<double(std::size_t, double)>& f)
{
	const std::size_t len = prefix_len(s);
	for (std::size_t t = 0; t < len; ++t) {
		if (is_packet(s, t)) {
			s.sizes[t] = round_size(f(t, static_cast<double>(s.sizes[t])));
		}
	}
}

void map_iats(FlowSample& s, const std::function<double(std::size_t, double)>& f)
{
	const std::size_t len = prefix_len(s);
	for (std::size_t t = 0; t < len; ++t) {
		if (is_packet(s, t)) {
			s.iats[t] = std::max(0.0, f(t, s.iats[t]));
		}
	}
}

void zero_position(FlowSample& s, std::size_t t)
{
	s.sizes[t] = 0;
	s.dirs[t] = 0;
	s.iats[t] = 0.0;
}

struct Packet {
	std::int64_t size;
	std::int8_t dir;
	double iat;
};

Packet packet_at(const FlowSample& s, std::size_t t)
{
	return {s.sizes[t], s.dirs[t], s.iats[t]};
}

// Midpoint packet: mean size (half-up) and iat, direction of the left packet.
// Next to a masked position the midpoint is masked too.
Packet midpoint(const Packet& left, const Packet& right)
{
	if (left.dir == 0 || right.dir == 0) {
		return {0, 0, 0.0};
	}
	return {(left.size + right.size + 1) / 2, left.dir, (left.iat + right.iat) / 2.0};
}

// Writes packets from index 0, zero-pads the tail, and sets valid_len.
FlowSample rebuild(const FlowSample& in, const std::vector<Packet>& packets)
{
	FlowSample out = FlowSample::zeros(in.length(), in.label);
	const std::size_t count = std::min(packets.size(), in.length());
	for (std::size_t t = 0; t < count; ++t) {
		out.sizes[t] = packets[t].size;
		out.dirs[t] = packets[t].dir;
		out.iats[t] = packets[t].iat;
	}
	out.valid_len = count;
	return out;
}

} // namespace

std::string_view kind_name(AugKind kind) noexcept
{
	switch (kind) {
	case AugKind::identity: return "identity";
	case AugKind::gaussian_noise: return "gaussian_noise";
	case AugKind::spike_noise: return "spike_noise";
	case AugKind::gaussian_wrapup: return "gaussian_wrapup";
	case AugKind::sine_wrapup: return "sine_wrapup";
	case AugKind::constant_wrapup: return "constant_wrapup";
	case AugKind::bernoulli_mask: return "bernoulli_mask";
	case AugKind::window_mask: return "window_mask";
	case AugKind::interpolation: return "interpolation";
	case AugKind::flip: return "flip";
	case AugKind::packet_loss: return "packet_loss";
	case AugKind::translation: return "translation";
	case AugKind::wrap: return "wrap";
	case AugKind::permutation: return "permutation";
	case AugKind::cutmix: return "cutmix";
	}
	return "identity";
}

std::optional<AugKind> parse_kind(std::string_view name) noexcept
{
	if (name == "identity") {
		return AugKind::identity;
	}
	for (auto kind : kAllAugmentations) {
		if (kind_name(kind) == name) {
			return kind;
		}
	}
	return std::nullopt;
}

// ---------------------------------------------------------------- amplitude

FlowSample gaussian_noise(const FlowSample& in, const FeaturePolicy& policy, double sigma_rel, RngStream& rng)
{
	FlowSample out = in;
	const Gates gates = draw_gates(policy, rng);
	if (gates.size) {
		const double std_f = prefix_stddev_sizes(in);
		if (std_f > 0.0) {
			const double scale = sigma_rel * std_f;
			map_sizes(out, [&](std::size_t, double x) { return x + scale * rng.normal(); });
		}
	}
	if (gates.iat) {
		const double std_f = prefix_stddev_iats(in);
		if (std_f > 0.0) {
			const double scale = sigma_rel * std_f;
			map_iats(out, [&](std::size_t, double x) { return x + scale * rng.normal(); });
		}
	}
	return out;
}

FlowSample spike_noise(
	const FlowSample& in,
	const FeaturePolicy& policy,
	double sigma_abs,
	std::size_t max_spikes,
	double size_scale,
	RngStream& rng)
{
	FlowSample out = in;
	const Gates gates = draw_gates(policy, rng);
	const std::size_t len = prefix_len(in);

	// Picks up to max_spikes distinct nonzero positions (partial Fisher-Yates).
	auto pick = [&](auto nonzero) {
		std::vector<std::size_t> cand;
		for (std::size_t t = 0; t < len; ++t) {
			if (is_packet(in, t) && nonzero(t)) {
				cand.push_back(t);
			}
		}
		std::vector<std::size_t> chosen;
		if (cand.empty()) {
			return chosen;
		}
		const auto upper = static_cast<std::int64_t>(std::min(max_spikes, cand.size()));
		const auto k = static_cast<std::size_t>(rng.uniform_int(1, upper));
		for (std::size_t i = 0; i < k; ++i) {
			const auto j = static_cast<std::size_t>(
				rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(cand.size() - 1)));
			std::swap(cand[i], cand[j]);
			chosen.push_back(cand[i]);
		}
		return chosen;
	};

	if (gates.size) {
		for (auto t : pick([&](std::size_t t) { return in.sizes[t] != 0; })) {
			const double spike = std::abs(sigma_abs * size_scale * rng.normal());
			out.sizes[t] = round_size(static_cast<double>(in.sizes[t]) + spike);
		}
	}
	if (gates.iat) {
		for (auto t : pick([&](std::size_t t) { return in.iats[t] != 0.0; })) {
			out.iats[t] = in.iats[t] + std::abs(sigma_abs * rng.normal());
		}
	}
	return out;
}

FlowSample gaussian_wrapup(const FlowSample& in, const FeaturePolicy& policy, double sigma_mult, RngStream& rng)
{
	FlowSample out = in;
	const Gates gates = draw_gates(policy, rng);
	auto factor = [&] { return std::max(0.0, 1.0 + sigma_mult * rng.normal()); };
	if (gates.size) {
		map_sizes(out, [&](std::size_t, double x) { return x * factor(); });
	}
	if (gates.iat) {
		map_iats(out, [&](std::size_t, double x) { return x * factor(); });
	}
	return out;
}

FlowSample sine_wrapup(
	const FlowSample& in,
	const FeaturePolicy& policy,
	double amp_min,
	double amp_max,
	double period_min,
	double period_max,
	RngStream& rng)
{
	FlowSample out = in;
	const Gates gates = draw_gates(policy, rng);
	auto make_wave = [&] {
		const double amp = rng.uniform(amp_min, amp_max);
		const double period = rng.uniform(period_min, period_max);
		const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
		return [=](std::size_t t, double x) {
			const double arg = 2.0 * std::numbers::pi * static_cast<double>(t) / period + phase;
			return std::max(0.0, x * (1.0 + amp * std::sin(arg)));
		};
	};
	if (gates.size) {
		map_sizes(out, make_wave());
	}
	if (gates.iat) {
		map_iats(out, make_wave());
	}
	return out;
}

FlowSample constant_wrapup(const FlowSample& in, double c_min, double c_max, RngStream& rng)
{
	FlowSample out = in;
	const double c = rng.uniform(c_min, c_max);
	map_iats(out, [c](std::size_t, double x) { return c * x; });
	return out;
}

// --------------------------------------------------------------------- mask

FlowSample bernoulli_mask(const FlowSample& in, double p_mask, RngStream& rng)
{
	FlowSample out = in;
	const std::size_t len = prefix_len(in);
	for (std::size_t t = 0; t < len; ++t) {
		if (rng.uniform() < p_mask) {
			zero_position(out, t);
		}
	}
	return out;
}

FlowSample window_mask(const FlowSample& in, std::size_t win, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	if (win == 0 || len < win) {
		return in;
	}
	FlowSample out = in;
	const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(len - win)));
	for (std::size_t t = start; t < start + win; ++t) {
		zero_position(out, t);
	}
	return out;
}

// -------------------------------------------------------------------- order

FlowSample interpolation(const FlowSample& in, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	const std::size_t n = in.length();
	if (len < 2) {
		return in;
	}
	std::vector<Packet> expanded;
	expanded.reserve(2 * len - 1);
	for (std::size_t t = 0; t < len; ++t) {
		expanded.push_back(packet_at(in, t));
		if (t + 1 < len) {
			expanded.push_back(midpoint(packet_at(in, t), packet_at(in, t + 1)));
		}
	}
	const std::size_t overflow = expanded.size() > n ? expanded.size() - n : 0;
	const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(overflow)));
	std::vector<Packet> window(expanded.begin() + static_cast<std::ptrdiff_t>(start), expanded.end());
	return rebuild(in, window);
}

FlowSample flip(const FlowSample& in)
{
	// Gap sequence is reversed and the first gap reset to 0, so flip is an
	// involution on samples that follow the iats[0] == 0 convention.
	const std::size_t len = prefix_len(in);
	FlowSample out = in;
	for (std::size_t t = 0; t < len; ++t) {
		out.sizes[t] = in.sizes[len - 1 - t];
		out.dirs[t] = in.dirs[len - 1 - t];
	}
	if (len > 0) {
		out.iats[0] = 0.0;
		for (std::size_t t = 1; t < len; ++t) {
			// masked positions stay all-zero
			out.iats[t] = out.dirs[t] == 0 ? 0.0 : in.iats[len - t];
		}
	}
	return out;
}

FlowSample packet_loss(const FlowSample& in, double dt_frac, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	if (len == 0 || dt_frac <= 0.0) {
		return in;
	}
	std::vector<double> arrival(len);
	double clock = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		clock += in.iats[t];
		arrival[t] = clock;
	}
	const double duration = arrival[len - 1];
	if (!(duration > 0.0)) {
		return in;
	}
	const double lo = rng.uniform(0.0, duration * (1.0 - dt_frac));
	const double hi = lo + dt_frac * duration;

	std::vector<Packet> kept;
	std::size_t previous = len; // none yet
	double pending_gap = 0.0;
	for (std::size_t t = 0; t < len; ++t) {
		const bool dropped = arrival[t] >= lo && arrival[t] < hi;
		if (dropped) {
			if (previous != len) {
				pending_gap += in.iats[t];
			}
			continue;
		}
		Packet p = packet_at(in, t);
		if (previous == len) {
			p.iat = 0.0;
		} else if (previous + 1 != t) {
			// gap to the previous survivor = sum of the skipped gaps
			p.iat = pending_gap + in.iats[t];
		}
		pending_gap = 0.0;
		previous = t;
		kept.push_back(p);
	}
	if (kept.size() == len || kept.empty()) {
		return in;
	}
	return rebuild(in, kept);
}

FlowSample translation(const FlowSample& in, std::size_t k_max, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	if (k_max == 0) {
		return in;
	}
	const auto k = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(k_max)));
	const bool left = rng.uniform_int(0, 1) == 0;
	if (left) {
		if (k >= len) {
			return in;
		}
		std::vector<Packet> rest;
		for (std::size_t t = k; t < len; ++t) {
			rest.push_back(packet_at(in, t));
		}
		rest.front().iat = 0.0;
		return rebuild(in, rest);
	}
	std::vector<Packet> shifted(k, Packet{0, 0, 0.0});
	for (std::size_t t = 0; t < len; ++t) {
		shifted.push_back(packet_at(in, t));
	}
	return rebuild(in, shifted);
}

FlowSample wrap(const FlowSample& in, double p_edit, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	std::vector<Packet> packets;
	bool edited = false;
	for (std::size_t t = 0; t < len; ++t) {
		const double u = rng.uniform();
		if (u < p_edit) {
			// insert: packet followed by an interpolated one
			const Packet cur = packet_at(in, t);
			packets.push_back(cur);
			packets.push_back(t + 1 < len ? midpoint(cur, packet_at(in, t + 1)) : cur);
			edited = true;
		} else if (u >= 1.0 - p_edit) {
			edited = true; // drop
		} else {
			packets.push_back(packet_at(in, t));
		}
	}
	if (!edited || packets.empty()) {
		return in;
	}
	return rebuild(in, packets);
}

FlowSample permutation(const FlowSample& in, std::size_t m_min, std::size_t m_max, RngStream& rng)
{
	const std::size_t len = prefix_len(in);
	if (len < 2) {
		return in;
	}
	const auto drawn = static_cast<std::size_t>(
		rng.uniform_int(static_cast<std::int64_t>(m_min), static_cast<std::int64_t>(m_max)));
	const std::size_t m = std::min(drawn, len);
	if (m < 2) {
		return in;
	}

	std::vector<std::size_t> cuts(len - 1);
	std::iota(cuts.begin(), cuts.end(), std::size_t{1});
	for (std::size_t i = 0; i + 1 < m; ++i) {
		const auto j = static_cast<std::size_t>(
			rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(cuts.size() - 1)));
		std::swap(cuts[i], cuts[j]);
	}
	cuts.resize(m - 1);
	std::sort(cuts.begin(), cuts.end());

	std::vector<std::pair<std::size_t, std::size_t>> segments; // [begin, end)
	std::size_t begin = 0;
	for (auto c : cuts) {
		segments.emplace_back(begin, c);
		begin = c;
	}
	segments.emplace_back(begin, len);

	std::vector<std::size_t> order(m);
	std::iota(order.begin(), order.end(), std::size_t{0});
	auto is_identity = [&] {
		for (std::size_t i = 0; i < m; ++i) {
			if (order[i] != i) {
				return false;
			}
		}
		return true;
	};
	rng.shuffle(std::span<std::size_t>(order));
	if (is_identity()) {
		rng.shuffle(std::span<std::size_t>(order));
	}

	FlowSample out = in;
	std::size_t pos = 0;
	for (auto idx : order) {
		for (std::size_t t = segments[idx].first; t < segments[idx].second; ++t, ++pos) {
			out.sizes[pos] = in.sizes[t];
			out.dirs[pos] = in.dirs[t];
			out.iats[pos] = in.iats[t];
		}
	}
	return out;
}

FlowSample cutmix(
	const FlowSample& a,
	const FlowSample& b,
	std::size_t len_min,
	std::size_t len_max,
	RngStream& rng)
{
	if (a.label != b.label) {
		throw UsageError("cutmix: partner must share the sample's label");
	}
	if (a.length() != b.length()) {
		throw UsageError("cutmix: partner has a different series length");
	}
	const std::size_t shortest = std::min(prefix_len(a), prefix_len(b));
	if (shortest < len_min || len_min == 0) {
		return a;
	}
	const auto drawn = static_cast<std::size_t>(
		rng.uniform_int(static_cast<std::int64_t>(len_min), static_cast<std::int64_t>(len_max)));
	const std::size_t width = std::min(drawn, shortest);
	const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(shortest - width)));
	FlowSample out = a;
	for (std::size_t t = start; t < start + width; ++t) {
		out.sizes[t] = b.sizes[t];
		out.dirs[t] = b.dirs[t];
		out.iats[t] = b.iats[t];
	}
	return out;
}

FlowSample apply(const AugmentationSpec& spec, const FlowSample& sample, RngStream& rng, const FlowSample* partner)
{
	const AugParams& p = spec.params;
	switch (spec.kind) {
	case AugKind::identity: return sample;
	case AugKind::gaussian_noise: return gaussian_noise(sample, p.policy, p.sigma_rel, rng);
	case AugKind::spike_noise:
		return spike_noise(sample, p.policy, p.sigma_abs, p.max_spikes, p.spike_size_scale, rng);
	case AugKind::gaussian_wrapup: return gaussian_wrapup(sample, p.policy, p.sigma_mult, rng);
	case AugKind::sine_wrapup:
		return sine_wrapup(sample, p.policy, p.amp_min, p.amp_max, p.period_min, p.period_max, rng);
	case AugKind::constant_wrapup: return constant_wrapup(sample, p.c_min, p.c_max, rng);
	case AugKind::bernoulli_mask: return bernoulli_mask(sample, p.p_mask, rng);
	case AugKind::window_mask: return window_mask(sample, p.win, rng);
	case AugKind::interpolation: return interpolation(sample, rng);
	case AugKind::flip: return flip(sample);
	case AugKind::packet_loss: return packet_loss(sample, p.dt_frac, rng);
	case AugKind::translation: return translation(sample, p.k_max, rng);
	case AugKind::wrap: return wrap(sample, p.p_edit, rng);
	case AugKind::permutation: return permutation(sample, p.m_min, p.m_max, rng);
	case AugKind::cutmix:
		if (partner == nullptr) {
			throw UsageError("cutmix requires a partner sample");
		}
		return cutmix(sample, *partner, p.len_min, p.len_max, rng);
	}
	return sample;
}

// ------------------------------------------------------------ serialization

namespace {

enum class ParamType { real, count };

struct ParamField {
	std::string_view key;
	ParamType type;
	double AugParams::*real = nullptr;
	std::size_t AugParams::*count = nullptr;
};

ParamField real_field(std::string_view key, double AugParams::*member)
{
	return {key, ParamType::real, member, nullptr};
}

ParamField count_field(std::string_view key, std::size_t AugParams::*member)
{
	return {key, ParamType::count, nullptr, member};
}

// Policy probabilities live in a nested struct, so they get dedicated handling.
constexpr std::string_view kPSize = "p_size";
constexpr std::string_view kPIat = "p_iat";

bool has_policy(AugKind kind)
{
	switch (kind) {
	case AugKind::gaussian_noise:
	case AugKind::spike_noise:
	case AugKind::gaussian_wrapup:
	case AugKind::sine_wrapup: return true;
	default: return false;
	}
}

std::vector<ParamField> fields_of(AugKind kind)
{
	switch (kind) {
	case AugKind::gaussian_noise: return {real_field("sigma_rel", &AugParams::sigma_rel)};
	case AugKind::spike_noise:
		return {
			real_field("sigma_abs", &AugParams::sigma_abs),
			count_field("max_spikes", &AugParams::max_spikes),
			real_field("size_scale", &AugParams::spike_size_scale),
		};
	case AugKind::gaussian_wrapup: return {real_field("sigma_mult", &AugParams::sigma_mult)};
	case AugKind::sine_wrapup:
		return {
			real_field("amp_min", &AugParams::amp_min),
			real_field("amp_max", &AugParams::amp_max),
			real_field("period_min", &AugParams::period_min),
			real_field("period_max", &AugParams::period_max),
		};
	case AugKind::constant_wrapup:
		return {real_field("c_min", &AugParams::c_min), real_field("c_max", &AugParams::c_max)};
	case AugKind::bernoulli_mask: return {real_field("p_mask", &AugParams::p_mask)};
	case AugKind::window_mask: return {count_field("win", &AugParams::win)};
	case AugKind::packet_loss: return {real_field("dt_frac", &AugParams::dt_frac)};
	case AugKind::translation: return {count_field("k_max", &AugParams::k_max)};
	case AugKind::wrap: return {real_field("p_edit", &AugParams::p_edit)};
	case AugKind::permutation:
		return {count_field("m_min", &AugParams::m_min), count_field("m_max", &AugParams::m_max)};
	case AugKind::cutmix:
		return {count_field("len_min", &AugParams::len_min), count_field("len_max", &AugParams::len_max)};
	default: return {};
	}
}

void require(bool ok, AugKind kind, const std::string& what)
{
	if (!ok) {
		throw ConfigError(std::string(kind_name(kind)) + ": " + what);
	}
}

bool is_prob(double p)
{
	return p >= 0.0 && p <= 1.0;
}

} // namespace

void AugmentationSpec::check() const
{
	const AugParams& p = params;
	if (has_policy(kind)) {
		require(is_prob(p.policy.p_size), kind, "p_size must be in [0, 1]");
		require(is_prob(p.policy.p_iat), kind, "p_iat must be in [0, 1]");
	}
	switch (kind) {
	case AugKind::gaussian_noise:
		require(std::isfinite(p.sigma_rel) && p.sigma_rel >= 0.0, kind, "sigma_rel must be >= 0");
		break;
	case AugKind::spike_noise:
		require(std::isfinite(p.sigma_abs) && p.sigma_abs >= 0.0, kind, "sigma_abs must be >= 0");
		require(p.max_spikes >= 1, kind, "max_spikes must be >= 1");
		require(std::isfinite(p.spike_size_scale) && p.spike_size_scale > 0.0, kind, "size_scale must be > 0");
		break;
	case AugKind::gaussian_wrapup:
		require(std::isfinite(p.sigma_mult) && p.sigma_mult >= 0.0, kind, "sigma_mult must be >= 0");
		break;
	case AugKind::sine_wrapup:
		require(p.amp_min >= 0.0 && p.amp_min <= p.amp_max && std::isfinite(p.amp_max), kind,
			"need 0 <= amp_min <= amp_max");
		require(p.period_min > 0.0 && p.period_min <= p.period_max && std::isfinite(p.period_max), kind,
			"need 0 < period_min <= period_max");
		break;
	case AugKind::constant_wrapup:
		require(p.c_min >= 0.0 && p.c_min <= p.c_max && std::isfinite(p.c_max), kind, "need 0 <= c_min <= c_max");
		break;
	case AugKind::bernoulli_mask: require(is_prob(p.p_mask), kind, "p_mask must be in [0, 1]"); break;
	case AugKind::window_mask: require(p.win >= 1, kind, "win must be >= 1"); break;
	case AugKind::packet_loss:
		require(p.dt_frac >= 0.0 && p.dt_frac < 1.0, kind, "dt_frac must be in [0, 1)");
		break;
	case AugKind::wrap: require(p.p_edit >= 0.0 && p.p_edit <= 0.5, kind, "p_edit must be in [0, 0.5]"); break;
	case AugKind::permutation:
		require(p.m_min >= 1 && p.m_min <= p.m_max, kind, "need 1 <= m_min <= m_max");
		break;
	case AugKind::cutmix:
		require(p.len_min >= 1 && p.len_min <= p.len_max, kind, "need 1 <= len_min <= len_max");
		break;
	default: break;
	}
}

AugmentationSpec AugmentationSpec::parse(std::string_view text)
{
	text = trim(text);
	const auto colon = text.find(':');
	const std::string_view name = trim(text.substr(0, colon));
	const auto kind = parse_kind(name);
	if (!kind) {
		throw ConfigError("unknown augmentation '" + std::string(name) + "'");
	}
	AugmentationSpec spec;
	spec.kind = *kind;
	if (colon != std::string_view::npos) {
		const auto fields = fields_of(spec.kind);
		for (auto item : split(text.substr(colon + 1), ',')) {
			item = trim(item);
			if (item.empty()) {
				continue;
			}
			const auto eq = item.find('=');
			if (eq == std::string_view::npos) {
				throw ConfigError(std::string(name) + ": expected key=value, got '" + std::string(item) + "'");
			}
			const auto key = trim(item.substr(0, eq));
			const auto value = trim(item.substr(eq + 1));
			const auto bad_value = [&] {
				return ConfigError(std::string(name) + ": bad value for " + std::string(key) + ": '"
					+ std::string(value) + "'");
			};
			if (has_policy(spec.kind) && (key == kPSize || key == kPIat)) {
				const auto v = parse_double(value);
				if (!v) {
					throw bad_value();
				}
				(key == kPSize ? spec.params.policy.p_size : spec.params.policy.p_iat) = *v;
				continue;
			}
			const auto it = std::find_if(fields.begin(), fields.end(), [&](const ParamField& f) { return f.key == key; });
			if (it == fields.end()) {
				throw ConfigError(std::string(name) + ": unknown parameter '" + std::string(key) + "'");
			}
			if (it->type == ParamType::real) {
				const auto v = parse_double(value);
				if (!v) {
					throw bad_value();
				}
				spec.params.*(it->real) = *v;
			} else {
				const auto v = parse_int(value);
				if (!v || *v < 0) {
					throw bad_value();
				}
				spec.params.*(it->count) = static_cast<std::size_t>(*v);
			}
		}
	}
	spec.check();
	return spec;
}

std::string AugmentationSpec::to_string() const
{
	std::string out(kind_name(kind));
	std::vector<std::string> items;
	for (const auto& f : fields_of(kind)) {
		const std::string value = f.type == ParamType::real ? format_double(params.*(f.real))
															: std::to_string(params.*(f.count));
		items.push_back(std::string(f.key) + "=" + value);
	}
	if (has_policy(kind)) {
		items.push_back(std::string(kPSize) + "=" + format_double(params.policy.p_size));
		items.push_back(std::string(kPIat) + "=" + format_double(params.policy.p_iat));
	}
	for (std::size_t i = 0; i < items.size(); ++i) {
		out += (i == 0 ? ":" : ",") + items[i];
	}
	return out;
}

} // namespace flowaug
