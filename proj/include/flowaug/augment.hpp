#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "flowaug/flowcore.hpp"
#include "flowaug/rng.hpp"

namespace flowaug {

enum class AugKind {
	identity,
	// amplitude
	gaussian_noise,
	spike_noise,
	gaussian_wrapup,
	sine_wrapup,
	constant_wrapup,
	// mask
	bernoulli_mask,
	window_mask,
	// order
	interpolation,
	flip,
	packet_loss,
	translation,
	wrap,
	permutation,
	cutmix,
};

inline constexpr std::array<AugKind, 14> kAllAugmentations = {
	AugKind::gaussian_noise,
	AugKind::spike_noise,
	AugKind::gaussian_wrapup,
	AugKind::sine_wrapup,
	AugKind::constant_wrapup,
	AugKind::bernoulli_mask,
	AugKind::window_mask,
	AugKind::interpolation,
	AugKind::flip,
	AugKind::packet_loss,
	AugKind::translation,
	AugKind::wrap,
	AugKind::permutation,
	AugKind::cutmix,
};

std::string_view kind_name(AugKind kind) noexcept;
std::optional<AugKind> parse_kind(std::string_view name) noexcept;

// Per-feature alteration probability for amplitude ops. Amplitude ops never
// touch direction, so p_dir is carried for completeness but not consulted.
struct FeaturePolicy {
	double p_size = 0.5;
	double p_dir = 0.0;
	double p_iat = 0.5;
};

struct AugParams {
	FeaturePolicy policy;
	double sigma_rel = 0.1;
	double sigma_abs = 0.05;
	double spike_size_scale = 1460.0; // bytes per unit of sigma_abs on sizes
	std::size_t max_spikes = 3;
	double sigma_mult = 0.1;
	double amp_min = 0.1;
	double amp_max = 0.5;
	double period_min = 4.0;
	double period_max = 20.0;
	double c_min = 0.5;
	double c_max = 2.0;
	double p_mask = 0.1;
	std::size_t win = 2;
	double dt_frac = 0.2;
	std::size_t k_max = 3;
	double p_edit = 0.15;
	std::size_t m_min = 2;
	std::size_t m_max = 4;
	std::size_t len_min = 2;
	std::size_t len_max = 6;
};

/**
 * An augmentation kind with its parameters.
 *
 * Text form: `kind[:key=value[,key=value...]]`, e.g.
 * `gaussian_noise:sigma_rel=0.2,p_size=1`. Only the keys owned by the kind
 * are accepted; omitted keys keep their defaults.
 */
struct AugmentationSpec {
	AugKind kind = AugKind::identity;
	AugParams params;

	// Throws ConfigError naming the offending parameter.
	void check() const;

	static AugmentationSpec parse(std::string_view text);
	// Canonical text form listing every key of the kind.
	std::string to_string() const;
};

// Amplitude family. Each eligible feature (size, iat) is gated independently
// with its policy probability; two uniforms are always consumed for the gates.
FlowSample gaussian_noise(const FlowSample& in, const FeaturePolicy& policy, double sigma_rel, RngStream& rng);
FlowSample spike_noise(
	const FlowSample& in,
	const FeaturePolicy& policy,
	double sigma_abs,
	std::size_t max_spikes,
	double size_scale,
	RngStream& rng);
FlowSample gaussian_wrapup(const FlowSample& in, const FeaturePolicy& policy, double sigma_mult, RngStream& rng);
FlowSample sine_wrapup(
	const FlowSample& in,
	const FeaturePolicy& policy,
	double amp_min,
	double amp_max,
	double period_min,
	double period_max,
	RngStream& rng);
FlowSample constant_wrapup(const FlowSample& in, double c_min, double c_max, RngStream& rng);

// Mask family: whole packet positions are zeroed across all three features.
FlowSample bernoulli_mask(const FlowSample& in, double p_mask, RngStream& rng);
FlowSample window_mask(const FlowSample& in, std::size_t win, RngStream& rng);

// Order family.
FlowSample interpolation(const FlowSample& in, RngStream& rng);
FlowSample flip(const FlowSample& in);
FlowSample packet_loss(const FlowSample& in, double dt_frac, RngStream& rng);
FlowSample translation(const FlowSample& in, std::size_t k_max, RngStream& rng);
FlowSample wrap(const FlowSample& in, double p_edit, RngStream& rng);
FlowSample permutation(const FlowSample& in, std::size_t m_min, std::size_t m_max, RngStream& rng);
FlowSample cutmix(
	const FlowSample& a,
	const FlowSample& b,
	std::size_t len_min,
	std::size_t len_max,
	RngStream& rng);

// Dispatches on spec.kind. partner is required for CutMix (UsageError otherwise).
FlowSample apply(
	const AugmentationSpec& spec,
	const FlowSample& sample,
	RngStream& rng,
	const FlowSample* partner = nullptr);

} // namespace flowaug
