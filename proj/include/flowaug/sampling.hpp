#pragma once

#include <cstddef>
#include <vector>

#include "flowaug/augment.hpp"
#include "flowaug/flowcore.hpp"
#include "flowaug/rng.hpp"

namespace flowaug {

enum class SamplerMode {
	// Pick a class uniformly, then a sample uniformly within it.
	weighted,
	// Uniform over all samples.
	uniform,
};

struct SamplerConfig {
	SamplerMode mode = SamplerMode::weighted;
	std::size_t batch_size = 32;
};

enum class Provenance { original, augmented };

struct Batch {
	std::vector<FlowSample> samples;
	std::vector<Provenance> provenance;
	// Dataset index each entry was drawn from (augmented entries carry their source's).
	std::vector<std::size_t> source;

	std::size_t size() const noexcept { return samples.size(); }
};

/**
 * With-replacement sampler over a dataset.
 *
 * Holds a reference to the dataset; the dataset must outlive the sampler.
 * Construction fails with ConfigError when batch_size is 0 or, in weighted
 * mode, when any class of the vocabulary has no samples.
 */
class Sampler {
public:
	Sampler(const Dataset& dataset, SamplerConfig config);

	const SamplerConfig& config() const noexcept { return config_; }
	const Dataset& dataset() const noexcept { return *dataset_; }

	std::vector<std::size_t> draw_indices(std::size_t count, RngStream& rng) const;

	/**
	 * Identity spec: 2B fresh draws, all original. Any other spec: B draws
	 * followed by one augmented copy of each, so entry i + B derives from i.
	 * CutMix partners are another batch entry of the same class when one
	 * exists, otherwise a same-class dataset sample.
	 */
	Batch make_batch(const AugmentationSpec& spec, RngStream& rng) const;

	// Batches per epoch: ceil(|dataset| / B).
	std::size_t batches_per_epoch() const noexcept;

private:
	const Dataset* dataset_;
	SamplerConfig config_;
	std::vector<std::vector<std::size_t>> by_class_;
};

// Free-function forms.
std::vector<std::size_t> draw_indices(const Dataset& dataset, const SamplerConfig& config, std::size_t count, RngStream& rng);
Batch make_batch(const Dataset& dataset, const SamplerConfig& config, const AugmentationSpec& spec, RngStream& rng);

} // namespace flowaug
