#include "flowaug/sampling.hpp"

namespace flowaug {

Sampler::Sampler(const Dataset& dataset, SamplerConfig config)
	: dataset_(&dataset)
	, config_(config)
{
	if (config_.batch_size == 0) {
		throw ConfigError("sampler: batch_size must be >= 1");
	}
	if (dataset.empty()) {
		throw ConfigError("sampler: dataset is empty");
	}
	by_class_.resize(dataset.num_classes());
	for (std::size_t i = 0; i < dataset.size(); ++i) {
		const std::size_t label = dataset.samples[i].label;
		if (label >= by_class_.size()) {
			throw ConfigError("sampler: sample " + std::to_string(i) + " has label outside the vocabulary");
		}
		by_class_[label].push_back(i);
	}
	if (config_.mode == SamplerMode::weighted) {
		for (std::size_t c = 0; c < by_class_.size(); ++c) {
			if (by_class_[c].empty()) {
				throw ConfigError("sampler: class '" + dataset.labels[c] + "' has no samples (weighted mode)");
			}
		}
	}
}

std::vector<std::size_t> Sampler::draw_indices(std::size_t count, RngStream& rng) const
{
	std::vector<std::size_t> out;
	out.reserve(count);
	const auto n = static_cast<std::int64_t>(dataset_->size());
	const auto k = static_cast<std::int64_t>(by_class_.size());
	for (std::size_t i = 0; i < count; ++i) {
		if (config_.mode == SamplerMode::weighted) {
			const auto& members = by_class_[static_cast<std::size_t>(rng.uniform_int(0, k - 1))];
			const auto j = rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1);
			out.push_back(members[static_cast<std::size_t>(j)]);
		} else {
			out.push_back(static_cast<std::size_t>(rng.uniform_int(0, n - 1)));
		}
	}
	return out;
}

Batch Sampler::make_batch(const AugmentationSpec& spec, RngStream& rng) const
{
	const std::size_t b = config_.batch_size;
	Batch batch;
	if (spec.kind == AugKind::identity) {
		batch.source = draw_indices(2 * b, rng);
		for (auto idx : batch.source) {
			batch.samples.push_back(dataset_->samples[idx]);
			batch.provenance.push_back(Provenance::original);
		}
		return batch;
	}

	const auto drawn = draw_indices(b, rng);
	batch.samples.reserve(2 * b);
	for (auto idx : drawn) {
		batch.samples.push_back(dataset_->samples[idx]);
		batch.provenance.push_back(Provenance::original);
		batch.source.push_back(idx);
	}
	for (std::size_t i = 0; i < b; ++i) {
		const FlowSample& original = batch.samples[i];
		const FlowSample* partner = nullptr;
		if (spec.kind == AugKind::cutmix) {
			std::vector<std::size_t> mates;
			for (std::size_t j = 0; j < b; ++j) {
				if (j != i && batch.samples[j].label == original.label) {
					mates.push_back(j);
				}
			}
			if (!mates.empty()) {
				const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(mates.size()) - 1);
				partner = &batch.samples[mates[static_cast<std::size_t>(pick)]];
			} else {
				const auto& members = by_class_[original.label];
				const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1);
				partner = &dataset_->samples[members[static_cast<std::size_t>(pick)]];
			}
		}
		FlowSample augmented = apply(spec, original, rng, partner);
		batch.samples.push_back(std::move(augmented));
		batch.provenance.push_back(Provenance::augmented);
		batch.source.push_back(drawn[i]);
	}
	return batch;
}

std::size_t Sampler::batches_per_epoch() const noexcept
{
	return (dataset_->size() + config_.batch_size - 1) / config_.batch_size;
}

std::vector<std::size_t> draw_indices(const Dataset& dataset, const SamplerConfig& config, std::size_t count, RngStream& rng)
{
	return Sampler(dataset, config).draw_indices(count, rng);
}

Batch make_batch(const Dataset& dataset, const SamplerConfig& config, const AugmentationSpec& spec, RngStream& rng)
{
	return Sampler(dataset, config).make_batch(spec, rng);
}

} // namespace flowaug
