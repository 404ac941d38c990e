#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowaug/augment.hpp"
#include "flowaug/flowcore.hpp"
#include "flowaug/rng.hpp"
#include "flowaug/sampling.hpp"

namespace flowaug {

// Fully connected layer; weights are row-major (out x in).
struct DenseLayer {
	std::size_t in = 0;
	std::size_t out = 0;
	std::vector<double> weights;
	std::vector<double> biases;

	double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
	double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }

	bool operator==(const DenseLayer&) const = default;
};

/**
 * Multi-layer perceptron with ReLU between layers and a softmax head.
 * The default task shape is 3N -> 64 -> 32 -> K.
 */
class MlpModel {
public:
	MlpModel() = default;
	// Zero-initialized parameters. dims = {input, hidden..., classes}, size >= 2.
	explicit MlpModel(std::vector<std::size_t> dims);

	// He-uniform weights U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases.
	static MlpModel he_uniform(std::vector<std::size_t> dims, RngStream& rng);

	const std::vector<std::size_t>& dims() const noexcept { return dims_; }
	std::size_t input_dim() const noexcept { return dims_.empty() ? 0 : dims_.front(); }
	std::size_t num_classes() const noexcept { return dims_.empty() ? 0 : dims_.back(); }
	std::size_t parameter_count() const noexcept;

	std::vector<DenseLayer>& layers() noexcept { return layers_; }
	const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

	double parameter_norm() const noexcept;
	bool all_finite() const noexcept;

	bool operator==(const MlpModel&) const = default;

private:
	std::vector<std::size_t> dims_;
	std::vector<DenseLayer> layers_;
};

// Same shape as the model's parameters.
struct Gradient {
	std::vector<DenseLayer> layers;

	static Gradient zeros_like(const MlpModel& model);
	void scale(double factor);
	void add(const Gradient& other);
};

struct LossGradient {
	double loss = 0.0;
	Gradient gradient;
};

// Class probabilities; throws UsageError when features.size() != input_dim.
std::vector<double> forward(const MlpModel& model, std::span<const double> features);
std::vector<double> forward(const MlpModel& model, const FeatureVector& features);

// Cross-entropy -log p[label] and its gradient with respect to every parameter.
LossGradient backward(const MlpModel& model, std::span<const double> features, std::size_t label);

// Adds the per-sample gradient into acc; returns the loss. Reuses buffers.
double accumulate_gradient(const MlpModel& model, std::span<const double> features, std::size_t label, Gradient& acc);

struct AdamConfig {
	double learning_rate = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
};

class AdamOptimizer {
public:
	AdamOptimizer(const MlpModel& model, AdamConfig config);
	void step(MlpModel& model, const Gradient& grad);
	std::size_t steps() const noexcept { return t_; }

private:
	AdamConfig config_;
	Gradient m_;
	Gradient v_;
	std::size_t t_ = 0;
};

// Child stream of TrainConfig::seed used for parameter initialization.
inline constexpr std::uint64_t kInitStreamId = 0x1417;

struct TrainConfig {
	std::size_t epochs = 30;
	std::size_t batch_size = 32;
	AdamConfig adam;
	std::uint64_t seed = 0;
	// Stream for sampling and augmentation draws; init uses a fixed stream of seed.
	std::uint64_t stream_id = 1;
	std::vector<std::size_t> hidden = {64, 32};
	NormConfig norm;
	// Wall-clock limit per training run in seconds; 0 disables it.
	double time_budget_s = 0.0;

	void check() const;
};

struct EpochStats {
	double train_loss = 0.0;
	double val_weighted_f1 = 0.0;
	bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
	MlpModel initial;
	MlpModel model; // parameters at the best validation epoch
	MlpModel last;
	std::vector<EpochStats> history;
	// 1-based epoch whose parameters are in model; 0 when no epoch ran.
	std::size_t best_epoch = 0;
};

struct ClassMetrics {
	double precision = 0.0;
	double recall = 0.0;
	double f1 = 0.0;
	std::size_t support = 0;
};

struct EvalReport {
	double weighted_f1 = 0.0;
	double accuracy = 0.0;
	std::vector<ClassMetrics> per_class;
	// confusion[true][predicted]
	std::vector<std::vector<std::size_t>> confusion;
};

/**
 * Runs epochs x ceil(|train| / B) batches of make_batch -> backward -> Adam.
 * The sampler batch size is taken from config.batch_size. After every epoch
 * the validation weighted-F1 is recorded; the best epoch's parameters are kept
 * (earliest epoch wins ties). Throws TrainingError on a non-finite loss or an
 * exhausted time budget.
 */
TrainResult train(
	const Dataset& train_set,
	const Dataset& val_set,
	const SamplerConfig& sampler,
	const AugmentationSpec& spec,
	const TrainConfig& config);

std::size_t predict(const MlpModel& model, const FlowSample& sample, const NormConfig& norm = {});

EvalReport evaluate(const MlpModel& model, const Dataset& test_set, const NormConfig& norm = {});
// Metric computation from label/prediction pairs over num_classes classes.
EvalReport evaluate_predictions(
	std::span<const std::size_t> truth,
	std::span<const std::size_t> predicted,
	std::size_t num_classes);

// Plain-text checkpoint; parameters use shortest round-trip decimals.
std::string checkpoint_text(const MlpModel& model);
MlpModel parse_checkpoint(const std::string& text);
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

} // namespace flowaug
