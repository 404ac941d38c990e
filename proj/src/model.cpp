#include "flowaug/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

constexpr std::string_view kCheckpointMagic = "flowaug-mlp";
constexpr int kCheckpointVersion = 1;

// Per-call activations: pre[i] / act[i] are layer i's pre-activation and output.
struct Workspace {
	std::vector<std::vector<double>> pre;
	std::vector<std::vector<double>> act;
	std::vector<double> delta;
	std::vector<double> next_delta;
};

void run_forward(const MlpModel& model, std::span<const double> x, Workspace& ws)
{
	const auto& layers = model.layers();
	ws.pre.resize(layers.size());
	ws.act.resize(layers.size());
	std::span<const double> input = x;
	for (std::size_t l = 0; l < layers.size(); ++l) {
		const DenseLayer& layer = layers[l];
		auto& z = ws.pre[l];
		auto& a = ws.act[l];
		z.assign(layer.out, 0.0);
		for (std::size_t r = 0; r < layer.out; ++r) {
			const double* row = layer.weights.data() + r * layer.in;
			double sum = layer.biases[r];
			for (std::size_t c = 0; c < layer.in; ++c) {
				sum += row[c] * input[c];
			}
			z[r] = sum;
		}
		a = z;
		if (l + 1 < layers.size()) {
			for (auto& v : a) {
				v = v > 0.0 ? v : 0.0;
			}
		} else {
			const double peak = *std::max_element(a.begin(), a.end());
			double total = 0.0;
			for (auto& v : a) {
				v = std::exp(v - peak);
				total += v;
			}
			for (auto& v : a) {
				v /= total;
			}
		}
		input = a;
	}
}

void check_input(const MlpModel& model, std::size_t size)
{
	if (model.layers().empty()) {
		throw UsageError("model has no layers");
	}
	if (size != model.input_dim()) {
		throw UsageError("feature length " + std::to_string(size) + " does not match model input "
			+ std::to_string(model.input_dim()));
	}
}

double backprop(
	const MlpModel& model,
	std::span<const double> x,
	std::size_t label,
	Workspace& ws,
	Gradient& acc)
{
	check_input(model, x.size());
	if (label >= model.num_classes()) {
		throw UsageError("label " + std::to_string(label) + " out of range for "
			+ std::to_string(model.num_classes()) + " classes");
	}
	run_forward(model, x, ws);
	const auto& layers = model.layers();
	const std::size_t last = layers.size() - 1;

	// Loss via log-sum-exp on the logits for accuracy at saturation.
	const auto& logits = ws.pre[last];
	const double peak = *std::max_element(logits.begin(), logits.end());
	double total = 0.0;
	for (double z : logits) {
		total += std::exp(z - peak);
	}
	const double loss = peak + std::log(total) - logits[label];

	ws.delta = ws.act[last];
	ws.delta[label] -= 1.0;

	for (std::size_t l = layers.size(); l-- > 0;) {
		const DenseLayer& layer = layers[l];
		DenseLayer& g = acc.layers[l];
		std::span<const double> input = l == 0 ? x : std::span<const double>(ws.act[l - 1]);
		for (std::size_t r = 0; r < layer.out; ++r) {
			const double d = ws.delta[r];
			g.biases[r] += d;
			if (d == 0.0) {
				continue;
			}
			double* grow = g.weights.data() + r * layer.in;
			for (std::size_t c = 0; c < layer.in; ++c) {
				grow[c] += d * input[c];
			}
		}
		if (l == 0) {
			break;
		}
		ws.next_delta.assign(layer.in, 0.0);
		for (std::size_t r = 0; r < layer.out; ++r) {
			const double d = ws.delta[r];
			if (d == 0.0) {
				continue;
			}
			const double* row = layer.weights.data() + r * layer.in;
			for (std::size_t c = 0; c < layer.in; ++c) {
				ws.next_delta[c] += d * row[c];
			}
		}
		const auto& below = ws.pre[l - 1];
		for (std::size_t c = 0; c < layer.in; ++c) {
			if (below[c] <= 0.0) {
				ws.next_delta[c] = 0.0;
			}
		}
		std::swap(ws.delta, ws.next_delta);
	}
	return loss;
}

} // namespace

// ------------------------------------------------------------------ model

MlpModel::MlpModel(std::vector<std::size_t> dims)
	: dims_(std::move(dims))
{
	if (dims_.size() < 2) {
		throw UsageError("MLP needs at least input and output dimensions");
	}
	for (auto d : dims_) {
		if (d == 0) {
			throw UsageError("MLP layer dimensions must be >= 1");
		}
	}
	for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
		DenseLayer layer;
		layer.in = dims_[i];
		layer.out = dims_[i + 1];
		layer.weights.assign(layer.in * layer.out, 0.0);
		layer.biases.assign(layer.out, 0.0);
		layers_.push_back(std::move(layer));
	}
}

MlpModel MlpModel::he_uniform(std::vector<std::size_t> dims, RngStream& rng)
{
	MlpModel model(std::move(dims));
	for (auto& layer : model.layers_) {
		const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
		for (auto& w : layer.weights) {
			w = rng.uniform(-limit, limit);
		}
	}
	return model;
}

std::size_t MlpModel::parameter_count() const noexcept
{
	std::size_t count = 0;
	for (const auto& layer : layers_) {
		count += layer.weights.size() + layer.biases.size();
	}
	return count;
}

double MlpModel::parameter_norm() const noexcept
{
	double sum = 0.0;
	for (const auto& layer : layers_) {
		for (double w : layer.weights) {
			sum += w * w;
		}
		for (double b : layer.biases) {
			sum += b * b;
		}
	}
	return std::sqrt(sum);
}

bool MlpModel::all_finite() const noexcept
{
	for (const auto& layer : layers_) {
		for (double w : layer.weights) {
			if (!std::isfinite(w)) {
				return false;
			}
		}
		for (double b : layer.biases) {
			if (!std::isfinite(b)) {
				return false;
			}
		}
	}
	return true;
}

Gradient Gradient::zeros_like(const MlpModel& model)
{
	Gradient g;
	for (const auto& layer : model.layers()) {
		DenseLayer z;
		z.in = layer.in;
		z.out = layer.out;
		z.weights.assign(layer.weights.size(), 0.0);
		z.biases.assign(layer.biases.size(), 0.0);
		g.layers.push_back(std::move(z));
	}
	return g;
}

void Gradient::scale(double factor)
{
	for (auto& layer : layers) {
		for (auto& w : layer.weights) {
			w *= factor;
		}
		for (auto& b : layer.biases) {
			b *= factor;
		}
	}
}

void Gradient::add(const Gradient& other)
{
	for (std::size_t l = 0; l < layers.size(); ++l) {
		for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
			layers[l].weights[i] += other.layers[l].weights[i];
		}
		for (std::size_t i = 0; i < layers[l].biases.size(); ++i) {
			layers[l].biases[i] += other.layers[l].biases[i];
		}
	}
}

std::vector<double> forward(const MlpModel& model, std::span<const double> features)
{
	check_input(model, features.size());
	Workspace ws;
	run_forward(model, features, ws);
	return ws.act.back();
}

std::vector<double> forward(const MlpModel& model, const FeatureVector& features)
{
	return forward(model, std::span<const double>(features.values));
}

LossGradient backward(const MlpModel& model, std::span<const double> features, std::size_t label)
{
	LossGradient out;
	out.gradient = Gradient::zeros_like(model);
	Workspace ws;
	out.loss = backprop(model, features, label, ws, out.gradient);
	return out;
}

double accumulate_gradient(const MlpModel& model, std::span<const double> features, std::size_t label, Gradient& acc)
{
	thread_local Workspace ws;
	return backprop(model, features, label, ws, acc);
}

// ------------------------------------------------------------------- adam

AdamOptimizer::AdamOptimizer(const MlpModel& model, AdamConfig config)
	: config_(config)
	, m_(Gradient::zeros_like(model))
	, v_(Gradient::zeros_like(model))
{
}

void AdamOptimizer::step(MlpModel& model, const Gradient& grad)
{
	++t_;
	const double b1 = config_.beta1;
	const double b2 = config_.beta2;
	const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
	const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
	auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m,
					  std::vector<double>& v) {
		for (std::size_t i = 0; i < param.size(); ++i) {
			m[i] = b1 * m[i] + (1.0 - b1) * g[i];
			v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
			const double m_hat = m[i] / correction1;
			const double v_hat = v[i] / correction2;
			param[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
		}
	};
	auto& layers = model.layers();
	for (std::size_t l = 0; l < layers.size(); ++l) {
		update(layers[l].weights, grad.layers[l].weights, m_.layers[l].weights, v_.layers[l].weights);
		update(layers[l].biases, grad.layers[l].biases, m_.layers[l].biases, v_.layers[l].biases);
	}
}

// ------------------------------------------------------------------ train

void TrainConfig::check() const
{
	if (batch_size == 0) {
		throw ConfigError("train: batch_size must be >= 1");
	}
	if (!(adam.learning_rate > 0.0) || !(adam.beta1 > 0.0 && adam.beta1 < 1.0)
		|| !(adam.beta2 > 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
		throw ConfigError("train: Adam hyper-parameters must be positive (betas in (0, 1))");
	}
	if (time_budget_s < 0.0) {
		throw ConfigError("train: time budget must be >= 0");
	}
	for (auto h : hidden) {
		if (h == 0) {
			throw ConfigError("train: hidden layer widths must be >= 1");
		}
	}
}

TrainResult train(
	const Dataset& train_set,
	const Dataset& val_set,
	const SamplerConfig& sampler_config,
	const AugmentationSpec& spec,
	const TrainConfig& config)
{
	config.check();
	if (train_set.empty()) {
		throw ConfigError("train: training set is empty");
	}
	const std::size_t n = train_set.series_length();
	const std::size_t classes = train_set.num_classes();

	std::vector<std::size_t> dims = {3 * n};
	dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
	dims.push_back(classes);

	const RngStream root(config.seed);
	RngStream init_rng = root.child(kInitStreamId);
	RngStream data_rng = root.child(config.stream_id);

	TrainResult result;
	result.initial = MlpModel::he_uniform(dims, init_rng);
	result.model = result.initial;
	result.last = result.initial;

	SamplerConfig sc = sampler_config;
	sc.batch_size = config.batch_size;
	const Sampler sampler(train_set, sc);
	AdamOptimizer adam(result.last, config.adam);
	MlpModel& model = result.last;

	const auto started = std::chrono::steady_clock::now();
	double best_f1 = -1.0;
	Gradient grad = Gradient::zeros_like(model);

	for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
		double loss_sum = 0.0;
		std::size_t loss_count = 0;
		const std::size_t batches = sampler.batches_per_epoch();
		for (std::size_t b = 0; b < batches; ++b) {
			const Batch batch = sampler.make_batch(spec, data_rng);
			grad.scale(0.0);
			double batch_loss = 0.0;
			for (std::size_t i = 0; i < batch.size(); ++i) {
				const FeatureVector fv = preprocess(batch.samples[i], config.norm);
				batch_loss += accumulate_gradient(model, fv.values, batch.samples[i].label, grad);
			}
			if (!std::isfinite(batch_loss)) {
				throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch "
					+ std::to_string(b) + " (parameter norm " + format_double(model.parameter_norm()) + ")");
			}
			grad.scale(1.0 / static_cast<double>(batch.size()));
			adam.step(model, grad);
			loss_sum += batch_loss;
			loss_count += batch.size();

			if (config.time_budget_s > 0.0) {
				const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
				if (elapsed.count() > config.time_budget_s) {
					throw TrainingError("time budget of " + format_double(config.time_budget_s)
						+ " s exceeded at epoch " + std::to_string(epoch));
				}
			}
		}
		EpochStats stats;
		stats.train_loss = loss_sum / static_cast<double>(loss_count);
		stats.val_weighted_f1 = val_set.empty() ? 0.0 : evaluate(model, val_set, config.norm).weighted_f1;
		result.history.push_back(stats);
		if (stats.val_weighted_f1 > best_f1) {
			best_f1 = stats.val_weighted_f1;
			result.best_epoch = epoch;
			result.model = model;
		}
	}
	return result;
}

// --------------------------------------------------------------- evaluate

std::size_t predict(const MlpModel& model, const FlowSample& sample, const NormConfig& norm)
{
	const auto probs = forward(model, preprocess(sample, norm));
	return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

EvalReport evaluate_predictions(
	std::span<const std::size_t> truth,
	std::span<const std::size_t> predicted,
	std::size_t num_classes)
{
	if (truth.size() != predicted.size()) {
		throw UsageError("evaluate: truth and prediction counts differ");
	}
	EvalReport report;
	report.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
	report.per_class.assign(num_classes, ClassMetrics{});
	std::size_t correct = 0;
	for (std::size_t i = 0; i < truth.size(); ++i) {
		if (truth[i] >= num_classes || predicted[i] >= num_classes) {
			throw UsageError("evaluate: class index out of range");
		}
		++report.confusion[truth[i]][predicted[i]];
		correct += truth[i] == predicted[i] ? 1 : 0;
	}
	double weighted = 0.0;
	std::size_t total = 0;
	for (std::size_t c = 0; c < num_classes; ++c) {
		std::size_t predicted_c = 0;
		std::size_t support = 0;
		for (std::size_t r = 0; r < num_classes; ++r) {
			predicted_c += report.confusion[r][c];
			support += report.confusion[c][r];
		}
		const auto tp = static_cast<double>(report.confusion[c][c]);
		ClassMetrics& m = report.per_class[c];
		m.support = support;
		m.precision = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
		m.recall = support ? tp / static_cast<double>(support) : 0.0;
		m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
		weighted += static_cast<double>(support) * m.f1;
		total += support;
	}
	report.weighted_f1 = total ? weighted / static_cast<double>(total) : 0.0;
	report.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
	return report;
}

EvalReport evaluate(const MlpModel& model, const Dataset& test_set, const NormConfig& norm)
{
	std::vector<std::size_t> truth;
	std::vector<std::size_t> predicted;
	truth.reserve(test_set.size());
	predicted.reserve(test_set.size());
	for (const auto& s : test_set.samples) {
		truth.push_back(s.label);
		predicted.push_back(predict(model, s, norm));
	}
	return evaluate_predictions(truth, predicted, std::max(model.num_classes(), test_set.num_classes()));
}

// ------------------------------------------------------------- checkpoint

std::string checkpoint_text(const MlpModel& model)
{
	std::string out;
	out += std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
	out += "dims";
	for (auto d : model.dims()) {
		out += " " + std::to_string(d);
	}
	out += "\n";
	for (const auto& layer : model.layers()) {
		out += "w";
		for (double w : layer.weights) {
			out += " " + format_double(w);
		}
		out += "\nb";
		for (double b : layer.biases) {
			out += " " + format_double(b);
		}
		out += "\n";
	}
	return out;
}

MlpModel parse_checkpoint(const std::string& text)
{
	std::istringstream in(text);
	std::string line;
	std::size_t line_no = 0;
	auto next_line = [&](std::string_view tag) {
		if (!std::getline(in, line)) {
			throw LoadError(line_no + 1, "checkpoint truncated, expected '" + std::string(tag) + "'");
		}
		++line_no;
		auto fields = split(trim(line), ' ');
		if (fields.empty() || fields.front() != tag) {
			throw LoadError(line_no, "expected '" + std::string(tag) + "' record");
		}
		fields.erase(fields.begin());
		return std::vector<std::string>(fields.begin(), fields.end());
	};

	const auto header = next_line(kCheckpointMagic);
	if (header.size() != 1 || header[0] != std::to_string(kCheckpointVersion)) {
		throw LoadError(1, "unsupported checkpoint version");
	}
	std::vector<std::size_t> dims;
	for (const auto& f : next_line("dims")) {
		const auto v = parse_int(f);
		if (!v || *v <= 0) {
			throw LoadError(line_no, "bad dimension '" + f + "'");
		}
		dims.push_back(static_cast<std::size_t>(*v));
	}
	MlpModel model(dims);
	auto read_values = [&](std::string_view tag, std::vector<double>& dest) {
		const auto fields = next_line(tag);
		if (fields.size() != dest.size()) {
			throw LoadError(line_no, "expected " + std::to_string(dest.size()) + " values, got "
				+ std::to_string(fields.size()));
		}
		for (std::size_t i = 0; i < fields.size(); ++i) {
			const auto v = parse_double(fields[i]);
			if (!v || !std::isfinite(*v)) {
				throw LoadError(line_no, "bad parameter '" + fields[i] + "'");
			}
			dest[i] = *v;
		}
	};
	for (auto& layer : model.layers()) {
		read_values("w", layer.weights);
		read_values("b", layer.biases);
	}
	return model;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path)
{
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw IoError("cannot open '" + path.string() + "' for writing");
	}
	out << checkpoint_text(model);
	if (!out) {
		throw IoError("write to '" + path.string() + "' failed");
	}
}

MlpModel load_checkpoint(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw IoError("cannot open '" + path.string() + "'");
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	return parse_checkpoint(buf.str());
}

} // namespace flowaug
