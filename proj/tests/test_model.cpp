#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowaug/errors.hpp"
#include "flowaug/model.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace flowaug;

namespace {

// Two well separated classes: small upstream packets vs large downstream ones.
Dataset blobs(std::size_t per_class, std::uint64_t seed)
{
	RngStream rng(seed);
	Dataset ds;
	ds.labels = {"small-up", "large-down"};
	for (std::size_t i = 0; i < 2 * per_class; ++i) {
		const std::size_t label = i % 2;
		FlowSample s = FlowSample::zeros(8, label);
		s.valid_len = static_cast<std::size_t>(rng.uniform_int(4, 8));
		for (std::size_t t = 0; t < s.valid_len; ++t) {
			s.sizes[t] = label == 0 ? rng.uniform_int(100, 300) : rng.uniform_int(1000, 1400);
			s.dirs[t] = label == 0 ? 1 : -1;
			s.iats[t] = t == 0 ? 0.0 : rng.uniform(0.001, 0.01);
		}
		ds.samples.push_back(s);
	}
	ds.recount();
	return ds;
}

MlpModel hand_model()
{
	MlpModel m({2, 2});
	auto& l = m.layers()[0];
	l.weights = {1.0, 2.0, 3.0, 4.0};
	l.biases = {0.5, -0.5};
	return m;
}

} // namespace

TEST_CASE("zero-initialized model predicts uniformly")
{
	MlpModel m({6, 4, 3, 5});
	const std::vector<double> x = {0.1, -2, 3, 0.5, 0, 1};
	for (double p : forward(m, x)) {
		CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
	}
	CHECK(backward(m, x, 2).loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("hand-built single layer softmax")
{
	// z = [1 - 2 + 0.5, 3 - 4 - 0.5] = [-0.5, -1.5]; p0 = 1 / (1 + e^-1)
	const auto p = forward(hand_model(), std::vector<double>{1.0, -1.0});
	CHECK(p[0] == doctest::Approx(0.7310585786300049).epsilon(1e-15));
	CHECK(p[1] == doctest::Approx(0.2689414213699951).epsilon(1e-15));
	// dL/dz = p - onehot; dL/dW = (p - y) x^T
	const auto g = backward(hand_model(), std::vector<double>{1.0, -1.0}, 1);
	CHECK(g.loss == doctest::Approx(-std::log(0.2689414213699951)).epsilon(1e-14));
	const auto& gw = g.gradient.layers[0].weights;
	CHECK(gw[0] == doctest::Approx(0.7310585786300049));
	CHECK(gw[1] == doctest::Approx(-0.7310585786300049));
	CHECK(gw[2] == doctest::Approx(-0.7310585786300049));
	CHECK(gw[3] == doctest::Approx(0.7310585786300049));
	CHECK(g.gradient.layers[0].biases[1] == doctest::Approx(-0.7310585786300049));
}

TEST_CASE("probabilities are normalized")
{
	RngStream rng(3);
	for (int i = 0; i < 200; ++i) {
		auto m = MlpModel::he_uniform({9, 7, 4}, rng);
		std::vector<double> x(9);
		for (auto& v : x) {
			v = rng.uniform(-5, 5);
		}
		const auto p = forward(m, x);
		double sum = 0.0;
		for (double v : p) {
			CHECK(v >= 0.0);
			sum += v;
		}
		CHECK(std::abs(sum - 1.0) < 1e-9);
	}
}

TEST_CASE("dimension and label errors")
{
	MlpModel m({3, 2});
	CHECK_THROWS_AS(forward(m, std::vector<double>{1, 2}), UsageError);
	CHECK_THROWS_AS(backward(m, std::vector<double>{1, 2, 3}, 2), UsageError);
}

TEST_CASE("gradients agree with central finite differences")
{
	const auto r = testsupport::gradient_check(42, 100);
	INFO(r.first_failure);
	CHECK(r.pairs == 100);
	CHECK(r.mismatches == 0);
	CHECK(r.parameters > 1000);
}

TEST_CASE("saturated input: unused output unit still matches finite differences")
{
	// One-hot style input with a very confident prediction.
	MlpModel m({3, 3});
	m.layers()[0].weights = {12, 0, 0, 0, 0.5, 0, 0, 0, 0.25};
	const std::vector<double> x = {1.0, 0.0, 0.0};
	const auto g = backward(m, x, 0);
	const double h = 1e-5;
	for (std::size_t i = 0; i < 9; ++i) {
		auto up = m;
		auto down = m;
		up.layers()[0].weights[i] += h;
		down.layers()[0].weights[i] -= h;
		const double numeric = (testsupport::ce_loss(up, x, 0) - testsupport::ce_loss(down, x, 0)) / (2 * h);
		CHECK(g.gradient.layers[0].weights[i] == doctest::Approx(numeric).epsilon(1e-4).scale(1e-3));
	}
}

TEST_CASE("batch gradient is the sum of sample gradients")
{
	RngStream rng(8);
	auto m = MlpModel::he_uniform({4, 5, 3}, rng);
	std::vector<std::vector<double>> xs(3, std::vector<double>(4));
	for (auto& x : xs) {
		for (auto& v : x) {
			v = rng.uniform(-1, 1);
		}
	}
	Gradient acc = Gradient::zeros_like(m);
	double loss = 0.0;
	Gradient expected = Gradient::zeros_like(m);
	double expected_loss = 0.0;
	for (std::size_t i = 0; i < 3; ++i) {
		loss += accumulate_gradient(m, xs[i], i, acc);
		const auto single = backward(m, xs[i], i);
		expected.add(single.gradient);
		expected_loss += single.loss;
	}
	CHECK(loss == doctest::Approx(expected_loss).epsilon(1e-14));
	for (std::size_t l = 0; l < 2; ++l) {
		for (std::size_t i = 0; i < acc.layers[l].weights.size(); ++i) {
			CHECK(acc.layers[l].weights[i] == doctest::Approx(expected.layers[l].weights[i]).epsilon(1e-13));
		}
	}
}

TEST_CASE("first Adam step moves each parameter by about lr against its gradient")
{
	MlpModel m({2, 2});
	Gradient g = Gradient::zeros_like(m);
	g.layers[0].weights = {0.5, -2.0, 0.0, 1e-3};
	AdamOptimizer adam(m, {});
	adam.step(m, g);
	// m_hat = g, v_hat = g^2 after bias correction: step = lr * g / (|g| + eps)
	const auto& w = m.layers()[0].weights;
	CHECK(w[0] == doctest::Approx(-1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
	CHECK(w[1] == doctest::Approx(1e-3 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
	CHECK(w[2] == 0.0);
	CHECK(w[3] == doctest::Approx(-1e-3 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));
	CHECK(adam.steps() == 1);
}

TEST_CASE("He-uniform initialization bounds")
{
	RngStream rng(1);
	const auto m = MlpModel::he_uniform({60, 64, 32, 10}, rng);
	CHECK(m.parameter_count() == 60 * 64 + 64 + 64 * 32 + 32 + 32 * 10 + 10);
	for (const auto& l : m.layers()) {
		const double bound = std::sqrt(6.0 / static_cast<double>(l.in));
		for (double w : l.weights) {
			CHECK(std::abs(w) <= bound);
		}
		for (double b : l.biases) {
			CHECK(b == 0.0);
		}
	}
}

TEST_CASE("training separates blob classes")
{
	const auto train_set = blobs(200, 1);
	const auto val_set = blobs(50, 2);
	const auto test_set = blobs(50, 3);
	TrainConfig cfg;
	cfg.epochs = 20;
	cfg.seed = 5;
	const auto result = train(train_set, val_set, {}, AugmentationSpec{}, cfg);
	REQUIRE(result.history.size() == 20);
	CHECK(result.history[result.best_epoch - 1].val_weighted_f1 >= 0.95);
	CHECK(evaluate(result.model, test_set).weighted_f1 >= 0.95);

	// Mean train loss of the last quarter is below the first quarter's.
	double first = 0.0;
	double last = 0.0;
	for (std::size_t e = 0; e < 5; ++e) {
		first += result.history[e].train_loss;
		last += result.history[15 + e].train_loss;
	}
	CHECK(last < first);
}

TEST_CASE("training is deterministic per seed")
{
	const auto train_set = blobs(40, 1);
	const auto val_set = blobs(10, 2);
	TrainConfig cfg;
	cfg.epochs = 3;
	cfg.seed = 9;
	const auto spec = AugmentationSpec::parse("gaussian_noise");
	const auto a = train(train_set, val_set, {}, spec, cfg);
	const auto b = train(train_set, val_set, {}, spec, cfg);
	CHECK(a.history == b.history);
	CHECK(a.model == b.model);
	cfg.seed = 10;
	const auto c = train(train_set, val_set, {}, spec, cfg);
	CHECK_FALSE(c.history == a.history);
}

TEST_CASE("zero epochs keep the initialization")
{
	const auto train_set = blobs(10, 1);
	TrainConfig cfg;
	cfg.epochs = 0;
	const auto r = train(train_set, train_set, {}, AugmentationSpec{}, cfg);
	CHECK(r.history.empty());
	CHECK(r.best_epoch == 0);
	CHECK(r.model == r.initial);
	CHECK(r.last == r.initial);
}

TEST_CASE("best validation epoch is kept")
{
	const auto train_set = blobs(40, 1);
	const auto val_set = blobs(10, 2);
	TrainConfig cfg;
	cfg.epochs = 6;
	const auto r = train(train_set, val_set, {}, AugmentationSpec{}, cfg);
	double best = -1.0;
	std::size_t best_epoch = 0;
	for (std::size_t e = 0; e < r.history.size(); ++e) {
		if (r.history[e].val_weighted_f1 > best) {
			best = r.history[e].val_weighted_f1;
			best_epoch = e + 1;
		}
	}
	CHECK(r.best_epoch == best_epoch);
	CHECK(evaluate(r.model, val_set).weighted_f1 == best);
}

TEST_CASE("training aborts on divergence or an exhausted budget")
{
	const auto train_set = blobs(20, 1);
	TrainConfig cfg;
	cfg.epochs = 5;
	cfg.adam.learning_rate = 1e300;
	CHECK_THROWS_AS(train(train_set, train_set, {}, AugmentationSpec{}, cfg), TrainingError);

	TrainConfig slow;
	slow.epochs = 50;
	slow.time_budget_s = 1e-9;
	CHECK_THROWS_AS(train(train_set, train_set, {}, AugmentationSpec{}, slow), TrainingError);

	TrainConfig bad;
	bad.batch_size = 0;
	CHECK_THROWS_AS(train(train_set, train_set, {}, AugmentationSpec{}, bad), ConfigError);
}

TEST_CASE("weighted F1 from predictions")
{
	SUBCASE("perfect predictor")
	{
		const std::vector<std::size_t> y = {0, 1, 2, 1, 0};
		const auto r = evaluate_predictions(y, y, 3);
		CHECK(r.weighted_f1 == 1.0);
		CHECK(r.accuracy == 1.0);
	}
	SUBCASE("constant predictor on a balanced two-class set")
	{
		const std::vector<std::size_t> y = {0, 1, 0, 1, 0, 1};
		const std::vector<std::size_t> p(6, 0);
		const auto r = evaluate_predictions(y, p, 2);
		// F1_0 = 2 * 0.5 * 1 / 1.5 = 2/3, F1_1 = 0
		CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
		CHECK(r.per_class[1].f1 == 0.0);
		CHECK(r.weighted_f1 == doctest::Approx(1.0 / 3.0));
	}
	SUBCASE("direct formula on a random confusion")
	{
		RngStream rng(6);
		for (int trial = 0; trial < 50; ++trial) {
			std::vector<std::size_t> y, p;
			for (int i = 0; i < 40; ++i) {
				y.push_back(static_cast<std::size_t>(rng.uniform_int(0, 3)));
				p.push_back(static_cast<std::size_t>(rng.uniform_int(0, 3)));
			}
			const auto r = evaluate_predictions(y, p, 4);
			double num = 0.0;
			std::size_t correct = 0;
			for (std::size_t c = 0; c < 4; ++c) {
				double tp = 0, fp = 0, fn = 0;
				for (std::size_t i = 0; i < y.size(); ++i) {
					tp += y[i] == c && p[i] == c;
					fp += y[i] != c && p[i] == c;
					fn += y[i] == c && p[i] != c;
				}
				const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
				num += (tp + fn) * f1;
			}
			for (std::size_t i = 0; i < y.size(); ++i) {
				correct += y[i] == p[i];
			}
			CHECK(r.weighted_f1 == doctest::Approx(num / 40.0).epsilon(1e-12));
			std::size_t trace = 0;
			for (std::size_t c = 0; c < 4; ++c) {
				trace += r.confusion[c][c];
				std::size_t row = 0;
				for (auto v : r.confusion[c]) {
					row += v;
				}
				CHECK(row == r.per_class[c].support);
			}
			CHECK(trace == correct);
		}
	}
	SUBCASE("absent classes carry zero weight")
	{
		const std::vector<std::size_t> y = {0, 0, 1};
		const std::vector<std::size_t> p = {0, 0, 2};
		const auto r = evaluate_predictions(y, p, 3);
		CHECK(r.per_class[2].support == 0);
		CHECK(r.per_class[2].f1 == 0.0);
		CHECK(r.weighted_f1 == doctest::Approx(2.0 / 3.0));
	}
}

TEST_CASE("evaluate is invariant under test-set shuffling")
{
	RngStream rng(2);
	const auto m = MlpModel::he_uniform({24, 8, 2}, rng);
	auto ds = blobs(30, 4);
	const auto before = evaluate(m, ds);
	rng.shuffle(std::span<FlowSample>(ds.samples));
	const auto after = evaluate(m, ds);
	CHECK(before.weighted_f1 == after.weighted_f1);
	CHECK(before.confusion == after.confusion);
}

TEST_CASE("checkpoint round-trips bit-exactly")
{
	RngStream rng(12);
	const auto m = MlpModel::he_uniform({60, 64, 32, 10}, rng);
	const auto text = checkpoint_text(m);
	CHECK(text.rfind("flowaug-mlp 1\ndims 60 64 32 10\n", 0) == 0);
	CHECK(parse_checkpoint(text) == m);
	const auto dir = testsupport::temp_dir("ckpt");
	save_checkpoint(m, dir / "m.txt");
	CHECK(load_checkpoint(dir / "m.txt") == m);
	CHECK_THROWS(parse_checkpoint("flowaug-mlp 2\ndims 2 2\n"));
	CHECK_THROWS(parse_checkpoint("nonsense"));
	CHECK_THROWS(parse_checkpoint(text.substr(0, text.size() / 2)));
	std::filesystem::remove_all(dir);
}
