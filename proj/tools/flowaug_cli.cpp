// flowaug command-line front end: augment, synth, train, bench, cdchart.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowaug/augment.hpp"
#include "flowaug/bench.hpp"
#include "flowaug/dataio.hpp"
#include "flowaug/errors.hpp"
#include "flowaug/model.hpp"
#include "flowaug/stats.hpp"
#include "flowaug/textfmt.hpp"

namespace fs = std::filesystem;
using namespace flowaug;

namespace {

struct Globals {
	std::uint64_t seed = 0;
	bool quiet = false;
	bool verbose = false;
};

Globals g;

void note(const std::string& msg)
{
	if (g.verbose) {
		std::cerr << msg << "\n";
	}
}

std::string valid_method_names()
{
	std::string out = "noaug, noaug_nosampler";
	for (auto k : kAllAugmentations) {
		out += ", " + std::string(kind_name(k));
	}
	return out;
}

// Method for `train`: preset name or augmentation spec, with an unknown kind
// reported together with the accepted names.
MethodSpec parse_method(const std::string& text)
{
	std::string_view value = trim(text);
	std::string_view kind = value.substr(0, value.find(':'));
	if (kind.substr(0, 10) == "nosampler+") {
		kind.remove_prefix(10);
	}
	if (!MethodSpec::preset(kind) && !parse_kind(kind) && kind != "identity") {
		throw ConfigError("unknown method '" + std::string(kind) + "'; valid names: " + valid_method_names());
	}
	return MethodSpec::parse(kind, value);
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
	std::string input;
	std::string output;
	std::string aug = "identity";
};

int cmd_augment(const AugmentArgs& a)
{
	const AugmentationSpec spec = AugmentationSpec::parse(a.aug);
	const Dataset ds = load_dataset(a.input);
	const RngStream root(g.seed);

	// CutMix partners: each class is shuffled once and every member pairs
	// with the next one in the shuffled cycle.
	std::vector<std::size_t> partner(ds.size());
	std::iota(partner.begin(), partner.end(), std::size_t{0});
	if (spec.kind == AugKind::cutmix) {
		RngStream pair_rng = root.child(0);
		std::vector<std::vector<std::size_t>> members(ds.num_classes());
		for (std::size_t i = 0; i < ds.size(); ++i) {
			members[ds.samples[i].label].push_back(i);
		}
		for (auto& m : members) {
			pair_rng.shuffle(std::span<std::size_t>(m));
			for (std::size_t j = 0; j < m.size(); ++j) {
				partner[m[j]] = m[(j + 1) % m.size()];
			}
		}
	}

	const RngStream aug_root = root.child(1);
	Dataset out;
	out.labels = ds.labels;
	out.samples.reserve(ds.size());
	for (std::size_t i = 0; i < ds.size(); ++i) {
		RngStream rng = aug_root.child(i);
		out.samples.push_back(apply(spec, ds.samples[i], rng, &ds.samples[partner[i]]));
	}
	out.recount();
	save_dataset(out, a.output);
	note("augment: wrote " + std::to_string(out.size()) + " samples with " + spec.to_string());
	return 0;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
	SynthConfig config;
	std::string output;
};

int cmd_synth(SynthArgs a)
{
	a.config.seed = g.seed;
	const Dataset ds = synthesize(a.config);
	save_dataset(ds, a.output);
	nlohmann::ordered_json j;
	j["output"] = a.output;
	j["samples"] = ds.size();
	auto counts = nlohmann::ordered_json::object();
	for (std::size_t c = 0; c < ds.num_classes(); ++c) {
		counts[ds.labels[c]] = ds.class_counts[c];
	}
	j["class_counts"] = counts;
	std::cout << j.dump(2) << "\n";
	return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
	std::string data;
	std::string method = "noaug";
	TrainConfig config;
	std::vector<double> split = {0.7, 0.15, 0.15};
	std::string checkpoint;
};

int cmd_train(TrainArgs a)
{
	const MethodSpec method = parse_method(a.method);
	method.augmentation.check();
	if (a.split.size() != 3) {
		throw ConfigError("--split needs three fractions");
	}
	a.config.seed = g.seed;
	a.config.stream_id = method_stream_id(method);
	a.config.check();
	const Dataset ds = load_dataset(a.data);
	const DatasetSplit parts = split_dataset(ds, {a.split[0], a.split[1], a.split[2]}, g.seed);
	SamplerConfig sampler;
	sampler.mode = method.sampler;
	sampler.batch_size = a.config.batch_size;
	const TrainResult result = train(parts.train, parts.val, sampler, method.augmentation, a.config);
	const EvalReport report = evaluate(result.model, parts.test, a.config.norm);
	if (!a.checkpoint.empty()) {
		save_checkpoint(result.model, a.checkpoint);
	}
	for (std::size_t e = 0; e < result.history.size(); ++e) {
		note("epoch " + std::to_string(e + 1) + ": train loss " + format_fixed(result.history[e].train_loss, 4)
			+ ", val weighted-F1 " + format_fixed(result.history[e].val_weighted_f1, 4));
	}

	nlohmann::ordered_json j;
	j["method"] = method.value_text();
	j["seed"] = g.seed;
	j["best_epoch"] = result.best_epoch;
	j["weighted_f1"] = report.weighted_f1;
	j["accuracy"] = report.accuracy;
	auto per_class = nlohmann::ordered_json::array();
	for (std::size_t c = 0; c < report.per_class.size(); ++c) {
		const auto& m = report.per_class[c];
		per_class.push_back({{"label", ds.labels[c]},
			{"precision", m.precision},
			{"recall", m.recall},
			{"f1", m.f1},
			{"support", m.support}});
	}
	j["per_class"] = per_class;
	j["confusion"] = report.confusion;
	std::cout << j.dump(2) << "\n";
	return 0;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
	std::string plan;
	std::size_t parallelism = 1;
	std::string output;
	std::string manifest;
	std::string journal;
};

int cmd_bench(const BenchArgs& a, const std::string& effective_config)
{
	const BenchPlan plan = BenchPlan::load(a.plan);
	const Dataset ds = plan.make_dataset();
	BenchOptions options;
	options.parallelism = a.parallelism;
	options.journal = fs::path(a.journal.empty() ? a.output + ".journal" : a.journal);
	if (!g.quiet) {
		options.log = [](const std::string& line) {
			if (g.verbose) {
				std::cerr << line << "\n";
			}
		};
	}
	const std::string started = utc_timestamp();
	const BenchOutcome outcome = run_bench(plan, ds, options);
	const std::string finished = utc_timestamp();

	write_text_file(a.output, outcome.csv_text());
	auto manifest = nlohmann::ordered_json::parse(manifest_json(plan, outcome, options, started, finished));
	manifest["cli_config"] = effective_config;
	write_text_file(a.manifest.empty() ? a.output + ".manifest.json" : a.manifest, manifest.dump(2) + "\n");

	nlohmann::ordered_json j;
	j["output"] = a.output;
	j["plan_hash"] = plan.hash();
	j["cells"] = outcome.methods.size() * outcome.seeds.size();
	j["cells_run"] = outcome.cells_run;
	j["cells_resumed"] = outcome.cells_resumed;
	j["failed"] = outcome.failures.size();
	std::cout << j.dump(2) << "\n";

	if (!outcome.complete()) {
		for (const auto& f : outcome.failures) {
			std::cerr << "error: cell " << f.method << " seed " << f.seed << " failed: " << f.message << "\n";
		}
		std::cerr << "error: " << outcome.failures.size() << " cell(s) failed; rerun the same command to retry them\n";
		return 1;
	}
	// A finished grid no longer needs its resume record.
	std::error_code ec;
	fs::remove(*options.journal, ec);
	return 0;
}

// ---------------------------------------------------------------- cdchart

struct CdArgs {
	std::string results;
	double alpha = 0.05;
	std::string svg;
	std::string json;
	std::string baseline;
	bool tie_correction = false;
};

int cmd_cdchart(const CdArgs& a)
{
	const RunResult runs = load_run_csv(a.results);
	const CdReport report = build_report(runs, a.alpha, a.tie_correction);
	const std::string text = report_json(report);
	if (!a.baseline.empty()
		&& std::find(runs.methods.begin(), runs.methods.end(), a.baseline) == runs.methods.end()) {
		throw ConfigError("--baseline '" + a.baseline + "' is not a method of " + a.results);
	}
	if (!a.json.empty()) {
		write_text_file(a.json, text);
	}
	if (!a.svg.empty()) {
		ChartOptions options;
		if (!a.baseline.empty()) {
			const auto it = std::find(runs.methods.begin(), runs.methods.end(), a.baseline);
			const auto means = runs.method_means();
			const double base = means[static_cast<std::size_t>(it - runs.methods.begin())];
			for (std::size_t m = 0; m < runs.methods.size(); ++m) {
				const double delta = 100.0 * (means[m] - base);
				options.annotations.push_back((delta >= 0 ? "+" : "") + format_fixed(delta, 2) + "%");
			}
		}
		write_cd_chart(report, a.svg, options);
	}
	if (report.p_value >= a.alpha) {
		note("cdchart: Friedman test does not reject equal ranks at alpha " + format_double(a.alpha));
	}
	std::cout << text;
	return 0;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Flow time-series augmentation toolkit"};
	app.set_version_flag("--version", version_text());
	app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
	app.require_subcommand(1);
	app.option_defaults()->always_capture_default();
	app.add_option("--seed", g.seed, "Seed for every randomized step");
	auto* quiet = app.add_flag("--quiet", g.quiet, "Suppress warnings");
	app.add_flag("--verbose", g.verbose, "Human-readable progress on standard error")->excludes(quiet);

	AugmentArgs aug;
	auto* c_aug = app.add_subcommand("augment", "Write one augmented sample per input sample");
	c_aug->add_option("-i,--input", aug.input, "Flow record file")->required();
	c_aug->add_option("-o,--output", aug.output, "Output flow record file")->required();
	c_aug->add_option("--aug", aug.aug,
		"kind[:key=value,...]; kinds: identity, gaussian_noise, spike_noise, gaussian_wrapup, sine_wrapup, "
		"constant_wrapup, bernoulli_mask, window_mask, interpolation, flip, packet_loss, translation, wrap, "
		"permutation, cutmix");

	SynthArgs syn;
	auto* c_syn = app.add_subcommand("synth", "Generate an imbalanced synthetic flow dataset");
	c_syn->add_option("-o,--output", syn.output, "Output flow record file")->required();
	c_syn->add_option("--classes", syn.config.classes, "Number of classes K");
	c_syn->add_option("--total", syn.config.total, "Total flows M");
	c_syn->add_option("--zipf", syn.config.zipf, "Class-size exponent z; class c gets (c+1)^-z");
	c_syn->add_option("--length", syn.config.length, "Series length N");
	c_syn->add_option("--size-spread", syn.config.size_spread, "Log-normal sigma of packet sizes");
	c_syn->add_option("--iat-spread", syn.config.iat_spread, "Log-normal sigma of inter-arrival times");

	TrainArgs tr;
	std::vector<std::size_t> hidden = tr.config.hidden;
	auto* c_tr = app.add_subcommand("train", "Train and evaluate one (method, seed) cell");
	c_tr->add_option("-d,--data", tr.data, "Flow record file")->required();
	c_tr->add_option("-m,--method", tr.method, "noaug, noaug_nosampler, or an augmentation spec");
	c_tr->add_option("--epochs", tr.config.epochs, "Training epochs");
	c_tr->add_option("--batch-size", tr.config.batch_size, "Sampler batch size B");
	c_tr->add_option("--lr", tr.config.adam.learning_rate, "Adam learning rate");
	c_tr->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
	c_tr->add_option("--split", tr.split, "train,val,test fractions")->delimiter(',')->expected(3);
	c_tr->add_option("--time-budget", tr.config.time_budget_s, "Seconds before training aborts (0 = off)");
	c_tr->add_option("--checkpoint", tr.checkpoint, "Save the best-epoch model here");

	BenchArgs be;
	auto* c_be = app.add_subcommand("bench", "Run a methods x seeds plan");
	c_be->add_option("-p,--plan", be.plan, "Plan file")->required();
	c_be->add_option("-j,--parallelism", be.parallelism, "Cells run concurrently")->check(CLI::PositiveNumber);
	c_be->add_option("-o,--output", be.output, "RunResult CSV")->required();
	c_be->add_option("--manifest", be.manifest, "Run manifest JSON (default <output>.manifest.json)");
	c_be->add_option("--journal", be.journal, "Resume record (default <output>.journal)");

	CdArgs cd;
	auto* c_cd = app.add_subcommand("cdchart", "Friedman/Nemenyi report and critical-difference chart");
	c_cd->add_option("-r,--results", cd.results, "RunResult CSV")->required();
	c_cd->add_option("--alpha", cd.alpha, "Significance level (0.05 or 0.10)");
	c_cd->add_option("--svg", cd.svg, "Write the chart here");
	c_cd->add_option("--json", cd.json, "Also write the report JSON here");
	c_cd->add_option("--baseline", cd.baseline, "Annotate labels with mean weighted-F1 change vs this method");
	c_cd->add_flag("--tie-correction", cd.tie_correction, "Apply the Friedman tie correction");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		return app.exit(e);
	}

	try {
		if (*c_aug) {
			return cmd_augment(aug);
		}
		if (*c_syn) {
			return cmd_synth(syn);
		}
		if (*c_tr) {
			tr.config.hidden = hidden;
			return cmd_train(tr);
		}
		if (*c_be) {
			return cmd_bench(be, app.config_to_str(true, false));
		}
		if (*c_cd) {
			return cmd_cdchart(cd);
		}
	} catch (const flowaug::Error& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 1;
}
