#include "flowaug/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

constexpr std::string_view kNoAug = "noaug";
constexpr std::string_view kNoAugNoSampler = "noaug_nosampler";
constexpr std::string_view kUniformPrefix = "nosampler+";
constexpr std::string_view kJournalMagic = "# flowaug-journal plan=";
constexpr std::string_view kCsvHeader = "method,seed,weighted_f1";
constexpr int kRunCsvFormatVersion = 1;
constexpr int kReportFormatVersion = 1;
constexpr int kCheckpointFormatVersion = 1;

bool valid_method_name(std::string_view name)
{
	if (name.empty()) {
		return false;
	}
	for (char c : name) {
		const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'
			|| c == '-' || c == '.' || c == '+';
		if (!ok) {
			return false;
		}
	}
	return true;
}

std::vector<std::int64_t> parse_seed_list(std::string_view text)
{
	std::vector<std::int64_t> seeds;
	for (auto item : split(text, ',')) {
		item = trim(item);
		if (item.empty()) {
			continue;
		}
		const auto dash = item.find('-', 1);
		if (dash == std::string_view::npos) {
			const auto v = parse_int(item);
			if (!v) {
				throw ConfigError("plan: bad seed '" + std::string(item) + "'");
			}
			seeds.push_back(*v);
			continue;
		}
		const auto lo = parse_int(item.substr(0, dash));
		const auto hi = parse_int(item.substr(dash + 1));
		if (!lo || !hi || *lo > *hi || *hi - *lo > 100000) {
			throw ConfigError("plan: bad seed range '" + std::string(item) + "'");
		}
		for (auto s = *lo; s <= *hi; ++s) {
			seeds.push_back(s);
		}
	}
	return seeds;
}

double plan_real(std::string_view key, std::string_view value)
{
	const auto v = parse_double(value);
	if (!v || !std::isfinite(*v)) {
		throw ConfigError("plan: bad number for " + std::string(key) + ": '" + std::string(value) + "'");
	}
	return *v;
}

std::size_t plan_count(std::string_view key, std::string_view value)
{
	const auto v = parse_int(value);
	if (!v || *v < 0) {
		throw ConfigError("plan: bad count for " + std::string(key) + ": '" + std::string(value) + "'");
	}
	return static_cast<std::size_t>(*v);
}

std::string join_counts(const std::vector<std::size_t>& values)
{
	std::string out;
	for (std::size_t i = 0; i < values.size(); ++i) {
		out += (i ? "," : "") + std::to_string(values[i]);
	}
	return out;
}

struct JournalState {
	std::map<std::pair<std::string, std::int64_t>, double> done;
	std::string valid_text;
};

JournalState read_journal(const std::filesystem::path& path, const std::string& plan_hash)
{
	JournalState state;
	const std::string text = read_text_file(path);
	const auto lines = split(text, '\n');
	// The last element is a partial line unless the text ends with '\n'.
	const std::size_t complete = lines.size() - 1;
	if (complete < 2 || trim(lines[0]) != std::string(kJournalMagic) + plan_hash) {
		const auto first = trim(lines[0]);
		if (complete >= 1 && first.substr(0, kJournalMagic.size()) == kJournalMagic
			&& first != std::string(kJournalMagic) + plan_hash) {
			throw ConfigError("journal '" + path.string() + "' belongs to a different plan");
		}
		// Empty or truncated before the header: start over.
		return state;
	}
	if (trim(lines[1]) != kCsvHeader) {
		throw LoadError(2, "journal '" + path.string() + "' lacks the CSV header");
	}
	state.valid_text = std::string(lines[0]) + "\n" + std::string(lines[1]) + "\n";
	for (std::size_t i = 2; i < complete; ++i) {
		const auto line = trim(lines[i]);
		if (line.empty()) {
			continue;
		}
		const auto fields = split(line, ',');
		if (fields.size() != 3) {
			throw LoadError(i + 1, "journal row must have 3 fields");
		}
		const auto seed = parse_int(fields[1]);
		if (!seed) {
			throw LoadError(i + 1, "journal row has a bad seed");
		}
		const std::string method(trim(fields[0]));
		const auto key = std::make_pair(method, *seed);
		if (trim(fields[2]) == "failed") {
			state.done.erase(key);
		} else {
			const auto v = parse_double(fields[2]);
			if (!v) {
				throw LoadError(i + 1, "journal row has a bad score");
			}
			state.done[key] = *v;
		}
		state.valid_text += std::string(line) + "\n";
	}
	return state;
}

} // namespace

// ------------------------------------------------------------- methods

std::optional<MethodSpec> MethodSpec::preset(std::string_view name)
{
	MethodSpec m;
	m.name = std::string(name);
	if (name == kNoAug) {
		m.sampler = SamplerMode::weighted;
		return m;
	}
	if (name == kNoAugNoSampler) {
		m.sampler = SamplerMode::uniform;
		return m;
	}
	return std::nullopt;
}

MethodSpec MethodSpec::parse(std::string_view name, std::string_view value)
{
	value = trim(value);
	if (auto p = preset(value)) {
		p->name = std::string(name);
		return *p;
	}
	MethodSpec m;
	m.name = std::string(name);
	if (value.substr(0, kUniformPrefix.size()) == kUniformPrefix) {
		m.sampler = SamplerMode::uniform;
		value.remove_prefix(kUniformPrefix.size());
	}
	m.augmentation = AugmentationSpec::parse(value);
	return m;
}

std::string MethodSpec::value_text() const
{
	if (augmentation.kind == AugKind::identity) {
		return std::string(sampler == SamplerMode::weighted ? kNoAug : kNoAugNoSampler);
	}
	const std::string spec = augmentation.to_string();
	return sampler == SamplerMode::uniform ? std::string(kUniformPrefix) + spec : spec;
}

std::uint64_t method_stream_id(const MethodSpec& method)
{
	return fnv1a64("method:" + method.name);
}

// ---------------------------------------------------------------- plan

void BenchPlan::check() const
{
	if (dataset_path.has_value() == synth.has_value()) {
		throw ConfigError("plan: give exactly one of 'dataset' or synth.* settings");
	}
	if (synth) {
		synth->check();
	}
	if (methods.size() < 2) {
		throw ConfigError("plan: at least 2 methods are required");
	}
	if (seeds.size() < 2) {
		throw ConfigError("plan: at least 2 seeds are required");
	}
	std::set<std::string> names;
	std::set<std::uint64_t> streams = {kInitStreamId};
	for (const auto& m : methods) {
		if (!valid_method_name(m.name)) {
			throw ConfigError("plan: method name '" + m.name + "' may only use letters, digits and _ - . +");
		}
		if (!names.insert(m.name).second) {
			throw ConfigError("plan: duplicate method name '" + m.name + "'");
		}
		if (!streams.insert(method_stream_id(m)).second) {
			throw ConfigError("plan: stream id of method '" + m.name + "' collides; rename it");
		}
		m.augmentation.check();
	}
	if (std::set<std::int64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
		throw ConfigError("plan: duplicate seeds");
	}
	const double f[3] = {fractions.train, fractions.val, fractions.test};
	if (!(f[0] > 0 && f[1] > 0 && f[2] > 0) || std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
		throw ConfigError("plan: split fractions must be positive and sum to 1");
	}
	train.check();
}

BenchPlan BenchPlan::parse(const std::string& text)
{
	BenchPlan plan;
	SynthConfig synth;
	bool any_synth = false;
	const auto lines = split(text, '\n');
	for (std::size_t i = 0; i < lines.size(); ++i) {
		std::string_view line = lines[i];
		if (const auto hash = line.find('#'); hash != std::string_view::npos) {
			line = line.substr(0, hash);
		}
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		const auto eq = line.find('=');
		if (eq == std::string_view::npos) {
			throw LoadError(i + 1, "expected 'key = value'");
		}
		const std::string key(trim(line.substr(0, eq)));
		const std::string_view value = trim(line.substr(eq + 1));
		try {
			if (key == "dataset") {
				plan.dataset_path = std::filesystem::path(std::string(value));
			} else if (key == "seeds") {
				const auto more = parse_seed_list(value);
				plan.seeds.insert(plan.seeds.end(), more.begin(), more.end());
			} else if (key == "method") {
				// bare kinds and presets are named after themselves
				const auto name = value.substr(0, value.find(':'));
				plan.methods.push_back(MethodSpec::parse(trim(name), value));
			} else if (key.rfind("method.", 0) == 0) {
				plan.methods.push_back(MethodSpec::parse(key.substr(7), value));
			} else if (key == "split") {
				const auto parts = split(value, ',');
				if (parts.size() != 3) {
					throw ConfigError("plan: split needs three fractions");
				}
				plan.fractions = {plan_real(key, parts[0]), plan_real(key, parts[1]), plan_real(key, parts[2])};
			} else if (key.rfind("synth.", 0) == 0) {
				any_synth = true;
				const std::string sub = key.substr(6);
				if (sub == "classes") {
					synth.classes = plan_count(key, value);
				} else if (sub == "total") {
					synth.total = plan_count(key, value);
				} else if (sub == "zipf") {
					synth.zipf = plan_real(key, value);
				} else if (sub == "length") {
					synth.length = plan_count(key, value);
				} else if (sub == "seed") {
					synth.seed = plan_count(key, value);
				} else if (sub == "size_spread") {
					synth.size_spread = plan_real(key, value);
				} else if (sub == "iat_spread") {
					synth.iat_spread = plan_real(key, value);
				} else {
					throw ConfigError("plan: unknown key '" + key + "'");
				}
			} else if (key.rfind("train.", 0) == 0) {
				const std::string sub = key.substr(6);
				TrainConfig& t = plan.train;
				if (sub == "epochs") {
					t.epochs = plan_count(key, value);
				} else if (sub == "batch_size") {
					t.batch_size = plan_count(key, value);
				} else if (sub == "lr") {
					t.adam.learning_rate = plan_real(key, value);
				} else if (sub == "beta1") {
					t.adam.beta1 = plan_real(key, value);
				} else if (sub == "beta2") {
					t.adam.beta2 = plan_real(key, value);
				} else if (sub == "epsilon") {
					t.adam.epsilon = plan_real(key, value);
				} else if (sub == "time_budget") {
					t.time_budget_s = plan_real(key, value);
				} else if (sub == "hidden") {
					t.hidden.clear();
					for (auto part : split(value, ',')) {
						t.hidden.push_back(plan_count(key, part));
					}
				} else {
					throw ConfigError("plan: unknown key '" + key + "'");
				}
			} else {
				throw ConfigError("plan: unknown key '" + key + "'");
			}
		} catch (const ConfigError& e) {
			throw LoadError(i + 1, e.what());
		}
	}
	if (any_synth) {
		plan.synth = synth;
	}
	plan.check();
	return plan;
}

BenchPlan BenchPlan::load(const std::filesystem::path& path)
{
	try {
		BenchPlan plan = parse(read_text_file(path));
		if (plan.dataset_path && plan.dataset_path->is_relative()) {
			plan.dataset_path = path.parent_path() / *plan.dataset_path;
		}
		return plan;
	} catch (const LoadError& e) {
		throw LoadError(path.string(), e.line(), e.detail());
	}
}

std::string BenchPlan::canonical_text() const
{
	std::string out;
	if (dataset_path) {
		out += "dataset = " + dataset_path->string() + "\n";
	}
	if (synth) {
		out += "synth.classes = " + std::to_string(synth->classes) + "\n";
		out += "synth.total = " + std::to_string(synth->total) + "\n";
		out += "synth.zipf = " + format_double(synth->zipf) + "\n";
		out += "synth.length = " + std::to_string(synth->length) + "\n";
		out += "synth.seed = " + std::to_string(synth->seed) + "\n";
		out += "synth.size_spread = " + format_double(synth->size_spread) + "\n";
		out += "synth.iat_spread = " + format_double(synth->iat_spread) + "\n";
	}
	out += "seeds = ";
	for (std::size_t i = 0; i < seeds.size(); ++i) {
		out += (i ? "," : "") + std::to_string(seeds[i]);
	}
	out += "\n";
	for (const auto& m : methods) {
		out += "method." + m.name + " = " + m.value_text() + "\n";
	}
	out += "split = " + format_double(fractions.train) + "," + format_double(fractions.val) + ","
		+ format_double(fractions.test) + "\n";
	out += "train.epochs = " + std::to_string(train.epochs) + "\n";
	out += "train.batch_size = " + std::to_string(train.batch_size) + "\n";
	out += "train.lr = " + format_double(train.adam.learning_rate) + "\n";
	out += "train.beta1 = " + format_double(train.adam.beta1) + "\n";
	out += "train.beta2 = " + format_double(train.adam.beta2) + "\n";
	out += "train.epsilon = " + format_double(train.adam.epsilon) + "\n";
	out += "train.hidden = " + join_counts(train.hidden) + "\n";
	out += "train.time_budget = " + format_double(train.time_budget_s) + "\n";
	return out;
}

std::string BenchPlan::hash() const
{
	char buf[17];
	std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text())));
	return buf;
}

Dataset BenchPlan::make_dataset() const
{
	if (dataset_path) {
		return load_dataset(*dataset_path);
	}
	if (synth) {
		return synthesize(*synth);
	}
	throw ConfigError("plan names no dataset");
}

// ----------------------------------------------------------------- run

double run_cell(const Dataset& dataset, const BenchPlan& plan, const MethodSpec& method, std::int64_t seed)
{
	const auto cell_seed = static_cast<std::uint64_t>(seed);
	const DatasetSplit parts = split_dataset(dataset, plan.fractions, cell_seed);
	TrainConfig config = plan.train;
	config.seed = cell_seed;
	config.stream_id = method_stream_id(method);
	SamplerConfig sampler;
	sampler.mode = method.sampler;
	sampler.batch_size = config.batch_size;
	const TrainResult result = train(parts.train, parts.val, sampler, method.augmentation, config);
	return evaluate(result.model, parts.test, config.norm).weighted_f1;
}

bool BenchOutcome::complete() const
{
	for (const auto& row : scores) {
		for (double v : row) {
			if (std::isnan(v)) {
				return false;
			}
		}
	}
	return failures.empty();
}

RunResult BenchOutcome::run_result() const
{
	if (!complete()) {
		throw UsageError("benchmark has failed or missing cells; rerun them before analysis");
	}
	RunResult r;
	r.methods = methods;
	r.seeds = seeds;
	r.scores = scores;
	return r;
}

std::string BenchOutcome::csv_text() const
{
	std::map<std::pair<std::size_t, std::size_t>, bool> failed;
	for (const auto& f : failures) {
		const auto m = std::find(methods.begin(), methods.end(), f.method) - methods.begin();
		const auto s = std::find(seeds.begin(), seeds.end(), f.seed) - seeds.begin();
		failed[{static_cast<std::size_t>(m), static_cast<std::size_t>(s)}] = true;
	}
	std::string out(kCsvHeader);
	out += "\n";
	for (std::size_t m = 0; m < methods.size(); ++m) {
		for (std::size_t s = 0; s < seeds.size(); ++s) {
			const double v = scores[s][m];
			if (!std::isnan(v)) {
				out += methods[m] + "," + std::to_string(seeds[s]) + "," + format_double(v) + "\n";
			} else if (failed.count({m, s})) {
				out += methods[m] + "," + std::to_string(seeds[s]) + ",failed\n";
			}
		}
	}
	return out;
}

BenchOutcome run_bench(const BenchPlan& plan, const Dataset& dataset, const BenchOptions& options)
{
	plan.check();
	const std::size_t k = plan.methods.size();
	const std::size_t num_seeds = plan.seeds.size();
	BenchOutcome outcome;
	for (const auto& m : plan.methods) {
		outcome.methods.push_back(m.name);
	}
	outcome.seeds = plan.seeds;
	outcome.scores.assign(num_seeds, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));

	const std::string plan_hash = plan.hash();
	std::ofstream journal;
	if (options.journal) {
		JournalState state;
		if (std::filesystem::exists(*options.journal)) {
			state = read_journal(*options.journal, plan_hash);
		}
		if (state.valid_text.empty()) {
			state.valid_text = std::string(kJournalMagic) + plan_hash + "\n" + std::string(kCsvHeader) + "\n";
		}
		// Rewrite without any torn trailing line, then append.
		write_text_file(*options.journal, state.valid_text);
		for (const auto& [key, value] : state.done) {
			const auto m = std::find(outcome.methods.begin(), outcome.methods.end(), key.first);
			const auto s = std::find(outcome.seeds.begin(), outcome.seeds.end(), key.second);
			if (m == outcome.methods.end() || s == outcome.seeds.end()) {
				continue;
			}
			outcome.scores[static_cast<std::size_t>(s - outcome.seeds.begin())]
						  [static_cast<std::size_t>(m - outcome.methods.begin())] = value;
			++outcome.cells_resumed;
		}
		journal.open(*options.journal, std::ios::binary | std::ios::app);
		if (!journal) {
			throw IoError("cannot append to journal '" + options.journal->string() + "'");
		}
	}

	std::vector<std::pair<std::size_t, std::size_t>> pending; // (seed row, method column)
	for (std::size_t s = 0; s < num_seeds; ++s) {
		for (std::size_t m = 0; m < k; ++m) {
			if (std::isnan(outcome.scores[s][m])) {
				pending.emplace_back(s, m);
			}
		}
	}

	std::atomic<std::size_t> next{0};
	std::atomic<std::size_t> finished{0};
	std::mutex mutex;
	auto worker = [&] {
		while (true) {
			if (options.stop_after && finished.load() >= options.stop_after) {
				return;
			}
			const std::size_t i = next.fetch_add(1);
			if (i >= pending.size()) {
				return;
			}
			const auto [s, m] = pending[i];
			const MethodSpec& method = plan.methods[m];
			const std::int64_t seed = plan.seeds[s];
			double score = std::numeric_limits<double>::quiet_NaN();
			std::string error;
			try {
				score = run_cell(dataset, plan, method, seed);
			} catch (const std::exception& e) {
				error = e.what();
			}
			std::lock_guard lock(mutex);
			std::string row = method.name + "," + std::to_string(seed) + ",";
			if (error.empty()) {
				outcome.scores[s][m] = score;
				row += format_double(score);
			} else {
				outcome.failures.push_back({method.name, seed, error});
				row += "failed";
			}
			if (journal.is_open()) {
				journal << row << "\n";
				journal.flush();
			}
			++outcome.cells_run;
			++finished;
			if (options.log) {
				options.log("cell " + method.name + " seed " + std::to_string(seed) + ": "
					+ (error.empty() ? "weighted_f1 " + format_fixed(score, 4) : "FAILED: " + error));
			}
		}
	};

	const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallelism, pending.size()));
	if (threads == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (std::size_t t = 0; t < threads; ++t) {
			pool.emplace_back(worker);
		}
		for (auto& th : pool) {
			th.join();
		}
	}
	// Failures in plan order regardless of scheduling.
	std::sort(outcome.failures.begin(), outcome.failures.end(), [&](const CellFailure& a, const CellFailure& b) {
		const auto ma = std::find(outcome.methods.begin(), outcome.methods.end(), a.method);
		const auto mb = std::find(outcome.methods.begin(), outcome.methods.end(), b.method);
		return std::make_pair(ma, a.seed) < std::make_pair(mb, b.seed);
	});
	return outcome;
}

std::string utc_timestamp()
{
	const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
	std::tm tm{};
	gmtime_r(&now, &tm);
	char buf[32];
	std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
	return buf;
}

std::string version_text()
{
	return "flowaug " + std::string(kToolkitVersion) + " (dataset format " + std::to_string(kDatasetFormatVersion)
		+ ", run csv " + std::to_string(kRunCsvFormatVersion) + ", report json " + std::to_string(kReportFormatVersion)
		+ ", checkpoint " + std::to_string(kCheckpointFormatVersion) + ")";
}

std::string manifest_json(
	const BenchPlan& plan,
	const BenchOutcome& outcome,
	const BenchOptions& options,
	const std::string& started_at,
	const std::string& finished_at)
{
	nlohmann::ordered_json j;
	j["toolkit_version"] = std::string(kToolkitVersion);
	j["format_versions"] = {
		{"dataset", kDatasetFormatVersion},
		{"run_csv", kRunCsvFormatVersion},
		{"report_json", kReportFormatVersion},
		{"checkpoint", kCheckpointFormatVersion},
	};
	j["plan_hash"] = plan.hash();
	j["plan"] = plan.canonical_text();
	j["parallelism"] = options.parallelism;
	j["started_at"] = started_at;
	j["finished_at"] = finished_at;
	j["cells_total"] = outcome.methods.size() * outcome.seeds.size();
	j["cells_resumed"] = outcome.cells_resumed;
	j["cells_run"] = outcome.cells_run;
	j["complete"] = outcome.complete();
	auto failures = nlohmann::ordered_json::array();
	for (const auto& f : outcome.failures) {
		failures.push_back({{"method", f.method}, {"seed", f.seed}, {"error", f.message}});
	}
	j["failures"] = failures;
	return j.dump(2) + "\n";
}

} // namespace flowaug
