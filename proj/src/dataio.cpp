#include "flowaug/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "flowaug/rng.hpp"
#include "flowaug/textfmt.hpp"

namespace flowaug {

namespace {

constexpr std::uint64_t kSplitSalt = 0x5b1d5eedULL;
constexpr std::int64_t kMaxPacketSize = 1500;

template<typename T>
std::string join_numbers(const std::vector<T>& values)
{
	std::string out = "[";
	for (std::size_t i = 0; i < values.size(); ++i) {
		if (i) {
			out += ",";
		}
		if constexpr (std::is_floating_point_v<T>) {
			out += format_double(values[i]);
		} else {
			out += std::to_string(static_cast<std::int64_t>(values[i]));
		}
	}
	return out + "]";
}

std::string json_string(const std::string& s)
{
	return nlohmann::json(s).dump();
}

FlowSample parse_record(const nlohmann::json& j, std::size_t line_no)
{
	if (!j.is_object()) {
		throw LoadError(line_no, "record must be a JSON object");
	}
	static const std::array<std::string_view, 5> fields = {"label", "valid_len", "sizes", "dirs", "iats"};
	for (auto it = j.begin(); it != j.end(); ++it) {
		if (std::find(fields.begin(), fields.end(), it.key()) == fields.end()) {
			throw LoadError(line_no, "unknown field '" + it.key() + "'");
		}
	}
	for (auto f : fields) {
		if (!j.contains(std::string(f))) {
			throw LoadError(line_no, "missing field '" + std::string(f) + "'");
		}
	}
	const auto& sizes = j.at("sizes");
	const auto& dirs = j.at("dirs");
	const auto& iats = j.at("iats");
	if (!sizes.is_array() || !dirs.is_array() || !iats.is_array()) {
		throw LoadError(line_no, "sizes, dirs and iats must be arrays");
	}
	if (!j.at("label").is_string()) {
		throw LoadError(line_no, "label must be a string");
	}
	if (!j.at("valid_len").is_number_integer()) {
		throw LoadError(line_no, "valid_len must be an integer");
	}
	FlowSample s;
	for (const auto& v : sizes) {
		if (!v.is_number_integer()) {
			throw LoadError(line_no, "sizes must hold integers");
		}
		s.sizes.push_back(v.get<std::int64_t>());
	}
	for (const auto& v : dirs) {
		if (!v.is_number_integer()) {
			throw LoadError(line_no, "dirs must hold integers");
		}
		const auto d = v.get<std::int64_t>();
		if (d < -1 || d > 1) {
			throw LoadError(line_no, "dirs values must be -1, 0 or +1");
		}
		s.dirs.push_back(static_cast<std::int8_t>(d));
	}
	for (const auto& v : iats) {
		if (!v.is_number()) {
			throw LoadError(line_no, "iats must hold numbers");
		}
		s.iats.push_back(v.get<double>());
	}
	const auto len = j.at("valid_len").get<std::int64_t>();
	if (len < 0) {
		throw LoadError(line_no, "valid_len must be >= 1");
	}
	s.valid_len = static_cast<std::size_t>(len);
	return s;
}

} // namespace

// ------------------------------------------------------------ file format

std::string record_line(const FlowSample& sample, const std::string& label)
{
	return "{\"label\":" + json_string(label) + ",\"valid_len\":" + std::to_string(sample.valid_len)
		+ ",\"sizes\":" + join_numbers(sample.sizes) + ",\"dirs\":" + join_numbers(sample.dirs)
		+ ",\"iats\":" + join_numbers(sample.iats) + "}";
}

std::string dataset_text(const Dataset& dataset)
{
	std::string out;
	for (const auto& s : dataset.samples) {
		if (s.label >= dataset.labels.size()) {
			throw UsageError("save: sample label outside vocabulary");
		}
		out += record_line(s, dataset.labels[s.label]);
		out += "\n";
	}
	return out;
}

Dataset parse_dataset(const std::string& text)
{
	Dataset ds;
	std::map<std::string, std::size_t> label_index;
	const auto lines = split(text, '\n');
	std::size_t n = 0;
	for (std::size_t i = 0; i < lines.size(); ++i) {
		const std::size_t line_no = i + 1;
		const auto line = trim(lines[i]);
		if (line.empty()) {
			continue;
		}
		nlohmann::json j;
		try {
			j = nlohmann::json::parse(line);
		} catch (const nlohmann::json::parse_error& e) {
			throw LoadError(line_no, std::string("malformed JSON: ") + e.what());
		}
		FlowSample s = parse_record(j, line_no);
		if (ds.samples.empty()) {
			n = s.sizes.size();
		} else if (s.sizes.size() != n) {
			throw LoadError(line_no, "series length " + std::to_string(s.sizes.size()) + " differs from the file's N = "
				+ std::to_string(n));
		}
		const auto violations = validate(s, Strictness::relaxed);
		if (!violations.empty()) {
			throw LoadError(line_no, "invalid sample: " + violations.front().to_string());
		}
		const auto label = j.at("label").get<std::string>();
		const auto [it, inserted] = label_index.try_emplace(label, ds.labels.size());
		if (inserted) {
			ds.labels.push_back(label);
		}
		s.label = it->second;
		ds.samples.push_back(std::move(s));
	}
	if (ds.samples.empty()) {
		throw LoadError(0, "dataset file contains no records");
	}
	ds.recount();
	return ds;
}

Dataset load_dataset(const std::filesystem::path& path)
{
	try {
		return parse_dataset(read_text_file(path));
	} catch (const LoadError& e) {
		throw LoadError(path.string(), e.line(), e.detail());
	}
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path)
{
	write_text_file(path, dataset_text(dataset));
}

// ------------------------------------------------------------ apportion

std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights)
{
	const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
	if (weights.empty() || !(sum > 0.0)) {
		throw UsageError("apportion: weights must have a positive sum");
	}
	std::vector<std::size_t> counts(weights.size(), 0);
	std::vector<double> remainder(weights.size(), 0.0);
	std::size_t assigned = 0;
	for (std::size_t i = 0; i < weights.size(); ++i) {
		if (weights[i] < 0.0) {
			throw UsageError("apportion: weights must be >= 0");
		}
		// Remainders are kept as numerators over sum so equal fractions compare
		// equal (exact for integer weights).
		const double scaled = static_cast<double>(total) * weights[i];
		counts[i] = static_cast<std::size_t>(std::floor(scaled / sum));
		remainder[i] = scaled - static_cast<double>(counts[i]) * sum;
		if (remainder[i] >= sum) {
			++counts[i];
			remainder[i] -= sum;
		}
		assigned += counts[i];
	}
	std::vector<std::size_t> order(weights.size());
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
	for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
		++counts[order[i % order.size()]];
	}
	return counts;
}

// ---------------------------------------------------------------- split

DatasetSplit split_dataset(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed)
{
	const std::array<double, 3> parts = {fractions.train, fractions.val, fractions.test};
	for (double f : parts) {
		if (!(f > 0.0)) {
			throw SplitError("split fractions must all be > 0");
		}
	}
	if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9) {
		throw SplitError("split fractions must sum to 1");
	}

	std::vector<std::vector<std::size_t>> members(dataset.num_classes());
	for (std::size_t i = 0; i < dataset.size(); ++i) {
		members.at(dataset.samples[i].label).push_back(i);
	}
	const RngStream root(mix64(seed ^ kSplitSalt));
	std::array<std::vector<std::size_t>, 3> chosen;
	for (std::size_t c = 0; c < members.size(); ++c) {
		auto& idx = members[c];
		if (idx.size() < 3) {
			throw SplitError("class '" + dataset.labels[c] + "' has " + std::to_string(idx.size())
				+ " samples; at least 3 are needed to split");
		}
		RngStream rng = root.child(c);
		rng.shuffle(std::span<std::size_t>(idx));
		const auto counts = apportion(idx.size(), parts);
		std::size_t pos = 0;
		for (std::size_t p = 0; p < 3; ++p) {
			for (std::size_t i = 0; i < counts[p]; ++i) {
				chosen[p].push_back(idx[pos++]);
			}
		}
	}

	DatasetSplit out;
	std::array<Dataset*, 3> targets = {&out.train, &out.val, &out.test};
	for (std::size_t p = 0; p < 3; ++p) {
		std::sort(chosen[p].begin(), chosen[p].end());
		targets[p]->labels = dataset.labels;
		for (auto i : chosen[p]) {
			targets[p]->samples.push_back(dataset.samples[i]);
		}
		targets[p]->recount();
	}
	return out;
}

// ----------------------------------------------------------- synthesize

void SynthConfig::check() const
{
	if (classes < 2) {
		throw ConfigError("synth: need at least 2 classes");
	}
	if (total < classes * 10) {
		throw ConfigError("synth: total flows must be >= 10 per class");
	}
	if (!(zipf >= 0.0) || !std::isfinite(zipf)) {
		throw ConfigError("synth: zipf exponent must be >= 0");
	}
	if (length < 2) {
		throw ConfigError("synth: series length must be >= 2");
	}
	if (!(size_spread >= 0.0) || !(iat_spread >= 0.0)) {
		throw ConfigError("synth: spreads must be >= 0");
	}
}

std::vector<std::size_t> synth_class_counts(const SynthConfig& config)
{
	config.check();
	std::vector<double> weights(config.classes);
	for (std::size_t c = 0; c < config.classes; ++c) {
		weights[c] = std::pow(static_cast<double>(c + 1), -config.zipf);
	}
	return apportion(config.total, weights);
}

Dataset synthesize(const SynthConfig& config)
{
	const auto counts = synth_class_counts(config);
	const std::size_t n = config.length;
	const RngStream root(config.seed);

	struct ClassParams {
		double up_size;
		double down_size;
		double iat_log_mean;
		double p_first_up;
		double p_stay;
	};
	RngStream param_rng = root.child(0);
	std::vector<ClassParams> params(config.classes);
	for (auto& p : params) {
		p.up_size = std::exp(param_rng.uniform(std::log(60.0), std::log(1400.0)));
		p.down_size = std::exp(param_rng.uniform(std::log(60.0), std::log(1460.0)));
		p.iat_log_mean = param_rng.uniform(std::log(1e-4), std::log(0.5));
		p.p_first_up = param_rng.uniform(0.2, 0.8);
		p.p_stay = param_rng.uniform(0.3, 0.9);
	}

	Dataset ds;
	const std::size_t min_len = std::max<std::size_t>(2, n / 2);
	for (std::size_t c = 0; c < config.classes; ++c) {
		ds.labels.push_back("class" + std::to_string(c));
		const ClassParams& p = params[c];
		RngStream rng = root.child(c + 1);
		for (std::size_t f = 0; f < counts[c]; ++f) {
			FlowSample s = FlowSample::zeros(n, c);
			s.valid_len = static_cast<std::size_t>(
				rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(n)));
			std::int8_t dir = rng.uniform() < p.p_first_up ? 1 : -1;
			for (std::size_t t = 0; t < s.valid_len; ++t) {
				if (t > 0 && rng.uniform() >= p.p_stay) {
					dir = static_cast<std::int8_t>(-dir);
				}
				s.dirs[t] = dir;
				const double mean = dir > 0 ? p.up_size : p.down_size;
				const double size = std::exp(std::log(mean) + config.size_spread * rng.normal());
				s.sizes[t] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(size + 0.5)), 1, kMaxPacketSize);
				const double iat = std::exp(p.iat_log_mean + config.iat_spread * rng.normal());
				s.iats[t] = t == 0 ? 0.0 : iat;
			}
			ds.samples.push_back(std::move(s));
		}
	}
	ds.recount();
	return ds;
}

} // namespace flowaug
