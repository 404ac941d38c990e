#include "flowaug/flowcore.hpp"

#include <algorithm>

namespace flowaug {

FlowSample FlowSample::zeros(std::size_t n, std::size_t label)
{
	FlowSample s;
	s.sizes.assign(n, 0);
	s.dirs.assign(n, 0);
	s.iats.assign(n, 0.0);
	s.label = label;
	return s;
}

void Dataset::recount()
{
	class_counts.assign(labels.size(), 0);
	for (const auto& s : samples) {
		if (s.label >= labels.size()) {
			throw UsageError("sample label " + std::to_string(s.label) + " outside vocabulary of "
				+ std::to_string(labels.size()));
		}
		++class_counts[s.label];
	}
}

std::string Violation::to_string() const
{
	return field + "[" + std::to_string(position) + "]: " + rule;
}

std::vector<Violation> validate(const FlowSample& sample, Strictness mode)
{
	std::vector<Violation> out;
	const std::size_t n = sample.sizes.size();
	if (sample.dirs.size() != n || sample.iats.size() != n) {
		out.push_back({"length", 0, "sizes, dirs and iats must have identical length"});
		return out;
	}
	if (n == 0) {
		out.push_back({"length", 0, "series must be non-empty"});
		return out;
	}
	const std::size_t len = sample.valid_len;
	if (len < 1 || len > n) {
		out.push_back({"valid_len", len, "must satisfy 1 <= valid_len <= N"});
	}
	const std::size_t prefix = std::min(len, n);

	for (std::size_t t = 0; t < n; ++t) {
		const double iat = sample.iats[t];
		if (!std::isfinite(iat)) {
			out.push_back({"iats", t, "must be finite"});
		} else if (iat < 0.0) {
			out.push_back({"iats", t, "must be >= 0"});
		}
		if (sample.sizes[t] < 0) {
			out.push_back({"sizes", t, "must be >= 0"});
		}
		if (t < prefix) {
			const bool zeroed = sample.sizes[t] == 0 && sample.dirs[t] == 0 && sample.iats[t] == 0.0;
			if (mode == Strictness::relaxed && zeroed) {
				continue;
			}
			if (sample.dirs[t] != 1 && sample.dirs[t] != -1) {
				out.push_back({"dirs", t, "must be +1 or -1 before valid_len"});
			}
			if (sample.sizes[t] < 1) {
				out.push_back({"sizes", t, "must be >= 1 before valid_len"});
			}
		} else {
			if (sample.sizes[t] != 0) {
				out.push_back({"sizes", t, "padding must be 0"});
			}
			if (sample.dirs[t] != 0) {
				out.push_back({"dirs", t, "padding must be 0"});
			}
			if (sample.iats[t] != 0.0) {
				out.push_back({"iats", t, "padding must be 0"});
			}
		}
	}
	return out;
}

FeatureVector preprocess(const FlowSample& sample, const NormConfig& norm)
{
	if (!(norm.size_divisor > 0.0) || !(norm.iat_log_scale > 0.0)) {
		throw ConfigError("preprocess: size_divisor and iat_log_scale must be > 0");
	}
	const std::size_t n = sample.sizes.size();
	if (sample.dirs.size() != n || sample.iats.size() != n) {
		throw MalformedSampleError("preprocess: series lengths differ");
	}

	FeatureVector fv;
	fv.values.resize(3 * n);
	for (std::size_t t = 0; t < n; ++t) {
		const double iat = sample.iats[t];
		if (!std::isfinite(iat)) {
			throw MalformedSampleError("preprocess: non-finite iat at position " + std::to_string(t));
		}
		fv.values[t] = static_cast<double>(sample.sizes[t]) / norm.size_divisor;
		fv.values[n + t] = static_cast<double>(sample.dirs[t]);
		fv.values[2 * n + t] = std::log1p(iat * 1000.0) / norm.iat_log_scale;
		if (!std::isfinite(fv.values[2 * n + t])) {
			throw MalformedSampleError("preprocess: iat at position " + std::to_string(t) + " is out of range");
		}
	}
	return fv;
}

} // namespace flowaug
