#pragma once

// Shared generators and helpers for the test binaries.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "flowaug/augment.hpp"
#include "flowaug/flowcore.hpp"
#include "flowaug/rng.hpp"

namespace testsupport {

using flowaug::Dataset;
using flowaug::FlowSample;
using flowaug::RngStream;

// Valid (strict) sample: random valid_len in [min_len, n], sizes in [1, 1500],
// iats log-uniform in [1e-6, 1] with iats[0] = 0.
inline FlowSample random_sample(RngStream& rng, std::size_t n = 20, std::size_t label = 0, std::size_t min_len = 1)
{
	FlowSample s = FlowSample::zeros(n, label);
	s.valid_len = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(n)));
	for (std::size_t t = 0; t < s.valid_len; ++t) {
		s.sizes[t] = rng.uniform_int(1, 1500);
		s.dirs[t] = rng.uniform() < 0.5 ? 1 : -1;
		s.iats[t] = t == 0 ? 0.0 : std::exp(rng.uniform(std::log(1e-6), 0.0));
	}
	return s;
}

// Like random_sample, but some prefix positions are fully zeroed.
inline FlowSample random_masked_sample(RngStream& rng, std::size_t n = 20, std::size_t label = 0)
{
	FlowSample s = random_sample(rng, n, label);
	for (std::size_t t = 0; t < s.valid_len; ++t) {
		if (rng.uniform() < 0.2) {
			s.sizes[t] = 0;
			s.dirs[t] = 0;
			s.iats[t] = 0.0;
		}
	}
	return s;
}

inline Dataset random_dataset(RngStream& rng, std::size_t classes, std::size_t per_class, std::size_t n = 20)
{
	Dataset ds;
	for (std::size_t c = 0; c < classes; ++c) {
		ds.labels.push_back("app-" + std::to_string(c));
	}
	for (std::size_t i = 0; i < classes * per_class; ++i) {
		ds.samples.push_back(random_sample(rng, n, i % classes));
	}
	ds.recount();
	return ds;
}

inline FlowSample make_sample(
	std::vector<std::int64_t> sizes,
	std::vector<std::int8_t> dirs,
	std::vector<double> iats,
	std::size_t valid_len,
	std::size_t label = 0)
{
	FlowSample s;
	s.sizes = std::move(sizes);
	s.dirs = std::move(dirs);
	s.iats = std::move(iats);
	s.valid_len = valid_len;
	s.label = label;
	return s;
}

// Random parameters inside each kind's accepted range.
inline flowaug::AugmentationSpec random_spec(flowaug::AugKind kind, RngStream& rng)
{
	flowaug::AugmentationSpec spec;
	spec.kind = kind;
	auto& p = spec.params;
	p.policy.p_size = rng.uniform();
	p.policy.p_iat = rng.uniform();
	p.sigma_rel = rng.uniform(0.0, 2.0);
	p.sigma_abs = rng.uniform(0.0, 1.0);
	p.max_spikes = static_cast<std::size_t>(rng.uniform_int(1, 8));
	p.sigma_mult = rng.uniform(0.0, 2.0);
	p.amp_min = rng.uniform(0.0, 1.0);
	p.amp_max = p.amp_min + rng.uniform(0.0, 1.0);
	p.period_min = rng.uniform(0.5, 10.0);
	p.period_max = p.period_min + rng.uniform(0.0, 20.0);
	p.c_min = rng.uniform(0.0, 2.0);
	p.c_max = p.c_min + rng.uniform(0.0, 3.0);
	p.p_mask = rng.uniform();
	p.win = static_cast<std::size_t>(rng.uniform_int(1, 25));
	p.dt_frac = rng.uniform(0.0, 0.99);
	p.k_max = static_cast<std::size_t>(rng.uniform_int(0, 25));
	p.p_edit = rng.uniform(0.0, 0.5);
	p.m_min = static_cast<std::size_t>(rng.uniform_int(1, 6));
	p.m_max = p.m_min + static_cast<std::size_t>(rng.uniform_int(0, 20));
	p.len_min = static_cast<std::size_t>(rng.uniform_int(1, 10));
	p.len_max = p.len_min + static_cast<std::size_t>(rng.uniform_int(0, 20));
	spec.check();
	return spec;
}

// Parameter settings under which the op returns its input unchanged.
inline flowaug::AugmentationSpec identity_spec(flowaug::AugKind kind, std::size_t n)
{
	using flowaug::AugKind;
	flowaug::AugmentationSpec spec;
	spec.kind = kind;
	auto& p = spec.params;
	switch (kind) {
	case AugKind::gaussian_noise: p.sigma_rel = 0.0; break;
	case AugKind::spike_noise: p.sigma_abs = 0.0; break;
	case AugKind::gaussian_wrapup: p.sigma_mult = 0.0; break;
	case AugKind::sine_wrapup:
		p.amp_min = 0.0;
		p.amp_max = 0.0;
		break;
	case AugKind::constant_wrapup:
		p.c_min = 1.0;
		p.c_max = 1.0;
		break;
	case AugKind::bernoulli_mask: p.p_mask = 0.0; break;
	case AugKind::window_mask: p.win = n + 1; break;
	case AugKind::packet_loss: p.dt_frac = 0.0; break;
	case AugKind::translation: p.k_max = 0; break;
	case AugKind::wrap: p.p_edit = 0.0; break;
	case AugKind::permutation:
		p.m_min = 1;
		p.m_max = 1;
		break;
	case AugKind::cutmix:
		p.len_min = n + 1;
		p.len_max = n + 1;
		break;
	default: break;
	}
	return spec;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag)
{
	auto dir = std::filesystem::temp_directory_path() / ("flowaug-" + tag + "-" + std::to_string(::getpid()));
	std::filesystem::remove_all(dir);
	std::filesystem::create_directories(dir);
	return dir;
}

struct Command {
	int status = -1;
	std::string out;
	std::string err;
};

// Runs a shell command line, capturing stdout and stderr.
inline Command run(const std::string& cmdline, const std::filesystem::path& scratch)
{
	const auto out_path = scratch / "cmd.stdout";
	const auto err_path = scratch / "cmd.stderr";
	const std::string full = cmdline + " >" + out_path.string() + " 2>" + err_path.string();
	const int raw = std::system(full.c_str());
	Command c;
	c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
	auto slurp = [](const std::filesystem::path& p) {
		std::string text;
		if (FILE* f = std::fopen(p.c_str(), "rb")) {
			char buf[4096];
			std::size_t got;
			while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) {
				text.append(buf, got);
			}
			std::fclose(f);
		}
		return text;
	};
	c.out = slurp(out_path);
	c.err = slurp(err_path);
	return c;
}

} // namespace testsupport
