#include <doctest.h>

#include <chrono>
#include <csignal>
#include <thread>

#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "flowaug/dataio.hpp"
#include "flowaug/stats.hpp"
#include "flowaug/textfmt.hpp"
#include "support.hpp"

using namespace flowaug;
using testsupport::Command;

namespace {

const std::string kCli = FLOWAUG_CLI;

struct Scratch {
	std::filesystem::path dir;
	explicit Scratch(const std::string& tag)
		: dir(testsupport::temp_dir("cli-" + tag))
	{
	}
	~Scratch() { std::filesystem::remove_all(dir); }
	std::string operator/(const std::string& name) const { return (dir / name).string(); }
	Command run(const std::string& args) const { return testsupport::run(kCli + " " + args, dir); }
};

// Small synthetic dataset written through the CLI.
void make_synth(const Scratch& s, const std::string& name, const std::string& extra = "")
{
	const auto c = s.run("--seed 3 synth -o " + s / name + " --classes 3 --total 90 --length 10 " + extra);
	REQUIRE(c.status == 0);
}

std::string plan_text(int epochs)
{
	return R"(synth.classes = 3
synth.total = 300
synth.length = 10
seeds = 0-3
method = noaug
method = flip
method = translation
train.hidden = 32
train.epochs = )" + std::to_string(epochs) + "\n";
}

const std::string kPlan = plan_text(6);

} // namespace

TEST_CASE("version")
{
	Scratch s("version");
	const auto c = s.run("--version");
	CHECK(c.status == 0);
	CHECK(c.out.rfind("flowaug 0.1.0", 0) == 0);
}

TEST_CASE("usage errors exit nonzero")
{
	Scratch s("usage");
	CHECK(s.run("").status != 0);
	CHECK(s.run("frobnicate").status != 0);
	CHECK(s.run("synth").status != 0);
	const auto c = s.run("train -d " + s / "missing.jsonl");
	CHECK(c.status == 1);
	CHECK(c.err.rfind("error: ", 0) == 0);
}

TEST_CASE("synth counts and determinism")
{
	Scratch s("synth");
	const auto c = s.run("--seed 5 synth -o " + s / "a.jsonl" + " --classes 4 --total 100 --zipf 1");
	REQUIRE(c.status == 0);
	const auto j = nlohmann::json::parse(c.out);
	SynthConfig cfg;
	cfg.classes = 4;
	cfg.total = 100;
	CHECK(j["samples"] == 100);
	const auto counts = synth_class_counts(cfg);
	for (std::size_t c = 0; c < 4; ++c) {
		CHECK(j["class_counts"]["class" + std::to_string(c)] == counts[c]);
	}
	REQUIRE(s.run("--seed 5 synth -o " + s / "b.jsonl" + " --classes 4 --total 100 --zipf 1").status == 0);
	CHECK(read_text_file(s / "a.jsonl") == read_text_file(s / "b.jsonl"));
	cfg.seed = 5;
	CHECK(load_dataset(s / "a.jsonl") == synthesize(cfg));
	CHECK(s.run("synth -o " + s / "c.jsonl" + " --classes 1").status == 1);
}

TEST_CASE("augment: identity, determinism, flip twice")
{
	Scratch s("augment");
	make_synth(s, "in.jsonl");
	const auto input = read_text_file(s / "in.jsonl");

	REQUIRE(s.run("augment -i " + s / "in.jsonl" + " -o " + s / "id.jsonl" + " --aug identity").status == 0);
	CHECK(read_text_file(s / "id.jsonl") == input);
	REQUIRE(s.run("augment -i " + s / "in.jsonl" + " -o " + s / "z.jsonl" + " --aug gaussian_noise:sigma_rel=0").status == 0);
	CHECK(read_text_file(s / "z.jsonl") == input);

	for (const char* aug : {"gaussian_noise", "window_mask", "cutmix", "permutation", "packet_loss"}) {
		CAPTURE(aug);
		const std::string base = "augment -i " + s / "in.jsonl" + " --aug " + aug;
		REQUIRE(s.run("--seed 9 " + base + " -o " + s / "a.jsonl").status == 0);
		REQUIRE(s.run("--seed 9 " + base + " -o " + s / "b.jsonl").status == 0);
		REQUIRE(s.run("--seed 10 " + base + " -o " + s / "c.jsonl").status == 0);
		CHECK(read_text_file(s / "a.jsonl") == read_text_file(s / "b.jsonl"));
		CHECK(read_text_file(s / "a.jsonl") != read_text_file(s / "c.jsonl"));
		CHECK(read_text_file(s / "in.jsonl") == input);
		const auto out = load_dataset(s / "a.jsonl");
		CHECK(out.class_counts == load_dataset(s / "in.jsonl").class_counts);
	}

	REQUIRE(s.run("augment -i " + s / "in.jsonl" + " -o " + s / "f1.jsonl" + " --aug flip").status == 0);
	REQUIRE(s.run("augment -i " + s / "f1.jsonl" + " -o " + s / "f2.jsonl" + " --aug flip").status == 0);
	CHECK(read_text_file(s / "f1.jsonl") != input);
	CHECK(read_text_file(s / "f2.jsonl") == input);

	const auto bad = s.run("augment -i " + s / "in.jsonl" + " -o " + s / "x.jsonl" + " --aug gaussian_noise:sigma_rel=-1");
	CHECK(bad.status == 1);
	CHECK(bad.err.find("sigma") != std::string::npos);
}

TEST_CASE("train: method errors, zero epochs, determinism")
{
	Scratch s("train");
	make_synth(s, "d.jsonl");
	const auto bad = s.run("train -d " + s / "d.jsonl" + " -m warp");
	CHECK(bad.status == 1);
	for (const char* name : {"noaug", "noaug_nosampler", "gaussian_noise", "cutmix", "flip"}) {
		CHECK(bad.err.find(name) != std::string::npos);
	}

	const auto zero = s.run("train -d " + s / "d.jsonl" + " --epochs 0");
	REQUIRE(zero.status == 0);
	const auto z = nlohmann::json::parse(zero.out);
	CHECK(z["best_epoch"] == 0);
	CHECK(z["weighted_f1"].get<double>() >= 0.0);

	const std::string args = "train -d " + s / "d.jsonl" + " -m translation --epochs 3 --checkpoint ";
	const auto a = s.run("--seed 2 " + args + s / "a.ckpt");
	const auto b = s.run("--seed 2 " + args + s / "b.ckpt");
	REQUIRE(a.status == 0);
	CHECK(a.out == b.out);
	CHECK(read_text_file(s / "a.ckpt") == read_text_file(s / "b.ckpt"));
	const auto j = nlohmann::json::parse(a.out);
	CHECK(j["method"].get<std::string>().rfind("translation:", 0) == 0);
	CHECK(j["seed"] == 2);
	CHECK(j["per_class"].size() == 3);
	CHECK(j["confusion"].size() == 3);
}

TEST_CASE("train separates an easy synthetic dataset")
{
	Scratch s("train-easy");
	REQUIRE(s.run("synth -o " + s / "e.jsonl" + " --classes 2 --total 400 --zipf 0 --size-spread 0.05 --iat-spread 0.1")
				.status == 0);
	const auto c = s.run("train -d " + s / "e.jsonl" + " --epochs 20");
	REQUIRE(c.status == 0);
	CHECK(nlohmann::json::parse(c.out)["weighted_f1"].get<double>() >= 0.95);
}

TEST_CASE("train time budget failure")
{
	Scratch s("train-budget");
	make_synth(s, "d.jsonl");
	const auto c = s.run("train -d " + s / "d.jsonl" + " --epochs 50 --time-budget 0.000000001");
	CHECK(c.status == 1);
	CHECK(c.err.rfind("error: ", 0) == 0);
}

TEST_CASE("config file values, command line wins")
{
	Scratch s("config");
	write_text_file(s / "c.toml", "seed = 5\n[synth]\nclasses = 4\ntotal = 100\n");
	const auto a = s.run("--config " + s / "c.toml" + " synth -o " + s / "a.jsonl");
	REQUIRE(a.status == 0);
	CHECK(nlohmann::json::parse(a.out)["samples"] == 100);
	REQUIRE(s.run("--seed 5 synth -o " + s / "b.jsonl" + " --classes 4 --total 100").status == 0);
	CHECK(read_text_file(s / "a.jsonl") == read_text_file(s / "b.jsonl"));
	const auto c = s.run("--config " + s / "c.toml" + " synth -o " + s / "c.jsonl" + " --total 120");
	REQUIRE(c.status == 0);
	CHECK(nlohmann::json::parse(c.out)["samples"] == 120);
}

TEST_CASE("bench grid, parallelism and manifest")
{
	Scratch s("bench");
	write_text_file(s / "p.plan", kPlan);
	const auto a = s.run("bench -p " + s / "p.plan" + " -o " + s / "a.csv");
	REQUIRE(a.status == 0);
	const auto b = s.run("bench -p " + s / "p.plan" + " -j 4 -o " + s / "b.csv");
	REQUIRE(b.status == 0);
	CHECK(read_text_file(s / "a.csv") == read_text_file(s / "b.csv"));
	const auto rr = load_run_csv(s / "a.csv");
	CHECK(rr.methods == std::vector<std::string>{"noaug", "flip", "translation"});
	CHECK(rr.seeds.size() == 4);
	CHECK_FALSE(std::filesystem::exists(s / "a.csv.journal"));

	const auto m = nlohmann::json::parse(read_text_file(s / "b.csv.manifest.json"));
	CHECK(m["parallelism"] == 4);
	CHECK(m["cells_total"] == 12);
	CHECK(m["complete"] == true);
	CHECK(m.contains("cli_config"));
	CHECK(nlohmann::json::parse(b.out)["cells_run"] == 12);
}

TEST_CASE("bench survives SIGKILL and resumes to the same CSV")
{
	Scratch s("kill");
	// slow enough cells that the kill lands mid-grid
	write_text_file(s / "p.plan", plan_text(60));
	REQUIRE(s.run("bench -p " + s / "p.plan" + " -o " + s / "ref.csv").status == 0);

	const std::string out = s / "k.csv";
	const std::string journal = out + ".journal";
	bool killed_midway = false;
	for (int attempt = 0; attempt < 5 && !killed_midway; ++attempt) {
		std::filesystem::remove(journal);
		std::fflush(nullptr);
		const pid_t pid = fork();
		REQUIRE(pid >= 0);
		if (pid == 0) {
			std::freopen("/dev/null", "w", stdout);
			std::freopen("/dev/null", "w", stderr);
			const std::string plan = s / "p.plan";
			execl(kCli.c_str(), kCli.c_str(), "bench", "-p", plan.c_str(), "-o", out.c_str(), (char*)nullptr);
			_exit(127);
		}
		// wait until at least one result row is journaled
		const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
		while (std::chrono::steady_clock::now() < deadline) {
			if (std::filesystem::exists(journal)) {
				const auto text = read_text_file(journal);
				if (split(text, '\n').size() > 3) {
					break;
				}
			}
			std::this_thread::sleep_for(std::chrono::milliseconds(2));
		}
		kill(pid, SIGKILL);
		int status = 0;
		waitpid(pid, &status, 0);
		killed_midway = WIFSIGNALED(status) && std::filesystem::exists(journal);
	}
	REQUIRE(killed_midway);

	const auto resumed = s.run("bench -p " + s / "p.plan" + " -o " + out);
	REQUIRE(resumed.status == 0);
	const auto j = nlohmann::json::parse(resumed.out);
	CHECK(j["cells_resumed"].get<int>() >= 1);
	CHECK(j["cells_resumed"].get<int>() + j["cells_run"].get<int>() == 12);
	CHECK(read_text_file(out) == read_text_file(s / "ref.csv"));
}

TEST_CASE("cdchart reports")
{
	Scratch s("cd");
	SUBCASE("identical columns")
	{
		write_text_file(s / "r.csv", "method,seed,weighted_f1\na,0,0.5\na,1,0.7\nb,0,0.5\nb,1,0.7\n");
		const auto c = s.run("cdchart -r " + s / "r.csv" + " --svg " + s / "c.svg");
		REQUIRE(c.status == 0);
		const auto report = parse_report_json(c.out);
		CHECK(report.p_value == 1.0);
		CHECK(report.groups == std::vector<std::vector<std::string>>{{"a", "b"}});
		CHECK(read_text_file(s / "c.svg").find("<svg") != std::string::npos);
	}
	SUBCASE("hand three-method case")
	{
		std::string csv = "method,seed,weighted_f1\n";
		for (int seed = 0; seed < 3; ++seed) {
			csv += "x," + std::to_string(seed) + ",0.9\n";
			csv += "y," + std::to_string(seed) + ",0.8\n";
			csv += "z," + std::to_string(seed) + ",0.7\n";
		}
		write_text_file(s / "r.csv", csv);
		const auto c = s.run("cdchart -r " + s / "r.csv" + " --json " + s / "r.json" + " --svg " + s / "r.svg"
			+ " --baseline z");
		REQUIRE(c.status == 0);
		const auto report = parse_report_json(read_text_file(s / "r.json"));
		CHECK(report_json(report) == c.out);
		CHECK(report.avg_ranks == std::vector<double>{1, 2, 3});
		CHECK(report.friedman_chi2 == 6.0);
		CHECK(std::abs(report.p_value - std::exp(-3.0)) < 1e-9);
		CHECK(report.cd == doctest::Approx(2.343 * std::sqrt(12.0 / 18.0)));
		// mean difference in F1 percentage points: 100 * (0.9 - 0.7)
		const auto svg = read_text_file(s / "r.svg");
		CHECK(svg.find("[+20.00%]") != std::string::npos);
		CHECK(svg.find("[+0.00%]") != std::string::npos);
		const auto again = s.run("cdchart -r " + s / "r.csv" + " --svg " + s / "r2.svg" + " --baseline z");
		CHECK(read_text_file(s / "r2.svg") == svg);
	}
	SUBCASE("malformed CSV names the row")
	{
		write_text_file(s / "r.csv", "method,seed,weighted_f1\na,0,0.5\na,1,0.7\nb,0,oops\nb,1,0.7\n");
		const auto c = s.run("cdchart -r " + s / "r.csv");
		CHECK(c.status == 1);
		CHECK(c.err.find("line 4") != std::string::npos);
	}
	SUBCASE("failed cells are refused")
	{
		write_text_file(s / "r.csv", "method,seed,weighted_f1\na,0,0.5\na,1,failed\nb,0,0.5\nb,1,0.7\n");
		const auto c = s.run("cdchart -r " + s / "r.csv");
		CHECK(c.status == 1);
		CHECK(c.err.find("line 3") != std::string::npos);
	}
	SUBCASE("unknown baseline")
	{
		write_text_file(s / "r.csv", "method,seed,weighted_f1\na,0,0.5\na,1,0.7\nb,0,0.5\nb,1,0.7\n");
		CHECK(s.run("cdchart -r " + s / "r.csv" + " --baseline q").status == 1);
	}
}
