#include "cpd/io.hpp"
#include "cpd/plsc.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>

using namespace cpd;
namespace fs = std::filesystem;

namespace {

const fs::path &workdir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "cpd_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string at(const std::string &name) { return (workdir() / name).string(); }

int run(const std::string &args) {
    const std::string cmd = std::string(CPDETECT_PATH) + " " + args + " >" + at("stdout.txt") + " 2>" + at("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

io::Json stdout_json() { return io::Json::parse(io::read_file(at("stdout.txt"))); }

} // namespace

TEST(Cli, SimulateConstantSeries) {
    ASSERT_EQ(run("simulate --levels 1.0 --sigma 0 -n 100 -o " + at("ones.txt")), 0);
    const auto s = io::read_series(at("ones.txt"));
    EXPECT_EQ(s.values, std::vector<double>(100, 1.0));
    const auto truth = io::truth_from_json(io::read_json(at("ones.txt.truth.json")));
    EXPECT_EQ(truth.n, 100u);
    EXPECT_TRUE(truth.spec.boundaries.empty());
}

TEST(Cli, SimulateIsDeterministic) {
    ASSERT_EQ(run("--seed 11 simulate -o " + at("a.txt")), 0);
    ASSERT_EQ(run("--seed 11 simulate -o " + at("b.txt")), 0);
    ASSERT_EQ(run("simulate --seed 12 -o " + at("c.txt")), 0);
    EXPECT_EQ(io::read_file(at("a.txt")), io::read_file(at("b.txt")));
    EXPECT_NE(io::read_file(at("a.txt")), io::read_file(at("c.txt")));
}

TEST(Cli, SimulateArgumentErrors) {
    EXPECT_EQ(run("simulate --levels 0,1 --boundaries 200 -n 100 -o " + at("bad.txt")), 2);
    EXPECT_EQ(run("simulate --kind hurst --levels 0.5,1.5 --boundaries 50 -n 100 -o " + at("bad.txt")), 2);
    EXPECT_EQ(run("simulate --kind other -o " + at("bad.txt")), 2);
    EXPECT_EQ(run("simulate"), 2);
    EXPECT_EQ(run("simulate -o " + at("no/such/dir/x.txt")), 3);
}

TEST(Cli, DetectNoiselessStep) {
    std::vector<double> x(200, 0.0);
    for (std::size_t i = 120; i < x.size(); ++i)
        x[i] = 2.0;
    io::write_series(at("step.txt"), x);
    ASSERT_EQ(run("detect " + at("step.txt") + " -A 10 -o " + at("step.json") + " --emit-hat " + at("hat.csv")), 0);
    const auto r = io::result_from_json(io::read_json(at("step.json")));
    EXPECT_EQ(r.segmentation.change_points, (std::vector<std::size_t>{120}));
    ASSERT_TRUE(r.segmentation.pvalues);
    EXPECT_LT((*r.segmentation.pvalues)[0], 1e-10);
    const std::string hat = io::read_file(at("hat.csv"));
    EXPECT_EQ(hat.rfind("k,d,abs_d\n", 0), 0u);
    EXPECT_NE(hat.find("\n120,2,2\n"), std::string::npos);
}

TEST(Cli, DetectPlscMatchesExhaustiveOracle) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    std::vector<double> x(14);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = (i >= 6 ? 3.0 : 0.0) + normal(rng);
    io::write_series(at("short.txt"), x);
    ASSERT_EQ(run("detect --method plsc --penalty 1 " + at("short.txt") + " -o " + at("short.json")), 0);
    const auto r = io::result_from_json(io::read_json(at("short.json")));
    EXPECT_FALSE(r.segmentation.pvalues);
    const CostStructure cs(io::read_series(at("short.txt")).values);
    const auto ref = oracle::exhaustive_plsc(x.size(), 1.0, 10, [&](std::size_t i, std::size_t j) {
        return segment_cost(cs, i, j);
    });
    EXPECT_EQ(r.segmentation.change_points, ref.change_points);
}

TEST(Cli, DetectErrors) {
    io::write_series(at("tiny.txt"), std::vector<double>(20, 0.0));
    EXPECT_EQ(run("detect " + at("tiny.txt") + " -A 11 -o " + at("t.json")), 4);
    EXPECT_EQ(run("detect " + at("missing.txt") + " -o " + at("t.json")), 3);
    io::write_atomic(at("garbage.txt"), "1\n2\nthree\n");
    EXPECT_EQ(run("detect " + at("garbage.txt") + " -o " + at("t.json")), 3);
    EXPECT_EQ(run("detect " + at("tiny.txt") + " --method cusum -o " + at("t.json")), 2);
    EXPECT_EQ(run("detect " + at("tiny.txt") + " --alpha 2 -o " + at("t.json")), 2);
}

TEST(Cli, ScoreExamples) {
    io::TruthFile t{"mean", 5000, 1.0, 0, {{1000}, {0.0, 1.0}}};
    io::write_json(at("truth.json"), io::to_json(t));

    io::ResultFile exact;
    exact.n = 5000;
    exact.method = "fdpv";
    exact.segmentation = {{1000}, {0.0, 1.0}, std::vector<double>{1e-9}};
    io::write_json(at("exact.json"), io::to_json(exact));
    ASSERT_EQ(run("score --result " + at("exact.json") + " --truth " + at("truth.json")), 0);
    auto j = stdout_json();
    EXPECT_EQ(j.at("mise").get<double>(), 0.0);
    EXPECT_EQ(j.at("secp_normalized").get<double>(), 0.0);
    EXPECT_TRUE(j.at("correct_k").get<bool>());

    io::ResultFile off = exact;
    off.segmentation.change_points = {1050};
    io::write_json(at("off.json"), io::to_json(off));
    ASSERT_EQ(run("score --result " + at("off.json") + " --truth " + at("truth.json")), 0);
    EXPECT_NEAR(stdout_json().at("secp_normalized").get<double>(), 1e-4, 1e-18);
    EXPECT_EQ(stdout_json().at("secp_raw").get<double>(), 2500.0);

    io::ResultFile none = exact;
    none.segmentation = {{}, {0.8}, std::vector<double>{}};
    io::write_json(at("none.json"), io::to_json(none));
    ASSERT_EQ(run("score --result " + at("none.json") + " --truth " + at("truth.json")), 0);
    j = stdout_json();
    EXPECT_TRUE(j.at("secp_normalized").is_null());
    EXPECT_TRUE(j.at("secp_raw").is_null());
    EXPECT_FALSE(j.at("correct_k").get<bool>());

    EXPECT_EQ(run("score --result " + at("missing.json") + " --truth " + at("truth.json")), 3);
    EXPECT_EQ(run("score --truth " + at("truth.json")), 2);
}

TEST(Cli, SimulateDetectScorePipeline) {
    ASSERT_EQ(run("simulate -n 5000 -o " + at("toy.txt")), 0);
    ASSERT_EQ(run("detect " + at("toy.txt") + " -A 300 --alpha 1e-4 -o " + at("toy.json")), 0);
    ASSERT_EQ(run("score --result " + at("toy.json") + " --truth " + at("toy.txt.truth.json")), 0);
    const auto j = stdout_json();
    EXPECT_EQ(j.at("k_hat").get<std::size_t>(), 5u);
    EXPECT_LT(j.at("mise").get<double>(), 0.025);
}

TEST(Cli, WaveletOutputs) {
    std::vector<double> cubic(300);
    for (std::size_t t = 0; t < cubic.size(); ++t) {
        const double u = static_cast<double>(t) / 300.0;
        cubic[t] = u * u * u - 0.5 * u + 2.0;
    }
    io::write_series(at("cubic.txt"), cubic);
    EXPECT_EQ(run("wavelet " + at("cubic.txt") + " -o " + at("cubic_y.txt")), 4);

    ASSERT_EQ(run("simulate --kind hurst -n 3000 -o " + at("fbm.txt")), 0);
    ASSERT_EQ(run("wavelet " + at("fbm.txt") + " --frequency 0.2 -o " + at("fbm_y.txt")), 0);
    const auto y = io::read_series(at("fbm_y.txt"));
    const auto map = io::index_map_from_json(io::read_json(at("fbm_y.txt.index.json")));
    EXPECT_EQ(y.size(), 3000u - 55u);
    EXPECT_EQ(map.shifts.size(), y.size());
    EXPECT_EQ(run("wavelet " + at("fbm.txt") + " --wavelet haar -o " + at("x.txt")), 4);
    EXPECT_EQ(run("wavelet " + at("fbm.txt") + " --frequency 0.0001 -o " + at("x.txt")), 4);
}

TEST(Cli, BenchSmokeAndSweep) {
    ASSERT_EQ(run("bench -M 5 -n 1000 -A 60 -o " + at("bench.json") + " --csv " + at("bench.csv")), 0);
    const auto j = io::read_json(at("bench.json"));
    const auto report = io::report_from_json(j.at("monte_carlo"));
    for (const auto &m : report.methods) {
        std::size_t total = 0;
        for (const auto &[k, c] : m.k_histogram)
            total += c;
        EXPECT_EQ(total, 5u);
    }
    EXPECT_TRUE(j.at("sweep").is_null());

    ASSERT_EQ(run("bench -M 0 --sweep 1000,2000,4000 --timing-runs 1 -o " + at("sweep.json")), 0);
    EXPECT_EQ(io::read_json(at("sweep.json")).at("sweep").size(), 6u);
    EXPECT_EQ(run("bench -M 0"), 2);
    EXPECT_EQ(run("bench --methods fdpv,cusum -M 2"), 2);
}

TEST(Cli, BenchConfigFile) {
    io::write_atomic(at("cfg.json"),
                     R"({"n": 800, "replications": 3, "methods": ["fdpv"], "fdpv": {"window": 50}, "seed": 5})");
    ASSERT_EQ(run("bench --config " + at("cfg.json") + " -o " + at("cfg_out.json")), 0);
    const auto j = io::read_json(at("cfg_out.json"));
    EXPECT_EQ(j.at("config").at("n").get<std::size_t>(), 800u);
    EXPECT_EQ(j.at("config").at("seed").get<std::uint64_t>(), 5u);
    EXPECT_EQ(j.at("monte_carlo").at("methods").size(), 1u);
    io::write_atomic(at("broken.json"), "{");
    EXPECT_EQ(run("bench --config " + at("broken.json")), 3);
}

TEST(Cli, HelpExitsCleanly) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 2);
}
