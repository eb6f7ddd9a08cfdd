#include "cpd/bench.hpp"
#include "cpd/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace cpd;

namespace {

std::filesystem::path scratch(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / "cpd_bench_io_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

BenchConfig small_config() {
    BenchConfig cfg;
    cfg.n = 1000;
    cfg.replications = 6;
    cfg.fdpv.window = 60;
    return cfg;
}

io::Json statistical_part(io::Json j) {
    for (auto &m : j.at("methods")) {
        m.erase("runtime_seconds");
    }
    return j;
}

} // namespace

TEST(MonteCarlo, NoiselessSingleReplication) {
    BenchConfig cfg = small_config();
    cfg.replications = 1;
    cfg.sigma = 0.0;
    cfg.plsc.penalty = 1.0;
    const auto rep = run_monte_carlo(cfg);
    ASSERT_EQ(rep.methods.size(), 2u);
    for (const auto &m : rep.methods) {
        EXPECT_EQ(m.correct_k_fraction, 1.0) << m.method;
        EXPECT_EQ(m.mise, 0.0) << m.method;
        ASSERT_TRUE(m.secp);
        EXPECT_EQ(*m.secp, 0.0);
    }
}

TEST(MonteCarlo, HistogramSumsToReplications) {
    const auto rep = run_monte_carlo(small_config());
    EXPECT_EQ(rep.true_k, 5u);
    for (const auto &m : rep.methods) {
        std::size_t total = 0;
        for (const auto &[k, c] : m.k_histogram)
            total += c;
        EXPECT_EQ(total + m.failures.size(), 6u);
        EXPECT_GT(m.peak_memory_bytes, 0u);
    }
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
    BenchConfig cfg = small_config();
    const auto serial = statistical_part(io::to_json(run_monte_carlo(cfg)));
    cfg.jobs = 3;
    EXPECT_EQ(statistical_part(io::to_json(run_monte_carlo(cfg))), serial);
}

TEST(MonteCarlo, MethodSelectionDoesNotPerturbData) {
    BenchConfig both = small_config();
    BenchConfig only = small_config();
    only.methods = {kMethodPlsc};
    const auto a = statistical_part(io::to_json(run_monte_carlo(both)));
    const auto b = statistical_part(io::to_json(run_monte_carlo(only)));
    EXPECT_EQ(a.at("methods").at(1), b.at("methods").at(0));
}

TEST(MonteCarlo, DetectorErrorsAreRecorded) {
    BenchConfig cfg = small_config();
    cfg.fdpv.window = 600;
    cfg.methods = {kMethodFdpv};
    const auto rep = run_monte_carlo(cfg);
    EXPECT_EQ(rep.methods[0].failures.size(), 6u);
    EXPECT_TRUE(rep.methods[0].k_histogram.empty());
}

TEST(BenchConfig, Validation) {
    BenchConfig cfg = small_config();
    cfg.sweep = {1000, 1000};
    EXPECT_THROW(validate_config(cfg), Error);
    cfg.sweep.clear();
    cfg.methods = {"cusum"};
    EXPECT_THROW(validate_config(cfg), Error);
    cfg.methods.clear();
    EXPECT_THROW(validate_config(cfg), Error);
}

TEST(Sweep, ShapeAndMemory) {
    BenchConfig cfg = small_config();
    cfg.sweep = {1000, 2000, 4000};
    cfg.timing_runs = 1;
    cfg.min_run_seconds = 0.0;
    const auto rows = run_complexity_sweep(cfg);
    ASSERT_EQ(rows.size(), 6u);
    for (const auto &r : rows) {
        EXPECT_TRUE(r.feasible);
        EXPECT_GT(r.seconds, 0.0);
    }
}

TEST(Sweep, FullMatrixOverBudgetIsInfeasible) {
    BenchConfig cfg = small_config();
    cfg.methods = {kMethodPlsc};
    cfg.plsc.memory_mode = MemoryMode::FullMatrix;
    cfg.sweep = {1000, 3000};
    cfg.memory_budget_bytes = 20'000'000;
    cfg.timing_runs = 1;
    cfg.min_run_seconds = 0.0;
    const auto rows = run_complexity_sweep(cfg);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].feasible);
    EXPECT_GE(rows[0].peak_bytes, 8'000'000u);
    EXPECT_FALSE(rows[1].feasible);
    EXPECT_EQ(rows[1].peak_bytes, 72'000'000u);
}

TEST(SeriesFile, ParseAndFormat) {
    EXPECT_EQ(io::parse_series("# header\n1.5\n\n-2\n 3e-1 \r\n+4,\n"),
              (std::vector<double>{1.5, -2.0, 0.3, 4.0}));
    EXPECT_THROW(io::parse_series("1\nabc\n"), Error);
    EXPECT_THROW(io::parse_series("nan\n"), Error);
    EXPECT_THROW(io::parse_series("inf\n"), Error);
    const std::vector<double> v{0.1, -1e-300, 123456789.125, 1.0 / 3.0};
    EXPECT_EQ(io::parse_series(io::format_series(v, "values")), v);
}

TEST(SeriesFile, AtomicWriteAndRead) {
    const auto path = scratch("series.txt");
    io::write_series(path, std::vector<double>{1.0, 2.0});
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    EXPECT_EQ(io::read_series(path).values, (std::vector<double>{1.0, 2.0}));
    EXPECT_THROW(io::read_series(scratch("missing.txt")), io::IoError);
}

TEST(JsonFormats, ResultRoundTrip) {
    io::ResultFile r;
    r.n = 100;
    r.method = kMethodFdpv;
    r.params = io::to_json(FdpvParams{});
    r.segmentation = {{30, 60}, {0.0, 1.0, 0.5}, std::vector<double>{1e-9, 2e-5}};
    r.runtime_seconds = 0.25;
    const auto back = io::result_from_json(io::Json::parse(io::to_json(r).dump()));
    EXPECT_EQ(back.segmentation.change_points, r.segmentation.change_points);
    EXPECT_EQ(back.segmentation.levels, r.segmentation.levels);
    EXPECT_EQ(back.segmentation.pvalues, r.segmentation.pvalues);
    EXPECT_EQ(io::to_json(back), io::to_json(r));

    r.segmentation.pvalues.reset();
    EXPECT_TRUE(io::to_json(r).at("pvalues").is_null());
    auto bad = io::to_json(r);
    bad["schema"] = 2;
    EXPECT_THROW(io::result_from_json(bad), io::IoError);
}

TEST(JsonFormats, TruthAndIndexMapRoundTrip) {
    const io::TruthFile t{"mean", 5000, 1.0, 42, toy_model_spec(5000)};
    const auto tb = io::truth_from_json(io::to_json(t));
    EXPECT_EQ(tb.spec.boundaries, t.spec.boundaries);
    EXPECT_EQ(tb.spec.levels, t.spec.levels);
    EXPECT_EQ(tb.seed, 42u);

    const io::IndexMap m{"daubechies-6", 5.0, 27.5, {0, 1, 3}};
    const auto mb = io::index_map_from_json(io::to_json(m));
    EXPECT_EQ(mb.shifts, m.shifts);
    EXPECT_EQ(mb.time_of(2), 31u);
}

TEST(JsonFormats, ReportRoundTripIsLossless) {
    const auto rep = run_monte_carlo(small_config());
    const auto j = io::to_json(rep);
    const auto back = io::report_from_json(io::Json::parse(j.dump(2)));
    EXPECT_EQ(io::to_json(back), j);
    EXPECT_NE(io::monte_carlo_csv(rep).find("fdpv,6,5,"), std::string::npos);
}
