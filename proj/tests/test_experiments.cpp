#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "dlab/experiments.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using dlab::ExperimentConfig;
using dlab::InvalidConfig;

namespace {

ExperimentConfig small_config() {
    return dlab::parse_config(
        "dimension = 2\n"
        "lambda_radius = 1\n"
        "m_start = 2\n"
        "m_max = 8\n"
        "nu_par = uniform:2,3\n"
        "nu_perp = uniform:2,3\n"
        "trials = 12\n"
        "seed = 3\n"
        "heights_k = 3\n"
        "radii = 0,1\n");
}

const std::string* find_file(const dlab::RunOutput& out, const std::string& name) {
    for (const auto& f : out.files)
        if (f.name == name) return &f.content;
    return nullptr;
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("dlab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path_ / name) << text;
        return path_ / name;
    }

private:
    fs::path path_;
    static inline int counter_ = 0;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DLAB_BINARY) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
    const auto cfg = small_config();
    EXPECT_EQ(cfg.dimension, 2);
    EXPECT_EQ(cfg.radii, (std::vector<int>{0, 1}));
    EXPECT_EQ(cfg.lambda().size(), 9u);
    const auto again = dlab::parse_config(cfg.to_text());
    EXPECT_EQ(again.to_text(), cfg.to_text());
}

TEST(Config, CommentsAndBlankLines) {
    const auto cfg = dlab::parse_config("# header\n\n  trials = 5   # inline\n");
    EXPECT_EQ(cfg.trials, 5);
}

TEST(Config, Errors) {
    EXPECT_THROW(dlab::parse_config("trials = 0\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("trials = 5x\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("colour = red\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("trials = 1\ntrials = 2\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("nu_par = uniform:3,2\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("radii = 2,1\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("m_start = 8\nm_max = 4\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("suites = isoperimetry,bogus\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("rounding = nearest\n"), InvalidConfig);
    EXPECT_THROW(dlab::parse_config("just words\n"), InvalidConfig);
    EXPECT_THROW(dlab::load_config("/nonexistent/dlab.conf"), InvalidConfig);
}

TEST(Wilson, MatchesClosedForm) {
    for (std::int64_t n : {1, 10, 200})
        for (std::int64_t k = 0; k <= n; k += std::max<std::int64_t>(1, n / 7)) {
            const auto ci = dlab::wilson_interval(k, n);
            const auto [lo, hi] = oracle::wilson(static_cast<double>(k), static_cast<double>(n));
            EXPECT_NEAR(ci.lo, lo, 1e-12);
            EXPECT_NEAR(ci.hi, hi, 1e-12);
            EXPECT_LE(ci.lo, static_cast<double>(k) / n + 1e-12);
            EXPECT_GE(ci.hi, static_cast<double>(k) / n - 1e-12);
        }
    EXPECT_NEAR(dlab::wilson_interval(0, 200).hi, 0.018845, 1e-6);
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(dlab::format_number(0.1), "0.1");
    EXPECT_EQ(dlab::format_number(2.0), "2");
    EXPECT_EQ(std::stod(dlab::format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(RunIndexed, OrderIndependentOfWorkers) {
    const std::function<int(std::size_t)> sq = [](std::size_t i) { return static_cast<int>(i * i); };
    EXPECT_EQ(dlab::run_indexed<int>(50, 1, sq), dlab::run_indexed<int>(50, 4, sq));
    const std::function<int(std::size_t)> bad = [](std::size_t i) -> int {
        if (i == 7) throw std::runtime_error("boom");
        return 0;
    };
    EXPECT_THROW(dlab::run_indexed<int>(20, 3, bad), std::runtime_error);
}

TEST(Localize, PointMassNeverFlips) {
    auto cfg = small_config();
    cfg.nu_par = "point:1";
    cfg.nu_perp = "point:1";
    const auto r = dlab::localize(cfg);
    EXPECT_EQ(r.excluded, 0);
    for (const auto& row : r.rows) EXPECT_EQ(row.flips, 0);
    EXPECT_TRUE(r.monotone);
    EXPECT_FALSE(r.fitted_exponent.has_value());
}

TEST(Localize, RowsAndTailAreConsistent) {
    auto cfg = small_config();
    cfg.nu_par = "uniform:0.2,3";
    cfg.nu_perp = "uniform:0.05,0.1";
    cfg.m_max = 16;
    cfg.trials = 30;
    const auto r = dlab::localize(cfg);
    ASSERT_EQ(r.rows.size(), 2u * cfg.heights_k + 1);
    ASSERT_EQ(r.tail.size(), static_cast<std::size_t>(cfg.heights_k));
    for (std::size_t i = 1; i < r.tail.size(); ++i) EXPECT_LE(r.tail[i].flips, r.tail[i - 1].flips);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.trials, cfg.trials - r.excluded);
        EXPECT_LE(row.ci.lo, row.p_hat);
        EXPECT_GE(row.ci.hi, row.p_hat);
    }
}

TEST(Localize, ZeroTrialsIsAConfigError) {
    auto cfg = small_config();
    cfg.trials = 0;
    EXPECT_THROW(dlab::localize(cfg), InvalidConfig);
}

TEST(Converge, PointMassStabilizesAtFirstRadius) {
    auto cfg = small_config();
    cfg.nu_par = "point:1";
    cfg.nu_perp = "point:1";
    cfg.radii = {1, 2, 3};
    const auto r = dlab::converge(cfg);
    // One row per radius, then the unstabilized bucket.
    const std::vector<std::pair<int, std::int64_t>> want{{1, cfg.trials}, {2, 0}, {3, 0}, {-1, 0}};
    EXPECT_EQ(r.histogram, want);
}

TEST(Converge, SingleRadiusIsDegenerate) {
    auto cfg = small_config();
    cfg.radii = {2};
    const auto r = dlab::converge(cfg);
    EXPECT_EQ(r.unstabilized, 0);
    const std::vector<std::pair<int, std::int64_t>> want{{2, r.included}, {-1, 0}};
    EXPECT_EQ(r.histogram, want);
}

TEST(GapScan, FlatInstancesGiveZeroShifts) {
    auto cfg = small_config();
    cfg.nu_par = "point:2";
    cfg.nu_perp = "point:2";
    const auto r = dlab::gap_scan(cfg);
    EXPECT_EQ(r.violations, 0);
    for (const auto& rec : r.records) {
        EXPECT_TRUE(rec.shift_zero);
        EXPECT_EQ(rec.gap_scaled, 0);
    }
}

TEST(GapScan, TailIsNonincreasing) {
    auto cfg = small_config();
    cfg.nu_par = "uniform:0.2,3";
    cfg.nu_perp = "uniform:0.05,0.1";
    cfg.m_max = 16;
    cfg.trials = 20;
    cfg.gap_step = 0.05;
    const auto r = dlab::gap_scan(cfg);
    EXPECT_EQ(r.violations, 0);
    for (std::size_t i = 1; i < r.tail.size(); ++i) EXPECT_LE(r.tail[i].second, r.tail[i - 1].second);
    for (const auto& rec : r.records)
        if (rec.trusted) EXPECT_GE(rec.gap_scaled, 2 * rec.max_flip_height * dlab::Energy{dlab::to_fixed(0.05)});
}

TEST(Suites, DefaultSuitesPass) {
    auto cfg = small_config();
    cfg.audit_cases = 40;
    for (const auto& suite : cfg.suites)
        for (const auto& row : dlab::run_suite(suite, cfg)) EXPECT_EQ(row.violations, 0) << suite << "/" << row.check;
}

TEST(Suites, RoundingMutantFails) {
    auto cfg = small_config();
    cfg.audit_cases = 20;
    cfg.rounding = dlab::Rounding::HalfUp;
    std::int64_t violations = 0;
    for (const auto& row : dlab::run_suite("graining", cfg)) violations += row.violations;
    EXPECT_GT(violations, 0);
    cfg.suites = {"graining"};
    EXPECT_TRUE(dlab::run_audits(cfg).violation);
}

TEST(Outputs, CarrySchemaHeader) {
    auto cfg = small_config();
    cfg.trials = 3;
    cfg.audit_cases = 5;
    cfg.audit_shifts = 3;
    cfg.fine_samples = 20;
    for (const auto& run : {dlab::run_localize(cfg), dlab::run_converge(cfg), dlab::run_gap_scan(cfg),
                            dlab::run_graining_audit(cfg), dlab::run_audits(cfg), dlab::run_solve(cfg)})
        for (const auto& f : run.files)
            if (f.name.ends_with(".csv")) EXPECT_EQ(f.content.rfind(dlab::kSchemaHeader, 0), 0u) << f.name;
}

TEST(Outputs, StripTimingDropsLastColumn) {
    const std::string in = std::string(dlab::kSchemaHeader) + "\na,b,seconds\n1,2,0.5\n3,4,0.25\n";
    const std::string want = std::string(dlab::kSchemaHeader) + "\na,b\n1,2\n3,4\n";
    EXPECT_EQ(dlab::strip_timing(in), want);
}

TEST(Outputs, ReproducibleAcrossRunsAndWorkers) {
    auto cfg = small_config();
    cfg.nu_par = "uniform:0.2,3";
    cfg.nu_perp = "uniform:0.5,1";
    cfg.m_max = 16;
    auto other = cfg;
    other.workers = 3;
    const auto a = dlab::run_localize(cfg);
    const auto b = dlab::run_localize(cfg);
    const auto c = dlab::run_localize(other);
    ASSERT_EQ(a.files.size(), c.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        if (!a.files[i].name.ends_with(".csv")) continue;
        EXPECT_EQ(dlab::strip_timing(a.files[i].content), dlab::strip_timing(b.files[i].content));
        EXPECT_EQ(dlab::strip_timing(a.files[i].content), dlab::strip_timing(c.files[i].content));
    }
    const auto* summary = find_file(a, "localize.csv");
    ASSERT_NE(summary, nullptr);
    EXPECT_EQ(*summary, *find_file(c, "localize.csv"));
}

TEST(Outputs, SeedChangesTheTrials) {
    auto cfg = small_config();
    cfg.nu_par = "uniform:0.2,3";
    cfg.nu_perp = "uniform:0.5,1";
    auto other = cfg;
    other.seed = 99;
    const auto ra = dlab::run_gap_scan(cfg);
    const auto rb = dlab::run_gap_scan(other);
    const auto* a = find_file(ra, "gap_scan_trials.csv");
    const auto* b = find_file(rb, "gap_scan_trials.csv");
    ASSERT_TRUE(a && b);
    EXPECT_NE(dlab::strip_timing(*a), dlab::strip_timing(*b));
}

TEST(Cli, ExitCodes) {
    TempDir dir;
    const auto good = dir.write("good.conf", "dimension = 2\nlambda_radius = 1\ntrials = 4\nnu_par = uniform:2,3\n"
                                             "nu_perp = uniform:2,3\nm_start = 2\nm_max = 8\nheights_k = 2\n");
    const auto zero = dir.write("zero.conf", "trials = 0\n");
    const auto junk = dir.write("junk.conf", "colour = red\n");
    const auto mutant = dir.write("mutant.conf", "suites = graining\naudit_cases = 5\nrounding = half_up\n");
    const auto empty = dir.write("empty.conf", "suites =\n");
    const std::string out = " --out " + dir.path().string();

    EXPECT_EQ(run_cli("localize --config " + good.string() + out), 0);
    EXPECT_TRUE(fs::exists(dir.path() / "localize.csv"));
    EXPECT_EQ(run_cli("solve --config " + good.string() + out), 0);
    EXPECT_TRUE(fs::exists(dir.path() / "solve.json"));
    EXPECT_EQ(run_cli("localize --config " + zero.string() + out), 2);
    EXPECT_EQ(run_cli("converge --config " + junk.string() + out), 2);
    EXPECT_EQ(run_cli("audits --config " + mutant.string() + out), 1);
    EXPECT_EQ(run_cli("audits --config " + empty.string() + out), 0);
    EXPECT_EQ(run_cli("localize"), 2);
    EXPECT_EQ(run_cli("frobnicate --config " + good.string()), 2);
    EXPECT_EQ(run_cli("localize --config " + good.string() + " --workers 0" + out), 2);
}

TEST(Cli, SeedOverrideIsReproducible) {
    TempDir a, b;
    const auto conf = a.write("c.conf", "dimension = 2\nlambda_radius = 1\ntrials = 5\nnu_par = uniform:0.2,3\n"
                                        "nu_perp = uniform:0.5,1\nm_start = 2\nm_max = 16\n");
    ASSERT_EQ(run_cli("gap-scan --config " + conf.string() + " --seed 42 --out " + a.path().string()), 0);
    ASSERT_EQ(run_cli("gap-scan --config " + conf.string() + " --seed 42 --workers 2 --out " + b.path().string()), 0);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    EXPECT_EQ(dlab::strip_timing(slurp(a.path() / "gap_scan_trials.csv")),
              dlab::strip_timing(slurp(b.path() / "gap_scan_trials.csv")));
    EXPECT_EQ(slurp(a.path() / "gap_scan.csv"), slurp(b.path() / "gap_scan.csv"));
}

TEST(ShippedConfigs, AllParse) {
    for (const auto& e : fs::directory_iterator(fs::path(DLAB_SOURCE_DIR) / "configs"))
        if (e.path().extension() == ".conf") EXPECT_NO_THROW(dlab::load_config(e.path().string())) << e.path();
}
