/**
 * @file experiments.hpp
 * @brief Experiment configuration, Monte Carlo runners, deterministic audit
 * suites and their CSV outputs.
 *
 * Trial i always uses seed `seed + i`; results are merged by trial index,
 * so the worker count never changes the output bytes.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <mutex>

#include "dlab/graining.hpp"
#include "dlab/groundstate.hpp"
#include "dlab/interface.hpp"

namespace dlab {

struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kSchemaHeader = "# dlab-schema v1";

struct ExperimentConfig {
    int dimension = 3;
    int lambda_radius = 2;
    int m_start = 4;
    int m_max = 8;
    std::string nu_par = "uniform:8,9";
    std::string nu_perp = "uniform:8,9";
    int trials = 200;
    std::uint64_t seed = 1;
    int heights_k = 8;             ///< flip indicators recorded for |k| <= heights_k
    std::vector<int> radii{1, 2, 3};
    int workers = 1;
    double c0 = 1.0;               ///< constant of the concentration condition
    std::vector<std::string> suites{"isoperimetry", "graining", "reduction", "enumeration", "oracle"};
    int audit_cases = 200;         ///< random cases per audit suite
    int audit_shifts = 50;         ///< shifts for graining-audit
    int tv_max = 60;
    int fine_samples = 2000;
    Rounding rounding = Rounding::HalfDown;
    double gap_step = 1.0;
    std::string output_dir = ".";

    Distribution par() const { return Distribution::parse(nu_par); }
    Distribution perp() const { return Distribution::parse(nu_perp); }
    MPolicy policy() const { return {m_start, m_max}; }
    CouplingField field(std::size_t trial) const;
    SiteSet lambda() const { return lambda_box(lambda_radius); }
    SiteSet lambda_box(int radius) const;

    /// Throws InvalidConfig on inconsistent values.
    void validate() const;
    /// Canonical key = value dump; parse_config(to_text()) round-trips.
    std::string to_text() const;
};

/// Flat "key = value" text; '#' starts a comment.  Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct Interval {
    double lo = 0;
    double hi = 1;
};

/// Wilson score interval at 95%.
Interval wilson_interval(std::int64_t successes, std::int64_t n);

/// Shortest round-trip decimal form.
std::string format_number(double x);

/// Runs fn(i) for i in [0, n) on `workers` threads; results in index order.
template <class T>
std::vector<T> run_indexed(std::size_t n, int workers, const std::function<T(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Random instance generators

/// Nonempty random set in [0, extent)^d, windowed with margin 3.
SiteSet random_site_set(std::mt19937_64& rng, int d, int extent);
/// Connected variant (a random lattice animal grown from the origin).
SiteSet random_animal(std::mt19937_64& rng, int d, int size);
/// Nonzero shift built from a few signed boxes and points, TV <= tv_max.
Shift random_shift(std::mt19937_64& rng, int d, int tv_max);
/// Interfacial configuration with an odd number of sign changes per column.
SpinConfiguration random_interfacial(std::mt19937_64& rng, const SiteSet& lambda, int M, int max_changes = 5);

// ---------------------------------------------------------------------------
// Deterministic checks.  Rows follow the lhs <= rhs convention of AuditRow.

AuditRow isoperimetry_row(const SiteSet& A);
/// |boundary of A inside B x B| against (2/3N) min(|A n B|, |B \ A|) for an N-cube B.
AuditRow cube_isoperimetry_row(const SiteSet& A, const Box& cube);
/// Functional isoperimetry, level-component count, TV and trip-entropy
/// subadditivity for the pair (a, b).
std::vector<AuditRow> shift_lemma_rows(const Shift& a, const Shift& b);

struct ReductionCheck {
    bool terminated = true;
    bool no_esc = true;
    bool osc_contained = true;
    bool wall_ok = true;
    bool steps_ok = true;
    std::string detail;
    bool ok() const { return terminated && no_esc && osc_contained && wall_ok && steps_ok; }
};

ReductionCheck check_reduction(const SpinConfiguration& sigma);

/// Brute-force minimizer reduced to no overhangs still attains the ground
/// energy (perpendicular couplings must be a point mass).
struct NoOverhangCheck {
    Energy ground = 0;
    Energy reduced = 0;
    bool reduced_has_no_overhang = false;
    bool ok() const { return ground == reduced && reduced_has_no_overhang; }
};

NoOverhangCheck check_no_overhang_minimizer(const CouplingField& field, const SiteSet& lambda, int M);

struct OracleCheck {
    Energy flow_energy = 0;
    Energy brute_energy = 0;
    bool configs_equal = false;
    bool gap_resolved = false;  ///< runner-up separated by more than 1e-9 relative
    bool ok() const { return flow_energy == brute_energy && (!gap_resolved || configs_equal); }
};

OracleCheck check_oracle(const CouplingField& field, const SiteSet& lambda, int M);

// ---------------------------------------------------------------------------
// Experiment results

struct TrialRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Energy energy_scaled = 0;
    bool certificate_ok = false;
    int M_used = 0;
    std::vector<int> flip_heights;  ///< k with sigma(0,k) != rho(k), |k| <= heights_k
    double seconds = 0;
};

struct LocalizeRow {
    int k = 0;
    std::int64_t flips = 0;
    std::int64_t trials = 0;
    double p_hat = 0;
    Interval ci;
};

struct LocalizeResult {
    std::vector<TrialRecord> records;
    std::vector<LocalizeRow> rows;  ///< k = -K..K
    std::vector<LocalizeRow> tail;  ///< k = t means some flip with |k| >= t, t = 1..K
    std::int64_t excluded = 0;
    bool monotone = true;           ///< nonincreasing in |k| on each side, up to CI overlap
    std::optional<double> fitted_exponent;
};

LocalizeResult localize(const ExperimentConfig& cfg);

struct ConvergeRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool certificates_ok = false;
    int stabilization_radius = -1;  ///< -1 when unstabilized
    std::vector<int> M_used;
    double seconds = 0;
};

struct ConvergeResult {
    std::vector<ConvergeRecord> records;
    std::vector<std::pair<int, std::int64_t>> histogram;  ///< radius (or -1) -> count
    std::int64_t included = 0;
    std::int64_t excluded = 0;
    std::int64_t unstabilized = 0;
};

ConvergeResult converge(const ExperimentConfig& cfg);

struct GapRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool trusted = false;
    Energy gap_scaled = 0;
    double gap = 0;
    std::int64_t tv = 0;
    std::int64_t trip = 0;
    bool trip_exact = false;
    bool admissible = true;
    bool layering_ok = true;
    bool trip_ok = true;
    bool trip_conclusive = true;
    bool height_ok = true;
    bool components_ok = true;
    int max_flip_height = 0;
    std::size_t issues = 0;
    bool shift_zero = true;
    double seconds = 0;
    bool violation() const {
        return trusted && !(admissible && layering_ok && trip_ok && height_ok && components_ok && issues == 0);
    }
};

struct GapScanResult {
    std::vector<GapRecord> records;
    std::vector<std::pair<double, std::int64_t>> tail;  ///< threshold -> trials with gap >= threshold
    std::int64_t included = 0;
    std::int64_t excluded = 0;
    std::int64_t violations = 0;
};

GapScanResult gap_scan(const ExperimentConfig& cfg);

struct SuiteRow {
    std::string suite;
    std::string check;
    std::int64_t cases = 0;
    std::int64_t violations = 0;
    std::optional<double> worst_ratio;  ///< max lhs/rhs over cases with rhs > 0
};

std::vector<SuiteRow> run_suite(const std::string& suite, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// CLI-facing runners

struct OutputFile {
    std::string name;
    std::string content;
};

struct RunOutput {
    std::vector<OutputFile> files;
    std::vector<std::string> summary;  ///< human-readable lines
    bool violation = false;
};

RunOutput run_localize(const ExperimentConfig& cfg);
RunOutput run_converge(const ExperimentConfig& cfg);
RunOutput run_gap_scan(const ExperimentConfig& cfg);
RunOutput run_graining_audit(const ExperimentConfig& cfg);
RunOutput run_audits(const ExperimentConfig& cfg);
RunOutput run_solve(const ExperimentConfig& cfg);

/// Drops the last column (the timing column) from every data row.
std::string strip_timing(const std::string& csv);

void write_outputs(const RunOutput& out, const std::string& dir);

template <class T>
std::vector<T> run_indexed(std::size_t n, int workers, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    const auto pool = static_cast<std::size_t>(std::max(1, workers));
    if (pool == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < std::min(pool, n); ++w)
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace dlab
