/**
 * @file graining.hpp
 * @brief Coarse and fine grainings of shifts, compatible index sets,
 * graining chains and the audit of the deterministic graining bounds.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlab/shifts.hpp"

namespace dlab {

/// Rounding of a cell average.  HalfDown maps k+1/2 to k; HalfUp exists
/// only so that the audit can be exercised against a mutant.
enum class Rounding { HalfDown, HalfUp };

struct SearchExhausted : std::logic_error {
    using std::logic_error::logic_error;
};

struct GrainingSpec {
    enum class Kind { Coarse, Fine };
    Kind kind = Kind::Coarse;
    int N = 1;
    std::vector<int> I;  ///< 1-based coordinate indices for Fine

    static GrainingSpec coarse(int n);
    static GrainingSpec fine(std::vector<int> idx);
    std::string label() const;
};

/// Nearest integer to sum/n under the given tie convention (n > 0).
std::int64_t round_average(std::int64_t sum, std::int64_t n, Rounding rounding = Rounding::HalfDown);

/// Lowest corner of the cell containing v.
Site cell_anchor(const Site& v, const GrainingSpec& spec);

Shift grain(const Shift& tau, const GrainingSpec& spec, Rounding rounding = Rounding::HalfDown);

struct CompatibilityReport {
    std::vector<int> I;
    std::int64_t tv_grained = 0;
    std::int64_t tv_original = 0;
    double tv_ratio = 0;  ///< TV(tau_I) / TV(tau), 0 when TV(tau) = 0
    std::int64_t l1_diff = 0;
    bool compatible = false;
};

/// All r-subsets of {1..d} in lexicographic order.
std::vector<std::vector<int>> index_subsets(int d, int r);

CompatibilityReport compatibility(const Shift& tau, const std::vector<int>& I,
                                  Rounding rounding = Rounding::HalfDown);

/// Lexicographically smallest compatible I with |I| = r.
CompatibilityReport find_compatible(const Shift& tau, int r, Rounding rounding = Rounding::HalfDown);

/// Smallest K with 2^K > 2^{1/d} (TV / 2d)^{1/(d-1)}; requires d >= 2.
int chain_depth(std::int64_t total_variation, int d);

struct GrainingChain {
    std::vector<Shift> shifts;        ///< tau, tau_I, tau_2, ..., tau_{2^K}
    std::vector<std::string> labels;  ///< "tau", "I=1,2", "N=2", ...
    std::vector<int> I;
    int K = 0;
};

GrainingChain graining_chain(const Shift& tau, int r, Rounding rounding = Rounding::HalfDown);

struct AuditRow {
    std::string check;
    double lhs = 0;
    double rhs = 0;
    bool pass = true;
};

struct AuditOptions {
    int fine_samples = 2000;
    std::uint64_t seed = 1;
    Rounding rounding = Rounding::HalfDown;
    bool trip_checks = true;
    double r_constant = 200.0;
};

std::vector<AuditRow> audit_grainings(const Shift& tau, const AuditOptions& opts = {});

/// Fixed small cases pinning the rounding convention.
std::vector<AuditRow> rounding_convention_checks(Rounding rounding = Rounding::HalfDown);

}  // namespace dlab
