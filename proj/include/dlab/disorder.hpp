/**
 * @file disorder.hpp
 * @brief Disorder distributions and reproducible coupling fields.
 *
 * A coupling field is never stored: each edge value is a hash of
 * (seed, shifted coordinates, axis) pushed through the inverse CDF.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dlab/lattice.hpp"
#include "dlab/shifts.hpp"

namespace dlab {

struct ZeroSupport : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class Distribution {
public:
    enum class Kind { Uniform, Point, ReluGauss };

    static Distribution uniform(double a, double b);
    static Distribution point(double c);
    /// x -> s * max(x, 0) + C applied to a standard Gaussian.
    static Distribution relu_gauss(double s, double c);
    /// Parses `uniform:a,b`, `point:c` or `relugauss:s,C`.
    static Distribution parse(const std::string& spec);

    Kind kind() const { return kind_; }
    double width() const;
    double min_support() const;
    double quantile(double u) const;
    double mean() const;
    double variance() const;
    bool continuous() const { return kind_ == Kind::Uniform; }
    std::string spec() const;

    bool operator==(const Distribution&) const = default;

private:
    Distribution(Kind k, double p, double q) : kind_(k), p_(p), q_(q) {}
    Kind kind_;
    double p_, q_;
};

/// Standard normal inverse CDF (rational approximation refined by one
/// Halley step; absolute error well below 1e-9 on (0,1)).
double normal_quantile(double u);

/// Uniform value in (0,1) from a 64-bit word (53 significant bits).
double unit_interval(std::uint64_t h);

/// Counter-based hash of a lattice edge position.
std::uint64_t edge_hash(std::uint64_t seed, const Site& v, int k, int axis);

double kappa(const Distribution& nu_par, const Distribution& nu_perp, int d);

struct ConcentrationReport {
    double kappa = 0;
    double lhs = 0;
    double rhs = 0;
    double c0 = 0;
    bool satisfied = false;
};

ConcentrationReport check_condition(const Distribution& nu_par, const Distribution& nu_perp, int d, double c0);

inline constexpr int kFixedPointBits = 32;
inline constexpr double kFixedPointScale = 4294967296.0;  // 2^32

struct CapacityOverflow : std::overflow_error {
    using std::overflow_error::overflow_error;
};

/// Scaled fixed-point representation of a nonnegative real.
std::int64_t to_fixed(double x);
double from_fixed(std::int64_t x);
double from_fixed(__int128 x);

class CouplingField {
public:
    CouplingField(std::uint64_t seed, Distribution nu_par, Distribution nu_perp, int d);

    std::uint64_t seed() const { return seed_; }
    int dim() const { return d_; }
    const Distribution& nu_par() const { return par_; }
    const Distribution& nu_perp() const { return perp_; }
    const Shift& accumulated_shift() const { return acc_; }

    double sample_edge(const Edge& e) const;
    std::int64_t scaled_edge(const Edge& e) const { return to_fixed(sample_edge(e)); }

    /// Value of the edge with base (v, k) along `axis` after applying the
    /// column offset `offset` (the accumulated shift at v).
    double sample_raw(const Site& v, int k, int axis) const;
    int offset(const Site& v) const { return acc_(v); }

    CouplingField shifted(const Shift& tau) const;

private:
    std::uint64_t seed_;
    Distribution par_, perp_;
    int d_;
    Shift acc_;
};

}  // namespace dlab
