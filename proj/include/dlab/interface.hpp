/**
 * @file interface.hpp
 * @brief Interface analysis of configurations: column profiles, the
 * no-overhang reduction, and the construction of a shift from an interface.
 */
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlab/groundstate.hpp"

namespace dlab {

struct NonTermination : std::logic_error {
    using std::logic_error::logic_error;
};

/// Sign changes above one column; heights are the lower endpoint k of the
/// edge {(v,k),(v,k+1)}.
struct ColumnProfile {
    Site v;
    std::vector<int> osc;  ///< -1 below, +1 above
    std::vector<int> esc;  ///< +1 below, -1 above
    bool layered() const { return osc.size() + esc.size() > 1; }
    /// Unique sign-change height, or nullopt when layered.
    std::optional<int> height() const;
};

class InterfaceProfile {
public:
    explicit InterfaceProfile(const SpinConfiguration& sigma);

    const std::vector<ColumnProfile>& columns() const& { return cols_; }
    std::vector<ColumnProfile> columns() && { return std::move(cols_); }
    /// I(v): unique sign-change height, nullopt for "layered"; 0 off Lambda.
    std::optional<int> height(const Site& v) const;
    bool layered(const Site& v) const { return !height(v).has_value(); }
    std::size_t esc_count() const;
    std::size_t osc_count() const;

private:
    std::map<Site, std::size_t> index_;
    std::vector<ColumnProfile> cols_;
};

InterfaceProfile profile(const SpinConfiguration& sigma);

/// Perpendicular disagreements on edges meeting Lambda x Z.
std::int64_t perpendicular_wall(const SpinConfiguration& sigma);
/// Adjacent pairs of even sign changes at equal heights.
std::int64_t adjacent_esc_pairs(const SpinConfiguration& sigma);

struct ReductionResult {
    SpinConfiguration config;
    int steps = 0;
    bool steps_ok = true;     ///< every step decreased in the partial order
    bool osc_contained = true;
    std::int64_t wall_before = 0;
    std::int64_t wall_after = 0;
    std::string violation;  ///< first failed check, empty when none
};

/// Repeats the even-sign-change removal move until no overhang remains.
ReductionResult no_overhang_reduce(const SpinConfiguration& sigma);

struct InterfaceDecomposition {
    Box window;
    std::vector<std::optional<int>> I;  ///< per window index
    SiteSet V;
    std::vector<SiteSet> components;
    std::vector<SiteSet> interiors;
    std::vector<std::size_t> surrounding;  ///< indices into components
    SiteSet A_tilde;
    SiteSet B_infinity;
};

InterfaceDecomposition decompose(const SpinConfiguration& sigma, const SiteSet& E);

struct ConstructedShift {
    Shift tau;
    InterfaceDecomposition dec;
    std::vector<std::optional<int>> pre_shift;  ///< per dec.window index, nullopt = layered
    std::optional<int> pre_shift_at(const Site& v) const;

    Energy gap_scaled = 0;        ///< GE(eta) - GE(eta^tau)
    Energy sigma_gap_scaled = 0;  ///< H(sigma) - GE(eta^tau)
    double gap = 0;
    bool trusted = false;
    double guarantee_lhs = 0;
    double guarantee_rhs = 0;
    GroundResult shifted_ground;

    bool pre_shift_constant = true;  ///< constant on every B u outer boundary of B
    bool tau_matches_pre = true;
    bool wall_ok = true;  ///< auxiliary wall counts behave as required
    ReductionResult reduction;
    std::vector<std::string> issues;
};

/// Builds the shift for (sigma, E).  `base` is the ground state of `field`
/// on Lambda when already known; otherwise it is solved with `policy`.
ConstructedShift construct_shift(const SpinConfiguration& sigma, const SiteSet& E, const CouplingField& field,
                                 const MPolicy& policy, const GroundResult* base = nullptr);

struct GuaranteeReport {
    LayeringCount layer_E;
    std::int64_t tv_tau = 0;
    std::int64_t trip_tau = 0;
    bool trip_tau_exact = false;
    std::int64_t trip_E = 0;
    bool trip_E_exact = false;

    bool layering_ok = true;
    Energy layering_rhs = 0;
    bool trip_ok = true;
    bool trip_conclusive = true;
    Energy trip_lhs = 0;  ///< 16 G
    Energy trip_rhs = 0;
    int max_flip_height = 0;  ///< largest |k| with sigma(0,k) != rho(k), E = {0} only
    bool height_ok = true;
    bool admissible = true;
    bool components_ok = true;  ///< |A| <= 2(L_par - |A| + L_perp) for interface components
    bool trusted = false;

    bool all_ok() const;
    std::string summary() const;
};

GuaranteeReport verify_guarantees(const ConstructedShift& cs, const SpinConfiguration& sigma, const SiteSet& E,
                                  const CouplingField& field);

/// JSON dump of heights, interface components and the constructed shift.
std::string interface_json(const SpinConfiguration& sigma, const ConstructedShift* cs = nullptr);

}  // namespace dlab
