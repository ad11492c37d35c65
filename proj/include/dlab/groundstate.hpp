/**
 * @file groundstate.hpp
 * @brief Ground configurations on truncated cylinders Lambda x {-M..M}
 * with Dobrushin boundary conditions, computed as minimum cuts.
 *
 * Energies are carried as scaled integers (capacity * 2^32, summed in
 * 128 bits); the double views are for reporting only.
 */
#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dlab/disorder.hpp"
#include "dlab/lattice.hpp"
#include "dlab/shifts.hpp"

namespace dlab {

using Energy = __int128;

struct InfeasibleBounds : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline int rho_dob(int k) { return k >= 1 ? 1 : -1; }

class SpinConfiguration {
public:
    SpinConfiguration() = default;
    /// Starts at rho^Dob.
    SpinConfiguration(const SiteSet& lambda, int M);

    int dim() const { return lambda_.dim(); }
    int M() const { return M_; }
    int height_count() const { return 2 * M_ + 1; }
    const SiteSet& lambda() const { return lambda_; }
    const std::vector<Site>& columns() const& { return cols_; }
    std::vector<Site> columns() && { return std::move(cols_); }
    std::size_t size() const { return spins_.size(); }

    /// Position of v in columns(), or -1 when v is outside Lambda.
    int column_index(const Site& v) const;
    bool in_cylinder(const Site& v, int k) const;

    /// Spin at (v, k); rho^Dob outside the cylinder.
    int at(const Site& v, int k) const;
    int at_index(std::size_t i) const { return spins_[i]; }
    void set(const Site& v, int k, int s);
    void set_index(std::size_t i, int s) { spins_[i] = static_cast<std::int8_t>(s); }
    void flip(const Site& v, int k) { set(v, k, -at(v, k)); }

    /// Flat index: column-major in lexicographic column order, heights -M..M.
    std::size_t index(int col, int k) const {
        return static_cast<std::size_t>(col) * static_cast<std::size_t>(height_count()) +
               static_cast<std::size_t>(k + M_);
    }

    /// Same spins over a different height range (rho^Dob where new).
    SpinConfiguration with_height(int M) const;
    /// Restriction to a sub-cylinder over `sub` (which must lie in Lambda).
    SpinConfiguration restricted(const SiteSet& sub, int M) const;

    bool operator==(const SpinConfiguration& o) const;

private:
    SiteSet lambda_;
    int M_ = 0;
    std::vector<Site> cols_;
    std::vector<int> col_of_;  ///< window index -> column or -1
    std::vector<std::int8_t> spins_;
};

/// Every edge meeting the cylinder with at least one endpoint inside it,
/// each listed once in canonical form.
std::vector<Edge> cylinder_edges(const SiteSet& lambda, int M);

Energy hamiltonian_scaled(const SpinConfiguration& sigma, const CouplingField& field);
double hamiltonian(const SpinConfiguration& sigma, const CouplingField& field);

/// H(sigma with `block` flipped) - H(sigma), computed locally.
Energy flip_delta_scaled(const SpinConfiguration& sigma, const CouplingField& field,
                         const std::vector<ColumnSite>& block);

struct FlowStats {
    std::int64_t nodes = 0;
    std::int64_t arcs = 0;
    double seconds = 0;
};

struct GroundResult {
    SpinConfiguration config;
    Energy energy_scaled = 0;
    double energy = 0;
    bool certificate_ok = false;
    int M_used = 0;
    FlowStats stats;
    /// Second-lowest energy over distinct configurations (brute force only).
    std::optional<Energy> runner_up_scaled;
};

/// Directed capacitated graph with paired residual arcs.
class FlowNetwork {
public:
    explicit FlowNetwork(int nodes);
    int node_count() const { return static_cast<int>(head_.size()); }
    std::int64_t arc_count() const { return static_cast<std::int64_t>(to_.size()); }
    /// Arc u -> v with capacity `cap` and reverse capacity `rev_cap`.
    void add_arc(int u, int v, std::int64_t cap, std::int64_t rev_cap = 0);

    /// Nodes reachable from s in the residual graph.
    std::vector<char> residual_reachable(int s) const;

    std::vector<int> head_, next_, to_;
    std::vector<std::int64_t> cap_;
};

class MaxFlowSolver {
public:
    virtual ~MaxFlowSolver() = default;
    /// Saturates a maximum flow in `g` (mutating residual capacities).
    virtual std::int64_t max_flow(FlowNetwork& g, int s, int t) const = 0;
};

class DinicSolver : public MaxFlowSolver {
public:
    std::int64_t max_flow(FlowNetwork& g, int s, int t) const override;
};

/// Truncation certificate: no configuration with a spin flipped at height
/// beyond M can have energy below 2 a_par |Lambda| + 2 a_perp (M + 1).
bool truncation_certificate(Energy energy_scaled, const CouplingField& field, std::size_t columns, int M);

GroundResult ground_state(const CouplingField& field, const SiteSet& lambda, int M,
                          const MaxFlowSolver& solver = DinicSolver{});

struct MPolicy {
    int m_start = 4;
    int m_max = 8;
};

/// Doubles M from m_start until the certificate holds or m_max is reached.
GroundResult solve_ground(const CouplingField& field, const SiteSet& lambda, const MPolicy& policy = {});

inline constexpr int kBruteForceLimit = 24;

GroundResult brute_force_ground(const CouplingField& field, const SiteSet& lambda, int M);

struct LayeringCount {
    std::int64_t parallel = 0;
    std::int64_t perpendicular = 0;
    bool operator==(const LayeringCount&) const = default;
};

LayeringCount layering(const SpinConfiguration& sigma, const SiteSet& A);

/// Disagreement counts over edges with at least one projection in A.
LayeringCount touching_disagreements(const SpinConfiguration& sigma, const SiteSet& A);

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

struct RestrictedResult {
    Energy energy_scaled = 0;
    double energy = 0;
    SpinConfiguration config;
};

RestrictedResult restricted_ground(const CouplingField& field, const SiteSet& lambda, const SiteSet& A,
                                   std::int64_t b_par, std::int64_t b_perp, int M);

struct GapResult {
    Energy gap_scaled = 0;
    double gap = 0;
    bool trusted = false;
    GroundResult at_tau;        ///< ground state of eta^tau
    GroundResult at_tau_prime;  ///< ground state of eta^tau'
};

/// G(tau, tau') = GE(eta^tau') - GE(eta^tau).
GapResult energy_gap(const CouplingField& field, const SiteSet& lambda, const Shift& tau, const Shift& tau_prime,
                     const MPolicy& policy = {});

/// JSON description of an instance; capacities lists every cylinder edge.
std::string instance_json(const CouplingField& field, const SiteSet& lambda, int M, bool capacities = false);

}  // namespace dlab
