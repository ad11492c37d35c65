#include "dlab/groundstate.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <set>

#include <json.hpp>

namespace dlab {

SpinConfiguration::SpinConfiguration(const SiteSet& lambda, int M) : lambda_(lambda), M_(M) {
    if (M < 0) throw std::invalid_argument("height bound must be nonnegative");
    cols_ = lambda.members();
    col_of_.assign(static_cast<std::size_t>(lambda.window().size()), -1);
    for (std::size_t c = 0; c < cols_.size(); ++c)
        col_of_[static_cast<std::size_t>(lambda.window().index(cols_[c]))] = static_cast<int>(c);
    spins_.resize(cols_.size() * static_cast<std::size_t>(height_count()));
    for (std::size_t c = 0; c < cols_.size(); ++c)
        for (int k = -M; k <= M; ++k) spins_[index(static_cast<int>(c), k)] = static_cast<std::int8_t>(rho_dob(k));
}

int SpinConfiguration::column_index(const Site& v) const {
    if (!lambda_.window().contains(v)) return -1;
    return col_of_[static_cast<std::size_t>(lambda_.window().index(v))];
}

bool SpinConfiguration::in_cylinder(const Site& v, int k) const {
    return k >= -M_ && k <= M_ && column_index(v) >= 0;
}

int SpinConfiguration::at(const Site& v, int k) const {
    if (k < -M_ || k > M_) return rho_dob(k);
    const int c = column_index(v);
    return c < 0 ? rho_dob(k) : spins_[index(c, k)];
}

void SpinConfiguration::set(const Site& v, int k, int s) {
    const int c = column_index(v);
    if (c < 0 || k < -M_ || k > M_) throw std::out_of_range("site outside the cylinder");
    if (s != 1 && s != -1) throw std::invalid_argument("spins are +1 or -1");
    spins_[index(c, k)] = static_cast<std::int8_t>(s);
}

SpinConfiguration SpinConfiguration::with_height(int M) const {
    SpinConfiguration out(lambda_, M);
    for (std::size_t c = 0; c < cols_.size(); ++c)
        for (int k = -M; k <= M; ++k) out.spins_[out.index(static_cast<int>(c), k)] = static_cast<std::int8_t>(at(cols_[c], k));
    return out;
}

SpinConfiguration SpinConfiguration::restricted(const SiteSet& sub, int M) const {
    SpinConfiguration out(sub, M);
    for (std::size_t c = 0; c < out.cols_.size(); ++c) {
        if (column_index(out.cols_[c]) < 0) throw std::invalid_argument("restriction leaves Lambda");
        for (int k = -M; k <= M; ++k)
            out.spins_[out.index(static_cast<int>(c), k)] = static_cast<std::int8_t>(at(out.cols_[c], k));
    }
    return out;
}

bool SpinConfiguration::operator==(const SpinConfiguration& o) const {
    return M_ == o.M_ && cols_ == o.cols_ && spins_ == o.spins_;
}

// ---------------------------------------------------------------------------

namespace {

/// Cylinder edge with endpoint `a` inside; `b` is the flat index of the other
/// endpoint or -1, in which case `fixed` is its boundary spin.
struct CylEdge {
    Edge e;
    std::size_t a = 0;
    long b = -1;
    int fixed = 0;
};

std::vector<CylEdge> build_edges(const SpinConfiguration& layout) {
    const int d = layout.dim();
    const int M = layout.M();
    const auto& cols = layout.columns();
    std::vector<CylEdge> out;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const Site& v = cols[c];
        const int ci = static_cast<int>(c);
        out.push_back({Edge{{v, -M - 1}, d + 1}, layout.index(ci, -M), -1, -1});
        for (int k = -M; k < M; ++k)
            out.push_back({Edge{{v, k}, d + 1}, layout.index(ci, k), static_cast<long>(layout.index(ci, k + 1)), 0});
        out.push_back({Edge{{v, M}, d + 1}, layout.index(ci, M), -1, 1});
        for (int i = 0; i < d; ++i) {
            for (int step : {-1, 1}) {
                const Site w = v.plus_axis(i, step);
                const int cw = layout.column_index(w);
                if (cw >= 0 && step < 0) continue;  // added from w's side
                for (int k = -M; k <= M; ++k) {
                    CylEdge ce;
                    ce.e = Edge::between({v, k}, {w, k});
                    ce.a = layout.index(ci, k);
                    if (cw >= 0) {
                        ce.b = static_cast<long>(layout.index(cw, k));
                    } else {
                        ce.fixed = rho_dob(k);
                    }
                    out.push_back(ce);
                }
            }
        }
    }
    return out;
}

void check_total(Energy total) {
    if (total >= (Energy{1} << 62)) throw CapacityOverflow("total scaled capacity exceeds 2^62");
}

}  // namespace

std::vector<Edge> cylinder_edges(const SiteSet& lambda, int M) {
    const SpinConfiguration layout(lambda, M);
    std::vector<Edge> out;
    for (const auto& ce : build_edges(layout)) out.push_back(ce.e);
    return out;
}

Energy hamiltonian_scaled(const SpinConfiguration& sigma, const CouplingField& field) {
    Energy total = 0;
    for (const auto& ce : build_edges(sigma)) {
        const int sa = sigma.at_index(ce.a);
        const int sb = ce.b >= 0 ? sigma.at_index(static_cast<std::size_t>(ce.b)) : ce.fixed;
        if (sa != sb) total += 2 * static_cast<Energy>(field.scaled_edge(ce.e));
    }
    return total;
}

double hamiltonian(const SpinConfiguration& sigma, const CouplingField& field) {
    return from_fixed(hamiltonian_scaled(sigma, field));
}

Energy flip_delta_scaled(const SpinConfiguration& sigma, const CouplingField& field,
                         const std::vector<ColumnSite>& block) {
    const int d = sigma.dim();
    std::set<ColumnSite> inside(block.begin(), block.end());
    for (const auto& x : inside)
        if (!sigma.in_cylinder(x.v, x.k)) throw std::out_of_range("flip outside the cylinder");
    auto spin = [&](const ColumnSite& x, bool flipped) {
        const int s = sigma.at(x.v, x.k);
        return flipped && inside.count(x) ? -s : s;
    };
    std::set<Edge> edges;
    for (const auto& x : inside) {
        for (int i = 0; i < d; ++i)
            for (int step : {-1, 1}) edges.insert(Edge::between(x, {x.v.plus_axis(i, step), x.k}));
        edges.insert(Edge::between(x, {x.v, x.k + 1}));
        edges.insert(Edge::between(x, {x.v, x.k - 1}));
    }
    Energy delta = 0;
    for (const auto& e : edges) {
        const ColumnSite y = e.other();
        const bool before = spin(e.base, false) != spin(y, false);
        const bool after = spin(e.base, true) != spin(y, true);
        if (before == after) continue;
        const Energy c = 2 * static_cast<Energy>(field.scaled_edge(e));
        delta += after ? c : -c;
    }
    return delta;
}

// ---------------------------------------------------------------------------

FlowNetwork::FlowNetwork(int nodes) : head_(static_cast<std::size_t>(nodes), -1) {}

void FlowNetwork::add_arc(int u, int v, std::int64_t cap, std::int64_t rev_cap) {
    to_.push_back(v);
    cap_.push_back(cap);
    next_.push_back(head_[static_cast<std::size_t>(u)]);
    head_[static_cast<std::size_t>(u)] = static_cast<int>(to_.size()) - 1;
    to_.push_back(u);
    cap_.push_back(rev_cap);
    next_.push_back(head_[static_cast<std::size_t>(v)]);
    head_[static_cast<std::size_t>(v)] = static_cast<int>(to_.size()) - 1;
}

std::vector<char> FlowNetwork::residual_reachable(int s) const {
    std::vector<char> seen(head_.size(), 0);
    std::vector<int> stack{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int a = head_[static_cast<std::size_t>(u)]; a >= 0; a = next_[static_cast<std::size_t>(a)]) {
            const int v = to_[static_cast<std::size_t>(a)];
            if (cap_[static_cast<std::size_t>(a)] > 0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

namespace {

struct DinicState {
    FlowNetwork& g;
    int t;
    std::vector<int> level, it;

    bool bfs(int s) {
        std::fill(level.begin(), level.end(), -1);
        std::vector<int> q{s};
        level[static_cast<std::size_t>(s)] = 0;
        for (std::size_t qi = 0; qi < q.size(); ++qi) {
            const int u = q[qi];
            for (int a = g.head_[static_cast<std::size_t>(u)]; a >= 0; a = g.next_[static_cast<std::size_t>(a)]) {
                const int v = g.to_[static_cast<std::size_t>(a)];
                if (g.cap_[static_cast<std::size_t>(a)] > 0 && level[static_cast<std::size_t>(v)] < 0) {
                    level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                    q.push_back(v);
                }
            }
        }
        return level[static_cast<std::size_t>(t)] >= 0;
    }

    std::int64_t dfs(int u, std::int64_t pushed) {
        if (u == t) return pushed;
        for (int& a = it[static_cast<std::size_t>(u)]; a >= 0; a = g.next_[static_cast<std::size_t>(a)]) {
            const auto ua = static_cast<std::size_t>(a);
            const int v = g.to_[ua];
            if (g.cap_[ua] <= 0 || level[static_cast<std::size_t>(v)] != level[static_cast<std::size_t>(u)] + 1)
                continue;
            const std::int64_t f = dfs(v, std::min(pushed, g.cap_[ua]));
            if (f > 0) {
                g.cap_[ua] -= f;
                g.cap_[ua ^ 1] += f;
                return f;
            }
        }
        return 0;
    }
};

}  // namespace

std::int64_t DinicSolver::max_flow(FlowNetwork& g, int s, int t) const {
    DinicState st{g, t, std::vector<int>(g.head_.size()), std::vector<int>(g.head_.size())};
    std::int64_t flow = 0;
    while (st.bfs(s)) {
        st.it = g.head_;
        while (const std::int64_t f = st.dfs(s, std::numeric_limits<std::int64_t>::max())) flow += f;
    }
    return flow;
}

bool truncation_certificate(Energy energy_scaled, const CouplingField& field, std::size_t columns, int M) {
    const Energy a_par = to_fixed(field.nu_par().min_support());
    const Energy a_perp = to_fixed(field.nu_perp().min_support());
    return energy_scaled < 2 * a_par * static_cast<Energy>(columns) + 2 * a_perp * (M + 1);
}

GroundResult ground_state(const CouplingField& field, const SiteSet& lambda, int M, const MaxFlowSolver& solver) {
    if (M < 1) throw std::invalid_argument("ground_state needs M >= 1");
    if (lambda.empty()) throw std::invalid_argument("ground_state needs a nonempty Lambda");
    const auto t0 = std::chrono::steady_clock::now();

    GroundResult res;
    res.config = SpinConfiguration(lambda, M);
    res.M_used = M;
    const std::size_t n = res.config.size();
    const int S = static_cast<int>(n);
    const int T = S + 1;

    std::vector<std::int64_t> src(n, 0), snk(n, 0);
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::int64_t>> inner;
    Energy total = 0;
    for (const auto& ce : build_edges(res.config)) {
        const std::int64_t c = field.scaled_edge(ce.e);
        total += c;
        if (ce.b >= 0) {
            inner.push_back({{ce.a, static_cast<std::size_t>(ce.b)}, c});
        } else if (ce.fixed > 0) {
            src[ce.a] += c;
        } else {
            snk[ce.a] += c;
        }
    }
    check_total(total);

    FlowNetwork g(static_cast<int>(n) + 2);
    std::int64_t forced = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t m = std::min(src[i], snk[i]);
        forced += m;
        if (src[i] > m) g.add_arc(S, static_cast<int>(i), src[i] - m);
        if (snk[i] > m) g.add_arc(static_cast<int>(i), T, snk[i] - m);
    }
    for (const auto& [ab, c] : inner) g.add_arc(static_cast<int>(ab.first), static_cast<int>(ab.second), c, c);

    const std::int64_t flow = forced + solver.max_flow(g, S, T);
    const auto reach = g.residual_reachable(S);
    for (std::size_t i = 0; i < n; ++i) res.config.set_index(i, reach[i] ? 1 : -1);

    res.energy_scaled = 2 * static_cast<Energy>(flow);
    res.energy = from_fixed(res.energy_scaled);
    res.certificate_ok = truncation_certificate(res.energy_scaled, field, res.config.columns().size(), M);
    res.stats.nodes = g.node_count();
    res.stats.arcs = g.arc_count();
    res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

GroundResult solve_ground(const CouplingField& field, const SiteSet& lambda, const MPolicy& policy) {
    if (policy.m_start < 1 || policy.m_max < policy.m_start) throw std::invalid_argument("bad M policy");
    int M = policy.m_start;
    while (true) {
        GroundResult r = ground_state(field, lambda, M);
        if (r.certificate_ok || M >= policy.m_max) return r;
        M = std::min(2 * M, policy.m_max);
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Incidence {
    long other = -1;  ///< flat index, or -1 for a boundary spin
    int fixed = 0;
    std::int64_t cap = 0;
    bool parallel = false;
    bool touches = false;
};

/// Gray-code enumeration over the cylinder.  Bit (n-1-i) of the mask is
/// site i, so masks compare like sign vectors with site 0 most significant.
template <class Visit>
void enumerate_cylinder(const CouplingField& field, const SpinConfiguration& layout, const SiteSet* A, Visit&& visit) {
    const std::size_t n = layout.size();
    if (n > static_cast<std::size_t>(kBruteForceLimit)) throw ScaleExceeded("brute force needs |Lambda|(2M+1) <= 24");
    const int d = layout.dim();
    std::vector<std::vector<Incidence>> inc(n);
    Energy energy = 0;
    std::int64_t npar = 0, nperp = 0;
    std::vector<std::int8_t> s(n, -1);
    for (const auto& ce : build_edges(layout)) {
        const std::int64_t c = field.scaled_edge(ce.e);
        const bool par = ce.e.axis == d + 1;
        bool touches = false;
        if (A) touches = A->contains(ce.e.base.v) || A->contains(ce.e.other().v);
        inc[ce.a].push_back({ce.b, ce.fixed, c, par, touches});
        if (ce.b >= 0) inc[static_cast<std::size_t>(ce.b)].push_back({static_cast<long>(ce.a), 0, c, par, touches});
        const int sb = ce.b >= 0 ? -1 : ce.fixed;
        if (sb != -1) {
            energy += 2 * static_cast<Energy>(c);
            if (touches) (par ? npar : nperp) += 1;
        }
    }
    std::uint32_t mask = 0;
    visit(mask, energy, npar, nperp);
    const std::uint32_t total = std::uint32_t{1} << n;
    for (std::uint32_t g = 1; g < total; ++g) {
        const int p = std::countr_zero(g);
        const std::size_t i = n - 1 - static_cast<std::size_t>(p);
        const int si = s[i];
        for (const auto& e : inc[i]) {
            const int so = e.other >= 0 ? s[static_cast<std::size_t>(e.other)] : e.fixed;
            const bool was = si != so;
            energy += was ? -2 * static_cast<Energy>(e.cap) : 2 * static_cast<Energy>(e.cap);
            if (e.touches) (e.parallel ? npar : nperp) += was ? -1 : 1;
        }
        s[i] = static_cast<std::int8_t>(-si);
        mask ^= std::uint32_t{1} << p;
        visit(mask, energy, npar, nperp);
    }
}

void apply_mask(SpinConfiguration& cfg, std::uint32_t mask) {
    const std::size_t n = cfg.size();
    for (std::size_t i = 0; i < n; ++i) cfg.set_index(i, (mask >> (n - 1 - i)) & 1u ? 1 : -1);
}

}  // namespace

GroundResult brute_force_ground(const CouplingField& field, const SiteSet& lambda, int M) {
    const auto t0 = std::chrono::steady_clock::now();
    GroundResult res;
    res.config = SpinConfiguration(lambda, M);
    res.M_used = M;
    bool have = false;
    Energy best = 0, second = 0;
    bool have_second = false;
    std::uint32_t best_mask = 0;
    enumerate_cylinder(field, res.config, nullptr, [&](std::uint32_t mask, Energy e, std::int64_t, std::int64_t) {
        if (!have || e < best || (e == best && mask < best_mask)) {
            if (have) {
                second = best;
                have_second = true;
            }
            best = e;
            best_mask = mask;
            have = true;
        } else if (!have_second || e < second) {
            second = e;
            have_second = true;
        }
    });
    apply_mask(res.config, best_mask);
    res.energy_scaled = best;
    res.energy = from_fixed(best);
    if (have_second) res.runner_up_scaled = second;
    res.certificate_ok = truncation_certificate(best, field, res.config.columns().size(), M);
    res.stats.nodes = static_cast<std::int64_t>(res.config.size());
    res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

LayeringCount layering(const SpinConfiguration& sigma, const SiteSet& A) {
    const int M = sigma.M();
    LayeringCount out;
    for (const Site& v : A.members()) {
        for (int k = -M - 1; k <= M; ++k)
            if (sigma.at(v, k) != sigma.at(v, k + 1)) ++out.parallel;
        for (int i = 0; i < v.d; ++i) {
            const Site w = v.plus_axis(i, 1);
            if (!A.contains(w)) continue;
            for (int k = -M; k <= M; ++k)
                if (sigma.at(v, k) != sigma.at(w, k)) ++out.perpendicular;
        }
    }
    return out;
}

LayeringCount touching_disagreements(const SpinConfiguration& sigma, const SiteSet& A) {
    const int M = sigma.M();
    LayeringCount out;
    for (const Site& v : A.members()) {
        for (int k = -M - 1; k <= M; ++k)
            if (sigma.at(v, k) != sigma.at(v, k + 1)) ++out.parallel;
        for (int i = 0; i < v.d; ++i) {
            for (int step : {-1, 1}) {
                const Site w = v.plus_axis(i, step);
                if (step < 0 && A.contains(w)) continue;
                for (int k = -M; k <= M; ++k)
                    if (sigma.at(v, k) != sigma.at(w, k)) ++out.perpendicular;
            }
        }
    }
    return out;
}

RestrictedResult restricted_ground(const CouplingField& field, const SiteSet& lambda, const SiteSet& A,
                                   std::int64_t b_par, std::int64_t b_perp, int M) {
    for (const Site& a : A.members())
        if (!lambda.contains(a)) throw std::invalid_argument("A must lie inside Lambda");
    if (static_cast<std::int64_t>(A.size()) > b_par || b_perp < 0)
        throw InfeasibleBounds("rho^Dob violates the layering bounds");
    RestrictedResult res;
    res.config = SpinConfiguration(lambda, M);
    bool have = false;
    Energy best = 0;
    std::uint32_t best_mask = 0;
    enumerate_cylinder(field, res.config, &A, [&](std::uint32_t mask, Energy e, std::int64_t np, std::int64_t nq) {
        if (np > b_par || nq > b_perp) return;
        if (!have || e < best || (e == best && mask < best_mask)) {
            best = e;
            best_mask = mask;
            have = true;
        }
    });
    apply_mask(res.config, best_mask);
    res.energy_scaled = best;
    res.energy = from_fixed(best);
    return res;
}

GapResult energy_gap(const CouplingField& field, const SiteSet& lambda, const Shift& tau, const Shift& tau_prime,
                     const MPolicy& policy) {
    GapResult g;
    g.at_tau = solve_ground(field.shifted(tau), lambda, policy);
    g.at_tau_prime = solve_ground(field.shifted(tau_prime), lambda, policy);
    g.gap_scaled = g.at_tau_prime.energy_scaled - g.at_tau.energy_scaled;
    g.gap = from_fixed(g.gap_scaled);
    g.trusted = g.at_tau.certificate_ok && g.at_tau_prime.certificate_ok;
    return g;
}

std::string instance_json(const CouplingField& field, const SiteSet& lambda, int M, bool capacities) {
    using nlohmann::json;
    auto coords = [](const Site& v) {
        json a = json::array();
        for (int i = 0; i < v.d; ++i) a.push_back(v[i]);
        return a;
    };
    json j;
    j["d"] = field.dim();
    j["M"] = M;
    j["seed"] = field.seed();
    j["nu_par"] = field.nu_par().spec();
    j["nu_perp"] = field.nu_perp().spec();
    j["lambda"] = json::array();
    for (const Site& v : lambda.members()) j["lambda"].push_back(coords(v));
    j["accumulated_shift"] = json::parse(field.accumulated_shift().to_json());
    if (capacities) {
        j["capacities"] = json::array();
        for (const Edge& e : cylinder_edges(lambda, M)) {
            json a = coords(e.base.v);
            a.push_back(e.base.k);
            j["capacities"].push_back({{"base", a}, {"axis", e.axis}, {"scaled", field.scaled_edge(e)}});
        }
    }
    return j.dump();
}

}  // namespace dlab
