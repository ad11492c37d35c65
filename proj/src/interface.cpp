#include "dlab/interface.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dlab {

std::optional<int> ColumnProfile::height() const {
    if (layered() || osc.empty()) return std::nullopt;
    return osc.front();
}

namespace {

ColumnProfile column_changes(const SpinConfiguration& sigma, const Site& v) {
    ColumnProfile p;
    p.v = v;
    const int M = sigma.M();
    for (int k = -M - 1; k <= M; ++k) {
        const int a = sigma.at(v, k);
        const int b = sigma.at(v, k + 1);
        if (a < b) p.osc.push_back(k);
        if (a > b) p.esc.push_back(k);
    }
    return p;
}

}  // namespace

InterfaceProfile::InterfaceProfile(const SpinConfiguration& sigma) {
    for (const Site& v : sigma.columns()) {
        index_[v] = cols_.size();
        cols_.push_back(column_changes(sigma, v));
    }
}

std::optional<int> InterfaceProfile::height(const Site& v) const {
    const auto it = index_.find(v);
    if (it == index_.end()) return 0;
    return cols_[it->second].height();
}

std::size_t InterfaceProfile::esc_count() const {
    std::size_t n = 0;
    for (const auto& c : cols_) n += c.esc.size();
    return n;
}

std::size_t InterfaceProfile::osc_count() const {
    std::size_t n = 0;
    for (const auto& c : cols_) n += c.osc.size();
    return n;
}

InterfaceProfile profile(const SpinConfiguration& sigma) { return InterfaceProfile(sigma); }

std::int64_t perpendicular_wall(const SpinConfiguration& sigma) {
    return touching_disagreements(sigma, sigma.lambda()).perpendicular;
}

std::int64_t adjacent_esc_pairs(const SpinConfiguration& sigma) {
    const InterfaceProfile prof(sigma);
    std::set<std::pair<Site, int>> esc;
    for (const auto& c : prof.columns())
        for (int k : c.esc) esc.insert({c.v, k});
    std::int64_t n = 0;
    for (const auto& [v, k] : esc)
        for (int i = 0; i < v.d; ++i)
            if (esc.count({v.plus_axis(i, 1), k})) ++n;
    return n;
}

// ---------------------------------------------------------------------------

namespace {

using OscSet = std::set<std::pair<Site, int>>;

OscSet osc_set(const SpinConfiguration& sigma) {
    OscSet out;
    const InterfaceProfile prof(sigma);
    for (const auto& c : prof.columns())
        for (int k : c.osc) out.insert({c.v, k});
    return out;
}

}  // namespace

ReductionResult no_overhang_reduce(const SpinConfiguration& sigma) {
    ReductionResult res;
    res.config = sigma;
    SpinConfiguration& cur = res.config;
    const OscSet osc_in = osc_set(sigma);
    res.wall_before = perpendicular_wall(sigma);
    const int d = sigma.dim();

    // Every step shrinks OSC or, with OSC fixed, raises the adjacent-ESC count,
    // which is at most d times the number of ESC edges.
    const auto n_osc = static_cast<std::int64_t>(osc_in.size());
    const std::int64_t guard = (n_osc + 1) * (d * n_osc + 1);

    OscSet osc_prev = osc_in;
    std::int64_t wall_prev = res.wall_before;
    std::int64_t nesc_prev = adjacent_esc_pairs(cur);
    auto fail = [&](const std::string& why) {
        if (res.violation.empty()) res.violation = why;
        res.steps_ok = false;
    };

    while (true) {
        const InterfaceProfile prof(cur);
        const ColumnProfile* first = nullptr;
        for (const auto& c : prof.columns())
            if (!c.esc.empty()) {
                first = &c;
                break;
            }
        if (!first) break;
        if (res.steps >= guard) throw NonTermination("no_overhang_reduce exceeded its iteration bound");

        const int k0 = first->esc.front();
        std::vector<Site> delta;
        for (const auto& c : prof.columns())
            if (std::find(c.esc.begin(), c.esc.end(), k0) != c.esc.end()) delta.push_back(c.v);
        const std::set<Site> in_delta(delta.begin(), delta.end());
        // One entry per boundary edge of delta.
        std::vector<Site> outer;
        for (const Site& v : delta)
            for (const Site& w : neighbors(v))
                if (!in_delta.count(w)) outer.push_back(w);
        auto S = [&](int k) {
            int s = 0;
            for (const Site& w : outer) s += cur.at(w, k);
            return s;
        };

        if (S(k0) <= 0) {
            int k1 = k0;
            auto ok = [&](int k) {
                for (const Site& v : delta)
                    if (cur.at(v, k) != 1) return false;
                for (const Site& w : outer)
                    if (cur.at(w, k) > cur.at(w, k0)) return false;
                return true;
            };
            while (ok(k1 - 1)) --k1;
            for (const Site& v : delta)
                for (int k = k1; k <= k0; ++k) cur.set(v, k, -1);
        } else {
            if (S(k0 + 1) < 0) fail("S(k0) > 0 and S(k0+1) < 0");
            int k2 = k0 + 1;
            auto ok = [&](int k) {
                for (const Site& v : delta)
                    if (cur.at(v, k) != -1) return false;
                for (const Site& w : outer)
                    if (cur.at(w, k) < cur.at(w, k0 + 1)) return false;
                return true;
            };
            while (ok(k2 + 1)) ++k2;
            for (const Site& v : delta)
                for (int k = k0 + 1; k <= k2; ++k) cur.set(v, k, 1);
        }
        ++res.steps;

        const OscSet osc_now = osc_set(cur);
        const std::int64_t wall_now = perpendicular_wall(cur);
        const std::int64_t nesc_now = adjacent_esc_pairs(cur);
        if (wall_now > wall_prev) fail("perpendicular wall grew at step " + std::to_string(res.steps));
        const bool subset = std::includes(osc_prev.begin(), osc_prev.end(), osc_now.begin(), osc_now.end());
        const bool strict = subset && osc_now.size() < osc_prev.size();
        const bool same_more = osc_now == osc_prev && nesc_now > nesc_prev;
        if (!strict && !same_more) fail("step " + std::to_string(res.steps) + " did not decrease in the order");
        osc_prev = osc_now;
        wall_prev = wall_now;
        nesc_prev = nesc_now;
    }

    const OscSet osc_out = osc_set(cur);
    res.osc_contained = std::includes(osc_in.begin(), osc_in.end(), osc_out.begin(), osc_out.end());
    if (!res.osc_contained) fail("OSC(out) not contained in OSC(in)");
    res.wall_after = perpendicular_wall(cur);
    if (res.wall_after > res.wall_before) fail("perpendicular wall grew overall");
    return res;
}

// ---------------------------------------------------------------------------

InterfaceDecomposition decompose(const SpinConfiguration& sigma, const SiteSet& E) {
    const auto cols = sigma.columns();
    if (cols.empty()) throw std::invalid_argument("empty Lambda");
    InterfaceDecomposition dec;
    const Box W = Box::bounding(cols).grown(3);
    dec.window = W;
    const InterfaceProfile prof(sigma);

    const auto n = static_cast<std::size_t>(W.size());
    dec.I.resize(n);
    for (std::size_t i = 0; i < n; ++i) dec.I[i] = prof.height(W.site(static_cast<std::int64_t>(i)));
    auto I_at = [&](const Site& v) -> std::optional<int> {
        return W.contains(v) ? dec.I[static_cast<std::size_t>(W.index(v))] : std::optional<int>(0);
    };

    dec.V = SiteSet(W);
    for (std::size_t i = 0; i < n; ++i) {
        const Site v = W.site(static_cast<std::int64_t>(i));
        const auto iv = dec.I[i];
        for (const Site& u : neighbors(v)) {
            const auto iu = I_at(u);
            if (iu != iv || (!iu && !iv)) {
                dec.V.insert_index(static_cast<std::int64_t>(i));
                break;
            }
        }
    }
    dec.components = components(dec.V, Adjacency::L1);
    dec.A_tilde = SiteSet(W);
    for (std::size_t c = 0; c < dec.components.size(); ++c) {
        dec.interiors.push_back(interior(dec.components[c]));
        bool hit = false;
        for (const Site& e : E.members())
            if (dec.components[c].contains(e) || dec.interiors[c].contains(e)) hit = true;
        if (!hit) continue;
        dec.surrounding.push_back(c);
        for (auto idx : dec.components[c].member_indices()) dec.A_tilde.insert_index(idx);
    }

    SiteSet rest(W);
    for (std::size_t i = 0; i < n; ++i)
        if (!dec.A_tilde.contains_index(static_cast<std::int64_t>(i))) rest.insert_index(static_cast<std::int64_t>(i));
    dec.B_infinity = SiteSet(W);
    for (const auto& B : components(rest, Adjacency::L1)) {
        bool frame = false;
        for (const Site& s : B.members())
            if (W.on_frame(s)) {
                frame = true;
                break;
            }
        if (frame)
            for (auto idx : B.member_indices()) dec.B_infinity.insert_index(idx);
    }
    return dec;
}

std::optional<int> ConstructedShift::pre_shift_at(const Site& v) const {
    if (!dec.window.contains(v)) return 0;
    return pre_shift[static_cast<std::size_t>(dec.window.index(v))];
}

ConstructedShift construct_shift(const SpinConfiguration& sigma, const SiteSet& E, const CouplingField& field,
                                 const MPolicy& policy, const GroundResult* base) {
    for (const Site& e : E.members())
        if (sigma.column_index(e) < 0) throw std::invalid_argument("E must lie inside Lambda");
    if (E.empty()) throw std::invalid_argument("E must be nonempty");

    ConstructedShift cs;
    cs.dec = decompose(sigma, E);
    const auto& dec = cs.dec;
    const Box& W = dec.window;
    const auto n = static_cast<std::size_t>(W.size());
    const int d = sigma.dim();

    // Pre-shift.
    cs.pre_shift.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::int64_t>(i);
        if (dec.B_infinity.contains_index(idx)) continue;
        if (dec.A_tilde.contains_index(idx)) {
            cs.pre_shift[i] = dec.I[i];
            continue;
        }
        const Site v = W.site(idx);
        std::optional<std::size_t> inner;
        for (std::size_t c : dec.surrounding) {
            if (!dec.interiors[c].contains(v)) continue;
            if (!inner || dec.interiors[c].size() < dec.interiors[*inner].size()) inner = c;
        }
        if (!inner) {
            cs.issues.push_back("no surrounding component encloses " + v.str());
            continue;
        }
        const SiteSet vis = visible_boundary(dec.components[*inner], v);
        std::optional<std::optional<int>> value;
        for (const Site& u : vis.members()) {
            const auto iu = W.contains(u) ? dec.I[static_cast<std::size_t>(W.index(u))] : std::optional<int>(0);
            if (!value) {
                value = iu;
            } else if (*value != iu) {
                cs.issues.push_back("visible boundary of " + v.str() + " is not level");
            }
        }
        if (!value || !value->has_value()) {
            cs.issues.push_back("visible boundary of " + v.str() + " has no integer height");
            continue;
        }
        cs.pre_shift[i] = *value;
    }

    // The pre-shift is constant on each B together with its outer boundary.
    {
        SiteSet rest(W);
        for (std::size_t i = 0; i < n; ++i)
            if (!dec.A_tilde.contains_index(static_cast<std::int64_t>(i))) rest.insert_index(static_cast<std::int64_t>(i));
        for (const auto& B : components(rest, Adjacency::L1)) {
            const auto first = cs.pre_shift_at(*B.smallest());
            auto check = [&](const Site& s) {
                if (cs.pre_shift_at(s) != first || !first.has_value()) cs.pre_shift_constant = false;
            };
            for (const Site& s : B.members()) check(s);
            for (const Site& s : boundaries(B).outer.members())
                if (W.contains(s)) check(s);
        }
        if (!cs.pre_shift_constant) cs.issues.push_back("pre-shift not constant on a complement component");
    }

    // Auxiliary configuration: flat at integer pre-shift values, sigma's
    // column where layered.
    int hmax = 0;
    SiteSet cols(W);
    for (const Site& v : sigma.columns()) cols.insert(v);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = cs.pre_shift[i];
        if (p && *p != 0) cols.insert_index(static_cast<std::int64_t>(i));
        if (p) hmax = std::max(hmax, std::abs(*p));
    }
    const int Maux = std::max(sigma.M(), hmax + 1);
    SpinConfiguration aux(cols, Maux);
    for (const Site& v : aux.columns()) {
        const auto p = cs.pre_shift_at(v);
        for (int k = -Maux; k <= Maux; ++k) aux.set(v, k, p ? (k > *p ? 1 : -1) : sigma.at(v, k));
    }

    // Wall of the auxiliary configuration equals sigma's wall inside A~.
    std::int64_t wall_inside = 0;
    for (const Site& u : dec.A_tilde.members())
        for (int i = 0; i < d; ++i) {
            const Site w = u.plus_axis(i, 1);
            if (!dec.A_tilde.contains(w)) continue;
            for (int k = -Maux; k <= Maux; ++k)
                if (sigma.at(u, k) != sigma.at(w, k)) ++wall_inside;
        }
    if (perpendicular_wall(aux) != wall_inside) {
        cs.wall_ok = false;
        cs.issues.push_back("auxiliary wall differs from the wall inside A~");
    }

    cs.reduction = no_overhang_reduce(aux);
    if (!cs.reduction.steps_ok) {
        cs.wall_ok = false;
        cs.issues.push_back("reduction: " + cs.reduction.violation);
    }

    cs.tau = Shift(d);
    const InterfaceProfile reduced(cs.reduction.config);
    for (const auto& c : reduced.columns()) {
        const auto h = c.height();
        if (!h) {
            cs.issues.push_back("reduced column " + c.v.str() + " still layered");
            continue;
        }
        cs.tau.set(c.v, *h);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = cs.pre_shift[i];
        if (p && cs.tau(W.site(static_cast<std::int64_t>(i))) != *p) cs.tau_matches_pre = false;
    }
    if (!cs.tau_matches_pre) cs.issues.push_back("tau differs from an integer pre-shift value");

    // Energies.
    const SiteSet& lambda = sigma.lambda();
    GroundResult own;
    if (!base) {
        own = solve_ground(field, lambda, policy);
        base = &own;
    }
    cs.shifted_ground = solve_ground(field.shifted(cs.tau), lambda, policy);
    cs.gap_scaled = base->energy_scaled - cs.shifted_ground.energy_scaled;
    cs.sigma_gap_scaled = hamiltonian_scaled(sigma, field) - cs.shifted_ground.energy_scaled;
    cs.gap = from_fixed(cs.gap_scaled);
    cs.trusted = base->certificate_ok && cs.shifted_ground.certificate_ok;

    const auto lay = layering(sigma, E);
    const double a_par = field.nu_par().min_support();
    const double a_perp = field.nu_perp().min_support();
    cs.guarantee_lhs = from_fixed(cs.sigma_gap_scaled);
    cs.guarantee_rhs = 2 * a_par * static_cast<double>(lay.parallel - static_cast<std::int64_t>(E.size())) +
                       2 * a_perp * static_cast<double>(std::max(lay.perpendicular, tv(cs.tau)));
    return cs;
}

// ---------------------------------------------------------------------------

bool GuaranteeReport::all_ok() const {
    return layering_ok && trip_ok && height_ok && admissible && components_ok;
}

std::string GuaranteeReport::summary() const {
    std::ostringstream os;
    os << "layering=" << (layering_ok ? "ok" : "FAIL") << " trip=" << (trip_ok ? "ok" : "FAIL")
       << (trip_conclusive ? "" : "(inconclusive)") << " height=" << (height_ok ? "ok" : "FAIL")
       << " admissible=" << (admissible ? "ok" : "FAIL") << " components=" << (components_ok ? "ok" : "FAIL")
       << " tv=" << tv_tau << " R=" << trip_tau << (trip_tau_exact ? "" : "(upper)");
    return os.str();
}

GuaranteeReport verify_guarantees(const ConstructedShift& cs, const SpinConfiguration& sigma, const SiteSet& E,
                                  const CouplingField& field) {
    GuaranteeReport r;
    const int d = sigma.dim();
    const Energy a_par = to_fixed(field.nu_par().min_support());
    const Energy a_perp = to_fixed(field.nu_perp().min_support());
    const Energy a_min = std::min(a_par, a_perp);
    const auto nE = static_cast<std::int64_t>(E.size());
    r.trusted = cs.trusted;

    r.layer_E = layering(sigma, E);
    r.tv_tau = tv(cs.tau);
    const auto trip = trip_entropy_auto(cs.tau);
    r.trip_tau = trip.value;
    r.trip_tau_exact = trip.exact;
    const auto tripE = E.size() <= kExactTripLimit ? trip_entropy_of_set(E, TripMode::Exact)
                                                   : trip_entropy_of_set(E, TripMode::Upper);
    r.trip_E = tripE.value;
    r.trip_E_exact = tripE.exact;

    const Energy G = cs.sigma_gap_scaled;
    r.layering_rhs = 2 * a_par * (r.layer_E.parallel - nE) + 2 * a_perp * std::max(r.layer_E.perpendicular, r.tv_tau);
    r.layering_ok = G >= r.layering_rhs;

    r.trip_lhs = 16 * G;
    r.trip_rhs = a_min * d * (r.trip_tau - r.trip_E - 2 * (nE - 1));
    r.trip_ok = r.trip_lhs >= r.trip_rhs;
    // An upper bound for R(tau) can only make a failure spurious; an upper
    // bound for R(E) can make a pass spurious.
    r.trip_conclusive = r.trip_E_exact && (r.trip_ok || r.trip_tau_exact);
    if (!r.trip_conclusive) r.trip_ok = true;

    const Site origin = Site::origin(d);
    if (E.size() == 1 && E.contains(origin)) {
        for (int k = -sigma.M(); k <= sigma.M(); ++k)
            if (sigma.at(origin, k) != rho_dob(k)) r.max_flip_height = std::max(r.max_flip_height, std::abs(k));
        r.height_ok = cs.gap_scaled >= 2 * static_cast<Energy>(r.max_flip_height) * a_perp;
    }

    if (!cs.tau.is_zero())
        r.admissible = is_admissible(r.tv_tau, r.trip_tau, cs.gap, field.nu_par().min_support(),
                                     field.nu_perp().min_support(), d);

    for (const auto& A : cs.dec.components) {
        const auto lay = layering(sigma, A);
        const auto a = static_cast<std::int64_t>(A.size());
        if (a > 2 * (lay.parallel - a + lay.perpendicular)) r.components_ok = false;
    }
    return r;
}

std::string interface_json(const SpinConfiguration& sigma, const ConstructedShift* cs) {
    using nlohmann::json;
    auto coords = [](const Site& v) {
        json a = json::array();
        for (int i = 0; i < v.d; ++i) a.push_back(v[i]);
        return a;
    };
    json j;
    j["d"] = sigma.dim();
    j["M"] = sigma.M();
    j["columns"] = json::array();
    const InterfaceProfile prof(sigma);
    for (const auto& c : prof.columns()) {
        json col;
        col["site"] = coords(c.v);
        col["layered"] = c.layered();
        if (const auto h = c.height()) col["height"] = *h;
        col["osc"] = c.osc;
        col["esc"] = c.esc;
        j["columns"].push_back(col);
    }
    if (cs) {
        j["components"] = json::array();
        for (std::size_t c = 0; c < cs->dec.components.size(); ++c) {
            json comp;
            comp["sites"] = json::array();
            for (const Site& s : cs->dec.components[c].members()) comp["sites"].push_back(coords(s));
            comp["surrounding"] =
                std::find(cs->dec.surrounding.begin(), cs->dec.surrounding.end(), c) != cs->dec.surrounding.end();
            j["components"].push_back(comp);
        }
        j["shift"] = json::parse(cs->tau.to_json());
        j["gap_scaled"] = static_cast<std::int64_t>(cs->gap_scaled);
        j["gap"] = cs->gap;
        j["trusted"] = cs->trusted;
    }
    return j.dump();
}

}  // namespace dlab
