#include "dlab/shifts.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace dlab {

Shift Shift::indicator(const std::vector<Site>& sites, int value) {
    if (sites.empty()) throw std::invalid_argument("indicator of an empty list needs a dimension");
    Shift s(sites.front().d);
    for (const Site& v : sites) s.set(v, value);
    return s;
}

Shift Shift::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const int d = j.at("d").get<int>();
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("shift dimension out of range");
    Shift s(d);
    for (const auto& e : j.at("entries")) {
        if (static_cast<int>(e.size()) != d + 1) throw std::invalid_argument("shift entry has wrong arity");
        Site v(d);
        for (int i = 0; i < d; ++i) v[i] = e.at(static_cast<std::size_t>(i)).get<int>();
        s.set(v, s(v) + e.at(static_cast<std::size_t>(d)).get<int>());
    }
    return s;
}

std::string Shift::to_json() const {
    nlohmann::json j;
    j["d"] = d_;
    j["entries"] = nlohmann::json::array();
    for (const auto& [v, val] : vals_) {
        auto row = nlohmann::json::array();
        for (int i = 0; i < d_; ++i) row.push_back(v[i]);
        row.push_back(val);
        j["entries"].push_back(row);
    }
    return j.dump();
}

int Shift::operator()(const Site& v) const {
    auto it = vals_.find(v);
    return it == vals_.end() ? 0 : it->second;
}

void Shift::set(const Site& v, int value) {
    if (v.d != d_) throw std::invalid_argument("shift dimension mismatch");
    if (value == 0)
        vals_.erase(v);
    else
        vals_[v] = value;
}

std::int64_t Shift::l1() const {
    std::int64_t s = 0;
    for (const auto& kv : vals_) s += std::abs(kv.second);
    return s;
}

std::optional<Box> Shift::support_box() const {
    if (vals_.empty()) return std::nullopt;
    std::vector<Site> pts;
    pts.reserve(vals_.size());
    for (const auto& kv : vals_) pts.push_back(kv.first);
    return Box::bounding(pts);
}

Shift& Shift::operator+=(const Shift& o) {
    for (const auto& [v, val] : o.vals_) set(v, (*this)(v) + val);
    return *this;
}

Shift Shift::operator+(const Shift& o) const {
    Shift r = *this;
    r += o;
    return r;
}

Shift Shift::operator-() const {
    Shift r(d_);
    for (const auto& [v, val] : vals_) r.vals_[v] = -val;
    return r;
}

Shift Shift::operator-(const Shift& o) const {
    return *this + (-o);
}

Box shift_window(const Shift& tau, int margin) {
    Box b(Site::origin(tau.dim()), Site::origin(tau.dim()));
    if (auto sb = tau.support_box()) b = b.hull(*sb);
    return b.grown(margin);
}

std::int64_t tv(const Shift& tau) {
    std::int64_t total = 0;
    // Each support site contributes its edges; edges inside the support are
    // seen from both ends, so count them once via the lower endpoint.
    for (const auto& [u, val] : tau.entries()) {
        for (int i = 0; i < tau.dim(); ++i) {
            const Site up = u.plus_axis(i, 1);
            total += std::abs(val - tau(up));
            const Site dn = u.plus_axis(i, -1);
            if (tau(dn) == 0) total += std::abs(val);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------

LevelComponentSet level_components(const Shift& tau, const Box& window) {
    for (const auto& kv : tau.entries())
        if (!window.contains(kv.first) || window.on_frame(kv.first))
            throw WindowTooSmall("window must hold the support with margin 1");
    LevelComponentSet out{window, {}};
    const auto n = static_cast<std::size_t>(window.size());
    std::vector<int> val(n, 0);
    for (const auto& [v, x] : tau.entries()) val[static_cast<std::size_t>(window.index(v))] = x;
    std::vector<std::uint8_t> seen(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start]) continue;
        LevelComponent comp{val[start], SiteSet(window), false};
        std::deque<std::size_t> q{start};
        seen[start] = 1;
        while (!q.empty()) {
            const auto cur = q.front();
            q.pop_front();
            comp.sites.insert_index(static_cast<std::int64_t>(cur));
            const Site s = window.site(static_cast<std::int64_t>(cur));
            if (window.on_frame(s)) comp.background = true;
            for (const Site& nb : neighbors(s)) {
                if (!window.contains(nb)) continue;
                const auto ni = static_cast<std::size_t>(window.index(nb));
                if (seen[ni] || val[ni] != comp.level) continue;
                seen[ni] = 1;
                q.push_back(ni);
            }
        }
        out.comps.push_back(std::move(comp));
    }
    return out;
}

LevelComponentSet level_components(const Shift& tau) {
    return level_components(tau, shift_window(tau, 2));
}

// ---------------------------------------------------------------------------

std::int64_t sequence_length(const std::vector<Site>& seq) {
    std::int64_t s = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) s += l1_distance(seq[i - 1], seq[i]);
    return s;
}

namespace {

// Sites of C that have a neighbour outside C.  A shortest root sequence can
// always be taken to enter each target at such a site.
std::vector<Site> inner_boundary(const SiteSet& C) {
    std::vector<Site> out;
    for (const Site& s : C.members())
        for (const Site& nb : neighbors(s))
            if (C.window().contains(nb) && !C.contains(nb)) {
                out.push_back(s);
                break;
            }
    return out;
}

}  // namespace

TripEntropyResult root_sequence_exact(const Site& origin, const std::vector<std::vector<Site>>& targets) {
    const std::size_t n = targets.size();
    TripEntropyResult res;
    res.exact = true;
    res.certificate = {origin};
    if (n == 0) return res;
    if (n > 20) throw ScaleExceeded("exact root sequence limited to 20 targets");
    for (const auto& t : targets)
        if (t.empty()) throw std::invalid_argument("empty target");

    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    const std::size_t full = (std::size_t{1} << n);
    // dp[mask][t][x]: shortest sequence visiting exactly `mask`, ending at
    // candidate x of target t (t in mask).
    struct Cell {
        std::int64_t len;
        std::int32_t prev_t;
        std::int32_t prev_x;
    };
    std::vector<std::vector<std::vector<Cell>>> dp(full);
    for (std::size_t t = 0; t < n; ++t) {
        auto& row = dp[std::size_t{1} << t];
        row.resize(n);
        row[t].resize(targets[t].size());
        for (std::size_t x = 0; x < targets[t].size(); ++x)
            row[t][x] = {l1_distance(origin, targets[t][x]), -1, -1};
    }
    for (std::size_t mask = 1; mask < full; ++mask) {
        if (dp[mask].empty()) continue;
        for (std::size_t t = 0; t < n; ++t) {
            if (!(mask & (std::size_t{1} << t)) || dp[mask][t].empty()) continue;
            const auto& cur = dp[mask][t];
            for (std::size_t u = 0; u < n; ++u) {
                if (mask & (std::size_t{1} << u)) continue;
                const std::size_t nm = mask | (std::size_t{1} << u);
                if (dp[nm].empty()) dp[nm].resize(n);
                auto& nxt = dp[nm][u];
                if (nxt.empty()) nxt.assign(targets[u].size(), Cell{kInf, -1, -1});
                for (std::size_t y = 0; y < targets[u].size(); ++y) {
                    for (std::size_t x = 0; x < cur.size(); ++x) {
                        const std::int64_t cand = cur[x].len + l1_distance(targets[t][x], targets[u][y]);
                        if (cand < nxt[y].len)
                            nxt[y] = {cand, static_cast<std::int32_t>(t), static_cast<std::int32_t>(x)};
                    }
                }
            }
        }
    }
    std::int64_t best = kInf;
    std::size_t bt = 0, bx = 0;
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t x = 0; x < dp[full - 1][t].size(); ++x)
            if (dp[full - 1][t][x].len < best) {
                best = dp[full - 1][t][x].len;
                bt = t;
                bx = x;
            }
    std::vector<Site> rev;
    std::size_t mask = full - 1;
    std::int32_t t = static_cast<std::int32_t>(bt), x = static_cast<std::int32_t>(bx);
    while (t >= 0) {
        rev.push_back(targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(x)]);
        const Cell c = dp[mask][static_cast<std::size_t>(t)][static_cast<std::size_t>(x)];
        mask &= ~(std::size_t{1} << t);
        t = c.prev_t;
        x = c.prev_x;
    }
    res.certificate.insert(res.certificate.end(), rev.rbegin(), rev.rend());
    res.value = best;
    return res;
}

TripEntropyResult root_sequence_upper(const Site& origin, const std::vector<std::vector<Site>>& targets) {
    const std::size_t n = targets.size();
    TripEntropyResult res;
    res.certificate = {origin};
    if (n == 0) {
        res.exact = true;
        return res;
    }

    // Tree doubling: MST over the origin and one representative per target,
    // visited in DFS preorder.
    std::vector<Site> pts{origin};
    for (const auto& t : targets) {
        const Site* bestp = &t.front();
        for (const Site& s : t)
            if (l1_distance(origin, s) < l1_distance(origin, *bestp)) bestp = &s;
        pts.push_back(*bestp);
    }
    const std::size_t m = pts.size();
    std::vector<std::int64_t> key(m, std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> parent(m, -1);
    std::vector<std::uint8_t> in_tree(m, 0);
    key[0] = 0;
    for (std::size_t it = 0; it < m; ++it) {
        std::size_t u = m;
        for (std::size_t i = 0; i < m; ++i)
            if (!in_tree[i] && (u == m || key[i] < key[u])) u = i;
        in_tree[u] = 1;
        for (std::size_t i = 0; i < m; ++i)
            if (!in_tree[i] && l1_distance(pts[u], pts[i]) < key[i]) {
                key[i] = l1_distance(pts[u], pts[i]);
                parent[i] = static_cast<std::int64_t>(u);
            }
    }
    std::vector<std::vector<std::size_t>> children(m);
    for (std::size_t i = 1; i < m; ++i) children[static_cast<std::size_t>(parent[i])].push_back(i);
    std::vector<Site> tour;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        tour.push_back(pts[u]);
        for (auto it = children[u].rbegin(); it != children[u].rend(); ++it) stack.push_back(*it);
    }

    // Greedy nearest-candidate tour as a second bound.
    std::vector<Site> greedy{origin};
    std::vector<std::uint8_t> done(n, 0);
    for (std::size_t step = 0; step < n; ++step) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        std::size_t bt = 0;
        const Site* bs = nullptr;
        for (std::size_t t = 0; t < n; ++t) {
            if (done[t]) continue;
            for (const Site& s : targets[t]) {
                const auto dd = l1_distance(greedy.back(), s);
                if (dd < best) {
                    best = dd;
                    bt = t;
                    bs = &s;
                }
            }
        }
        done[bt] = 1;
        greedy.push_back(*bs);
    }

    res.certificate = sequence_length(greedy) < sequence_length(tour) ? greedy : tour;
    res.value = sequence_length(res.certificate);
    return res;
}

namespace {

TripEntropyResult solve_targets(const Site& origin, const std::vector<std::vector<Site>>& targets, TripMode mode,
                                std::size_t component_count) {
    if (mode == TripMode::Exact) {
        if (component_count > kExactTripLimit)
            throw ScaleExceeded("exact trip entropy limited to " + std::to_string(kExactTripLimit) + " components");
        return root_sequence_exact(origin, targets);
    }
    auto r = root_sequence_upper(origin, targets);
    r.exact = targets.empty();
    return r;
}

}  // namespace

TripEntropyResult trip_entropy(const Shift& tau, TripMode mode) {
    const auto lc = level_components(tau);
    const Site origin = Site::origin(tau.dim());
    std::vector<std::vector<Site>> targets;
    for (const auto& c : lc.comps) {
        if (c.sites.contains(origin)) continue;
        targets.push_back(inner_boundary(c.sites));
    }
    return solve_targets(origin, targets, mode, lc.size());
}

TripEntropyResult trip_entropy_auto(const Shift& tau) {
    const auto lc = level_components(tau);
    return trip_entropy(tau, lc.size() <= kExactTripLimit ? TripMode::Exact : TripMode::Upper);
}

TripEntropyResult trip_entropy_of_set(const SiteSet& E, TripMode mode) {
    const Site origin = Site::origin(E.dim());
    const Box w = E.window().hull(Box(origin, origin)).grown(1);
    const SiteSet Ew = E.rewindowed(w);
    const auto comps = components(Ew);
    std::vector<std::vector<Site>> targets;
    for (const auto& c : comps) {
        if (c.contains(origin)) continue;
        targets.push_back(inner_boundary(c));
    }
    return solve_targets(origin, targets, mode, comps.size());
}

bool is_admissible(std::int64_t tv_value, std::int64_t trip, double gap, double alpha_par, double alpha_perp,
                   int d, double r_constant) {
    const double t1 = alpha_perp / 2.0 * static_cast<double>(tv_value);
    const double t2 = std::min(alpha_par, alpha_perp) * static_cast<double>(d) / r_constant * static_cast<double>(trip);
    return std::abs(gap) >= std::max(t1, t2);
}

bool is_admissible(const Shift& tau, double gap, double alpha_par, double alpha_perp, int d, double r_constant) {
    if (tau.is_zero()) return std::abs(gap) >= 0.0;
    return is_admissible(tv(tau), trip_entropy_auto(tau).value, gap, alpha_par, alpha_perp, d, r_constant);
}

std::vector<Shift> enumerate_shifts(const Box& support, int lambda_max, int level_bound) {
    const int d = support.dim();
    if (support.size() > 9 || level_bound > 2 || level_bound < 0)
        throw ScaleExceeded("enumeration limited to 9 support sites and levels within +-2");
    std::vector<Shift> out;
    if (lambda_max < 0) return out;

    std::vector<Site> sites;
    for (std::int64_t i = 0; i < support.size(); ++i) sites.push_back(support.site(i));
    const std::size_t n = sites.size();

    // Edges touching the support: (a, b) with b == -1 meaning a zero site.
    std::vector<std::pair<int, int>> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (int i = 0; i < d; ++i) {
            for (int s : {-1, 1}) {
                const Site nb = sites[a].plus_axis(i, s);
                if (support.contains(nb)) {
                    const auto b = static_cast<std::size_t>(support.index(nb));
                    if (b > a) edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
                } else {
                    edges.emplace_back(static_cast<int>(a), -1);
                }
            }
        }

    std::vector<int> val(n, -level_bound);
    while (true) {
        std::int64_t t = 0;
        for (const auto& [a, b] : edges) {
            t += std::abs(val[static_cast<std::size_t>(a)] - (b < 0 ? 0 : val[static_cast<std::size_t>(b)]));
            if (t > lambda_max) break;
        }
        if (t <= lambda_max) {
            Shift s(d);
            for (std::size_t a = 0; a < n; ++a) s.set(sites[a], val[a]);
            out.push_back(std::move(s));
        }
        std::size_t pos = 0;
        while (pos < n && val[pos] == level_bound) val[pos++] = -level_bound;
        if (pos == n) break;
        ++val[pos];
    }
    return out;
}

}  // namespace dlab
