#include "dlab/lattice.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>

namespace dlab {

Site::Site(std::initializer_list<int> xs) : d(static_cast<int>(xs.size())) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("site dimension out of range");
    std::copy(xs.begin(), xs.end(), c.begin());
}

std::string Site::str() const {
    std::string s = "(";
    for (int i = 0; i < d; ++i) {
        if (i) s += ",";
        s += std::to_string(c[static_cast<std::size_t>(i)]);
    }
    return s + ")";
}

int l1_distance(const Site& a, const Site& b) {
    int s = 0;
    for (int i = 0; i < a.d; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

Site operator+(const Site& a, const Site& b) {
    Site s = a;
    for (int i = 0; i < a.d; ++i) s[i] += b[i];
    return s;
}

ColumnSite Edge::other() const {
    ColumnSite o = base;
    if (axis == base.v.d + 1)
        ++o.k;
    else
        o.v[axis - 1] += 1;
    return o;
}

Edge Edge::between(const ColumnSite& x, const ColumnSite& y) {
    const int d = x.v.d;
    const ColumnSite& lo = (x < y) ? x : y;
    const ColumnSite& hi = (x < y) ? y : x;
    if (lo.v == hi.v) {
        if (hi.k - lo.k != 1) throw std::invalid_argument("sites are not adjacent");
        return Edge{lo, d + 1};
    }
    if (lo.k != hi.k || l1_distance(lo.v, hi.v) != 1) throw std::invalid_argument("sites are not adjacent");
    for (int i = 0; i < d; ++i)
        if (lo.v[i] != hi.v[i]) return Edge{lo, i + 1};
    throw std::logic_error("unreachable");
}

EdgeClass edge_class(const Edge& e) {
    return e.axis == e.base.v.d + 1 ? EdgeClass::Parallel : EdgeClass::Perpendicular;
}

// ---------------------------------------------------------------------------

Box::Box(Site lo, Site hi) : lo_(lo), hi_(hi) {
    if (lo.d != hi.d || lo.d < 1 || lo.d > kMaxDim) throw std::invalid_argument("bad box dimension");
    size_ = 1;
    for (int i = lo.d - 1; i >= 0; --i) {
        stride_[static_cast<std::size_t>(i)] = size_;
        const int e = hi[i] - lo[i] + 1;
        if (e <= 0) {
            size_ = 0;
            return;
        }
        size_ *= e;
    }
}

Box Box::cube(int d, int radius) {
    Site lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = -radius;
        hi[i] = radius;
    }
    return Box(lo, hi);
}

Box Box::bounding(const std::vector<Site>& pts) {
    if (pts.empty()) throw std::invalid_argument("bounding box of no points");
    Site lo = pts.front(), hi = pts.front();
    for (const Site& p : pts)
        for (int i = 0; i < p.d; ++i) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    return Box(lo, hi);
}

bool Box::contains(const Site& s) const {
    if (s.d != lo_.d || size_ == 0) return false;
    for (int i = 0; i < s.d; ++i)
        if (s[i] < lo_[i] || s[i] > hi_[i]) return false;
    return true;
}

bool Box::on_frame(const Site& s) const {
    for (int i = 0; i < s.d; ++i)
        if (s[i] == lo_[i] || s[i] == hi_[i]) return true;
    return false;
}

std::int64_t Box::index(const Site& s) const {
    std::int64_t idx = 0;
    for (int i = 0; i < s.d; ++i) idx += static_cast<std::int64_t>(s[i] - lo_[i]) * stride_[static_cast<std::size_t>(i)];
    return idx;
}

Site Box::site(std::int64_t idx) const {
    Site s(lo_.d);
    for (int i = 0; i < lo_.d; ++i) {
        const auto st = stride_[static_cast<std::size_t>(i)];
        s[i] = lo_[i] + static_cast<int>(idx / st);
        idx %= st;
    }
    return s;
}

Box Box::grown(int margin) const {
    Site lo = lo_, hi = hi_;
    for (int i = 0; i < lo.d; ++i) {
        lo[i] -= margin;
        hi[i] += margin;
    }
    return Box(lo, hi);
}

Box Box::hull(const Box& o) const {
    Site lo = lo_, hi = hi_;
    for (int i = 0; i < lo.d; ++i) {
        lo[i] = std::min(lo[i], o.lo_[i]);
        hi[i] = std::max(hi[i], o.hi_[i]);
    }
    return Box(lo, hi);
}

bool Box::contains(const Box& o) const {
    return contains(o.lo_) && contains(o.hi_);
}

// ---------------------------------------------------------------------------

SiteSet::SiteSet(Box window) : window_(window), bits_(static_cast<std::size_t>(window.size()), 0) {}

SiteSet::SiteSet(Box window, const std::vector<Site>& members) : SiteSet(window) {
    for (const Site& s : members) insert(s);
}

bool SiteSet::contains(const Site& s) const {
    return window_.contains(s) && bits_[static_cast<std::size_t>(window_.index(s))] != 0;
}

void SiteSet::insert(const Site& s) {
    if (!window_.contains(s)) throw WindowTooSmall("site " + s.str() + " outside window");
    insert_index(window_.index(s));
}

void SiteSet::insert_index(std::int64_t i) {
    auto& b = bits_[static_cast<std::size_t>(i)];
    if (!b) {
        b = 1;
        ++count_;
    }
}

void SiteSet::erase(const Site& s) {
    if (!window_.contains(s)) return;
    auto& b = bits_[static_cast<std::size_t>(window_.index(s))];
    if (b) {
        b = 0;
        --count_;
    }
}

std::vector<std::int64_t> SiteSet::member_indices() const {
    std::vector<std::int64_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(static_cast<std::int64_t>(i));
    return out;
}

std::vector<Site> SiteSet::members() const {
    std::vector<Site> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(window_.site(static_cast<std::int64_t>(i)));
    return out;
}

std::optional<Site> SiteSet::smallest() const {
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) return window_.site(static_cast<std::int64_t>(i));
    return std::nullopt;
}

SiteSet SiteSet::rewindowed(const Box& w) const {
    SiteSet out(w);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.insert(window_.site(static_cast<std::int64_t>(i)));
    return out;
}

bool SiteSet::operator==(const SiteSet& o) const {
    if (count_ != o.count_) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !o.contains(window_.site(static_cast<std::int64_t>(i)))) return false;
    return true;
}

// ---------------------------------------------------------------------------

std::vector<Site> neighbors(const Site& s) {
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(2 * s.d));
    for (int i = 0; i < s.d; ++i) {
        out.push_back(s.plus_axis(i, -1));
        out.push_back(s.plus_axis(i, +1));
    }
    return out;
}

Boundaries boundaries(const SiteSet& A) {
    Boundaries b{{}, SiteSet(A.window()), SiteSet(A.window().grown(1))};
    for (const Site& u : A.members())
        for (const Site& v : neighbors(u))
            if (!A.contains(v)) {
                b.edge_boundary.emplace_back(u, v);
                b.inner.insert(u);
                b.outer.insert(v);
            }
    return b;
}

namespace {

std::vector<Site> offsets(int d, Adjacency mode) {
    std::vector<Site> out;
    const int reach = mode == Adjacency::L1 ? 1 : 2;
    Box b = Box::cube(d, reach);
    for (std::int64_t i = 0; i < b.size(); ++i) {
        Site o = b.site(i);
        const int n = l1_distance(o, Site::origin(d));
        if (n >= 1 && n <= reach) out.push_back(o);
    }
    return out;
}

}  // namespace

std::vector<SiteSet> components(const SiteSet& A, Adjacency mode) {
    std::vector<SiteSet> out;
    if (A.empty()) return out;
    const Box& w = A.window();
    const auto offs = offsets(w.dim(), mode);
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w.size()), 0);
    for (std::int64_t start : A.member_indices()) {
        if (seen[static_cast<std::size_t>(start)]) continue;
        SiteSet comp(w);
        std::deque<std::int64_t> q{start};
        seen[static_cast<std::size_t>(start)] = 1;
        while (!q.empty()) {
            const std::int64_t cur = q.front();
            q.pop_front();
            comp.insert_index(cur);
            const Site s = w.site(cur);
            for (const Site& o : offs) {
                const Site n = s + o;
                if (!w.contains(n)) continue;
                const std::int64_t ni = w.index(n);
                if (seen[static_cast<std::size_t>(ni)] || !A.contains_index(ni)) continue;
                seen[static_cast<std::size_t>(ni)] = 1;
                q.push_back(ni);
            }
        }
        out.push_back(std::move(comp));
    }
    return out;
}

namespace {

// Sites of window w reachable from the seeds without entering `blocked`.
std::vector<std::uint8_t> flood(const Box& w, const std::vector<std::int64_t>& seeds,
                                const std::vector<std::uint8_t>& blocked) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w.size()), 0);
    std::deque<std::int64_t> q;
    for (auto s : seeds)
        if (!blocked[static_cast<std::size_t>(s)] && !seen[static_cast<std::size_t>(s)]) {
            seen[static_cast<std::size_t>(s)] = 1;
            q.push_back(s);
        }
    while (!q.empty()) {
        const auto cur = q.front();
        q.pop_front();
        for (const Site& n : neighbors(w.site(cur))) {
            if (!w.contains(n)) continue;
            const auto ni = w.index(n);
            if (seen[static_cast<std::size_t>(ni)] || blocked[static_cast<std::size_t>(ni)]) continue;
            seen[static_cast<std::size_t>(ni)] = 1;
            q.push_back(ni);
        }
    }
    return seen;
}

std::vector<std::int64_t> frame_indices(const Box& w) {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < w.size(); ++i)
        if (w.on_frame(w.site(i))) out.push_back(i);
    return out;
}

std::vector<std::uint8_t> mask_of(const SiteSet& A, const Box& w) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(w.size()), 0);
    for (const Site& s : A.members()) m[static_cast<std::size_t>(w.index(s))] = 1;
    return m;
}

}  // namespace

SiteSet interior(const SiteSet& A) {
    const Box& w = A.window();
    for (const Site& s : A.members())
        if (w.on_frame(s)) throw WindowTooSmall("set touches the window frame");
    const auto blocked = mask_of(A, w);
    const auto outside = flood(w, frame_indices(w), blocked);
    SiteSet in(w);
    for (std::int64_t i = 0; i < w.size(); ++i)
        if (!blocked[static_cast<std::size_t>(i)] && !outside[static_cast<std::size_t>(i)]) in.insert_index(i);
    return in;
}

SiteSet visible_boundary(const SiteSet& A, const std::optional<Site>& v) {
    const Box w = A.window().grown(2);
    const auto blocked = mask_of(A, w);
    std::vector<std::int64_t> seeds;
    if (v && w.contains(*v)) {
        if (A.contains(*v)) throw std::invalid_argument("visible_boundary: v lies in A");
        seeds.push_back(w.index(*v));
    } else {
        seeds = frame_indices(w);
    }
    const auto reach = flood(w, seeds, blocked);
    SiteSet out(w);
    for (const Site& s : boundaries(A).outer.members())
        if (reach[static_cast<std::size_t>(w.index(s))]) out.insert(s);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// Edge {u, u + e_axis} of Z^d with axis in 0..d-1.
using BaseEdge = std::pair<Site, int>;

std::set<BaseEdge> undirected_boundary(const SiteSet& A) {
    std::set<BaseEdge> out;
    for (const auto& [u, v] : boundaries(A).edge_boundary) {
        const Site& lo = std::min(u, v);
        const Site& hi = std::max(u, v);
        for (int i = 0; i < u.d; ++i)
            if (lo[i] != hi[i]) out.insert({lo, i});
    }
    return out;
}

// Connectivity of an edge set under the plaquette adjacency: two edges are
// adjacent when they lie on a common unit square.
bool plaquette_connected(const std::set<BaseEdge>& F) {
    if (F.empty()) return false;
    std::set<BaseEdge> seen{*F.begin()};
    std::deque<BaseEdge> q{*F.begin()};
    auto visit = [&](const Site& a, const Site& b) {
        const Site& lo = std::min(a, b);
        const Site& hi = std::max(a, b);
        int ax = 0;
        while (lo[ax] == hi[ax]) ++ax;
        BaseEdge e{lo, ax};
        if (F.count(e) && seen.insert(e).second) q.push_back(e);
    };
    while (!q.empty()) {
        const auto [u, i] = q.front();
        q.pop_front();
        const Site ui = u.plus_axis(i, 1);
        for (int j = 0; j < u.d; ++j) {
            if (j == i) continue;
            for (int s : {-1, 1}) {
                const Site uj = u.plus_axis(j, s);
                const Site uij = ui.plus_axis(j, s);
                visit(ui, uij);
                visit(uj, uij);
                visit(u, uj);
            }
        }
    }
    return seen.size() == F.size();
}

}  // namespace

ContourEquivalence primitive_contour_check(const SiteSet& A) {
    const int d = A.dim();
    if (d != 2 && d != 3) throw ScaleExceeded("primitive contour check supports d = 2, 3");
    if (A.size() > 16) throw ScaleExceeded("primitive contour check supports |A| <= 16");
    ContourEquivalence r;
    if (A.empty()) return r;

    const Box w = A.window().grown(2);
    const SiteSet Aw = A.rewindowed(w);

    // Vertex side: A connected and its complement has no finite component.
    r.sets_connected = components(Aw).size() == 1 && interior(Aw).empty();

    // Edge side: boundary edges form a contour that does not split into two.
    const auto F = undirected_boundary(Aw);
    if (!plaquette_connected(F)) return r;

    SiteSet comp(w);
    for (std::int64_t i = 0; i < w.size(); ++i)
        if (!Aw.contains_index(i)) comp.insert_index(i);
    std::vector<SiteSet> pieces = components(Aw);
    for (auto& c : components(comp)) {
        bool touches_frame = false;
        for (const Site& s : c.members())
            if (w.on_frame(s)) {
                touches_frame = true;
                break;
            }
        if (!touches_frame) pieces.push_back(std::move(c));
    }
    if (pieces.size() > 20) throw ScaleExceeded("too many boundary pieces");

    const std::uint32_t n = static_cast<std::uint32_t>(pieces.size());
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        SiteSet B(w);
        for (std::uint32_t p = 0; p < n; ++p)
            if (mask & (1u << p))
                for (auto i : pieces[p].member_indices()) B.insert_index(i);
        const auto FB = undirected_boundary(B);
        if (FB.empty() || FB.size() >= F.size()) continue;
        if (!std::includes(F.begin(), F.end(), FB.begin(), FB.end())) continue;
        std::set<BaseEdge> rest;
        std::set_difference(F.begin(), F.end(), FB.begin(), FB.end(), std::inserter(rest, rest.end()));
        if (plaquette_connected(FB) && plaquette_connected(rest)) return r;
    }
    r.primitive_contour = true;
    return r;
}

bool primitive_contour_equiv(const SiteSet& A) {
    return primitive_contour_check(A).agree();
}

}  // namespace dlab
