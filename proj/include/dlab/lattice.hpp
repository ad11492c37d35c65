/**
 * @file lattice.hpp
 * @brief Sites, edges and windowed site sets on Z^d and Z^{d+1}.
 *
 * Every set lives inside an explicit finite box (the window).  Points
 * outside the window are treated as "far away"; operations that need the
 * notion of infinity flood-fill from the window frame.
 */
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dlab {

inline constexpr int kMaxDim = 4;

struct WindowTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScaleExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point of the base lattice Z^d.  Unused trailing coordinates stay zero,
/// so the defaulted ordering is lexicographic for a fixed dimension.
struct Site {
    int d = 0;
    std::array<int, kMaxDim> c{};

    Site() = default;
    explicit Site(int dim) : d(dim) {}
    Site(std::initializer_list<int> xs);

    int& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    int operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    static Site origin(int dim) { return Site(dim); }
    Site plus_axis(int i, int step) const {
        Site s = *this;
        s.c[static_cast<std::size_t>(i)] += step;
        return s;
    }

    auto operator<=>(const Site&) const = default;
    bool operator==(const Site&) const = default;

    std::string str() const;
};

int l1_distance(const Site& a, const Site& b);
Site operator+(const Site& a, const Site& b);

/// Point (v, k) of Z^{d+1}; k is the height.
struct ColumnSite {
    Site v;
    int k = 0;
    auto operator<=>(const ColumnSite&) const = default;
    bool operator==(const ColumnSite&) const = default;
};

/// Undirected edge {base, base + e_axis} of Z^{d+1}; axis runs 1..d+1 and
/// axis d+1 is the vertical direction.
struct Edge {
    ColumnSite base;
    int axis = 1;
    auto operator<=>(const Edge&) const = default;
    bool operator==(const Edge&) const = default;

    ColumnSite other() const;
    /// Canonical (base, axis) form of the edge joining two adjacent points.
    static Edge between(const ColumnSite& x, const ColumnSite& y);
};

enum class EdgeClass { Parallel, Perpendicular };

EdgeClass edge_class(const Edge& e);

/// Axis-aligned box [lo, hi] in Z^d; point indices are row-major with the
/// first coordinate most significant, so index order is lexicographic order.
class Box {
public:
    Box() = default;
    Box(Site lo, Site hi);

    static Box cube(int d, int radius);
    static Box bounding(const std::vector<Site>& pts);

    int dim() const { return lo_.d; }
    const Site& lo() const { return lo_; }
    const Site& hi() const { return hi_; }
    bool empty() const { return size_ == 0; }
    std::int64_t size() const { return size_; }
    int extent(int i) const { return hi_[i] - lo_[i] + 1; }

    bool contains(const Site& s) const;
    bool on_frame(const Site& s) const;
    std::int64_t index(const Site& s) const;
    Site site(std::int64_t idx) const;
    Box grown(int margin) const;
    Box hull(const Box& other) const;
    bool contains(const Box& other) const;

    bool operator==(const Box&) const = default;

private:
    Site lo_, hi_;
    std::int64_t size_ = 0;
    std::array<std::int64_t, kMaxDim> stride_{};
};

/// Finite subset of a window.
class SiteSet {
public:
    SiteSet() = default;
    explicit SiteSet(Box window);
    SiteSet(Box window, const std::vector<Site>& members);

    const Box& window() const { return window_; }
    int dim() const { return window_.dim(); }

    bool contains(const Site& s) const;
    bool contains_index(std::int64_t i) const { return bits_[static_cast<std::size_t>(i)] != 0; }
    void insert(const Site& s);
    void erase(const Site& s);
    void insert_index(std::int64_t i);

    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    /// Members in lexicographic order.
    std::vector<Site> members() const;
    std::vector<std::int64_t> member_indices() const;
    std::optional<Site> smallest() const;

    /// Same members, re-expressed over a window that contains them all.
    SiteSet rewindowed(const Box& w) const;

    bool operator==(const SiteSet& o) const;

private:
    Box window_;
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

struct Boundaries {
    std::vector<std::pair<Site, Site>> edge_boundary;  ///< (u, v): u in A, v not in A
    SiteSet inner;                                     ///< window of A
    SiteSet outer;                                     ///< window of A grown by 1
};

Boundaries boundaries(const SiteSet& A);

/// Neighbours of s in Z^d (2d of them), in axis order -e_1, +e_1, -e_2, ...
std::vector<Site> neighbors(const Site& s);

enum class Adjacency { L1, L1Plus };

/// Connected components, sorted by lexicographically smallest member.
std::vector<SiteSet> components(const SiteSet& A, Adjacency mode = Adjacency::L1);

/// in(A): sites of the finite components of Z^d \ A.  Throws WindowTooSmall
/// when A touches the frame of its window.
SiteSet interior(const SiteSet& A);

/// Outer vertex boundary of A visible from v; std::nullopt means infinity.
/// The result lives in A's window grown by 2.
SiteSet visible_boundary(const SiteSet& A, const std::optional<Site>& v);

/// Evaluates "A and Z^d \ A connected" and "edge boundary of A is a primitive
/// contour" independently and reports both.
struct ContourEquivalence {
    bool sets_connected = false;
    bool primitive_contour = false;
    bool agree() const { return sets_connected == primitive_contour; }
};

ContourEquivalence primitive_contour_check(const SiteSet& A);
bool primitive_contour_equiv(const SiteSet& A);

}  // namespace dlab
