/**
 * @file shifts.hpp
 * @brief Finitely supported integer fields on Z^d and their complexity
 * functionals: total variation, level components, trip entropy.
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dlab/lattice.hpp"

namespace dlab {

class Shift {
public:
    explicit Shift(int d = 1) : d_(d) {}

    static Shift indicator(const std::vector<Site>& sites, int value = 1);
    static Shift from_json(const std::string& text);
    std::string to_json() const;

    int dim() const { return d_; }
    int operator()(const Site& v) const;
    void set(const Site& v, int value);
    const std::map<Site, int>& entries() const& { return vals_; }
    std::map<Site, int> entries() && { return std::move(vals_); }

    bool is_zero() const { return vals_.empty(); }
    std::size_t support_size() const { return vals_.size(); }
    std::int64_t l1() const;
    std::optional<Box> support_box() const;

    Shift& operator+=(const Shift& o);
    Shift operator+(const Shift& o) const;
    Shift operator-(const Shift& o) const;
    Shift operator-() const;
    bool operator==(const Shift& o) const = default;

private:
    int d_;
    std::map<Site, int> vals_;
};

/// Window covering the support, the origin and a margin.
Box shift_window(const Shift& tau, int margin = 2);

std::int64_t tv(const Shift& tau);

struct LevelComponent {
    int level = 0;
    SiteSet sites;            ///< restricted to the window
    bool background = false;  ///< the unbounded level-0 component
};

struct LevelComponentSet {
    Box window;
    std::vector<LevelComponent> comps;  ///< sorted by smallest member
    std::size_t size() const { return comps.size(); }
};

/// Throws WindowTooSmall unless the window holds supp(tau) with margin 1.
LevelComponentSet level_components(const Shift& tau, const Box& window);
LevelComponentSet level_components(const Shift& tau);

enum class TripMode { Exact, Upper };

struct TripEntropyResult {
    std::int64_t value = 0;
    std::vector<Site> certificate;  ///< root sequence, starting at the origin
    bool exact = false;
};

inline constexpr std::size_t kExactTripLimit = 10;

TripEntropyResult trip_entropy(const Shift& tau, TripMode mode);
/// Exact when |LC| <= kExactTripLimit, otherwise the constructive upper bound.
TripEntropyResult trip_entropy_auto(const Shift& tau);

/// Trip entropy of a finite set E: root sequences touching every component.
TripEntropyResult trip_entropy_of_set(const SiteSet& E, TripMode mode);

/// Minimal root-sequence length over explicit candidate sets (each target
/// must be hit at one of its candidates).  Exposed for cross-checks.
TripEntropyResult root_sequence_exact(const Site& origin, const std::vector<std::vector<Site>>& targets);
TripEntropyResult root_sequence_upper(const Site& origin, const std::vector<std::vector<Site>>& targets);

std::int64_t sequence_length(const std::vector<Site>& seq);

bool is_admissible(const Shift& tau, double gap, double alpha_par, double alpha_perp, int d,
                   double r_constant = 200.0);
bool is_admissible(std::int64_t tv_value, std::int64_t trip, double gap, double alpha_par,
                   double alpha_perp, int d, double r_constant = 200.0);

/// All shifts supported in `support` with values in [-level_bound, level_bound]
/// and TV <= lambda_max.
std::vector<Shift> enumerate_shifts(const Box& support, int lambda_max, int level_bound = 2);

}  // namespace dlab
