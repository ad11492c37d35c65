#include "dlab/graining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace dlab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::int64_t cell_size(const GrainingSpec& spec, int d) {
    if (spec.kind == GrainingSpec::Kind::Fine) return std::int64_t{1} << spec.I.size();
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= spec.N;
    return n;
}

std::string join(const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

}  // namespace

GrainingSpec GrainingSpec::coarse(int n) {
    if (n < 1) throw std::invalid_argument("coarse graining needs N >= 1");
    GrainingSpec s;
    s.kind = Kind::Coarse;
    s.N = n;
    return s;
}

GrainingSpec GrainingSpec::fine(std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
        throw std::invalid_argument("fine graining indices must be distinct");
    GrainingSpec s;
    s.kind = Kind::Fine;
    s.I = std::move(idx);
    return s;
}

std::string GrainingSpec::label() const {
    return kind == Kind::Coarse ? "N=" + std::to_string(N) : "I={" + join(I) + "}";
}

std::int64_t round_average(std::int64_t sum, std::int64_t n, Rounding rounding) {
    if (rounding == Rounding::HalfDown) return ceil_div(2 * sum - n, 2 * n);
    return floor_div(2 * sum + n, 2 * n);
}

Site cell_anchor(const Site& v, const GrainingSpec& spec) {
    Site a = v;
    if (spec.kind == GrainingSpec::Kind::Coarse) {
        for (int i = 0; i < v.d; ++i) a[i] = static_cast<int>(spec.N * floor_div(v[i], spec.N));
    } else {
        for (int i : spec.I) {
            if (i < 1 || i > v.d) throw std::invalid_argument("fine graining index out of range");
            a[i - 1] = static_cast<int>(2 * floor_div(v[i - 1], 2));
        }
    }
    return a;
}

Shift grain(const Shift& tau, const GrainingSpec& spec, Rounding rounding) {
    const int d = tau.dim();
    std::map<Site, std::int64_t> sums;
    for (const auto& [v, x] : tau.entries()) sums[cell_anchor(v, spec)] += x;

    const std::int64_t n = cell_size(spec, d);
    Site ext(d);
    for (int i = 0; i < d; ++i) ext[i] = spec.kind == GrainingSpec::Kind::Coarse ? spec.N : 1;
    for (int i : spec.I) ext[i - 1] = 2;

    Shift out(d);
    for (const auto& [a, s] : sums) {
        const std::int64_t val = round_average(s, n, rounding);
        if (val == 0) continue;
        Site hi = a;
        for (int i = 0; i < d; ++i) hi[i] += ext[i] - 1;
        const Box cell(a, hi);
        for (std::int64_t j = 0; j < cell.size(); ++j) out.set(cell.site(j), static_cast<int>(val));
    }
    return out;
}

std::vector<std::vector<int>> index_subsets(int d, int r) {
    if (r < 0 || r > d) throw std::invalid_argument("subset size out of range");
    std::vector<std::vector<int>> out;
    std::vector<bool> pick(static_cast<std::size_t>(d), false);
    std::fill(pick.begin(), pick.begin() + r, true);
    do {
        std::vector<int> I;
        for (int i = 0; i < d; ++i)
            if (pick[static_cast<std::size_t>(i)]) I.push_back(i + 1);
        out.push_back(std::move(I));
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
}

CompatibilityReport compatibility(const Shift& tau, const std::vector<int>& I, Rounding rounding) {
    const int d = tau.dim();
    const Shift g = grain(tau, GrainingSpec::fine(I), rounding);
    CompatibilityReport rep;
    rep.I = I;
    rep.tv_original = tv(tau);
    rep.tv_grained = tv(g);
    rep.tv_ratio = rep.tv_original == 0 ? 0.0 : static_cast<double>(rep.tv_grained) / rep.tv_original;
    rep.l1_diff = (g - tau).l1();
    const auto r = static_cast<std::int64_t>(I.size());
    // ||tau_I - tau||_1 <= (4r/d) TV, compared as d * l1 <= 4r * TV.
    rep.compatible = rep.tv_grained <= 20 * (2 * r + 1) * rep.tv_original &&
                     d * rep.l1_diff <= 4 * r * rep.tv_original;
    return rep;
}

CompatibilityReport find_compatible(const Shift& tau, int r, Rounding rounding) {
    for (const auto& I : index_subsets(tau.dim(), r)) {
        auto rep = compatibility(tau, I, rounding);
        if (rep.compatible) return rep;
    }
    throw SearchExhausted("no compatible index set of size " + std::to_string(r));
}

int chain_depth(std::int64_t total_variation, int d) {
    if (d < 2) throw std::invalid_argument("graining chain needs d >= 2");
    if (total_variation == 0) return 0;
    // 2^K > 2^{1/d} (TV/2d)^{1/(d-1)}  <=>  2^{K d (d-1)} (2d)^d > TV^d 2^{d-1}
    __int128 rhs = 1;
    for (int i = 0; i < d; ++i) rhs *= total_variation;
    rhs <<= (d - 1);
    __int128 base = 1;
    for (int i = 0; i < d; ++i) base *= 2 * d;
    for (int K = 0;; ++K) {
        if (K * d * (d - 1) > 120) throw ScaleExceeded("total variation too large for the chain bound");
        if ((base << (K * d * (d - 1))) > rhs) return K;
    }
}

GrainingChain graining_chain(const Shift& tau, int r, Rounding rounding) {
    GrainingChain ch;
    ch.K = chain_depth(tv(tau), tau.dim());
    ch.shifts.push_back(tau);
    ch.labels.push_back("tau");
    if (tau.is_zero()) return ch;
    const auto rep = find_compatible(tau, r, rounding);
    ch.I = rep.I;
    ch.shifts.push_back(grain(tau, GrainingSpec::fine(rep.I), rounding));
    ch.labels.push_back(GrainingSpec::fine(rep.I).label());
    for (int k = 1; k <= ch.K; ++k) {
        const auto spec = GrainingSpec::coarse(1 << k);
        ch.shifts.push_back(grain(tau, spec, rounding));
        ch.labels.push_back(spec.label());
    }
    return ch;
}

namespace {

AuditRow row(std::string name, double lhs, double rhs) {
    return {std::move(name), lhs, rhs, lhs <= rhs};
}

}  // namespace

std::vector<AuditRow> audit_grainings(const Shift& tau, const AuditOptions& opts) {
    const int d = tau.dim();
    const auto T = static_cast<double>(tv(tau));
    std::vector<AuditRow> out;

    std::vector<Shift> coarse;  // N = 1, 2, 4, 8, 16
    for (int N = 1; N <= 16; N *= 2) coarse.push_back(grain(tau, GrainingSpec::coarse(N), opts.rounding));

    for (int j = 1; j <= 3; ++j) {
        const int N = 1 << j;
        out.push_back(row("tv_coarse_N" + std::to_string(N), static_cast<double>(tv(coarse[j])), 10.0 * d * T));
    }
    out.push_back(row("l1_tau_tau2", static_cast<double>((tau - coarse[1]).l1()), 2.0 * T));
    for (int j = 0; j <= 3; ++j) {
        const int N = 1 << j;
        out.push_back(row("l1_tauN_tau2N_N" + std::to_string(N), static_cast<double>((coarse[j] - coarse[j + 1]).l1()),
                          (4.0 * d + 9.0) * N * T));
    }

    // Fine grainings: every subset once, then Monte Carlo means over uniform I.
    std::mt19937_64 rng(opts.seed);
    for (int r = 0; r <= d; ++r) {
        const auto subsets = index_subsets(d, r);
        std::vector<double> tvs, l1s;
        bool found = false;
        for (const auto& I : subsets) {
            const auto rep = compatibility(tau, I, opts.rounding);
            tvs.push_back(static_cast<double>(rep.tv_grained));
            l1s.push_back(static_cast<double>(rep.l1_diff));
            found = found || rep.compatible;
        }
        out.push_back({"compatible_exists_r" + std::to_string(r), found ? 1.0 : 0.0, 1.0, found});
        if (r == 0) continue;

        double exact_tv = 0, exact_l1 = 0;
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            exact_tv += tvs[i];
            exact_l1 += l1s[i];
        }
        exact_tv /= static_cast<double>(subsets.size());
        exact_l1 /= static_cast<double>(subsets.size());
        out.push_back(row("fine_tv_mean_exact_r" + std::to_string(r), exact_tv, 10.0 * (2 * r + 1) * T));
        out.push_back(row("fine_l1_mean_exact_r" + std::to_string(r), exact_l1, 2.0 * r / d * T));

        if (opts.fine_samples > 0) {
            std::uniform_int_distribution<std::size_t> pick(0, subsets.size() - 1);
            double s1 = 0, s2 = 0, t1 = 0, t2 = 0;
            for (int s = 0; s < opts.fine_samples; ++s) {
                const std::size_t i = pick(rng);
                s1 += tvs[i];
                s2 += tvs[i] * tvs[i];
                t1 += l1s[i];
                t2 += l1s[i] * l1s[i];
            }
            const double n = opts.fine_samples;
            const double m_tv = s1 / n, m_l1 = t1 / n;
            const double se_tv = n > 1 ? std::sqrt(std::max(0.0, (s2 - n * m_tv * m_tv) / (n - 1)) / n) : 0.0;
            const double se_l1 = n > 1 ? std::sqrt(std::max(0.0, (t2 - n * m_l1 * m_l1) / (n - 1)) / n) : 0.0;
            out.push_back(row("fine_tv_mean_mc_r" + std::to_string(r), m_tv, 10.0 * (2 * r + 1) * T + 3 * se_tv));
            out.push_back(row("fine_l1_mean_mc_r" + std::to_string(r), m_l1, 2.0 * r / d * T + 3 * se_l1));
        }
    }

    if (d >= 2) {
        const int K = chain_depth(tv(tau), d);
        const Shift last = grain(tau, GrainingSpec::coarse(1 << K), opts.rounding);
        out.push_back(row("chain_terminates", static_cast<double>(last.l1()), 0.0));
    }

    if (opts.trip_checks) {
        const auto base = trip_entropy_auto(tau);
        if (base.exact) {
            for (int j = 1; j <= 3; ++j) {
                const auto g = trip_entropy_auto(coarse[j]);
                if (!g.exact) continue;
                out.push_back(row("trip_coarse_N" + std::to_string(1 << j), static_cast<double>(g.value),
                                  static_cast<double>(base.value) + opts.r_constant / d * T));
            }
        }
    }
    return out;
}

std::vector<AuditRow> rounding_convention_checks(Rounding rounding) {
    std::vector<AuditRow> out;
    auto expect = [&](const std::string& name, std::int64_t got, std::int64_t want) {
        out.push_back({name, static_cast<double>(got), static_cast<double>(want), got == want});
    };
    expect("round_half_pos", round_average(1, 2, rounding), 0);
    expect("round_half_neg", round_average(-1, 2, rounding), -1);
    expect("round_three_halves", round_average(3, 2, rounding), 1);

    Shift two(2);
    two.set(Site{0, 0}, 1);
    two.set(Site{1, 0}, 1);
    expect("coarse_half_cell", grain(two, GrainingSpec::coarse(2), rounding).l1(), 0);
    Shift full = two;
    full.set(Site{0, 1}, 1);
    full.set(Site{1, 1}, 1);
    expect("coarse_full_cell", grain(full, GrainingSpec::coarse(2), rounding).l1(), 4);
    return out;
}

}  // namespace dlab
