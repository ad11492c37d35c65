#include "dlab/disorder.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace dlab {

Distribution Distribution::uniform(double a, double b) {
    if (!(std::isfinite(a) && std::isfinite(b)) || a < 0 || !(a < b))
        throw std::invalid_argument("uniform:a,b needs 0 <= a < b");
    return {Kind::Uniform, a, b};
}

Distribution Distribution::point(double c) {
    if (!std::isfinite(c) || c < 0) throw std::invalid_argument("point:c needs c >= 0");
    return {Kind::Point, c, 0};
}

Distribution Distribution::relu_gauss(double s, double c) {
    if (!(std::isfinite(s) && std::isfinite(c)) || !(s > 0) || c < 0)
        throw std::invalid_argument("relugauss:s,C needs s > 0 and C >= 0");
    return {Kind::ReluGauss, s, c};
}

namespace {

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
    std::vector<double> out;
    const char* p = body.data();
    const char* end = p + body.size();
    while (true) {
        double x = 0;
        auto [next, ec] = std::from_chars(p, end, x);
        if (ec != std::errc() || next == p) throw std::invalid_argument("bad distribution spec '" + spec + "'");
        out.push_back(x);
        p = next;
        if (p == end) break;
        if (*p != ',') throw std::invalid_argument("bad distribution spec '" + spec + "'");
        ++p;
    }
    return out;
}

std::string fmt_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

}  // namespace

Distribution Distribution::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad distribution spec '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const auto xs = parse_numbers(spec.substr(colon + 1), spec);
    if (kind == "uniform" && xs.size() == 2) return uniform(xs[0], xs[1]);
    if (kind == "point" && xs.size() == 1) return point(xs[0]);
    if (kind == "relugauss" && xs.size() == 2) return relu_gauss(xs[0], xs[1]);
    throw std::invalid_argument("bad distribution spec '" + spec + "'");
}

std::string Distribution::spec() const {
    switch (kind_) {
        case Kind::Uniform: return "uniform:" + fmt_double(p_) + "," + fmt_double(q_);
        case Kind::Point: return "point:" + fmt_double(p_);
        case Kind::ReluGauss: return "relugauss:" + fmt_double(p_) + "," + fmt_double(q_);
    }
    return {};
}

double Distribution::width() const {
    switch (kind_) {
        case Kind::Uniform: return q_ - p_;
        case Kind::Point: return 0.0;
        case Kind::ReluGauss: return p_;
    }
    return 0.0;
}

double Distribution::min_support() const {
    switch (kind_) {
        case Kind::Uniform: return p_;
        case Kind::Point: return p_;
        case Kind::ReluGauss: return q_;
    }
    return 0.0;
}

double Distribution::quantile(double u) const {
    switch (kind_) {
        case Kind::Uniform: return p_ + (q_ - p_) * u;
        case Kind::Point: return p_;
        case Kind::ReluGauss: return u <= 0.5 ? q_ : q_ + p_ * std::max(normal_quantile(u), 0.0);
    }
    return 0.0;
}

double Distribution::mean() const {
    switch (kind_) {
        case Kind::Uniform: return 0.5 * (p_ + q_);
        case Kind::Point: return p_;
        case Kind::ReluGauss: return q_ + p_ / std::sqrt(2.0 * std::numbers::pi);
    }
    return 0.0;
}

double Distribution::variance() const {
    switch (kind_) {
        case Kind::Uniform: return (q_ - p_) * (q_ - p_) / 12.0;
        case Kind::Point: return 0.0;
        case Kind::ReluGauss: return p_ * p_ * (0.5 - 0.5 / std::numbers::pi);
    }
    return 0.0;
}

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("normal_quantile needs 0 < u < 1");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                    3.754408661907416e+00};
    constexpr double lo = 0.02425;
    double x;
    if (u < lo) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (u <= 1.0 - lo) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
    const double g = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - g / (1.0 + 0.5 * x * g);
}

double unit_interval(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t word(int x) {
    return static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
}

}  // namespace

std::uint64_t edge_hash(std::uint64_t seed, const Site& v, int k, int axis) {
    std::uint64_t h = mix64(seed);
    for (int i = 0; i < v.d; ++i) h = mix64(h ^ word(v[i]));
    h = mix64(h ^ word(k));
    return mix64(h ^ word(axis));
}

double kappa(const Distribution& nu_par, const Distribution& nu_perp, int d) {
    const double ap = nu_par.min_support();
    const double aq = nu_perp.min_support();
    if (!(ap > 0) || !(aq > 0)) throw ZeroSupport("kappa needs positive minimal supports");
    const double wp = nu_par.width();
    const double wq = nu_perp.width();
    return (1.0 / (ap * aq) + 1.0 / (d * aq * aq)) * wp * wp + wq * wq / (aq * aq);
}

ConcentrationReport check_condition(const Distribution& nu_par, const Distribution& nu_perp, int d, double c0) {
    ConcentrationReport r;
    r.c0 = c0;
    r.kappa = kappa(nu_par, nu_perp, d);
    r.lhs = r.kappa * (1.0 + nu_perp.min_support() / nu_par.min_support());
    const double D = d + 1.0;
    r.rhs = c0 * D / (std::log(D) * std::log(D));
    r.satisfied = r.lhs <= r.rhs;
    return r;
}

std::int64_t to_fixed(double x) {
    const double s = x * kFixedPointScale;
    if (!(s >= 0) || s >= 0x1.0p62) throw CapacityOverflow("capacity outside the fixed-point range");
    return std::llround(s);
}

double from_fixed(std::int64_t x) {
    return static_cast<double>(x) / kFixedPointScale;
}

double from_fixed(__int128 x) {
    return static_cast<double>(x) / kFixedPointScale;
}

// ---------------------------------------------------------------------------

CouplingField::CouplingField(std::uint64_t seed, Distribution nu_par, Distribution nu_perp, int d)
    : seed_(seed), par_(nu_par), perp_(nu_perp), d_(d), acc_(d) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("field dimension out of range");
}

double CouplingField::sample_raw(const Site& v, int k, int axis) const {
    const Distribution& nu = axis == d_ + 1 ? par_ : perp_;
    if (nu.kind() == Distribution::Kind::Point) return nu.min_support();
    return nu.quantile(unit_interval(edge_hash(seed_, v, k, axis)));
}

double CouplingField::sample_edge(const Edge& e) const {
    // The base of a canonical edge is its lexicographically smaller endpoint,
    // which is also the choice point for perpendicular edges.
    return sample_raw(e.base.v, e.base.k + acc_(e.base.v), e.axis);
}

CouplingField CouplingField::shifted(const Shift& tau) const {
    if (tau.dim() != d_) throw std::invalid_argument("shift dimension mismatch");
    CouplingField f = *this;
    f.acc_ += tau;
    return f;
}

}  // namespace dlab
