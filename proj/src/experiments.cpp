#include "dlab/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dlab {

namespace {

const std::vector<std::string> kSuites{"isoperimetry", "graining", "reduction", "enumeration", "oracle"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T x{};
    const auto* end = value.data() + value.size();
    const auto [p, ec] = std::from_chars(value.data(), end, x);
    if (ec != std::errc{} || p != end) throw InvalidConfig("bad value for " + key + ": '" + value + "'");
    return x;
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::int64_t to_i64(Energy e) { return static_cast<std::int64_t>(e); }

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string csv(std::initializer_list<std::string> header) {
    std::string out = std::string(kSchemaHeader) + "\n";
    bool first = true;
    for (const auto& h : header) {
        out += (first ? "" : ",") + h;
        first = false;
    }
    return out + "\n";
}

template <class... Ts>
std::string line(const Ts&... xs) {
    std::ostringstream os;
    bool first = true;
    ((os << (first ? "" : ",") << xs, first = false), ...);
    return os.str() + "\n";
}

const char* yn(bool b) { return b ? "1" : "0"; }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

CouplingField ExperimentConfig::field(std::size_t trial) const {
    return CouplingField(seed + trial, par(), perp(), dimension);
}

SiteSet ExperimentConfig::lambda_box(int radius) const {
    const Box cube = Box::cube(dimension, radius);
    SiteSet s(cube.grown(1));
    for (std::int64_t i = 0; i < cube.size(); ++i) s.insert(cube.site(i));
    return s;
}

void ExperimentConfig::validate() const {
    if (dimension < 1 || dimension > kMaxDim) throw InvalidConfig("dimension must be in 1..4");
    if (lambda_radius < 0) throw InvalidConfig("lambda_radius must be >= 0");
    if (m_start < 1 || m_max < m_start) throw InvalidConfig("need 1 <= m_start <= m_max");
    if (trials < 1) throw InvalidConfig("trials must be >= 1");
    if (heights_k < 0) throw InvalidConfig("heights_k must be >= 0");
    if (radii.empty()) throw InvalidConfig("radii must be nonempty");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] < 0) throw InvalidConfig("radii must be >= 0");
        if (i > 0 && radii[i] <= radii[i - 1]) throw InvalidConfig("radii must be strictly increasing");
    }
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    if (!(c0 > 0)) throw InvalidConfig("c0 must be positive");
    for (const auto& s : suites)
        if (std::find(kSuites.begin(), kSuites.end(), s) == kSuites.end()) throw InvalidConfig("unknown suite " + s);
    if (audit_cases < 1 || audit_shifts < 1 || fine_samples < 1) throw InvalidConfig("audit sizes must be >= 1");
    if (tv_max < 2 * dimension) throw InvalidConfig("tv_max must allow a nonzero shift");
    if (!(gap_step > 0)) throw InvalidConfig("gap_step must be positive");
    try {
        par();
        perp();
    } catch (const std::invalid_argument& e) {
        throw InvalidConfig(e.what());
    }
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    auto join = [](const auto& xs) {
        std::ostringstream j;
        for (std::size_t i = 0; i < xs.size(); ++i) j << (i ? "," : "") << xs[i];
        return j.str();
    };
    os << "dimension = " << dimension << "\n"
       << "lambda_radius = " << lambda_radius << "\n"
       << "m_start = " << m_start << "\n"
       << "m_max = " << m_max << "\n"
       << "nu_par = " << nu_par << "\n"
       << "nu_perp = " << nu_perp << "\n"
       << "trials = " << trials << "\n"
       << "seed = " << seed << "\n"
       << "heights_k = " << heights_k << "\n"
       << "radii = " << join(radii) << "\n"
       << "workers = " << workers << "\n"
       << "c0 = " << format_number(c0) << "\n"
       << "suites = " << join(suites) << "\n"
       << "audit_cases = " << audit_cases << "\n"
       << "audit_shifts = " << audit_shifts << "\n"
       << "tv_max = " << tv_max << "\n"
       << "fine_samples = " << fine_samples << "\n"
       << "rounding = " << (rounding == Rounding::HalfDown ? "half_down" : "half_up") << "\n"
       << "gap_step = " << format_number(gap_step) << "\n"
       << "output = " << output_dir << "\n";
    return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw InvalidConfig("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (!seen.insert(key).second) throw InvalidConfig("duplicate key " + key);

        if (key == "dimension") cfg.dimension = parse_number<int>(key, value);
        else if (key == "lambda_radius") cfg.lambda_radius = parse_number<int>(key, value);
        else if (key == "m_start") cfg.m_start = parse_number<int>(key, value);
        else if (key == "m_max") cfg.m_max = parse_number<int>(key, value);
        else if (key == "nu_par") cfg.nu_par = value;
        else if (key == "nu_perp") cfg.nu_perp = value;
        else if (key == "trials") cfg.trials = parse_number<int>(key, value);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "heights_k") cfg.heights_k = parse_number<int>(key, value);
        else if (key == "radii") {
            cfg.radii.clear();
            for (const auto& r : split(value, ',')) cfg.radii.push_back(parse_number<int>(key, r));
        } else if (key == "workers") cfg.workers = parse_number<int>(key, value);
        else if (key == "c0") cfg.c0 = parse_number<double>(key, value);
        else if (key == "suites") cfg.suites = split(value, ',');
        else if (key == "audit_cases") cfg.audit_cases = parse_number<int>(key, value);
        else if (key == "audit_shifts") cfg.audit_shifts = parse_number<int>(key, value);
        else if (key == "tv_max") cfg.tv_max = parse_number<int>(key, value);
        else if (key == "fine_samples") cfg.fine_samples = parse_number<int>(key, value);
        else if (key == "rounding") {
            if (value == "half_down") cfg.rounding = Rounding::HalfDown;
            else if (value == "half_up") cfg.rounding = Rounding::HalfUp;
            else throw InvalidConfig("rounding must be half_down or half_up");
        } else if (key == "gap_step") cfg.gap_step = parse_number<double>(key, value);
        else if (key == "output") cfg.output_dir = value;
        else throw InvalidConfig("unknown key " + key);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot read config " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

Interval wilson_interval(std::int64_t successes, std::int64_t n) {
    if (n <= 0) return {0, 1};
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double denom = 1 + z * z / nn;
    const double centre = (p + z * z / (2 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Generators

SiteSet random_site_set(std::mt19937_64& rng, int d, int extent) {
    Site lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = -3;
        hi[i] = extent + 2;
    }
    SiteSet A(Box(lo, hi));
    Site clo(d), chi(d);
    for (int i = 0; i < d; ++i) chi[i] = extent - 1;
    const Box core(clo, chi);
    if (rng() % 2 == 0) {
        const std::uint64_t percent = 30 + 20 * (rng() % 3);
        for (std::int64_t i = 0; i < core.size(); ++i)
            if (rng() % 100 < percent) A.insert(core.site(i));
    } else {
        const auto boxes = uniform_int(rng, 1, 3);
        for (std::int64_t b = 0; b < boxes; ++b) {
            Site a(d), z(d);
            for (int i = 0; i < d; ++i) {
                a[i] = static_cast<int>(uniform_int(rng, 0, extent - 1));
                z[i] = static_cast<int>(uniform_int(rng, a[i], extent - 1));
            }
            const Box bx(a, z);
            for (std::int64_t i = 0; i < bx.size(); ++i) A.insert(bx.site(i));
        }
    }
    if (A.empty()) A.insert(Site::origin(d));
    return A;
}

SiteSet random_animal(std::mt19937_64& rng, int d, int size) {
    SiteSet A(Box::cube(d, size + 3));
    std::vector<Site> members{Site::origin(d)};
    A.insert(members.front());
    while (static_cast<int>(members.size()) < size) {
        const Site& from = members[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(members.size()) - 1))];
        const auto nbs = neighbors(from);
        const Site next = nbs[static_cast<std::size_t>(uniform_int(rng, 0, 2 * d - 1))];
        if (A.contains(next)) continue;
        A.insert(next);
        members.push_back(next);
    }
    return A;
}

Shift random_shift(std::mt19937_64& rng, int d, int tv_max) {
    const int max_len = d >= 3 ? 2 : 3;
    while (true) {
        Shift t(d);
        const auto pieces = uniform_int(rng, 1, 3);
        for (std::int64_t p = 0; p < pieces; ++p) {
            const int value = static_cast<int>(uniform_int(rng, 1, 2)) * (rng() % 2 ? 1 : -1);
            Site a(d), z(d);
            const bool point = rng() % 4 == 0;
            for (int i = 0; i < d; ++i) {
                a[i] = static_cast<int>(uniform_int(rng, -3, 2));
                z[i] = point ? a[i] : a[i] + static_cast<int>(uniform_int(rng, 0, max_len - 1));
            }
            const Box bx(a, z);
            for (std::int64_t i = 0; i < bx.size(); ++i) {
                const Site v = bx.site(i);
                t.set(v, t(v) + value);
            }
        }
        if (!t.is_zero() && tv(t) <= tv_max) return t;
    }
}

SpinConfiguration random_interfacial(std::mt19937_64& rng, const SiteSet& lambda, int M, int max_changes) {
    SpinConfiguration s(lambda, M);
    const int slots = 2 * M + 2;  // change positions -M-1..M
    for (const Site& v : s.columns()) {
        int m = 1 + 2 * static_cast<int>(uniform_int(rng, 0, (max_changes - 1) / 2));
        m = std::min(m, slots % 2 ? slots : slots - 1);
        std::set<int> pos;
        while (static_cast<int>(pos.size()) < m) pos.insert(static_cast<int>(uniform_int(rng, -M - 1, M)));
        for (int k = -M; k <= M; ++k) {
            const auto below = std::distance(pos.begin(), pos.lower_bound(k));
            s.set(v, k, below % 2 ? 1 : -1);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Deterministic checks

namespace {

__int128 ipow(__int128 b, int e) {
    __int128 r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace

AuditRow isoperimetry_row(const SiteSet& A) {
    const int d = A.dim();
    const auto b = static_cast<std::int64_t>(boundaries(A).edge_boundary.size());
    const auto n = static_cast<std::int64_t>(A.size());
    const bool pass = ipow(b, d) >= ipow(2 * d, d) * ipow(n, d - 1);
    return {"isoperimetry", 2.0 * d * std::pow(static_cast<double>(n), 1.0 - 1.0 / d), static_cast<double>(b), pass};
}

AuditRow cube_isoperimetry_row(const SiteSet& A, const Box& cube) {
    const int d = A.dim();
    const int N = cube.extent(0);
    std::int64_t cut = 0, inside = 0;
    for (std::int64_t i = 0; i < cube.size(); ++i) {
        const Site x = cube.site(i);
        const bool ax = A.contains(x);
        if (ax) ++inside;
        for (int j = 0; j < d; ++j) {
            const Site y = x.plus_axis(j, 1);
            if (cube.contains(y) && ax != A.contains(y)) ++cut;
        }
    }
    const std::int64_t m = std::min(inside, cube.size() - inside);
    return {"cube_isoperimetry", 2.0 * static_cast<double>(m) / (3.0 * N), static_cast<double>(cut),
            3 * N * cut >= 2 * m};
}

std::vector<AuditRow> shift_lemma_rows(const Shift& a, const Shift& b) {
    const int d = a.dim();
    std::vector<AuditRow> out;
    const std::int64_t ta = tv(a), tb = tv(b);
    const std::int64_t s = a.l1();
    out.push_back({"functional_isoperimetry", 2.0 * d * std::pow(static_cast<double>(s), 1.0 - 1.0 / d),
                   static_cast<double>(ta), ipow(ta, d) >= ipow(2 * d, d) * ipow(s, d - 1)});
    if (!a.is_zero()) {
        const auto lc = static_cast<std::int64_t>(level_components(a).size());
        out.push_back({"level_component_count", static_cast<double>(lc), static_cast<double>(ta) / d, d * lc <= ta});
    }
    const Shift sum = a + b;
    const std::int64_t ts = tv(sum);
    out.push_back({"tv_subadditive", static_cast<double>(ts), static_cast<double>(ta + tb), ts <= ta + tb});
    const auto ra = trip_entropy_auto(a);
    const auto rb = trip_entropy_auto(b);
    const auto rs = trip_entropy_auto(sum);
    if (ra.exact && rb.exact && rs.exact) {
        const double rhs = 2.0 * static_cast<double>(ra.value) + static_cast<double>(rb.value) +
                           98.0 / d * static_cast<double>(ta + tb);
        out.push_back({"trip_subadditive", static_cast<double>(rs.value), rhs,
                       d * rs.value <= d * (2 * ra.value + rb.value) + 98 * (ta + tb)});
    }
    return out;
}

ReductionCheck check_reduction(const SpinConfiguration& sigma) {
    ReductionCheck c;
    try {
        const auto r = no_overhang_reduce(sigma);
        c.no_esc = profile(r.config).esc_count() == 0;
        c.osc_contained = r.osc_contained;
        c.wall_ok = r.wall_after <= r.wall_before;
        c.steps_ok = r.steps_ok;
        c.detail = r.violation;
    } catch (const NonTermination& e) {
        c.terminated = false;
        c.detail = e.what();
    }
    return c;
}

NoOverhangCheck check_no_overhang_minimizer(const CouplingField& field, const SiteSet& lambda, int M) {
    NoOverhangCheck c;
    const auto bf = brute_force_ground(field, lambda, M);
    const auto red = no_overhang_reduce(bf.config);
    c.ground = bf.energy_scaled;
    c.reduced = hamiltonian_scaled(red.config, field);
    const auto prof = profile(red.config);
    c.reduced_has_no_overhang = prof.esc_count() == 0 && prof.osc_count() == red.config.columns().size();
    return c;
}

OracleCheck check_oracle(const CouplingField& field, const SiteSet& lambda, int M) {
    OracleCheck c;
    const auto flow = ground_state(field, lambda, M);
    const auto bf = brute_force_ground(field, lambda, M);
    c.flow_energy = flow.energy_scaled;
    c.brute_energy = bf.energy_scaled;
    c.configs_equal = flow.config == bf.config;
    if (bf.runner_up_scaled) {
        const double gap = static_cast<double>(*bf.runner_up_scaled - bf.energy_scaled);
        c.gap_resolved = gap > 1e-9 * std::abs(static_cast<double>(bf.energy_scaled));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Localization

LocalizeResult localize(const ExperimentConfig& cfg) {
    cfg.validate();
    const SiteSet lam = cfg.lambda();
    const Site origin = Site::origin(cfg.dimension);
    const int K = cfg.heights_k;
    LocalizeResult res;
    res.records = run_indexed<TrialRecord>(
        static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            TrialRecord r;
            r.index = i;
            r.seed = cfg.seed + i;
            const auto g = solve_ground(cfg.field(i), lam, cfg.policy());
            r.energy_scaled = g.energy_scaled;
            r.certificate_ok = g.certificate_ok;
            r.M_used = g.M_used;
            for (int k = -K; k <= K; ++k)
                if (g.config.at(origin, k) != rho_dob(k)) r.flip_heights.push_back(k);
            r.seconds = elapsed(t0);
            return r;
        });

    std::int64_t n = 0;
    std::map<int, std::int64_t> flips;
    std::vector<std::int64_t> far(static_cast<std::size_t>(K) + 2, 0);
    for (const auto& r : res.records) {
        if (!r.certificate_ok) {
            ++res.excluded;
            continue;
        }
        ++n;
        int deepest = 0;
        for (int k : r.flip_heights) {
            ++flips[k];
            deepest = std::max(deepest, std::abs(k));
        }
        for (int t = 1; t <= deepest; ++t) ++far[static_cast<std::size_t>(t)];
    }
    auto make = [&](int k, std::int64_t f) {
        LocalizeRow row;
        row.k = k;
        row.flips = f;
        row.trials = n;
        row.p_hat = n ? static_cast<double>(f) / static_cast<double>(n) : 0.0;
        row.ci = wilson_interval(f, n);
        return row;
    };
    for (int k = -K; k <= K; ++k) res.rows.push_back(make(k, flips[k]));
    for (int t = 1; t <= K; ++t) res.tail.push_back(make(t, far[static_cast<std::size_t>(t)]));

    auto row_at = [&](int k) -> const LocalizeRow& { return res.rows[static_cast<std::size_t>(k + K)]; };
    for (int k = 0; k < K; ++k) {
        if (row_at(k + 1).ci.lo > row_at(k).ci.hi) res.monotone = false;
        if (row_at(-k - 1).ci.lo > row_at(-k).ci.hi) res.monotone = false;
    }

    // log(-log p) = log c + gamma log t for p(t) = exp(-c t^gamma).
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : res.tail)
        if (row.p_hat > 0 && row.p_hat < 1) pts.emplace_back(std::log(row.k), std::log(-std::log(row.p_hat)));
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double m = static_cast<double>(pts.size());
        const double den = m * sxx - sx * sx;
        if (den != 0) res.fitted_exponent = (m * sxy - sx * sy) / den;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Convergence

ConvergeResult converge(const ExperimentConfig& cfg) {
    cfg.validate();
    const SiteSet inner = cfg.lambda_box(cfg.radii.front());
    ConvergeResult res;
    res.records = run_indexed<ConvergeRecord>(
        static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            ConvergeRecord r;
            r.index = i;
            r.seed = cfg.seed + i;
            r.certificates_ok = true;
            const CouplingField field = cfg.field(i);
            std::vector<SpinConfiguration> sols;
            for (int L : cfg.radii) {
                auto g = solve_ground(field, cfg.lambda_box(L), cfg.policy());
                r.certificates_ok = r.certificates_ok && g.certificate_ok;
                r.M_used.push_back(g.M_used);
                sols.push_back(std::move(g.config));
            }
            const int Mc = *std::max_element(r.M_used.begin(), r.M_used.end());
            std::vector<SpinConfiguration> restr;
            for (const auto& s : sols) restr.push_back(s.restricted(inner, Mc));
            std::size_t first = restr.size() - 1;
            while (first > 0 && restr[first - 1] == restr.back()) --first;
            const bool stabilized = restr.size() == 1 || first + 1 < restr.size();
            r.stabilization_radius = stabilized ? cfg.radii[first] : -1;
            r.seconds = elapsed(t0);
            return r;
        });
    std::map<int, std::int64_t> hist;
    for (const auto& r : res.records) {
        if (!r.certificates_ok) {
            ++res.excluded;
            continue;
        }
        ++res.included;
        ++hist[r.stabilization_radius];
        if (r.stabilization_radius < 0) ++res.unstabilized;
    }
    for (int L : cfg.radii) res.histogram.emplace_back(L, hist[L]);
    res.histogram.emplace_back(-1, hist[-1]);
    return res;
}

// ---------------------------------------------------------------------------
// Gap scan

GapScanResult gap_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    const SiteSet lam = cfg.lambda();
    const Site origin = Site::origin(cfg.dimension);
    GapScanResult res;
    res.records = run_indexed<GapRecord>(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        GapRecord r;
        r.index = i;
        r.seed = cfg.seed + i;
        const CouplingField field = cfg.field(i);
        const auto base = solve_ground(field, lam, cfg.policy());
        SiteSet E(lam.window());
        E.insert(origin);
        const auto cs = construct_shift(base.config, E, field, cfg.policy(), &base);
        const auto rep = verify_guarantees(cs, base.config, E, field);
        r.trusted = cs.trusted;
        r.gap_scaled = cs.gap_scaled;
        r.gap = cs.gap;
        r.tv = rep.tv_tau;
        r.trip = rep.trip_tau;
        r.trip_exact = rep.trip_tau_exact;
        r.admissible = rep.admissible;
        r.layering_ok = rep.layering_ok;
        r.trip_ok = rep.trip_ok;
        r.trip_conclusive = rep.trip_conclusive;
        r.height_ok = rep.height_ok;
        r.components_ok = rep.components_ok;
        r.max_flip_height = rep.max_flip_height;
        r.issues = cs.issues.size();
        r.shift_zero = cs.tau.is_zero();
        r.seconds = elapsed(t0);
        return r;
    });
    double top = 0;
    for (const auto& r : res.records) {
        if (!r.trusted) {
            ++res.excluded;
            continue;
        }
        ++res.included;
        if (r.violation()) ++res.violations;
        top = std::max(top, r.gap);
    }
    for (std::int64_t j = 0;; ++j) {
        const double thr = static_cast<double>(j) * cfg.gap_step;
        std::int64_t c = 0;
        for (const auto& r : res.records)
            if (r.trusted && r.gap >= thr) ++c;
        res.tail.emplace_back(thr, c);
        if (thr > top) break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Audit suites

namespace {

class SuiteAccumulator {
public:
    explicit SuiteAccumulator(std::string suite) : suite_(std::move(suite)) {}

    void add(const AuditRow& row) {
        auto it = index_.find(row.check);
        if (it == index_.end()) {
            it = index_.emplace(row.check, rows_.size()).first;
            rows_.push_back({suite_, row.check, 0, 0, std::nullopt});
        }
        SuiteRow& r = rows_[it->second];
        ++r.cases;
        if (!row.pass) ++r.violations;
        if (row.rhs > 0) {
            const double ratio = row.lhs / row.rhs;
            if (!r.worst_ratio || ratio > *r.worst_ratio) r.worst_ratio = ratio;
        }
    }
    void add(const std::string& check, bool pass) { add(AuditRow{check, pass ? 0.0 : 1.0, 0.0, pass}); }

    std::vector<SuiteRow> rows() const { return rows_; }

private:
    std::string suite_;
    std::map<std::string, std::size_t> index_;
    std::vector<SuiteRow> rows_;
};

SiteSet segment(int lo, int hi) {
    SiteSet s(Box(Site{lo - 1}, Site{hi + 1}));
    for (int x = lo; x <= hi; ++x) s.insert(Site{x});
    return s;
}

SiteSet square2() {
    SiteSet s(Box(Site{-1, -1}, Site{2, 2}));
    for (int x = 0; x <= 1; ++x)
        for (int y = 0; y <= 1; ++y) s.insert(Site{x, y});
    return s;
}

}  // namespace

std::vector<SuiteRow> run_suite(const std::string& suite, const ExperimentConfig& cfg) {
    SuiteAccumulator acc(suite);
    std::mt19937_64 rng(cfg.seed);
    const int cases = cfg.audit_cases;

    if (suite == "isoperimetry") {
        for (int c = 0; c < cases; ++c) {
            const int d = 2 + c % 2;
            const int extent = d == 2 ? 6 : 4;
            const SiteSet A = random_site_set(rng, d, extent);
            acc.add(isoperimetry_row(A));
            for (int j = 0; j < 4; ++j) {
                const int N = static_cast<int>(uniform_int(rng, 2, 4));
                Site lo(d), hi(d);
                for (int i = 0; i < d; ++i) {
                    lo[i] = static_cast<int>(uniform_int(rng, -N + 1, extent - 1));
                    hi[i] = lo[i] + N - 1;
                }
                acc.add(cube_isoperimetry_row(A, Box(lo, hi)));
            }
            const SiteSet animal = random_animal(rng, d, static_cast<int>(uniform_int(rng, 1, 12)));
            acc.add(isoperimetry_row(animal));
            const auto vis = visible_boundary(animal, std::nullopt);
            const auto parts = static_cast<double>(components(vis, Adjacency::L1Plus).size());
            acc.add(AuditRow{"visible_boundary_connected", parts, 1.0, parts == 1.0});
            const SiteSet small = random_site_set(rng, 2, 3);
            acc.add("primitive_contour_equiv", primitive_contour_check(small).agree());
        }
    } else if (suite == "graining") {
        for (const auto& row : rounding_convention_checks(cfg.rounding)) acc.add(row);
        for (int c = 0; c < cases; ++c) {
            const int d = 2 + c % 2;
            const Shift tau = random_shift(rng, d, cfg.tv_max);
            const Shift other = random_shift(rng, d, cfg.tv_max);
            AuditOptions opts;
            opts.fine_samples = cfg.fine_samples;
            opts.seed = cfg.seed + static_cast<std::uint64_t>(c);
            opts.rounding = cfg.rounding;
            for (const auto& row : audit_grainings(tau, opts)) acc.add(row);
            for (const auto& row : shift_lemma_rows(tau, other)) acc.add(row);
        }
    } else if (suite == "reduction") {
        for (int c = 0; c < cases; ++c) {
            const SiteSet lam = c % 2 ? segment(-2, 2) : square2();
            const auto chk = check_reduction(random_interfacial(rng, lam, 3));
            acc.add("reduction_terminates", chk.terminated);
            acc.add("reduction_no_esc", chk.no_esc);
            acc.add("reduction_osc_contained", chk.osc_contained);
            acc.add("reduction_wall_nonincreasing", chk.wall_ok);
            acc.add("reduction_step_order", chk.steps_ok);
        }
        const auto par = Distribution::uniform(0.5, 2.0);
        const auto perp = Distribution::point(0.7);
        for (int c = 0; c < std::min(cases, 50); ++c) {
            const CouplingField field(cfg.seed + static_cast<std::uint64_t>(c), par, perp, 1);
            const auto chk = check_no_overhang_minimizer(field, segment(-1, 1), 2);
            acc.add(AuditRow{"no_overhang_minimizer", static_cast<double>(chk.reduced),
                             static_cast<double>(chk.ground), chk.ok()});
        }
    } else if (suite == "enumeration") {
        const Box win(Site{-1, -1}, Site{1, 1});
        const auto four = enumerate_shifts(win, 4);
        acc.add(AuditRow{"enumeration_count_lambda4", static_cast<double>(four.size()), 19.0, four.size() == 19});
        const auto all = enumerate_shifts(win, 8);
        std::vector<std::int64_t> counts(9, 0);
        for (const auto& s : all) {
            const auto t = tv(s);
            for (std::int64_t lam = t; lam <= 8; ++lam) ++counts[static_cast<std::size_t>(lam)];
            if (s.is_zero()) continue;
            const auto lc = static_cast<std::int64_t>(level_components(s).size());
            acc.add(AuditRow{"enumerated_level_components", static_cast<double>(lc), static_cast<double>(t) / 2,
                             2 * lc <= t});
        }
        for (std::size_t lam = 1; lam < counts.size(); ++lam)
            acc.add(AuditRow{"enumeration_monotone", static_cast<double>(counts[lam - 1]),
                             static_cast<double>(counts[lam]), counts[lam - 1] <= counts[lam]});
        acc.add(AuditRow{"enumeration_count_lambda4_cumulative", static_cast<double>(counts[4]), 19.0,
                         counts[4] == 19});
    } else if (suite == "oracle") {
        const auto nu = Distribution::uniform(1.0, 2.0);
        for (int c = 0; c < cases; ++c) {
            const bool planar = c % 4 == 3;
            const CouplingField field(cfg.seed + static_cast<std::uint64_t>(c), nu, nu, planar ? 2 : 1);
            const auto chk = check_oracle(field, planar ? square2() : segment(-1, 1), 2);
            acc.add("flow_energy_equals_brute_force", chk.flow_energy == chk.brute_energy);
            acc.add("flow_config_equals_brute_force", !chk.gap_resolved || chk.configs_equal);
        }
    } else {
        throw InvalidConfig("unknown suite " + suite);
    }
    return acc.rows();
}

// ---------------------------------------------------------------------------
// Runners

RunOutput run_localize(const ExperimentConfig& cfg) {
    const auto res = localize(cfg);
    RunOutput out;
    std::string agg = csv({"k", "flips", "trials", "p_hat", "ci_lo", "ci_hi"});
    for (const auto& r : res.rows)
        agg += line(r.k, r.flips, r.trials, format_number(r.p_hat), format_number(r.ci.lo), format_number(r.ci.hi));
    std::string tail = csv({"threshold", "flips", "trials", "p_hat", "ci_lo", "ci_hi"});
    for (const auto& r : res.tail)
        tail += line(r.k, r.flips, r.trials, format_number(r.p_hat), format_number(r.ci.lo), format_number(r.ci.hi));
    std::string trials = csv({"trial", "seed", "energy_scaled", "certificate_ok", "M_used", "flip_heights", "seconds"});
    for (const auto& r : res.records) {
        std::string fl;
        for (std::size_t j = 0; j < r.flip_heights.size(); ++j) fl += (j ? ";" : "") + std::to_string(r.flip_heights[j]);
        trials += line(r.index, r.seed, to_i64(r.energy_scaled), yn(r.certificate_ok), r.M_used, fl,
                       format_number(r.seconds));
    }
    out.files = {{"localize.csv", agg}, {"localize_tail.csv", tail}, {"localize_trials.csv", trials},
                 {"localize.conf", cfg.to_text()}};
    const auto included = static_cast<std::int64_t>(res.records.size()) - res.excluded;
    out.summary.push_back("trials " + std::to_string(res.records.size()) + ", included " + std::to_string(included) +
                          ", excluded (certificate) " + std::to_string(res.excluded));
    out.summary.push_back(std::string("monotone in |k| up to CI overlap: ") + (res.monotone ? "yes" : "no"));
    if (res.tail.size() >= 3)
        out.summary.push_back("P(flip at |k| >= 3) = " + format_number(res.tail[2].p_hat));
    out.summary.push_back("fitted stretched exponent: " +
                          (res.fitted_exponent ? format_number(*res.fitted_exponent) : std::string("n/a")));
    return out;
}

RunOutput run_converge(const ExperimentConfig& cfg) {
    const auto res = converge(cfg);
    RunOutput out;
    std::string agg = csv({"radius", "count", "fraction"});
    for (const auto& [L, c] : res.histogram)
        agg += line(L, c, format_number(res.included ? static_cast<double>(c) / static_cast<double>(res.included) : 0.0));
    std::string trials = csv({"trial", "seed", "certificates_ok", "stabilization_radius", "M_used", "seconds"});
    for (const auto& r : res.records) {
        std::string ms;
        for (std::size_t j = 0; j < r.M_used.size(); ++j) ms += (j ? ";" : "") + std::to_string(r.M_used[j]);
        trials += line(r.index, r.seed, yn(r.certificates_ok), r.stabilization_radius, ms, format_number(r.seconds));
    }
    out.files = {{"converge.csv", agg}, {"converge_trials.csv", trials}, {"converge.conf", cfg.to_text()}};
    out.summary.push_back("trials " + std::to_string(res.records.size()) + ", included " +
                          std::to_string(res.included) + ", excluded (certificate) " + std::to_string(res.excluded));
    out.summary.push_back("unstabilized by the largest radius: " + std::to_string(res.unstabilized));
    return out;
}

RunOutput run_gap_scan(const ExperimentConfig& cfg) {
    const auto res = gap_scan(cfg);
    RunOutput out;
    std::string agg = csv({"threshold", "count", "fraction"});
    for (const auto& [thr, c] : res.tail)
        agg += line(format_number(thr), c,
                    format_number(res.included ? static_cast<double>(c) / static_cast<double>(res.included) : 0.0));
    std::string trials = csv({"trial", "seed", "trusted", "gap_scaled", "gap", "tv", "trip", "trip_exact",
                              "admissible", "layering_ok", "trip_ok", "trip_conclusive", "height_ok",
                              "components_ok", "max_flip_height", "issues", "seconds"});
    for (const auto& r : res.records)
        trials += line(r.index, r.seed, yn(r.trusted), to_i64(r.gap_scaled), format_number(r.gap), r.tv, r.trip,
                       yn(r.trip_exact), yn(r.admissible), yn(r.layering_ok), yn(r.trip_ok), yn(r.trip_conclusive),
                       yn(r.height_ok), yn(r.components_ok), r.max_flip_height, r.issues, format_number(r.seconds));
    out.files = {{"gap_scan.csv", agg}, {"gap_scan_trials.csv", trials}, {"gap_scan.conf", cfg.to_text()}};
    out.summary.push_back("trials " + std::to_string(res.records.size()) + ", included " +
                          std::to_string(res.included) + ", excluded (certificate) " + std::to_string(res.excluded));
    out.summary.push_back("guarantee violations: " + std::to_string(res.violations));
    out.violation = res.violations > 0;
    return out;
}

RunOutput run_graining_audit(const ExperimentConfig& cfg) {
    cfg.validate();
    RunOutput out;
    std::string agg = csv({"shift_id", "check_name", "lhs", "rhs", "pass"});
    nlohmann::json shifts = nlohmann::json::array();
    std::int64_t failures = 0;
    auto emit = [&](int id, const AuditRow& row) {
        agg += line(id, row.check, format_number(row.lhs), format_number(row.rhs), yn(row.pass));
        if (!row.pass) ++failures;
    };
    for (const auto& row : rounding_convention_checks(cfg.rounding)) emit(0, row);
    std::mt19937_64 rng(cfg.seed);
    for (int id = 1; id <= cfg.audit_shifts; ++id) {
        const Shift tau = random_shift(rng, cfg.dimension, cfg.tv_max);
        shifts.push_back({{"shift_id", id}, {"shift", nlohmann::json::parse(tau.to_json())}});
        AuditOptions opts;
        opts.fine_samples = cfg.fine_samples;
        opts.seed = cfg.seed + static_cast<std::uint64_t>(id);
        opts.rounding = cfg.rounding;
        for (const auto& row : audit_grainings(tau, opts)) emit(id, row);
    }
    out.files = {{"graining_audit.csv", agg},
                 {"graining_audit_shifts.json", shifts.dump(1) + "\n"},
                 {"graining_audit.conf", cfg.to_text()}};
    out.summary.push_back("shifts " + std::to_string(cfg.audit_shifts) + ", failed rows " + std::to_string(failures));
    out.violation = failures > 0;
    return out;
}

RunOutput run_audits(const ExperimentConfig& cfg) {
    cfg.validate();
    RunOutput out;
    std::string agg = csv({"suite", "check_name", "cases", "violations", "worst_ratio", "pass"});
    std::int64_t failed = 0;
    for (const auto& suite : cfg.suites) {
        for (const auto& r : run_suite(suite, cfg)) {
            agg += line(r.suite, r.check, r.cases, r.violations,
                        r.worst_ratio ? format_number(*r.worst_ratio) : std::string("nan"), yn(r.violations == 0));
            if (r.violations) {
                ++failed;
                out.summary.push_back("FAILED " + r.suite + "/" + r.check + ": " + std::to_string(r.violations) +
                                      " of " + std::to_string(r.cases));
            }
        }
    }
    out.files = {{"audits.csv", agg}, {"audits.conf", cfg.to_text()}};
    out.summary.push_back("suites " + std::to_string(cfg.suites.size()) + ", failed checks " + std::to_string(failed));
    out.violation = failed > 0;
    return out;
}

RunOutput run_solve(const ExperimentConfig& cfg) {
    cfg.validate();
    const SiteSet lam = cfg.lambda();
    const CouplingField field = cfg.field(0);
    const auto g = solve_ground(field, lam, cfg.policy());
    SiteSet E(lam.window());
    E.insert(Site::origin(cfg.dimension));
    const auto cs = construct_shift(g.config, E, field, cfg.policy(), &g);
    const auto rep = verify_guarantees(cs, g.config, E, field);

    nlohmann::json j;
    j["instance"] = nlohmann::json::parse(instance_json(field, lam, g.M_used));
    j["energy"] = g.energy;
    j["energy_scaled"] = to_i64(g.energy_scaled);
    j["certificate_ok"] = g.certificate_ok;
    j["M_used"] = g.M_used;
    j["interface"] = nlohmann::json::parse(interface_json(g.config, &cs));
    j["guarantees"] = rep.summary();
    const ConcentrationReport cond = check_condition(cfg.par(), cfg.perp(), cfg.dimension, cfg.c0);
    j["kappa"] = cond.kappa;
    j["condition_lhs"] = cond.lhs;
    j["condition_rhs"] = cond.rhs;

    std::string cols = csv({"site", "layered", "height", "osc", "esc"});
    const InterfaceProfile prof = profile(g.config);
    for (const auto& c : prof.columns()) {
        std::string site;
        for (int i = 0; i < c.v.d; ++i) site += (i ? ";" : "") + std::to_string(c.v[i]);
        const auto h = c.height();
        cols += line(site, yn(c.layered()), h ? std::to_string(*h) : std::string(""), c.osc.size(), c.esc.size());
    }
    RunOutput out;
    out.files = {{"solve.json", j.dump(1) + "\n"}, {"solve.csv", cols}, {"solve.conf", cfg.to_text()}};
    out.summary.push_back("seed " + std::to_string(cfg.seed) + ", energy " + format_number(g.energy) + ", M " +
                          std::to_string(g.M_used) + ", certificate " + (g.certificate_ok ? "ok" : "failed"));
    out.summary.push_back("shift tv " + std::to_string(rep.tv_tau) + ", gap " + format_number(cs.gap) + ", " +
                          rep.summary());
    out.violation = cs.trusted && !(rep.all_ok() && cs.issues.empty());
    return out;
}

std::string strip_timing(const std::string& text) {
    std::istringstream is(text);
    std::string out, ln;
    while (std::getline(is, ln)) {
        if (!ln.empty() && ln[0] != '#') {
            const auto cut = ln.rfind(',');
            if (cut != std::string::npos) ln = ln.substr(0, cut);
        }
        out += ln + "\n";
    }
    return out;
}

void write_outputs(const RunOutput& out, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& f : out.files) {
        std::ofstream os(std::filesystem::path(dir) / f.name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + f.name);
        os << f.content;
    }
}

}  // namespace dlab
