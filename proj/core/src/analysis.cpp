#include "tubelab/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tubelab/errors.hpp"
#include "tubelab/numeric.hpp"
#include "tubelab/random.hpp"

namespace tubelab {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using numeric::polyfit;

// Least-squares coefficient a of residual ~ a r^2, clamped at 0.
double r2_slack(std::span<const double> r, std::span<const double> residual) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double r2 = r[i] * r[i];
        num += residual[i] * r2;
        den += r2 * r2;
    }
    return den > 0.0 ? std::max(0.0, num / den) : 0.0;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

// 2D convex polygon helpers in the (x1, x3) plane.
using P2 = std::array<double, 2>;

double cross2(const P2& o, const P2& a, const P2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

std::vector<P2> hull2(std::vector<P2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<P2> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

double polygon_area(const std::vector<P2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a convex polygon by a counter-clockwise convex one.
std::vector<P2> clip(std::vector<P2> subject, const std::vector<P2>& window) {
    for (std::size_t i = 0; i < window.size() && !subject.empty(); ++i) {
        const P2& a = window[i];
        const P2& b = window[(i + 1) % window.size()];
        std::vector<P2> out;
        for (std::size_t j = 0; j < subject.size(); ++j) {
            const P2& p = subject[j];
            const P2& q = subject[(j + 1) % subject.size()];
            const double sp = cross2(a, b, p);
            const double sq = cross2(a, b, q);
            if (sp >= 0) out.push_back(p);
            if ((sp >= 0) != (sq >= 0)) {
                const double t = sp / (sp - sq);
                out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
            }
        }
        subject = std::move(out);
    }
    return subject;
}

Box intersect_boxes_slab(const ConvexPolytope3& a, const ConvexPolytope3& b, double r) {
    const auto ba = a.bounds();
    const auto bb = b.bounds();
    const Point3 lo{std::max(ba[0].x1, bb[0].x1) - r, -r, std::max(ba[0].x3, bb[0].x3) - r};
    const Point3 hi{std::min(ba[1].x1, bb[1].x1) + r, r, std::min(ba[1].x3, bb[1].x3) + r};
    return Box(lo, hi);
}

}  // namespace

double surface_area_union(const CounterexamplePair& pair) {
    return pair.M().surface_area() + pair.M_prime().surface_area() - 2.0 * pair.C().area();
}

std::string to_string(ExcessRoute route) { return route == ExcessRoute::via_A ? "via_A" : "direct"; }

ExcessRoute excess_route_from_string(const std::string& s) {
    if (s == "via_A") return ExcessRoute::via_A;
    if (s == "direct") return ExcessRoute::direct;
    throw PreconditionError("unknown excess route '" + s + "'");
}

ExcessValue excess(const CounterexamplePair& pair, double r, const McConfig& cfg, ExcessRoute route) {
    if (!(r >= 0.0 && r <= 0.1)) throw DomainError("excess needs 0 <= r <= 0.1");
    ExcessValue out;
    out.r = r;
    out.route = route;
    out.seed = cfg.seed;
    out.n_samples = cfg.n_samples;
    if (r == 0.0) return out;
    if (route == ExcessRoute::via_A) {
        const auto a = volume_A(pair, r, cfg);
        out.value = -a.value;
        out.std_error = a.std_error;
        return out;
    }
    const auto sm = steiner_3d(pair.M());
    const auto sp = steiner_3d(pair.M_prime());
    const auto both = tube_volume_intersection(pair, r, cfg);
    out.value = (sm.c2 + sp.c2) * r * r + (sm.c3 + sp.c3) * r * r * r + 2.0 * r * pair.C().area() - both.value;
    out.std_error = both.std_error;
    out.cancellation_dominated = out.std_error > std::abs(out.value) / 3.0;
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, double r) {
    return splitmix64(seed ^ splitmix64(std::bit_cast<std::uint64_t>(r)));
}

std::string ExcessSeries::to_csv() const {
    std::string out = std::string(kSeriesCsvHeader) + '\n';
    for (const auto& e : entries) {
        out += format_double(e.r) + ',' + format_double(e.value) + ',' + format_double(e.std_error) + ',' +
               to_string(e.route) + '\n';
    }
    return out;
}

ExcessSeries ExcessSeries::from_csv(const std::string& text) {
    ExcessSeries s;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
    }
    if (line.rfind("r,E,se", 0) != 0) throw PreconditionError("missing series header");
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto f = split(line, ',');
        if (f.size() < 4) throw PreconditionError("malformed series row: " + line);
        ExcessValue e;
        try {
            e.r = std::stod(f[0]);
            e.value = std::stod(f[1]);
            e.std_error = std::stod(f[2]);
        } catch (const std::exception&) {
            throw PreconditionError("malformed series row: " + line);
        }
        e.route = excess_route_from_string(f[3]);
        s.entries.push_back(e);
    }
    return s;
}

nlohmann::json ExcessSeries::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
        rows.push_back({{"r", e.r},
                        {"E", e.value},
                        {"se", e.std_error},
                        {"route", to_string(e.route)},
                        {"seed", e.seed},
                        {"n", e.n_samples},
                        {"cancellation_dominated", e.cancellation_dominated}});
    }
    return {{"profile", profile}, {"seed", seed}, {"entries", rows}};
}

ExcessSeries excess_scan(const CounterexamplePair& pair, std::span<const double> r_grid, const McConfig& cfg,
                         ExcessRoute route) {
    if (r_grid.empty()) throw PreconditionError("empty r grid");
    std::vector<double> sorted(r_grid.begin(), r_grid.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw PreconditionError("duplicate radius in grid");
    }
    ExcessSeries s;
    s.profile = pair.profile().name();
    s.seed = cfg.seed;
    for (double r : r_grid) {
        McConfig c = cfg;
        c.seed = derive_seed(cfg.seed, r);
        s.entries.push_back(excess(pair, r, c, route));
    }
    return s;
}

std::vector<double> geometric_grid(double a, double b, int n) {
    if (!(a > 0.0 && b > 0.0) || n < 1) throw PreconditionError("geometric grid needs positive ends and n >= 1");
    if (n == 1) return {a};
    std::vector<double> g(n);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (int i = 0; i < n; ++i) g[i] = std::exp(la + (lb - la) * i / (n - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

nlohmann::json ExponentFit::to_json() const {
    return {{"slope", slope},   {"intercept", intercept}, {"r_squared", r_squared},
            {"r_min", r_min},   {"r_max", r_max},         {"points", points},
            {"excluded", excluded}};
}

ExponentFit fit_power_law(std::span<const double> r, std::span<const double> values) {
    if (r.size() != values.size()) throw PreconditionError("fit inputs differ in length");
    if (r.size() < 4) throw FitError("exponent fit needs at least 4 points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || values[i] == 0.0) throw FitError("log of a non-positive value");
        lx.push_back(std::log(r[i]));
        ly.push_back(std::log(std::abs(values[i])));
    }
    const auto c = polyfit(lx, ly, 1);
    double mean = 0.0;
    for (double y : ly) mean += y;
    mean /= static_cast<double>(ly.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - (c[0] + c[1] * lx[i]);
        ss_res += e * e;
        ss_tot += (ly[i] - mean) * (ly[i] - mean);
    }
    ExponentFit f;
    f.intercept = c[0];
    f.slope = c[1];
    f.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    f.r_min = *std::min_element(r.begin(), r.end());
    f.r_max = *std::max_element(r.begin(), r.end());
    f.points = static_cast<int>(r.size());
    return f;
}

ExponentFit fit_exponent(const ExcessSeries& series, FitWindow window) {
    std::vector<double> r;
    std::vector<double> v;
    int excluded = 0;
    for (const auto& e : series.entries) {
        if (e.r < window.r_min || e.r > window.r_max) continue;
        if (!(std::abs(e.value) > 3.0 * e.std_error) || e.value == 0.0) {
            ++excluded;
            continue;
        }
        r.push_back(e.r);
        v.push_back(e.value);
    }
    if (r.size() < 4) {
        throw FitError("only " + std::to_string(r.size()) + " usable points in the fit window");
    }
    auto f = fit_power_law(r, v);
    f.excluded = excluded;
    return f;
}

nlohmann::json BoundsReport::to_json() const {
    nlohmann::json j{{"r", r},
                     {"lower", lower},
                     {"upper", upper},
                     {"upper_corrected", upper_corrected},
                     {"lower_explicit", lower_explicit},
                     {"alpha", alpha},
                     {"rho_r", rho_r},
                     {"integral_I", integral_I},
                     {"big_O_slack", big_O_slack}};
    auto put = [&](const char* k, const std::optional<double>& v) {
        if (v) j[k] = *v;
    };
    put("exponent", exponent);
    put("corollary_lower_coeff", corollary_lower_coeff);
    put("corollary_upper_coeff", corollary_upper_coeff);
    put("theorem_lower_coeff", theorem_lower_coeff);
    put("theorem_upper_coeff", theorem_upper_coeff);
    put("epsilon_lambda", epsilon_lambda);
    put("epsilon_upper", epsilon_upper);
    put("epsilon_lower", epsilon_lower);
    return j;
}

BoundsReport theoretical_bounds(const Profile& profile, double r) {
    return theoretical_bounds(profile, r, compute_alpha(profile));
}

BoundsReport theoretical_bounds(const Profile& profile, double r, double alpha) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("bounds need 0 < r < 1");
    BoundsReport b;
    b.r = r;
    b.alpha = alpha;
    b.rho_r = rho_of_r(profile, r);
    if (b.rho_r > 1.0) throw DomainError("rho(r) > 1: r too large for the bound");
    b.integral_I = integral_I(profile, r);
    b.upper = -2.0 * r * r * b.integral_I;
    b.upper_corrected = -r * r * b.integral_I;

    // int_rho^1 psi'(t)/phi'(theta(t)) dt in u = ln t
    double J = 0.0;
    if (b.rho_r < 1.0) {
        auto f = [&](double u) {
            const double t = std::exp(u);
            return t * profile.psi1(t) / profile.phi1(solve_theta(profile, t, 1e-14));
        };
        J = numeric::integrate(f, std::log(b.rho_r), 0.0, 1e-9, 64).value;
    }
    const double head =
        b.rho_r > 0.0 ? numeric::integrate([&](double t) { return profile.psi(t); }, 0.0, b.rho_r, 1e-10, 32).value
                      : 0.0;
    b.lower = -(2.0 * std::sqrt(alpha) * r * r * J + 2.0 * r * head);
    b.lower_explicit = b.lower - 2.0 * r * r * b.rho_r - 2.0 * r * r * (1.0 + 2.0 * r);

    if (const auto pp = profile.power_params(); pp && pp->satisfies_corollary()) {
        const auto cc = corollary_constants(pp->p, pp->q);
        b.exponent = cc.exponent;
        b.corollary_lower_coeff = -cc.c_pq;
        b.corollary_upper_coeff = -cc.upper_coeff;
        if (pp->p == 2 && pp->q % 3 == 0) {
            b.theorem_lower_coeff = -16.0 / 3.0;
            b.theorem_upper_coeff = -2.0 / pp->q;
        }
    }
    if (profile.driver()) {
        const auto e = epsilon_bounds(profile, r, alpha);
        b.epsilon_lambda = e.lambda;
        b.epsilon_upper = e.upper;
        b.epsilon_lower = e.lower;
    }
    return b;
}

nlohmann::json EpsilonBounds::to_json() const {
    return {{"r", r}, {"lambda", lambda}, {"upper", upper}, {"lower", lower}};
}

EpsilonBounds epsilon_bounds(const Profile& profile, double r, double alpha) {
    const auto& d = profile.driver();
    if (!d) throw PreconditionError("profile has no decay function");
    if (!(r > 0.0 && r <= d->r_max)) throw DomainError("r outside the decay function's range");
    EpsilonBounds e;
    e.r = r;
    e.lambda = 16.0 - 4.0 * alpha;
    const double eps = d->eps(r);
    e.upper = -2.0 * r * eps;
    e.lower = -16.0 * r * eps_over_t_integral(*d, r) + e.lambda * r * eps;
    return e;
}

nlohmann::json SandwichVerdict::to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : violations) {
        v.push_back({{"r", x.r}, {"E", x.value}, {"bound", x.bound}, {"side", x.side}});
    }
    nlohmann::json b = nlohmann::json::array();
    for (const auto& x : bounds) b.push_back(x.to_json());
    return {{"pass", pass},
            {"upper_slack", upper_slack},
            {"lower_slack", lower_slack},
            {"violations", v},
            {"bounds", b}};
}

SandwichVerdict sandwich_check(const ExcessSeries& series, const Profile& profile) {
    SandwichVerdict out;
    if (series.entries.empty()) {
        out.pass = false;
        return out;
    }
    const double alpha = compute_alpha(profile);
    std::vector<double> r;
    std::vector<double> up_res;
    std::vector<double> lo_res;
    for (const auto& e : series.entries) {
        auto b = theoretical_bounds(profile, e.r, alpha);
        r.push_back(e.r);
        up_res.push_back(e.value - b.upper);
        lo_res.push_back(b.lower - e.value);
        out.bounds.push_back(b);
    }
    out.upper_slack = r2_slack(r, up_res);
    out.lower_slack = r2_slack(r, lo_res);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto& e = series.entries[i];
        auto& b = out.bounds[i];
        b.big_O_slack = std::max(out.upper_slack, out.lower_slack);
        const double r2 = e.r * e.r;
        const double hi = b.upper + out.upper_slack * r2 + 3.0 * e.std_error;
        const double lo = b.lower - out.lower_slack * r2 - 3.0 * e.std_error;
        if (e.value > hi) out.violations.push_back({e.r, e.value, hi, "upper"});
        if (e.value < lo) out.violations.push_back({e.r, e.value, lo, "lower"});
    }
    out.pass = out.violations.empty();
    return out;
}

std::string plot_data_csv(const ExcessSeries& series, const Profile& profile) {
    const double alpha = compute_alpha(profile);
    std::string out = "r,E,se,lower,upper\n";
    for (const auto& e : series.entries) {
        const auto b = theoretical_bounds(profile, e.r, alpha);
        out += format_double(e.r) + ',' + format_double(e.value) + ',' + format_double(e.std_error) + ',' +
               format_double(b.lower) + ',' + format_double(b.upper) + '\n';
    }
    return out;
}

ContactPair random_contact_pair(std::uint64_t seed, int contact_dimension) {
    if (contact_dimension < 0 || contact_dimension > 2) throw PreconditionError("contact dimension must be 0, 1 or 2");
    RandomStream rng(seed, 0);
    // One body in x2 >= 0 whose intersection with x2 = 0 is exactly `base`.
    auto body = [&](const std::vector<P2>& base, const Point3& centre) {
        std::vector<Point3> pts;
        for (const auto& b : base) pts.push_back({b[0], 0.0, b[1]});
        for (int i = 0; i < 16; ++i) {
            const Vec3 u = rng.unit_vector();
            const double rad = 0.2 + 0.3 * rng.uniform();
            pts.push_back({centre.x1 + rad * u.x1, 0.05 + centre.x2 + rad * std::abs(u.x2), centre.x3 + rad * u.x3});
        }
        return ConvexPolytope3::hull(pts);
    };
    auto base = [&](double cx, double cz) {
        std::vector<P2> b;
        if (contact_dimension == 0) {
            b.push_back({0.0, 0.0});
        } else if (contact_dimension == 1) {
            b.push_back({cx - 0.3, 0.0});
            b.push_back({cx + 0.3, 0.0});
        } else {
            for (int i = 0; i < 8; ++i) {
                const double a = 2.0 * kPi * rng.uniform();
                const double rad = 0.15 + 0.2 * rng.uniform();
                b.push_back({cx + rad * std::cos(a), cz + rad * std::sin(a)});
            }
        }
        return b;
    };
    const auto b1 = base(0.0, 0.0);
    const auto b2 = base(0.1 * (rng.uniform() - 0.5), 0.1 * (rng.uniform() - 0.5));
    ContactPair out;
    out.M = body(b1, {0.0, 0.1, 0.0});
    out.M_prime = body(b2, {0.05, 0.1, -0.05}).mirrored_x2();
    out.contact_dimension = contact_dimension;
    if (contact_dimension == 2) out.contact_area = polygon_area(clip(hull2(b1), hull2(b2)));
    out.name = "contact" + std::to_string(contact_dimension) + "-" + std::to_string(seed);
    return out;
}

ExcessValue contact_pair_excess(const ContactPair& pair, double r, const McConfig& cfg) {
    if (!(r > 0.0 && r <= 0.5)) throw DomainError("contact pair excess needs 0 < r <= 0.5");
    const auto sm = steiner_3d(pair.M);
    const auto sp = steiner_3d(pair.M_prime);
    const auto both = mc_volume(
        [&](const Point3& x) { return within_distance(pair.M, x, r) && within_distance(pair.M_prime, x, r); },
        intersect_boxes_slab(pair.M, pair.M_prime, r), cfg);
    ExcessValue e;
    e.r = r;
    e.route = ExcessRoute::direct;
    e.seed = cfg.seed;
    e.n_samples = cfg.n_samples;
    e.value = (sm.c2 + sp.c2) * r * r + (sm.c3 + sp.c3) * r * r * r + 2.0 * r * pair.contact_area - both.value;
    e.std_error = both.std_error;
    e.cancellation_dominated = e.std_error > std::abs(e.value) / 3.0;
    return e;
}

nlohmann::json LittleOCheck::to_json() const {
    nlohmann::json j{{"pass", pass}, {"r", r}, {"ratio", ratio}, {"ratio_se", ratio_se}, {"violations", violations}};
    if (fit) j["fit"] = fit->to_json();
    return j;
}

LittleOCheck little_o_check(std::span<const ExcessValue> values) {
    std::vector<ExcessValue> v(values.begin(), values.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
    LittleOCheck out;
    for (const auto& e : v) {
        if (!(e.r > 0.0)) throw PreconditionError("o(r) check needs positive radii");
        out.r.push_back(e.r);
        out.ratio.push_back(std::abs(e.value) / e.r);
        out.ratio_se.push_back(e.std_error / e.r);
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double tol = 3.0 * std::hypot(out.ratio_se[i], out.ratio_se[i - 1]);
        if (out.ratio[i] > out.ratio[i - 1] + tol) out.violations.push_back(static_cast<int>(i));
    }
    out.pass = out.violations.empty() && v.size() >= 2;
    std::vector<double> fr;
    std::vector<double> fv;
    for (const auto& e : v) {
        if (std::abs(e.value) > 3.0 * e.std_error) {
            fr.push_back(e.r);
            fv.push_back(e.value);
        }
    }
    if (fr.size() >= 4) out.fit = fit_power_law(fr, fv);
    return out;
}

nlohmann::json MinkowskiContent::to_json() const {
    return {{"value", value},
            {"eps", eps},
            {"ratios", ratios},
            {"std_errors", std_errors},
            {"non_rectifiable", non_rectifiable}};
}

double unit_ball_volume(int k) {
    if (k < 0) throw DomainError("negative dimension");
    return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

MinkowskiContent minkowski_content(const DistanceToSet& dist, const Box& bounds, int p_dim,
                                   std::span<const double> eps_grid, const McConfig& cfg) {
    if (p_dim < 0 || p_dim > 2) throw PreconditionError("p_dim must be 0, 1 or 2");
    if (eps_grid.size() < 3) throw PreconditionError("Minkowski content needs at least 3 radii");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0) || (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))) {
            throw PreconditionError("eps grid must be positive and strictly decreasing");
        }
    }
    MinkowskiContent out;
    const double k = unit_ball_volume(3 - p_dim);
    for (double eps : eps_grid) {
        const auto v = mc_volume([&](const Point3& x) { return dist(x) <= eps; }, bounds.inflated(eps), cfg);
        const double scale = k * std::pow(eps, 3 - p_dim);
        out.eps.push_back(eps);
        out.ratios.push_back(v.value / scale);
        out.std_errors.push_back(v.std_error / scale);
    }
    // First-order Richardson: the ratio is exactly linear in eps for curves
    // within their reach, and the eps^2 term of a surface is below the noise.
    std::vector<double> w;
    for (double se : out.std_errors) w.push_back(se > 0.0 ? 1.0 / (se * se) : 1.0);
    if (std::any_of(out.std_errors.begin(), out.std_errors.end(), [](double se) { return !(se > 0.0); })) w.clear();
    out.value = polyfit(out.eps, out.ratios, 1, w)[0];
    const auto [mn, mx] = std::minmax_element(out.ratios.begin(), out.ratios.end());
    out.non_rectifiable = !(std::abs(out.value) > 0.0) || (*mx - *mn) > 0.2 * std::abs(out.value);
    return out;
}

}  // namespace tubelab
