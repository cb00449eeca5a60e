#include "tubelab/profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tubelab/errors.hpp"
#include "tubelab/numeric.hpp"

namespace tubelab {

namespace {

double ipow(double x, int n) {
    double result = 1.0;
    double base = x;
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

constexpr double kUnderflowFloor = 1e-290;
// Below this r the eps branch reports phi = 0; keeps eps/r^2 inside double range.
constexpr double kDriverRFloor = 1e-150;

// Cubic Hermite table used by tabulated profiles.
class HermiteTable {
public:
    HermiteTable(std::vector<double> t, std::vector<double> y, std::vector<double> dy)
        : t_(std::move(t)), y_(std::move(y)), dy_(std::move(dy)) {
        if (t_.size() < 2 || t_.size() != y_.size() || t_.size() != dy_.size()) {
            throw PreconditionError("tabulated profile needs matching arrays of length >= 2");
        }
        if (!std::is_sorted(t_.begin(), t_.end())) {
            throw PreconditionError("tabulated profile nodes must be increasing");
        }
    }

    std::array<double, 3> eval(double x) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), x);
        std::size_t i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
        if (i + 1 >= t_.size()) i = t_.size() - 2;
        const double h = t_[i + 1] - t_[i];
        const double s = (x - t_[i]) / h;
        const double y0 = y_[i], y1 = y_[i + 1];
        const double m0 = dy_[i] * h, m1 = dy_[i + 1] * h;
        const double s2 = s * s, s3 = s2 * s;
        const double v = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 +
                         (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
        const double d = ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 +
                          (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * m1) / h;
        const double dd = ((12 * s - 6) * y0 + (6 * s - 4) * m0 + (-12 * s + 6) * y1 +
                           (6 * s - 2) * m1) / (h * h);
        return {v, d, dd};
    }

    const std::vector<double>& nodes() const { return t_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& slopes() const { return dy_; }

private:
    std::vector<double> t_, y_, dy_;
};

std::vector<double> tabulation_nodes() {
    std::vector<double> nodes{0.0};
    for (int k = 24; k >= 7; --k) nodes.push_back(std::ldexp(1.0, -k));
    for (int i = 1; i <= 128; ++i) nodes.push_back(i / 128.0);
    return nodes;
}

// phi built from an epsilon driver: phi^{-1} = g(r) = (3 F(r))^{1/3} with
// F(r) = int_0^r eps/t - eps(r), spliced to a quadratic past beta.
class EpsilonConstruction {
public:
    explicit EpsilonConstruction(EpsilonDriver driver) : d_(std::move(driver)) {
        if (!(d_.beta > 0.0 && d_.beta < 1.0)) throw PreconditionError("beta must lie in (0, 1)");
        delta_ = d_.beta / 10.0;
        if (d_.beta + delta_ >= 1.0) throw PreconditionError("beta + beta/10 must stay below 1");
        if (!(F(d_.r_max) > 0.0)) {
            throw ConstructionError("int_0^r eps/t - eps(r) is not positive at r_max");
        }
        if (g(d_.r_max) < d_.beta) {
            throw ConstructionError("beta lies beyond the range of phi^{-1} on (0, r_max]");
        }
        t_floor_ = g(kDriverRFloor);
        const double phi_beta = phi_eps(d_.beta);
        quad_a_ = (phi_beta - 1.0) / (d_.beta * d_.beta - 1.0);
        quad_b_ = (d_.beta * d_.beta - phi_beta) / (d_.beta * d_.beta - 1.0);
        if (!(quad_a_ > 0.0)) throw ConstructionError("splice quadratic is not convex");

        x0_ = d_.beta - delta_;
        h_ = 2.0 * delta_;
        const double x1 = d_.beta + delta_;
        const double r0 = g_inverse(x0_);
        const auto [y0, y0p, y0pp] = branch(r0);
        const double y1 = quad_a_ * x1 * x1 + quad_b_;
        const double y1p = 2.0 * quad_a_ * x1;
        const double y1pp = 2.0 * quad_a_;
        const double h = h_;
        c_[0] = y0;
        c_[1] = y0p;
        c_[2] = 0.5 * y0pp;
        const double A = y1 - (c_[0] + c_[1] * h + c_[2] * h * h);
        const double B = y1p - (c_[1] + 2.0 * c_[2] * h);
        const double C = y1pp - 2.0 * c_[2];
        c_[3] = (10.0 * A - 4.0 * B * h + 0.5 * C * h * h) / (h * h * h);
        c_[4] = (-15.0 * A + 7.0 * B * h - C * h * h) / (h * h * h * h);
        c_[5] = (6.0 * A - 3.0 * B * h + 0.5 * C * h * h) / (h * h * h * h * h);
        for (int i = 0; i <= 400; ++i) {
            const double s = h_ * i / 400.0;
            if (!(bridge(s, 2) > 0.0)) {
                throw ConstructionError("splice bridge is not strictly convex");
            }
        }
        r_bridge_ = r0;
    }

    const EpsilonDriver& driver() const { return d_; }
    double t_floor() const { return t_floor_; }

    double eps(double r) const { return d_.eps(r); }

    double primitive(double r) const { return eps_over_t_integral(d_, r); }

    double F(double r) const { return primitive(r) - eps(r); }
    // r F'(r) and r^2 F''(r).
    double rF1(double r) const { return eps(r) - d_.eps1(r) * r; }
    double r2F2(double r) const { return d_.eps1(r) * r - eps(r) - d_.eps2(r) * r * r; }

    double g(double r) const { return r <= 0.0 ? 0.0 : std::cbrt(3.0 * F(r)); }

    // phi, phi', phi'' at phi = r on the eps branch. With G = 3F:
    // phi' = G^(2/3) / F', phi'' = G^(1/3) / F' * (2 - G F'' / F'^2),
    // arranged so nothing overflows when F' ~ eps/r is huge.
    std::array<double, 3> branch(double r) const {
        const double G = 3.0 * F(r);
        const double f1 = rF1(r);
        const double cb = std::cbrt(G);
        const double ratio = r2F2(r) / (f1 * f1);
        return {r, cb * cb * r / f1, cb * r / f1 * (2.0 - G * ratio)};
    }

    double g_inverse(double t) const {
        if (t <= t_floor_) return 0.0;
        double lo = std::log(kDriverRFloor);
        double hi = std::log(d_.r_max);
        for (int i = 0; i < numeric::kMaxBisectionSteps && hi - lo > 1e-14; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (g(std::exp(mid)) < t) lo = mid; else hi = mid;
        }
        return std::exp(0.5 * (lo + hi));
    }

    double phi_eps(double t) const { return g_inverse(t); }

    std::array<double, 3> eval(double t) const {
        if (t <= x0_) {
            const double r = g_inverse(t);
            if (r <= 0.0) return {0.0, 0.0, 0.0};
            return branch(r);
        }
        if (t < x0_ + h_) {
            const double s = t - x0_;
            return {bridge(s, 0), bridge(s, 1), bridge(s, 2)};
        }
        return {quad_a_ * t * t + quad_b_, 2.0 * quad_a_ * t, 2.0 * quad_a_};
    }

    double inverse(double r) const {
        if (r <= 0.0) return 0.0;
        if (r <= r_bridge_) return g(r);
        auto f = [&](double t) { return eval(t)[0]; };
        return numeric::bisect_increasing(f, x0_, 1.0, r, 1e-15 * std::max(r, 1e-300)).x;
    }

private:
    double bridge(double s, int order) const {
        if (order == 0) {
            return c_[0] + s * (c_[1] + s * (c_[2] + s * (c_[3] + s * (c_[4] + s * c_[5]))));
        }
        if (order == 1) {
            return c_[1] + s * (2 * c_[2] + s * (3 * c_[3] + s * (4 * c_[4] + s * 5 * c_[5])));
        }
        return 2 * c_[2] + s * (6 * c_[3] + s * (12 * c_[4] + s * 20 * c_[5]));
    }

    EpsilonDriver d_;
    double delta_ = 0.0;
    double t_floor_ = 0.0;
    double quad_a_ = 0.0;
    double quad_b_ = 0.0;
    double x0_ = 0.0;
    double h_ = 0.0;
    double r_bridge_ = 0.0;
    std::array<double, 6> c_{};
};

double tangent_intercept(double t, double f, double f1) {
    if (t == 0.0) return 0.0;
    if (!(f1 > 0.0)) return t;
    return t - f / f1;
}

}  // namespace

double eps_over_t_integral_quadrature(const EpsilonDriver& driver, double r) {
    if (r <= 0.0) return 0.0;
    // int_0^r eps(t)/t dt = int_0^U eps(r e^{-u}) du, U past the point where
    // r e^{-u} reaches the floor.
    const double U = std::max(std::log(r / kDriverRFloor), 0.0) + 60.0;
    auto f = [&](double u) { return driver.eps(r * std::exp(-u)); };
    const double total = numeric::integrate(f, 0.0, U, 1e-10, 64).value;
    const double tail = numeric::integrate(f, 0.9 * U, U, 1e-10, 32).value;
    if (!std::isfinite(total) || tail > 1e-6 * std::max(total, 1e-300)) {
        throw DomainError("int_0^r eps(t)/t dt does not converge numerically");
    }
    return total;
}

double eps_over_t_integral(const EpsilonDriver& driver, double r) {
    if (r <= 0.0) return 0.0;
    if (driver.eps_over_t_primitive) return driver.eps_over_t_primitive(r);
    return eps_over_t_integral_quadrature(driver, r);
}

std::string to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::power: return "power";
        case ProfileKind::epsilon: return "epsilon";
        case ProfileKind::tabulated: return "tabulated";
    }
    return "unknown";
}

PowerProfile PowerProfile::make(int p, int q) {
    PowerProfile pp{p, q};
    if (!pp.satisfies_corollary()) {
        throw PreconditionError("power profile requires q > p + 1 >= 3, got p=" +
                                std::to_string(p) + " q=" + std::to_string(q));
    }
    return pp;
}

// ---------------------------------------------------------------- drivers

EpsilonDriver log_driver(double exponent, double scale, double beta) {
    if (!(exponent > 1.0)) throw PreconditionError("log driver needs exponent > 1");
    EpsilonDriver d;
    d.name = "log";
    d.exponent = exponent;
    d.scale = scale;
    d.beta = beta;
    // eps/t is decreasing only while |ln r| > exponent.
    d.r_max = std::min(0.2, std::exp(-exponent) * 0.999);
    const double e = exponent;
    const double k = scale;
    d.eps = [e, k](double r) { return r <= 0.0 ? 0.0 : k * std::pow(-std::log(r), -e); };
    d.eps1 = [e, k](double r) {
        if (r <= 0.0) return 0.0;
        const double L = -std::log(r);
        return k * e * std::pow(L, -e - 1.0) / r;
    };
    d.eps2 = [e, k](double r) {
        if (r <= 0.0) return 0.0;
        const double L = -std::log(r);
        return k * e * std::pow(L, -e - 2.0) * (e + 1.0 - L) / (r * r);
    };
    d.eps_over_t_primitive = [e, k](double r) {
        if (r <= 0.0) return 0.0;
        return k * std::pow(-std::log(r), 1.0 - e) / (e - 1.0);
    };
    return d;
}

EpsilonDriver power_driver(double a, double scale, double beta) {
    EpsilonDriver d;
    d.name = "power";
    d.exponent = a;
    d.scale = scale;
    d.beta = beta;
    d.r_max = 0.2;
    const double k = scale;
    d.eps = [a, k](double r) { return r <= 0.0 ? 0.0 : k * std::pow(r, a); };
    d.eps1 = [a, k](double r) { return r <= 0.0 ? 0.0 : k * a * std::pow(r, a - 1.0); };
    d.eps2 = [a, k](double r) { return r <= 0.0 ? 0.0 : k * a * (a - 1.0) * std::pow(r, a - 2.0); };
    d.eps_over_t_primitive = [a, k](double r) { return r <= 0.0 ? 0.0 : k * std::pow(r, a) / a; };
    return d;
}

EpsilonDriver sqrt_driver(double scale) {
    EpsilonDriver d = power_driver(0.5, scale, 0.6);
    d.name = "sqrt";
    return d;
}

EpsilonDriver zero_driver() {
    EpsilonDriver d;
    d.name = "zero";
    d.r_max = 0.2;
    d.scale = 0.0;
    d.eps = [](double) { return 0.0; };
    d.eps1 = [](double) { return 0.0; };
    d.eps2 = [](double) { return 0.0; };
    d.eps_over_t_primitive = [](double) { return 0.0; };
    return d;
}

EpsilonDriver driver_by_name(const std::string& name, double exponent, double scale, double beta) {
    if (name == "log") return log_driver(exponent, scale, beta);
    if (name == "power") return power_driver(exponent, scale, beta);
    if (name == "sqrt") return sqrt_driver(scale);
    if (name == "zero") return zero_driver();
    throw PreconditionError("unknown epsilon driver '" + name + "'");
}

// ---------------------------------------------------------------- Profile

Profile Profile::power_law(int p, int q) {
    if (p < 1 || q < 1) throw PreconditionError("power exponents must be positive");
    Profile prof;
    prof.kind_ = ProfileKind::power;
    prof.p_ = p;
    prof.q_ = q;
    prof.name_ = "power(" + std::to_string(p) + "," + std::to_string(q) + ")";
    return prof;
}

Profile Profile::from_functions(ProfileFunctions fns, std::string name) {
    if (!fns.psi || !fns.psi1 || !fns.psi2 || !fns.phi || !fns.phi1 || !fns.phi2) {
        throw PreconditionError("general profile needs all six callables");
    }
    Profile prof;
    prof.kind_ = ProfileKind::tabulated;
    prof.name_ = std::move(name);
    prof.fns_ = std::make_shared<const ProfileFunctions>(std::move(fns));
    return prof;
}

std::optional<PowerProfile> Profile::power_params() const {
    if (kind_ != ProfileKind::power) return std::nullopt;
    return PowerProfile{p_, q_};
}

double Profile::psi(double t) const {
    return kind_ == ProfileKind::power ? ipow(t, p_) : fns_->psi(t);
}
double Profile::psi1(double t) const {
    return kind_ == ProfileKind::power ? p_ * ipow(t, p_ - 1) : fns_->psi1(t);
}
double Profile::psi2(double t) const {
    if (kind_ == ProfileKind::power) return p_ < 2 ? 0.0 : p_ * (p_ - 1) * ipow(t, p_ - 2);
    return fns_->psi2(t);
}
double Profile::phi(double t) const {
    return kind_ == ProfileKind::power ? ipow(t, q_) : fns_->phi(t);
}
double Profile::phi1(double t) const {
    return kind_ == ProfileKind::power ? q_ * ipow(t, q_ - 1) : fns_->phi1(t);
}
double Profile::phi2(double t) const {
    if (kind_ == ProfileKind::power) return q_ < 2 ? 0.0 : q_ * (q_ - 1) * ipow(t, q_ - 2);
    return fns_->phi2(t);
}

double Profile::phi_inverse(double r) const {
    if (r <= 0.0) return 0.0;
    if (kind_ == ProfileKind::power) return std::pow(r, 1.0 / q_);
    if (fns_->phi_inverse) return fns_->phi_inverse(r);
    const double top = phi(1.0);
    if (r >= top) return 1.0;
    auto f = [this](double t) { return phi(t); };
    return numeric::bisect_increasing(f, 0.0, 1.0, r, 1e-15 * r).x;
}

nlohmann::json Profile::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["name"] = name_;
    switch (kind_) {
        case ProfileKind::power:
            j["p"] = p_;
            j["q"] = q_;
            break;
        case ProfileKind::epsilon:
            j["eps_name"] = driver_->name;
            j["exponent"] = driver_->exponent;
            j["scale"] = driver_->scale;
            j["beta"] = driver_->beta;
            break;
        case ProfileKind::tabulated: {
            const auto nodes = tabulation_nodes();
            std::vector<double> psi_v, psi_d, phi_v, phi_d;
            for (double t : nodes) {
                psi_v.push_back(psi(t));
                psi_d.push_back(psi1(t));
                phi_v.push_back(phi(t));
                phi_d.push_back(phi1(t));
            }
            j["t"] = nodes;
            j["psi"] = psi_v;
            j["dpsi"] = psi_d;
            j["phi"] = phi_v;
            j["dphi"] = phi_d;
            break;
        }
    }
    return j;
}

Profile Profile::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "power") return power_law(j.at("p").get<int>(), j.at("q").get<int>());
    if (kind == "epsilon") {
        return profile_from_epsilon(driver_by_name(j.at("eps_name").get<std::string>(),
                                                   j.value("exponent", 1.5),
                                                   j.value("scale", 0.2),
                                                   j.value("beta", 0.86)));
    }
    if (kind == "tabulated") {
        auto t = j.at("t").get<std::vector<double>>();
        auto psi = std::make_shared<HermiteTable>(t, j.at("psi").get<std::vector<double>>(),
                                                  j.at("dpsi").get<std::vector<double>>());
        auto phi = std::make_shared<HermiteTable>(t, j.at("phi").get<std::vector<double>>(),
                                                  j.at("dphi").get<std::vector<double>>());
        ProfileFunctions fns;
        fns.psi = [psi](double x) { return psi->eval(x)[0]; };
        fns.psi1 = [psi](double x) { return psi->eval(x)[1]; };
        fns.psi2 = [psi](double x) { return psi->eval(x)[2]; };
        fns.phi = [phi](double x) { return phi->eval(x)[0]; };
        fns.phi1 = [phi](double x) { return phi->eval(x)[1]; };
        fns.phi2 = [phi](double x) { return phi->eval(x)[2]; };
        return from_functions(std::move(fns), j.value("name", std::string("tabulated")));
    }
    throw PreconditionError("unknown profile kind '" + kind + "'");
}

Profile profile_from_epsilon(const EpsilonDriver& driver) {
    if (!driver.eps || !driver.eps1 || !driver.eps2) {
        throw PreconditionError("epsilon driver needs eps and two derivatives");
    }
    const auto report = validate_driver(driver);
    if (!report.pass()) {
        std::string failed;
        for (const auto& c : report.checks) {
            if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
        }
        throw PreconditionError("epsilon driver '" + driver.name + "' rejected: " + failed);
    }
    auto construction = std::make_shared<const EpsilonConstruction>(driver);
    ProfileFunctions fns;
    fns.psi = [](double t) { return t * t; };
    fns.psi1 = [](double t) { return 2.0 * t; };
    fns.psi2 = [](double) { return 2.0; };
    fns.phi = [construction](double t) { return construction->eval(t)[0]; };
    fns.phi1 = [construction](double t) { return construction->eval(t)[1]; };
    fns.phi2 = [construction](double t) { return construction->eval(t)[2]; };
    fns.phi_inverse = [construction](double r) { return construction->inverse(r); };
    Profile prof = Profile::from_functions(std::move(fns), "epsilon(" + driver.name + ")");
    prof.kind_ = ProfileKind::epsilon;
    prof.driver_ = driver;
    return prof;
}

// ---------------------------------------------------------------- reports

bool ProfileReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const ProfileCheck* ProfileReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

nlohmann::json ProfileReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    j["resolution_floor"] = resolution_floor;
    auto& arr = j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"pass", c.pass},
                       {"worst", c.worst},
                       {"location", c.location},
                       {"note", c.note}});
    }
    return j;
}

namespace {

// Tracks the worst (smallest) margin of a strict inequality margin > 0.
struct MarginCheck {
    std::string name;
    double worst = std::numeric_limits<double>::infinity();
    double where = 0.0;
    void observe(double margin, double t) {
        if (margin < worst || std::isnan(margin)) {
            worst = margin;
            where = t;
        }
    }
    ProfileCheck finish(const std::string& note = {}) const {
        const bool ok = worst > 0.0 && !std::isnan(worst);
        return {name, ok, std::isfinite(worst) ? worst : 0.0, where, note};
    }
};

std::vector<double> validation_grid(int grid_n) {
    std::vector<double> grid;
    for (int k = 40; k >= 1; --k) grid.push_back(std::ldexp(1.0, -k));
    for (int i = 1; i <= grid_n; ++i) grid.push_back(static_cast<double>(i) / grid_n);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

ProfileCheck equality_check(const std::string& name, double value, double expected, double at) {
    const double err = std::abs(value - expected);
    const bool ok = std::isfinite(value) && err <= 1e-9;
    return {name, ok, std::isfinite(value) ? err : 0.0, at, ok ? "" : "tolerance 1e-9"};
}

}  // namespace

ProfileReport validate_profile(const Profile& profile, int grid_n) {
    if (grid_n < 16) throw PreconditionError("validate_profile needs grid_n >= 16");
    ProfileReport report;
    const auto grid = validation_grid(grid_n);

    bool finite = true;
    double nonfinite_at = 0.0;
    auto check_finite = [&](double v, double t) {
        if (!std::isfinite(v) && finite) {
            finite = false;
            nonfinite_at = t;
        }
        return v;
    };

    report.checks.push_back(equality_check("psi(0)=0", check_finite(profile.psi(0.0), 0.0), 0.0, 0.0));
    report.checks.push_back(equality_check("phi(0)=0", check_finite(profile.phi(0.0), 0.0), 0.0, 0.0));
    report.checks.push_back(equality_check("psi(1)=1", check_finite(profile.psi(1.0), 1.0), 1.0, 1.0));
    report.checks.push_back(equality_check("phi(1)=1", check_finite(profile.phi(1.0), 1.0), 1.0, 1.0));
    report.checks.push_back(equality_check("psi'(0)=0", check_finite(profile.psi1(0.0), 0.0), 0.0, 0.0));

    MarginCheck psi_convex{"psi strictly convex"};
    MarginCheck phi_convex{"phi strictly convex"};
    MarginCheck ratio{"phi/phi' < psi/psi'"};
    std::vector<std::pair<double, double>> phi_over_psi;
    double floor = 0.0;
    double fd_worst = 0.0;
    double fd_where = 0.0;

    for (double t : grid) {
        const double ps = check_finite(profile.psi(t), t);
        const double ps1 = check_finite(profile.psi1(t), t);
        const double ps2 = check_finite(profile.psi2(t), t);
        const double ph = check_finite(profile.phi(t), t);
        const double ph1 = check_finite(profile.phi1(t), t);
        const double ph2 = check_finite(profile.phi2(t), t);
        if (ph < kUnderflowFloor || ph1 < kUnderflowFloor || ps < kUnderflowFloor) {
            // Not resolvable in double precision; treated as below the floor.
            floor = std::max(floor, t);
            continue;
        }
        psi_convex.observe(ps2, t);
        phi_convex.observe(ph2, t);
        ratio.observe(ps / ps1 - ph / ph1, t);
        phi_over_psi.emplace_back(t, ph / ps);

        if (t >= 1e-3 && t <= 1.0 - 1e-3) {
            constexpr double h = 1e-6;
            auto fd = [&](auto&& f, double exact, double scale) {
                const double approx = (f(t + h) - f(t - h)) / (2 * h);
                const double err = std::abs(approx - exact) / std::max(std::abs(exact), scale);
                if (err > fd_worst) {
                    fd_worst = err;
                    fd_where = t;
                }
            };
            fd([&](double x) { return profile.psi(x); }, ps1, 1e-6);
            fd([&](double x) { return profile.psi1(x); }, ps2, 1e-6);
            fd([&](double x) { return profile.phi(x); }, ph1, 1e-6);
            fd([&](double x) { return profile.phi1(x); }, ph2, 1e-6);
        }
    }
    report.resolution_floor = floor;

    report.checks.push_back(psi_convex.finish());
    report.checks.push_back(phi_convex.finish());

    {
        // phi/psi -> 0: the smallest resolvable t must carry a tiny ratio and
        // the ratio must shrink along the last geometric points.
        ProfileCheck c{"lim phi/psi = 0", false, 0.0, 0.0, {}};
        if (phi_over_psi.size() >= 8) {
            const double smallest = phi_over_psi.front().second;
            bool shrinking = true;
            for (std::size_t i = 1; i < 8; ++i) {
                if (!(phi_over_psi[i - 1].second < phi_over_psi[i].second)) shrinking = false;
            }
            c.pass = smallest < 1e-6 && shrinking;
            c.worst = smallest;
            c.location = phi_over_psi.front().first;
            if (!c.pass) c.note = "ratio does not decay to 0";
        } else {
            c.note = "too few resolvable grid points";
        }
        report.checks.push_back(c);
    }
    report.checks.push_back(ratio.finish());

    report.checks.push_back({"derivative consistency (finite difference)", fd_worst <= 1e-4,
                             fd_worst, fd_where, "central h=1e-6, relative tolerance 1e-4"});

    if (auto pp = profile.power_params()) {
        report.checks.push_back({"corollary: q > p+1 >= 3", pp->satisfies_corollary(),
                                 static_cast<double>(pp->q - pp->p - 1), 0.0,
                                 "p=" + std::to_string(pp->p) + " q=" + std::to_string(pp->q)});
    }
    if (!finite) {
        report.checks.push_back({"non-finite", false, 0.0, nonfinite_at, "non-finite function value"});
    }
    return report;
}

ProfileReport validate_driver(const EpsilonDriver& driver, int grid_n) {
    if (grid_n < 16) throw PreconditionError("validate_driver needs grid_n >= 16");
    ProfileReport report;
    const double rmax = driver.r_max;

    report.checks.push_back(equality_check("eps(0)=0", driver.eps(0.0), 0.0, 0.0));

    {
        // eps(r)/sqrt(r) -> infinity along r = r_max 2^-k down to 1e-300.
        std::vector<double> ratios;
        for (int k = 0; k <= 990; k += 10) {
            const double r = rmax * std::ldexp(1.0, -k);
            ratios.push_back(driver.eps(r) / std::sqrt(r));
        }
        bool increasing = true;
        for (std::size_t i = ratios.size() - 20; i < ratios.size(); ++i) {
            if (!(ratios[i] > ratios[i - 1])) increasing = false;
        }
        const bool ok = increasing && ratios.back() > 1e3 * std::max(ratios.front(), 1e-300);
        report.checks.push_back({"eps(r)/sqrt(r) -> inf", ok, ratios.back(), 1e-300,
                                 ok ? "" : "growth hypothesis fails"});
    }

    {
        ProfileCheck c{"int_0^1 eps(t)/t dt < inf", true, 0.0, rmax, {}};
        try {
            const double prim = driver.eps_over_t_primitive
                                    ? driver.eps_over_t_primitive(rmax)
                                    : eps_over_t_integral_quadrature(driver, rmax);
            c.worst = prim;
            c.pass = std::isfinite(prim) && prim >= 0.0;
            if (driver.eps_over_t_primitive) {
                // The closed-form primitive must differentiate back to eps(r)/r.
                for (double r : {1e-4, 1e-3, 1e-2, 0.5 * rmax}) {
                    const double h = 1e-6 * r;
                    const double d = (driver.eps_over_t_primitive(r + h) -
                                      driver.eps_over_t_primitive(r - h)) / (2 * h);
                    const double want = driver.eps(r) / r;
                    if (std::abs(d - want) > 1e-5 * std::max(std::abs(want), 1e-12)) {
                        c.pass = false;
                        c.note = "primitive inconsistent with eps";
                        c.location = r;
                    }
                }
            }
        } catch (const DomainError& e) {
            c.pass = false;
            c.note = e.what();
        }
        report.checks.push_back(c);
    }

    MarginCheck second_order{"r^2 eps'' - r eps' + eps > 0"};
    MarginCheck convex{"eps/t strictly convex"};
    MarginCheck decreasing{"eps/t decreasing"};
    std::vector<double> grid;
    for (int k = 60; k >= 1; --k) grid.push_back(rmax * std::ldexp(1.0, -k));
    for (int i = 1; i <= grid_n; ++i) grid.push_back(rmax * i / grid_n);
    for (double r : grid) {
        const double e0 = driver.eps(r), e1 = driver.eps1(r), e2 = driver.eps2(r);
        // Each margin is scaled by a positive power of r so it stays O(eps).
        second_order.observe(r * r * e2 - r * e1 + e0, r);
        convex.observe(r * r * e2 - 2 * r * e1 + 2 * e0, r);
        decreasing.observe(e0 - r * e1, r);
    }
    report.checks.push_back(second_order.finish());
    report.checks.push_back(convex.finish());
    report.checks.push_back(decreasing.finish());
    return report;
}

// ---------------------------------------------------------------- theta, alpha, I

double tangent_intercept_psi(const Profile& profile, double t) {
    return tangent_intercept(t, profile.psi(t), profile.psi1(t));
}

double tangent_intercept_phi(const Profile& profile, double t) {
    return tangent_intercept(t, profile.phi(t), profile.phi1(t));
}

double solve_theta(const Profile& profile, double t, double tol) {
    if (!(tol > 0.0)) throw DomainError("solve_theta tolerance must be positive");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("solve_theta needs t in [0, 1]");
    if (t == 0.0) return 0.0;
    const double target = tangent_intercept_psi(profile, t);
    auto f = [&](double x) { return tangent_intercept_phi(profile, x); };
    return numeric::bisect_increasing(f, 0.0, t, target, tol).x;
}

namespace {

double alpha_like(const Profile& profile, double t, bool normal) {
    if (t == 0.0) return 1.0;
    const double theta = solve_theta(profile, t);
    const double dpsi = profile.psi1(t);
    if (!(dpsi > 0.0) || !std::isfinite(dpsi)) {
        // phi'(theta(t)) / psi'(t) -> 0 as t -> 0.
        return 1.0;
    }
    const double k = profile.phi1(theta) / dpsi;
    const double w = normal ? dpsi : profile.psi(t);
    const double value = 1.0 + k * k * (1.0 + w * w);
    if (!std::isfinite(value)) throw NumericFailure("alpha integrand is not finite");
    return value;
}

template <typename F>
double max_on_unit_interval(F f, int grid_n) {
    if (grid_n < 16) throw PreconditionError("compute_alpha needs grid_n >= 16");
    auto grid = validation_grid(grid_n);
    grid.insert(grid.begin(), 0.0);
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = f(grid[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    if (hi > lo) {
        const auto [t_star, v_star] = numeric::golden_section_min([&](double t) { return -f(t); }, lo, hi, 1e-13);
        (void)t_star;
        best_value = std::max(best_value, -v_star);
    }
    return std::max(best_value, 1.0);
}

}  // namespace

double alpha_integrand(const Profile& profile, double t) { return alpha_like(profile, t, false); }

double alpha_normal_integrand(const Profile& profile, double t) { return alpha_like(profile, t, true); }

double compute_alpha(const Profile& profile, int grid_n) {
    return max_on_unit_interval([&](double t) { return alpha_integrand(profile, t); }, grid_n);
}

double compute_alpha_normal(const Profile& profile, int grid_n) {
    return max_on_unit_interval([&](double t) { return alpha_normal_integrand(profile, t); }, grid_n);
}

double integral_I(const Profile& profile, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("integral_I needs r in (0, 1]");
    if (auto pp = profile.power_params(); pp && pp->q != pp->p + 1) {
        const double e = static_cast<double>(pp->p + 1) / pp->q - 1.0;
        return (std::pow(r, e) - 1.0) / (pp->q - pp->p - 1);
    }
    return integral_I_quadrature(profile, r);
}

double integral_I_quadrature(const Profile& profile, double r, double rel_tol) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("integral_I needs r in (0, 1]");
    const double lo = profile.phi_inverse(r);
    if (lo >= 1.0) return 0.0;
    auto f = [&](double t) { return profile.psi(t) / profile.phi(t); };
    return numeric::integrate(f, lo, 1.0, rel_tol, 32).value;
}

CorollaryConstants corollary_constants(int p, int q) {
    PowerProfile::make(p, q);
    const double pd = p, qd = q;
    CorollaryConstants c;
    c.exponent = 1.0 + (pd + 1.0) / qd;
    const double inner = pd * pd / (qd * qd) *
                             std::pow((qd - 1.0) / qd * pd / (pd - 1.0), 2.0 * qd - 2.0) + 2.0;
    c.c_pq = 2.0 * std::pow(inner, (pd + 1.0) / (2.0 * qd)) *
             (1.0 / (qd - pd - 1.0) + 1.0 / (pd + 1.0));
    c.theta_slope = qd / (qd - 1.0) * (pd - 1.0) / pd;
    c.alpha_closed = 1.0 + 2.0 * qd * qd / (pd * pd) * std::pow(c.theta_slope, 2.0 * qd - 2.0);
    c.rho_coeff = std::pow(inner, 1.0 / (2.0 * qd));
    c.upper_coeff = 2.0 / (qd - pd - 1.0);
    return c;
}

double rho_of_r(const Profile& profile, double r) {
    if (auto pp = profile.power_params(); pp && pp->satisfies_corollary()) {
        return corollary_constants(pp->p, pp->q).rho_coeff * std::pow(r, 1.0 / pp->q);
    }
    return 2.0 * profile.phi_inverse(r);
}

}  // namespace tubelab
