#pragma once

// Profile pairs (psi, phi) generating the two curves of the counterexample
// body, plus the scalar machinery derived from them: theta(t), alpha, I(r),
// rho(r) and the closed-form power-law constants.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tubelab {

enum class ProfileKind { power, epsilon, tabulated };

std::string to_string(ProfileKind kind);

/// Exponents of psi(t) = t^p, phi(t) = t^q.
struct PowerProfile {
    int p = 2;
    int q = 6;

    /// Throws PreconditionError unless q > p + 1 >= 3.
    static PowerProfile make(int p, int q);
    bool satisfies_corollary() const { return p + 1 >= 3 && q > p + 1; }
};

/// Value, first and second derivative callables on [0, 1].
struct ProfileFunctions {
    std::function<double(double)> psi, psi1, psi2;
    std::function<double(double)> phi, phi1, phi2;
    /// Optional exact inverse of phi; bisection is used when empty.
    std::function<double(double)> phi_inverse;
};

/// Decay function epsilon driving the construction of phi.
///
/// The driver hypotheses are only checked on (0, r_max]; the splice at beta
/// takes over beyond that. `eps_over_t_primitive`, when set, returns
/// int_0^r eps(t)/t dt in closed form; otherwise that integral is computed by
/// quadrature in the variable u = -ln(t/r).
struct EpsilonDriver {
    std::function<double(double)> eps, eps1, eps2;
    std::function<double(double)> eps_over_t_primitive;
    double beta = 0.85;
    double r_max = 0.2;
    std::string name;
    double exponent = 0.0;
    double scale = 1.0;
};

/// int_0^r eps(t)/t dt: the driver's closed form when present, else quadrature.
/// Throws DomainError when the quadrature tail does not vanish.
double eps_over_t_integral(const EpsilonDriver& driver, double r);
double eps_over_t_integral_quadrature(const EpsilonDriver& driver, double r);

/// kappa / |ln r|^exponent; exponent 1.5 is the log-factor example.
EpsilonDriver log_driver(double exponent = 1.5, double scale = 0.2, double beta = 0.86);
/// kappa * r^a with 0 < a < 1/2.
EpsilonDriver power_driver(double a, double scale = 0.25, double beta = 0.6);
/// kappa * sqrt(r); violates the growth hypothesis.
EpsilonDriver sqrt_driver(double scale = 1.0);
/// eps == 0; violates the growth hypothesis.
EpsilonDriver zero_driver();
/// Lookup by catalog name ("log", "power", "sqrt", "zero").
EpsilonDriver driver_by_name(const std::string& name, double exponent, double scale, double beta);

/// The profile pair (psi, phi). Immutable, cheap to copy, thread-safe.
class Profile {
public:
    /// Power law psi = t^p, phi = t^q for any positive exponents. Use
    /// PowerProfile::make first when the corollary hypotheses are required.
    static Profile power_law(int p, int q);
    static Profile power(const PowerProfile& pp) { return power_law(pp.p, pp.q); }
    static Profile from_functions(ProfileFunctions fns, std::string name);

    ProfileKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    std::optional<PowerProfile> power_params() const;
    /// Set for profiles built by profile_from_epsilon.
    const std::optional<EpsilonDriver>& driver() const { return driver_; }

    double psi(double t) const;
    double psi1(double t) const;
    double psi2(double t) const;
    double phi(double t) const;
    double phi1(double t) const;
    double phi2(double t) const;
    /// phi^{-1}(r) for r in [0, phi(1)].
    double phi_inverse(double r) const;

    /// {kind, p, q, eps_name, beta, ...}; tabulated profiles carry sampled tables.
    nlohmann::json to_json() const;
    static Profile from_json(const nlohmann::json& j);

private:
    friend Profile profile_from_epsilon(const EpsilonDriver& driver);

    ProfileKind kind_ = ProfileKind::power;
    int p_ = 2;
    int q_ = 6;
    std::string name_;
    std::shared_ptr<const ProfileFunctions> fns_;
    std::optional<EpsilonDriver> driver_;
};

struct ProfileCheck {
    std::string name;
    bool pass = true;
    double worst = 0.0;       // worst violation value found
    double location = 0.0;    // t where it occurred
    std::string note;
};

struct ProfileReport {
    std::vector<ProfileCheck> checks;
    /// Grid points with t below this value were skipped because phi underflows.
    double resolution_floor = 0.0;
    bool pass() const;
    const ProfileCheck* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Checks the hypotheses on a grid of grid_n uniform points plus t = 2^-k,
/// k <= 40. Throws PreconditionError for grid_n < 16.
ProfileReport validate_profile(const Profile& profile, int grid_n = 1024);

/// Checks the decay-function hypotheses on (0, r_max].
ProfileReport validate_driver(const EpsilonDriver& driver, int grid_n = 1024);

inline constexpr double kThetaTolerance = 1e-12;

/// t - f(t)/f'(t), continuously extended by 0 at t = 0.
double tangent_intercept_psi(const Profile& profile, double t);
double tangent_intercept_phi(const Profile& profile, double t);

/// The unique theta in [0, t] with
/// theta - phi(theta)/phi'(theta) = t - psi(t)/psi'(t), by bisection.
double solve_theta(const Profile& profile, double t, double tol = kThetaTolerance);

/// 1 + phi'(theta(t))^2 / psi'(t)^2 * (1 + psi(t)^2), with its t -> 0 limit.
double alpha_integrand(const Profile& profile, double t);

/// max over [0, 1] of alpha_integrand: grid scan plus golden-section refinement.
double compute_alpha(const Profile& profile, int grid_n = 1024);

/// 1 + phi'(theta(t))^2 / psi'(t)^2 * (1 + psi'(t)^2): the squared norm of the
/// normal (phi'(theta), -1, phi'(theta)/psi'(t)) at the psi-curve point.
double alpha_normal_integrand(const Profile& profile, double t);

/// max over [0, 1] of alpha_normal_integrand. This is the constant for which
/// A(r) n {x2 <= 0} lies in A_hat(r); compute_alpha can be smaller.
double compute_alpha_normal(const Profile& profile, int grid_n = 1024);

/// int_{phi^{-1}(r)}^{1} psi/phi dt. Closed form for power profiles.
double integral_I(const Profile& profile, double r);
/// Same integral, always by adaptive quadrature.
double integral_I_quadrature(const Profile& profile, double r, double rel_tol = 1e-10);

struct CorollaryConstants {
    double exponent = 0.0;
    double c_pq = 0.0;
    double theta_slope = 0.0;
    double alpha_closed = 0.0;
    double rho_coeff = 0.0;
    /// 2 / (q - p - 1), the printed upper-bound coefficient.
    double upper_coeff = 0.0;
};

/// Throws PreconditionError unless q > p + 1 >= 3.
CorollaryConstants corollary_constants(int p, int q);

/// rho(r): rho_coeff * r^(1/q) for power profiles, 2 phi^{-1}(r) otherwise.
double rho_of_r(const Profile& profile, double r);

/// Builds psi = t^2 and phi through phi^{-1}(r) = (3 (int_0^r eps/t - eps(r)))^(1/3),
/// spliced on [beta, 1] with the quadratic reaching phi(1) = 1 and bridged by a
/// quintic Hermite patch on [beta - beta/10, beta + beta/10].
Profile profile_from_epsilon(const EpsilonDriver& driver);

}  // namespace tubelab
