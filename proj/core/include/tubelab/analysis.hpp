#pragma once

// The tube-volume excess E(r) = L3(B(M u M', r)) - L3(M u M') - r H2(bd(M u M')),
// its scans and exponent fits, the theoretical bound envelopes, the o(r)
// check on convex pairs and Minkowski-content estimates.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tubelab/estimators.hpp"
#include "tubelab/scene.hpp"

namespace tubelab {

/// H2(bd(M u M')) = SA(M) + SA(M') - 2 area(C).
double surface_area_union(const CounterexamplePair& pair);

enum class ExcessRoute : std::uint8_t { via_A, direct };

std::string to_string(ExcessRoute route);
ExcessRoute excess_route_from_string(const std::string& s);

struct ExcessValue {
    double r = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    ExcessRoute route = ExcessRoute::via_A;
    std::uint64_t seed = 0;
    std::uint64_t n_samples = 0;
    /// Direct route with std_error > |value| / 3.
    bool cancellation_dominated = false;
};

/// E(r) for 0 <= r <= 0.1 (E(0) = 0).
///
/// via_A: E = -L3(A(r)), exact up to the O(r^2) of the volume identity.
/// direct: inclusion-exclusion with the exact Steiner polynomials of both hulls,
/// E = sum_i (c2_i r^2 + c3_i r^3) + 2 r area(C) - L3(B(M, r) n B(M', r)),
/// so only the thin tube intersection is sampled.
ExcessValue excess(const CounterexamplePair& pair, double r, const McConfig& cfg,
                   ExcessRoute route = ExcessRoute::via_A);

/// Seed used for the grid point r, so a point's estimate does not depend on
/// its position in the grid.
std::uint64_t derive_seed(std::uint64_t seed, double r);

struct ExcessSeries {
    std::vector<ExcessValue> entries;
    std::string profile;
    std::uint64_t seed = 0;

    std::string to_csv() const;
    static ExcessSeries from_csv(const std::string& text);
    nlohmann::json to_json() const;
};

inline constexpr const char* kSeriesCsvHeader = "r,E,se,route";

/// Throws PreconditionError for an empty grid or duplicate radii.
ExcessSeries excess_scan(const CounterexamplePair& pair, std::span<const double> r_grid, const McConfig& cfg,
                         ExcessRoute route = ExcessRoute::via_A);

/// n points from a to b, equally spaced in log r (both ends included).
std::vector<double> geometric_grid(double a, double b, int n);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int points = 0;
    int excluded = 0;
    nlohmann::json to_json() const;
};

struct FitWindow {
    double r_min = 0.0;
    double r_max = 1.0;
};

/// OLS of log|E| on log r over the window. Points with |E| <= 3 se are
/// excluded; throws FitError when fewer than 4 remain.
ExponentFit fit_exponent(const ExcessSeries& series, FitWindow window = {});
ExponentFit fit_power_law(std::span<const double> r, std::span<const double> values);

struct BoundsReport {
    double r = 0.0;
    /// -(2 sqrt(alpha) r^2 int_rho^1 psi'/phi'(theta) + 2 r int_0^rho psi)
    double lower = 0.0;
    /// -2 r^2 I(r)
    double upper = 0.0;
    /// -r^2 I(r), what the wedge-volume argument actually gives.
    double upper_corrected = 0.0;
    /// lower minus the explicit finite-r terms 2 r^2 rho + 2 r^2 (1 + 2r).
    double lower_explicit = 0.0;
    double alpha = 0.0;
    double rho_r = 0.0;
    double integral_I = 0.0;
    std::optional<double> exponent;
    std::optional<double> corollary_lower_coeff;   // -c(p, q)
    std::optional<double> corollary_upper_coeff;   // -2/(q-p-1)
    std::optional<double> theorem_lower_coeff;     // -16/3 for p = 2, q = 3N
    std::optional<double> theorem_upper_coeff;     // -2/(3N)
    std::optional<double> epsilon_lambda;          // 16 - 4 alpha
    std::optional<double> epsilon_upper;           // -2 r eps(r)
    std::optional<double> epsilon_lower;           // -16 r int_0^r eps/t + lambda r eps(r)
    double big_O_slack = 0.0;
    nlohmann::json to_json() const;
};

/// Bound envelope at r. Throws DomainError when rho(r) > 1 or r outside (0, 1).
BoundsReport theoretical_bounds(const Profile& profile, double r);
BoundsReport theoretical_bounds(const Profile& profile, double r, double alpha);

struct EpsilonBounds {
    double r = 0.0;
    double lambda = 0.0;  // 16 - 4 alpha
    double upper = 0.0;   // -2 r eps(r)
    double lower = 0.0;   // -16 r int_0^r eps/t + lambda r eps(r)
    nlohmann::json to_json() const;
};

/// Asymptotic envelope of a profile built from a decay function. Unlike
/// theoretical_bounds it needs no rho(r) <= 1. Throws PreconditionError when
/// the profile has no driver.
EpsilonBounds epsilon_bounds(const Profile& profile, double r, double alpha);

struct SandwichViolation {
    double r = 0.0;
    double value = 0.0;
    double bound = 0.0;
    std::string side;  // "upper" or "lower"
};

struct SandwichVerdict {
    bool pass = true;
    /// Fitted r^2 coefficients, clamped at 0 so they can only loosen a bound.
    double upper_slack = 0.0;
    double lower_slack = 0.0;
    std::vector<SandwichViolation> violations;
    std::vector<BoundsReport> bounds;
    nlohmann::json to_json() const;
};

/// lower - a_l r^2 - 3 se <= E <= upper + a_u r^2 + 3 se at every point, with
/// a_u, a_l the least-squares r^2 coefficients of the residuals.
SandwichVerdict sandwich_check(const ExcessSeries& series, const Profile& profile);

/// Plot data: r,E,se,lower,upper
std::string plot_data_csv(const ExcessSeries& series, const Profile& profile);

/// Two convex polytopes in x2 >= 0 and x2 <= 0 touching along the plane x2 = 0.
struct ContactPair {
    ConvexPolytope3 M;
    ConvexPolytope3 M_prime;
    /// Area of M n M' (0 for edge or vertex contact).
    double contact_area = 0.0;
    int contact_dimension = 2;
    std::string name;
};

/// contact_dimension 2: random faces on x2 = 0 that overlap; 1: touching along
/// a segment; 0: touching at a single point.
ContactPair random_contact_pair(std::uint64_t seed, int contact_dimension = 2);

/// E(r) of a contact pair by the direct inclusion-exclusion route.
ExcessValue contact_pair_excess(const ContactPair& pair, double r, const McConfig& cfg);

struct LittleOCheck {
    bool pass = true;
    std::vector<double> r;
    std::vector<double> ratio;      // |E| / r
    std::vector<double> ratio_se;
    std::vector<int> violations;    // indices i with ratio[i] > ratio[i-1] + 3 se
    std::optional<ExponentFit> fit;
    nlohmann::json to_json() const;
};

/// |E(r)|/r non-increasing within 3 sigma along r_grid sorted decreasingly.
LittleOCheck little_o_check(std::span<const ExcessValue> values);

struct MinkowskiContent {
    double value = 0.0;
    std::vector<double> eps;
    std::vector<double> ratios;
    std::vector<double> std_errors;
    bool non_rectifiable = false;
    nlohmann::json to_json() const;
};

using DistanceToSet = std::function<double(const Point3&)>;

/// Volume of the unit ball in R^k.
double unit_ball_volume(int k);

/// L3(B(S, eps)) / (alpha(3-p) eps^(3-p)) on a decreasing grid (>= 3 values),
/// extrapolated to eps = 0 by a line in eps weighted by 1/se^2. `bounds` must
/// contain S. Flags non_rectifiable when the ratios drift by more than 20%.
MinkowskiContent minkowski_content(const DistanceToSet& dist, const Box& bounds, int p_dim,
                                   std::span<const double> eps_grid, const McConfig& cfg);

}  // namespace tubelab
