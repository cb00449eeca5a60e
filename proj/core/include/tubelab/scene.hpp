#pragma once

// The counterexample pair: M = co(C u C1) built from the two generator curves
// t -> (t, 0, -psi(t)) and t -> (t, phi(t), 0), its x2-mirror M', the contact
// region C = M n M', and the sets A(r), A_check(r), A_hat(r) used to bound the
// tube-volume excess.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tubelab/distance.hpp"
#include "tubelab/polytope.hpp"
#include "tubelab/profiles.hpp"

namespace tubelab {

/// Sample budget per scene; finer deltas raise ResourceError.
inline constexpr std::size_t kMaxCurveSamples = 100000;

/// Parameter grid on [0, 1] whose chords stay within delta of the curve,
/// given a bound on the second derivative of its non-linear coordinate.
/// Steps grow at most geometrically away from 0. Returns the grid and writes
/// the largest sagitta bound actually achieved to *sagitta when non-null.
std::vector<double> adaptive_curve_grid(const std::function<double(double)>& second_derivative, double delta,
                                        double* sagitta = nullptr, std::span<const double> extra = {});

enum class Curve : std::uint8_t { psi, phi };

class CounterexamplePair {
public:
    const Profile& profile() const { return profile_; }
    const ConvexPolytope3& M() const { return m_; }
    const ConvexPolytope3& M_prime() const { return m_prime_; }
    const PlanarRegionC& C() const { return c_; }
    double delta() const { return delta_; }
    /// Upper bound on the Hausdorff distance between M and its sampled hull.
    double hausdorff_bound() const { return hausdorff_; }
    /// max of the alpha integrand, cached at build time.
    double alpha() const { return alpha_; }
    /// Curve and parameter each vertex of M was sampled from.
    Curve vertex_curve(int v) const;
    double vertex_parameter(int v) const;
    std::size_t sample_count() const { return samples_.size(); }
    /// False once M' no longer mirrors M (see with_translated_prime).
    bool mirrored() const { return mirrored_; }

    /// co{(0,0,0), (1,0,-1), (1,1,0), (1,-1,0)}.
    static std::array<Point3, 4> envelope_vertices();
    static bool envelope_contains(const Point3& x, double tol = 0.0);

    double distance_M(const Point3& x) const { return distance(m_, x); }
    double distance_M_prime(const Point3& x) const { return distance(m_prime_, x); }
    double distance_union(const Point3& x) const;
    /// d(M u M', x) <= r with halfspace pre-rejection.
    bool in_union_tube(const Point3& x, double r) const;
    bool in_tube_M(const Point3& x, double r) const;
    bool in_tube_M_prime(const Point3& x, double r) const;

    /// Same scene with M' shifted by t; breaks the contact structure and is
    /// meant for negative controls.
    CounterexamplePair with_translated_prime(const Vec3& t) const;

    /// {profile, delta, vertex_counts, hausdorff_bound, alpha}
    nlohmann::json to_json() const;

private:
    friend CounterexamplePair build_counterexample(const Profile&, double, std::span<const double>);

    CounterexamplePair(Profile profile) : profile_(profile), c_(std::move(profile)) {}

    struct Sample {
        Curve curve;
        double t;
    };

    Profile profile_;
    ConvexPolytope3 m_;
    ConvexPolytope3 m_prime_;
    PlanarRegionC c_;
    std::vector<Sample> samples_;
    double delta_ = 0.0;
    double hausdorff_ = 0.0;
    double alpha_ = 1.0;
    bool mirrored_ = true;
};

/// Samples both curves with chord sagitta <= delta, hulls them and mirrors.
/// `extra_psi` parameters are added to the first curve (contact points that
/// must be hull vertices). Throws PreconditionError for delta <= 0 and
/// ResourceError when more than kMaxCurveSamples points would be needed.
CounterexamplePair build_counterexample(const Profile& profile, double delta,
                                        std::span<const double> extra_psi = {});

/// A(r) = B(M, r) n B(M', r) \ B(C, r). Tubes of M and M' use the sampled
/// hulls; d(C, .) is exact.
bool membership_A(const CounterexamplePair& pair, const Point3& x, double r);

/// A(r) with the hull tubes inflated by `slack`, which makes it a superset of
/// the true A(r) when slack >= hausdorff_bound().
bool membership_A_inflated(const CounterexamplePair& pair, const Point3& x, double r, double slack);

/// The wedge set A_check(r) bounded below by the face through the two
/// curves. Precomputes phi^{-1}(r).
class ACheckSet {
public:
    ACheckSet(Profile profile, double r);
    bool contains(const Point3& x) const;
    double threshold() const { return t_min_; }
    double r() const { return r_; }

private:
    Profile profile_;
    double r_;
    double t_min_;
};

bool membership_A_check(const Profile& profile, const Point3& x, double r);

/// A_hat(r): x2 <= 0, x3 >= -psi(x1) and
/// -x2 + phi'(theta(x1)) / psi'(x1) (x3 + psi(x1)) <= sqrt(alpha) r.
/// Throws DomainError for x1 outside [0, 1].
bool membership_A_hat(const Profile& profile, double alpha, const Point3& x, double r);

/// Distance to the first generator curve {(t, 0, -psi(t))}.
double distance_to_psi_curve(const Profile& profile, const Point3& x);

/// Two closed unit disks centred at (+-1, 0), tangent at the origin.
struct DiskUnion2D {
    static constexpr double radius = 1.0;
    static double distance(double x, double y);
    static bool in_tube(double x, double y, double r) { return distance(x, y) <= r; }
};

struct TangencyDirection {
    Vec3 v;
    double score_C = 0.0;
    double score_M = 0.0;
    double score_M_prime = 0.0;
    bool in_C = false;
    bool in_both = false;
    bool ladder_consistent = true;
    bool agree() const { return in_C == in_both; }
};

struct TangencyPoint {
    double t = 0.0;
    Point3 x;
    bool precondition_ok = true;
    std::string violation;
    int agreements = 0;
    std::vector<TangencyDirection> directions;
};

struct TangencyReport {
    std::vector<TangencyPoint> points;
    int directions_per_point = 0;
    int checked = 0;
    int agreed = 0;
    int precondition_violations = 0;
    int ladder_inconsistent = 0;
    double threshold = kTangentThreshold;
    double agreement_rate() const { return checked > 0 ? static_cast<double>(agreed) / checked : 0.0; }
    bool pass() const { return precondition_violations == 0 && checked > 0 && agreed == checked; }
    nlohmann::json to_json() const;
};

/// Numeric evidence for T(C, x) = T(M, x) n T(M', x) at k points of the
/// first curve (t = i/k, i = 0..k-1, so the origin is included), each tested
/// on `dirs` directions uniform on the sphere. A fraction `plane_fraction` of
/// them is drawn in the contact plane x2 = 0 instead; those probe the thin
/// wedges M and M' form beyond C and are a diagnostic of the threshold's
/// resolution. A point outside M or M' is reported as a precondition
/// violation rather than scored.
TangencyReport tangency_report(const CounterexamplePair& pair, int k, int dirs, std::uint64_t seed,
                               std::span<const double> ladder = {}, double plane_fraction = 0.0);

/// Contact parameters used by tangency_report, to be passed as extra_psi so
/// every contact point is a hull vertex.
std::vector<double> tangency_parameters(int k);

}  // namespace tubelab
