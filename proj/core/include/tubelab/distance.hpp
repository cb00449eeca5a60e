#pragma once

// Distance queries: nearest points on convex polytopes, the planar region C,
// and a numeric Bouligand tangent-cone membership score.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "tubelab/polytope.hpp"
#include "tubelab/profiles.hpp"
#include "tubelab/vec3.hpp"

namespace tubelab {

struct NearestPoint {
    Point3 point;
    double distance = 0.0;
    /// Vertices of the supporting simplex and their barycentric weights.
    std::array<int, 4> support{-1, -1, -1, -1};
    std::array<double, 4> weights{};
    int support_size = 0;
    int iterations = 0;
};

/// Euclidean projection of x onto the body. Throws DomainError on an empty body.
NearestPoint nearest_point(const ConvexPolytope3& body, const Point3& x);

double distance(const ConvexPolytope3& body, const Point3& x);

/// d(body, x) <= r, stopping as soon as either bound decides it.
/// `hint` carries a warm-start vertex between calls (may be null).
bool within_distance(const ConvexPolytope3& body, const Point3& x, double r, int* hint = nullptr);

/// C = {x2 = 0, 0 <= x1 <= 1, -x1 <= x3 <= -psi(x1)}.
class PlanarRegionC {
public:
    explicit PlanarRegionC(Profile profile) : profile_(std::move(profile)) {}

    const Profile& profile() const { return profile_; }

    bool contains(const Point3& x, double tol = 0.0) const;
    double distance(const Point3& x) const;
    /// Nearest point of C.
    Point3 nearest(const Point3& x) const;
    /// d(C, x) > r, using cheap bounds before the exact distance.
    bool distance_exceeds(const Point3& x, double r) const;
    /// area(C) = int_0^1 (t - psi(t)) dt.
    double area() const;

    /// Nearest point of the planar region R = {0<=a<=1, -a<=b<=-psi(a)} to (a, b).
    std::array<double, 2> planar_nearest(double a, double b) const;
    /// Parameter s of the point (s, -psi(s)) of the boundary curve nearest to (a, b).
    double curve_parameter(double a, double b) const;

private:
    Profile profile_;
};

double distance_to_C(const Profile& profile, const Point3& x);

inline constexpr double kTangentThreshold = 1e-3;
/// Absolute rise between ladder rungs tolerated as noise (a tenth of the threshold).
inline constexpr double kLadderSlack = 1e-4;

using DistanceFn = std::function<double(const Point3&)>;

struct TangentScore {
    double score = 0.0;              // d(x + eps v, body)/eps at the finest rung
    std::vector<double> ratios;      // one per ladder rung
    bool ladder_consistent = true;   // ratios non-increasing down the ladder, up to kLadderSlack
    bool member() const { return score <= kTangentThreshold && ladder_consistent; }
};

/// Numeric evidence for v in T(body, x). Throws PreconditionError when x is
/// not in the body (distance >= 1e-9), v is not a unit vector, or the ladder
/// is empty or not strictly decreasing.
TangentScore tangent_member(const DistanceFn& body, const Point3& x, const Vec3& v,
                            std::span<const double> ladder);

/// Same test against several bodies at once.
std::vector<TangentScore> tangent_member(std::span<const DistanceFn> bodies, const Point3& x,
                                         const Vec3& v, std::span<const double> ladder);

/// {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}
std::vector<double> default_tangent_ladder();

}  // namespace tubelab
