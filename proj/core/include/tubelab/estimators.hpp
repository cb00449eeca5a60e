#pragma once

// Volume estimators: stratified Monte Carlo over membership predicates, exact
// Steiner coefficients of convex polytopes, and the closed-form auxiliary
// volumes of the counterexample construction.

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "tubelab/polytope.hpp"
#include "tubelab/profiles.hpp"
#include "tubelab/scene.hpp"

namespace tubelab {

/// Axis-aligned box [lo, hi]. Throws DomainError unless lo < hi componentwise.
struct Box {
    Point3 lo;
    Point3 hi;
    Box(const Point3& lo_, const Point3& hi_);
    double volume() const;
    Box inflated(double r) const;
};

struct Box2 {
    double lo[2];
    double hi[2];
    Box2(double x0, double y0, double x1, double y1);
    double area() const;
};

inline constexpr std::uint64_t kMinSamples = 1000;

struct McConfig {
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t strata = 64;
    /// Worker threads; 0 means TUBELAB_THREADS or the hardware concurrency.
    int threads = 0;

    /// Throws PreconditionError unless n_samples >= 1000, strata >= 1 and
    /// strata divides n_samples.
    void validate() const;
    nlohmann::json to_json() const;
};

/// Thread count honouring TUBELAB_THREADS as a cap.
int resolve_threads(int requested);

struct VolumeEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    double box_volume = 0.0;
    std::uint64_t hits = 0;

    double fraction() const { return n_samples ? static_cast<double>(hits) / n_samples : 0.0; }
    nlohmann::json to_json() const;
};

using Predicate3 = std::function<bool(const Point3&)>;
using Predicate2 = std::function<bool(double, double)>;

/// Uniform sampling of the box in equal slabs along x1, one counter-based
/// stream per (seed, slab). The estimate depends only on (predicate, box,
/// n_samples, seed, strata), never on the thread count.
VolumeEstimate mc_volume(const Predicate3& inside, const Box& box, const McConfig& cfg);
VolumeEstimate mc_area(const Predicate2& inside, const Box2& box, const McConfig& cfg);

/// Bounding box of the envelope simplex, [0,1] x [-1,1] x [-1,0].
Box envelope_box();

/// L3 of the r-tube of M u M' (r = 0 gives L3(M u M')).
VolumeEstimate tube_volume_union(const CounterexamplePair& pair, double r, const McConfig& cfg);
VolumeEstimate tube_volume_M(const CounterexamplePair& pair, double r, const McConfig& cfg);
/// L3(B(M, r) n B(M', r)).
VolumeEstimate tube_volume_intersection(const CounterexamplePair& pair, double r, const McConfig& cfg);

/// Box holding A(r) n {x2 <= 0}: [0, 1+r] x [-sqrt(alpha) r, 0] x [-1-r, r].
Box A_half_box(const CounterexamplePair& pair, double r);

/// L3(A(r)) from the half x2 <= 0, doubled by mirror symmetry.
/// Throws DomainError unless 0 < r <= 0.2.
VolumeEstimate volume_A(const CounterexamplePair& pair, double r, const McConfig& cfg);
/// One half of A(r): side < 0 samples x2 <= 0, side > 0 samples x2 >= 0.
VolumeEstimate volume_A_half(const CounterexamplePair& pair, double r, const McConfig& cfg, int side);

struct SteinerCoeffs {
    double c0 = 0.0;  // volume
    double c1 = 0.0;  // surface area (two-sided for flat bodies)
    double c2 = 0.0;  // sum over edges of length * exterior angle / 2
    double c3 = 0.0;  // 4 pi / 3
    int dimension = 3;
    bool degenerate = false;

    double volume_at(double r) const { return c0 + r * (c1 + r * (c2 + r * c3)); }
    nlohmann::json to_json() const;
};

SteinerCoeffs steiner_3d(const ConvexPolytope3& body);

/// Area of the r-neighbourhood of two unit disks tangent at the origin.
double disk_union_area(double r);

/// Coefficient c of r^(3/2) in disk_union_area(r) - 2 pi - 4 pi r, from a
/// quadratic fit of (area - 2 pi - 4 pi r) / r^(3/2) in sqrt(r) over the grid
/// (at least 3 radii).
double disk_union_expansion_coefficient(std::span<const double> r_grid);

/// L3 of the wedge set A_check(r): its x1-section is a right triangle with
/// legs r and r psi/phi, so the volume is r^2 I(r) / 2.
double exact_A_check_volume(const Profile& profile, double r);

/// H1 of the first generator curve, int_0^1 sqrt(1 + psi'^2).
double psi_curve_length(const Profile& profile);

/// pi H1 r^2 + (4 pi / 3) r^3. Throws DomainError for r > 0.1 or r < 0.
double curve_tube_volume(const Profile& profile, double r);

/// "%.17g"
std::string format_double(double v);

inline constexpr const char* kEstimateCsvHeader = "r,value,std_error,n,seed";
std::string estimate_csv_row(double r, const VolumeEstimate& e);

}  // namespace tubelab
