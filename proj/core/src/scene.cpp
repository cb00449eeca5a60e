#include "tubelab/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tubelab/errors.hpp"
#include "tubelab/random.hpp"

namespace tubelab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kMaxStep = 1.0 / 64.0;
constexpr int kGeometricLevels = 20;

}  // namespace

std::vector<double> adaptive_curve_grid(const std::function<double(double)>& second_derivative, double delta,
                                        double* sagitta, std::span<const double> extra) {
    if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
    auto k = [&](double t) { return std::abs(second_derivative(std::clamp(t, 0.0, 1.0))); };
    std::vector<double> grid{0.0};
    double worst = 0.0;
    double t = 0.0;
    while (t < 1.0) {
        const double k0 = k(t);
        double h = k0 > 0.0 ? std::sqrt(8.0 * delta / k0) : kMaxStep;
        h = std::min(h, kMaxStep);
        if (t > 0.0) h = std::min(h, t);
        double km = 0.0;
        for (int it = 0; it < 200; ++it) {
            km = std::max({k(t), k(t + 0.5 * h), k(t + h)});
            if (!std::isfinite(km)) throw NumericFailure("non-finite curvature while sampling");
            if (h * h * km <= 8.0 * delta) break;
            h = std::min(0.5 * h, std::sqrt(8.0 * delta / km));
        }
        h = std::min(h, 1.0 - t);
        worst = std::max(worst, h * h * km / 8.0);
        t = (1.0 - t - h) < 1e-15 ? 1.0 : t + h;
        grid.push_back(t);
        if (grid.size() > kMaxCurveSamples) {
            throw ResourceError("curve sampling needs more than " + std::to_string(kMaxCurveSamples) +
                                " points for delta = " + std::to_string(delta));
        }
    }
    for (int j = 1; j <= kGeometricLevels; ++j) grid.push_back(std::ldexp(1.0, -j));
    for (double e : extra) {
        if (!(e >= 0.0 && e <= 1.0)) throw DomainError("extra curve parameter outside [0, 1]");
        grid.push_back(e);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (sagitta) *sagitta = worst;
    return grid;
}

CounterexamplePair build_counterexample(const Profile& profile, double delta, std::span<const double> extra_psi) {
    if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
    CounterexamplePair pair(profile);
    pair.delta_ = delta;
    double sag_psi = 0.0, sag_phi = 0.0;
    const auto tp = adaptive_curve_grid([&](double t) { return profile.psi2(t); }, delta, &sag_psi, extra_psi);
    const auto tq = adaptive_curve_grid([&](double t) { return profile.phi2(t); }, delta, &sag_phi);
    if (tp.size() + tq.size() > kMaxCurveSamples) {
        throw ResourceError("scene needs more than " + std::to_string(kMaxCurveSamples) + " curve samples");
    }
    std::vector<Point3> pts;
    pts.reserve(tp.size() + tq.size());
    for (double t : tp) {
        pts.push_back({t, 0.0, -profile.psi(t)});
        pair.samples_.push_back({Curve::psi, t});
    }
    for (double t : tq) {
        pts.push_back({t, profile.phi(t), 0.0});
        pair.samples_.push_back({Curve::phi, t});
    }
    pair.m_ = ConvexPolytope3::hull(pts);
    pair.m_prime_ = pair.m_.mirrored_x2();
    pair.hausdorff_ = std::max(sag_psi, sag_phi);
    pair.alpha_ = compute_alpha(profile);
    return pair;
}

Curve CounterexamplePair::vertex_curve(int v) const { return samples_.at(m_.source_index().at(v)).curve; }

double CounterexamplePair::vertex_parameter(int v) const { return samples_.at(m_.source_index().at(v)).t; }

std::array<Point3, 4> CounterexamplePair::envelope_vertices() {
    return {Point3{0.0, 0.0, 0.0}, Point3{1.0, 0.0, -1.0}, Point3{1.0, 1.0, 0.0}, Point3{1.0, -1.0, 0.0}};
}

bool CounterexamplePair::envelope_contains(const Point3& x, double tol) {
    // facets: x1 <= 1, x3 <= 0, x1 - x2 + x3 >= 0, x1 + x2 + x3 >= 0
    return x.x1 <= 1.0 + tol && x.x3 <= tol && (x.x1 - x.x2 + x.x3) / kSqrt3 >= -tol &&
           (x.x1 + x.x2 + x.x3) / kSqrt3 >= -tol;
}

double CounterexamplePair::distance_union(const Point3& x) const {
    return std::min(distance(m_, x), distance(m_prime_, x));
}

namespace {

// M lies in the envelope and in {x2 >= 0}; each halfspace bounds d(M, x) from below.
bool M_rejects(const Point3& x, double r) {
    return -x.x2 > r || x.x3 > r || x.x1 - 1.0 > r || -x.x1 > r || -(x.x1 - x.x2 + x.x3) > kSqrt3 * r;
}

}  // namespace

bool CounterexamplePair::in_tube_M(const Point3& x, double r) const {
    if (M_rejects(x, r)) return false;
    return within_distance(m_, x, r);
}

bool CounterexamplePair::in_tube_M_prime(const Point3& x, double r) const {
    if (mirrored_ && M_rejects(mirror_x2(x), r)) return false;
    return within_distance(m_prime_, x, r);
}

bool CounterexamplePair::in_union_tube(const Point3& x, double r) const {
    return in_tube_M(x, r) || in_tube_M_prime(x, r);
}

CounterexamplePair CounterexamplePair::with_translated_prime(const Vec3& t) const {
    CounterexamplePair out = *this;
    out.m_prime_ = m_prime_.translated(t);
    out.mirrored_ = false;
    return out;
}

nlohmann::json CounterexamplePair::to_json() const {
    return {{"profile", profile_.to_json()},
            {"delta", delta_},
            {"vertex_counts", {{"M", m_.vertices().size()}, {"M_prime", m_prime_.vertices().size()}}},
            {"curve_samples", samples_.size()},
            {"hausdorff_bound", hausdorff_},
            {"alpha", alpha_},
            {"mirrored", mirrored_}};
}

// ------------------------------------------------------------- predicates

bool membership_A_inflated(const CounterexamplePair& pair, const Point3& x, double r, double slack) {
    if (!(r > 0.0)) throw PreconditionError("membership_A needs r > 0");
    const double rr = r + slack;
    if (pair.mirrored()) {
        // cheap common rejections before the exact C distance
        if (std::abs(x.x2) > rr || x.x3 > rr || -x.x1 > rr || x.x1 - 1.0 > rr) return false;
        if (-(x.x1 - std::abs(x.x2) + x.x3) > kSqrt3 * rr) return false;
    }
    if (!pair.C().distance_exceeds(x, r)) return false;
    // the farther body first: for x2 <= 0 that is M
    if (x.x2 <= 0.0) return pair.in_tube_M(x, rr) && pair.in_tube_M_prime(x, rr);
    return pair.in_tube_M_prime(x, rr) && pair.in_tube_M(x, rr);
}

bool membership_A(const CounterexamplePair& pair, const Point3& x, double r) {
    return membership_A_inflated(pair, x, r, 0.0);
}

ACheckSet::ACheckSet(Profile profile, double r) : profile_(std::move(profile)), r_(r) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("A_check needs r in (0, 1)");
    t_min_ = profile_.phi_inverse(r);
}

bool ACheckSet::contains(const Point3& x) const {
    const double a = x.x1;
    if (!(a > 0.0 && a <= 1.0) || x.x2 > 0.0 || a < t_min_) return false;
    const double ps = profile_.psi(a);
    const double ph = profile_.phi(a);
    if (!(ph > 0.0 && ps > 0.0)) return false;
    const double lower = -(ph / ps) * x.x2 - ps;
    const double ratio = ps / ph;
    const double upper = x.x2 * ratio - ps + r_ * std::sqrt(1.0 + ratio * ratio);
    return lower <= x.x3 && x.x3 <= upper;
}

bool membership_A_check(const Profile& profile, const Point3& x, double r) {
    return ACheckSet(profile, r).contains(x);
}

bool membership_A_hat(const Profile& profile, double alpha, const Point3& x, double r) {
    if (!(x.x1 >= 0.0 && x.x1 <= 1.0)) throw DomainError("A_hat is defined on 0 <= x1 <= 1");
    if (!(r > 0.0)) throw PreconditionError("A_hat needs r > 0");
    if (x.x2 > 0.0) return false;
    const double ps = profile.psi(x.x1);
    if (x.x3 < -ps) return false;
    const double d1 = profile.psi1(x.x1);
    const double slope = d1 > 0.0 ? profile.phi1(solve_theta(profile, x.x1)) / d1 : 0.0;
    return -x.x2 + slope * (x.x3 + ps) <= std::sqrt(alpha) * r;
}

double distance_to_psi_curve(const Profile& profile, const Point3& x) {
    const PlanarRegionC c(profile);
    const double s = c.curve_parameter(x.x1, x.x3);
    const double da = x.x1 - s, db = x.x3 + profile.psi(s);
    return std::sqrt(x.x2 * x.x2 + da * da + db * db);
}

double DiskUnion2D::distance(double x, double y) {
    const double d0 = std::hypot(x - 1.0, y) - radius;
    const double d1 = std::hypot(x + 1.0, y) - radius;
    return std::max(0.0, std::min(d0, d1));
}

// --------------------------------------------------------------- tangency

std::vector<double> tangency_parameters(int k) {
    if (k < 1) throw PreconditionError("tangency needs at least one point");
    std::vector<double> ts;
    for (int i = 0; i < k; ++i) ts.push_back(static_cast<double>(i) / k);
    return ts;
}

nlohmann::json TangencyReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
        pts.push_back({{"t", p.t},
                       {"x", {p.x.x1, p.x.x2, p.x.x3}},
                       {"precondition_ok", p.precondition_ok},
                       {"violation", p.violation},
                       {"agreements", p.agreements},
                       {"directions", p.directions.size()}});
    }
    return {{"kind", "numeric tangency evidence"},
            {"threshold", threshold},
            {"directions_per_point", directions_per_point},
            {"checked", checked},
            {"agreed", agreed},
            {"agreement_rate", agreement_rate()},
            {"precondition_violations", precondition_violations},
            {"ladder_inconsistent", ladder_inconsistent},
            {"pass", pass()},
            {"points", pts}};
}

TangencyReport tangency_report(const CounterexamplePair& pair, int k, int dirs, std::uint64_t seed,
                               std::span<const double> ladder_in, double plane_fraction) {
    if (!(plane_fraction >= 0.0 && plane_fraction <= 1.0)) throw PreconditionError("plane_fraction must lie in [0, 1]");
    const int planar = static_cast<int>(std::lround(plane_fraction * dirs));
    if (k < 1) throw PreconditionError("tangency needs at least one point");
    if (dirs < 1) throw PreconditionError("tangency needs at least one direction");
    const std::vector<double> ladder =
        ladder_in.empty() ? default_tangent_ladder() : std::vector<double>(ladder_in.begin(), ladder_in.end());
    const std::array<DistanceFn, 3> bodies{
        [&](const Point3& y) { return pair.C().distance(y); },
        [&](const Point3& y) { return distance(pair.M(), y); },
        [&](const Point3& y) { return distance(pair.M_prime(), y); },
    };
    TangencyReport rep;
    rep.directions_per_point = dirs;
    const auto ts = tangency_parameters(k);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        TangencyPoint tp;
        tp.t = ts[i];
        tp.x = {tp.t, 0.0, -pair.profile().psi(tp.t)};
        RandomStream rng(seed, i);
        for (int j = 0; j < dirs; ++j) {
            Vec3 v;
            if (j >= planar) {
                v = rng.unit_vector();
            } else {
                const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
                v = {std::cos(a), 0.0, std::sin(a)};
            }
            std::vector<TangentScore> s;
            try {
                s = tangent_member(bodies, tp.x, v, ladder);
            } catch (const PreconditionError& e) {
                tp.precondition_ok = false;
                tp.violation = e.what();
                break;
            }
            TangencyDirection d;
            d.v = v;
            d.score_C = s[0].score;
            d.score_M = s[1].score;
            d.score_M_prime = s[2].score;
            d.in_C = s[0].member();
            d.in_both = s[1].member() && s[2].member();
            d.ladder_consistent = s[0].ladder_consistent && s[1].ladder_consistent && s[2].ladder_consistent;
            tp.agreements += d.agree() ? 1 : 0;
            tp.directions.push_back(d);
        }
        if (tp.precondition_ok) {
            rep.checked += static_cast<int>(tp.directions.size());
            rep.agreed += tp.agreements;
            for (const auto& d : tp.directions) rep.ladder_inconsistent += d.ladder_consistent ? 0 : 1;
        } else {
            ++rep.precondition_violations;
        }
        rep.points.push_back(std::move(tp));
    }
    return rep;
}

}  // namespace tubelab
