#include "tubelab/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tubelab/errors.hpp"
#include "tubelab/numeric.hpp"

namespace tubelab {

namespace {

// Closest point to the origin on the hull of up to four points by signed
// volumes (Montanari, Petrinic, Barbieri 2017): barycentric coordinates come
// from sub-determinants evaluated in the best-conditioned coordinate
// projection, which stays reliable on the nearly flat simplices that hulls of
// sampled planar curves produce. The simplex is reduced in place to the points
// carrying positive weight.
struct Simplex {
    std::array<Vec3, 4> y;   // vertex minus query point
    std::array<int, 4> idx{};
    std::array<double, 4> w{};
    int n = 0;

    Vec3 point() const {
        Vec3 c;
        for (int i = 0; i < n; ++i) c += w[i] * y[i];
        return c;
    }
};

bool same_sign(double a, double b) { return (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0); }

struct Sub {
    std::array<int, 4> ids{};  // positions in the parent simplex
    std::array<double, 4> w{};
    int n = 0;
    double d2 = std::numeric_limits<double>::infinity();
};

Sub finish_sub(const Simplex& s, Sub out) {
    Vec3 c;
    for (int i = 0; i < out.n; ++i) c += out.w[i] * s.y[out.ids[i]];
    out.d2 = norm2(c);
    return out;
}

Sub vertex_sub(const Simplex& s, int i) {
    Sub o;
    o.ids[0] = i;
    o.w[0] = 1.0;
    o.n = 1;
    return finish_sub(s, o);
}

Sub s1d(const Simplex& s, int i, int j) {
    const Vec3 a = s.y[i], b = s.y[j];
    const Vec3 t = b - a;
    const double tt = dot(t, t);
    if (!(tt > 0.0)) return vertex_sub(s, i);
    const Vec3 p0 = a - (dot(a, t) / tt) * t;
    int k = 0;
    if (std::abs(t[1]) > std::abs(t[k])) k = 1;
    if (std::abs(t[2]) > std::abs(t[k])) k = 2;
    const double mu = a[k] - b[k];
    const double c1 = p0[k] - b[k];
    const double c2 = a[k] - p0[k];
    if (same_sign(mu, c1) && same_sign(mu, c2)) {
        Sub o;
        o.ids = {i, j, 0, 0};
        o.w = {c1 / mu, c2 / mu, 0.0, 0.0};
        o.n = 2;
        return finish_sub(s, o);
    }
    const Sub va = vertex_sub(s, i), vb = vertex_sub(s, j);
    return va.d2 <= vb.d2 ? va : vb;
}

Sub s2d(const Simplex& s, int i, int j, int k) {
    const Vec3 a = s.y[i], b = s.y[j], c = s.y[k];
    const Vec3 n = cross(b - a, c - a);
    const double nn = dot(n, n);
    Sub best;
    auto edges = [&]() {
        for (auto [p, q] : {std::pair{i, j}, std::pair{j, k}, std::pair{i, k}}) {
            const Sub e = s1d(s, p, q);
            if (e.d2 < best.d2) best = e;
        }
        return best;
    };
    if (!(nn > 0.0)) return edges();
    const Vec3 p0 = (dot(a, n) / nn) * n;
    int ax = 0;
    if (std::abs(n[1]) > std::abs(n[ax])) ax = 1;
    if (std::abs(n[2]) > std::abs(n[ax])) ax = 2;
    const int u = (ax + 1) % 3, v = (ax + 2) % 3;
    auto area = [&](const Vec3& p, const Vec3& q, const Vec3& r) {
        return (q[u] - p[u]) * (r[v] - p[v]) - (q[v] - p[v]) * (r[u] - p[u]);
    };
    const double mu = area(a, b, c);
    const std::array<double, 3> cj{area(p0, b, c), area(a, p0, c), area(a, b, p0)};
    if (same_sign(mu, cj[0]) && same_sign(mu, cj[1]) && same_sign(mu, cj[2])) {
        Sub o;
        o.ids = {i, j, k, 0};
        o.w = {cj[0] / mu, cj[1] / mu, cj[2] / mu, 0.0};
        o.n = 3;
        return finish_sub(s, o);
    }
    const std::array<std::pair<int, int>, 3> opposite{std::pair{j, k}, std::pair{i, k}, std::pair{i, j}};
    for (int m = 0; m < 3; ++m) {
        if (same_sign(mu, cj[m])) continue;
        const Sub e = s1d(s, opposite[m].first, opposite[m].second);
        if (e.d2 < best.d2) best = e;
    }
    if (best.n == 0) return edges();
    return best;
}

Sub s3d(const Simplex& s) {
    const Vec3 &a = s.y[0], &b = s.y[1], &c = s.y[2], &d = s.y[3];
    // cofactors: signed volumes with one vertex replaced by the origin
    const std::array<double, 4> cj{dot(b, cross(c, d)), -dot(a, cross(c, d)), dot(a, cross(b, d)),
                                   -dot(a, cross(b, c))};
    const double det = cj[0] + cj[1] + cj[2] + cj[3];
    if (same_sign(det, cj[0]) && same_sign(det, cj[1]) && same_sign(det, cj[2]) && same_sign(det, cj[3])) {
        Sub o;
        o.ids = {0, 1, 2, 3};
        o.w = {cj[0] / det, cj[1] / det, cj[2] / det, cj[3] / det};
        o.n = 4;
        o.d2 = 0.0;
        return o;
    }
    const std::array<std::array<int, 3>, 4> faces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
    Sub best;
    for (int m = 0; m < 4; ++m) {
        if (det != 0.0 && same_sign(det, cj[m])) continue;
        const Sub f = s2d(s, faces[m][0], faces[m][1], faces[m][2]);
        if (f.d2 < best.d2) best = f;
    }
    if (best.n == 0) {
        for (const auto& f3 : faces) {
            const Sub f = s2d(s, f3[0], f3[1], f3[2]);
            if (f.d2 < best.d2) best = f;
        }
    }
    return best;
}

void reduce(Simplex& s) {
    Sub r;
    switch (s.n) {
        case 1: r = vertex_sub(s, 0); break;
        case 2: r = s1d(s, 0, 1); break;
        case 3: r = s2d(s, 0, 1, 2); break;
        default: r = s3d(s); break;
    }
    Simplex out;
    for (int m = 0; m < r.n; ++m) {
        out.y[m] = s.y[r.ids[m]];
        out.idx[m] = s.idx[r.ids[m]];
        out.w[m] = r.w[m];
    }
    out.n = r.n;
    s = out;
}

enum class Mode { exact, threshold };

struct GjkOutcome {
    Simplex simplex;
    Vec3 c;            // closest point minus x
    double upper = 0;  // |c|
    bool decided_within = false;
    bool decided_outside = false;
    int iterations = 0;
};

GjkOutcome gjk(const ConvexPolytope3& body, const Point3& x, Mode mode, double r, int* hint) {
    if (body.empty()) throw DomainError("distance to an empty body");
    const auto& V = body.vertices();
    GjkOutcome out;
    Simplex& s = out.simplex;
    int start = hint && *hint >= 0 && *hint < static_cast<int>(V.size()) ? *hint : -1;
    start = body.support(x - body.centroid(), start);
    s.y[0] = V[start] - x;
    s.idx[0] = start;
    s.w[0] = 1.0;
    s.n = 1;
    int last = start;
    double prev = std::numeric_limits<double>::infinity();
    const double scale2 = norm2(V[start] - x) + 1.0;
    const int max_iter = 64 + static_cast<int>(V.size());
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        reduce(s);
        const Vec3 c = s.point();
        const double c2 = norm2(c);
        out.c = c;
        if (c2 <= 1e-30 * scale2 || s.n == 4) {
            out.c = s.n == 4 ? Vec3{} : c;
            out.upper = norm(out.c);
            out.decided_within = true;
            break;
        }
        if (mode == Mode::threshold && c2 <= r * r) {
            out.upper = std::sqrt(c2);
            out.decided_within = true;
            break;
        }
        if (c2 >= prev) {
            out.upper = std::sqrt(c2);
            break;
        }
        prev = c2;
        const int k = body.support(-c, last);
        last = k;
        const Vec3 w = V[k] - x;
        const double cw = dot(c, w);
        if (mode == Mode::threshold && cw > r * std::sqrt(c2)) {
            out.upper = std::sqrt(c2);
            out.decided_outside = true;
            break;
        }
        bool known = false;
        for (int i = 0; i < s.n; ++i) known = known || s.idx[i] == k;
        if (known || c2 - cw <= 1e-15 * c2) {
            out.upper = std::sqrt(c2);
            break;
        }
        s.y[s.n] = w;
        s.idx[s.n] = k;
        s.w[s.n] = 0.0;
        ++s.n;
    }
    if (hint) *hint = last;
    return out;
}

}  // namespace

NearestPoint nearest_point(const ConvexPolytope3& body, const Point3& x) {
    if (!is_finite(x)) throw DomainError("non-finite query point");
    const auto out = gjk(body, x, Mode::exact, 0.0, nullptr);
    NearestPoint np;
    np.distance = out.upper;
    np.point = out.upper == 0.0 ? x : x + out.c;
    np.support_size = out.simplex.n;
    for (int i = 0; i < out.simplex.n; ++i) {
        np.support[i] = out.simplex.idx[i];
        np.weights[i] = out.simplex.w[i];
    }
    np.iterations = out.iterations;
    return np;
}

double distance(const ConvexPolytope3& body, const Point3& x) {
    return gjk(body, x, Mode::exact, 0.0, nullptr).upper;
}

bool within_distance(const ConvexPolytope3& body, const Point3& x, double r, int* hint) {
    const auto out = gjk(body, x, Mode::threshold, r, hint);
    if (out.decided_within) return true;
    if (out.decided_outside) return false;
    return out.upper <= r;
}

// ---------------------------------------------------------------- region C

bool PlanarRegionC::contains(const Point3& x, double tol) const {
    if (std::abs(x.x2) > tol) return false;
    const double a = x.x1, b = x.x3;
    return a >= -tol && a <= 1.0 + tol && b >= -a - tol && b <= -profile_.psi(std::clamp(a, 0.0, 1.0)) + tol;
}

double PlanarRegionC::curve_parameter(double a, double b) const {
    // coarse scan, golden section, Newton polish
    auto f = [&](double s) {
        const double ds = s - a;
        const double db = -profile_.psi(s) - b;
        return ds * ds + db * db;
    };
    constexpr int kScan = 32;
    int arg = 0;
    double fmin = f(0.0);
    for (int i = 1; i <= kScan; ++i) {
        const double v = f(static_cast<double>(i) / kScan);
        if (v < fmin) {
            fmin = v;
            arg = i;
        }
    }
    const double lo = std::max(0, arg - 1) / static_cast<double>(kScan);
    const double hi = std::min(kScan, arg + 1) / static_cast<double>(kScan);
    auto [s, fs] = numeric::golden_section_min(f, lo, hi, 1e-13);
    for (int i = 0; i < 4; ++i) {
        const double p = profile_.psi(s), p1 = profile_.psi1(s), p2 = profile_.psi2(s);
        const double g = 2.0 * (s - a) + 2.0 * (p + b) * p1;
        const double h = 2.0 + 2.0 * p1 * p1 + 2.0 * (p + b) * p2;
        if (!(h > 0.0)) break;
        const double ns = std::clamp(s - g / h, lo, hi);
        const double nf = f(ns);
        if (!(nf <= fs)) break;
        s = ns;
        fs = nf;
    }
    for (double e : {0.0, 1.0}) {
        if (f(e) < fs) {
            fs = f(e);
            s = e;
        }
    }
    return s;
}

std::array<double, 2> PlanarRegionC::planar_nearest(double a, double b) const {
    if (a >= 0.0 && a <= 1.0 && b >= -a && b <= -profile_.psi(a)) return {a, b};
    // segment b = -a, a in [0, 1]
    const double t = std::clamp(0.5 * (a - b), 0.0, 1.0);
    const double seg = (a - t) * (a - t) + (b + t) * (b + t);
    const double s = curve_parameter(a, b);
    const double ps = profile_.psi(s);
    const double cur = (a - s) * (a - s) + (b + ps) * (b + ps);
    if (cur < seg) return {s, -ps};
    return {t, -t};
}

Point3 PlanarRegionC::nearest(const Point3& x) const {
    const auto [a, b] = planar_nearest(x.x1, x.x3);
    return {a, 0.0, b};
}

double PlanarRegionC::distance(const Point3& x) const {
    const auto [a, b] = planar_nearest(x.x1, x.x3);
    const double da = x.x1 - a, db = x.x3 - b;
    return std::sqrt(x.x2 * x.x2 + da * da + db * db);
}

bool PlanarRegionC::distance_exceeds(const Point3& x, double r) const {
    const double y2 = x.x2 * x.x2;
    const double r2 = r * r;
    if (y2 > r2) return true;
    const double a = x.x1, b = x.x3;
    // C lies in {0 <= x1 <= 1}, {x3 <= 0} and {x1 + x3 >= 0}.
    const double slab = a < 0.0 ? -a : (a > 1.0 ? a - 1.0 : 0.0);
    if (y2 + slab * slab > r2) return true;
    if (b > 0.0 && y2 + b * b > r2) return true;
    const double diag = -(a + b);
    if (diag > 0.0 && y2 + 0.5 * diag * diag > r2) return true;
    if (slab == 0.0 && diag <= 0.0) {
        const double gap = b + profile_.psi(a);
        if (gap <= 0.0) return false;  // planar projection lies in C
        const double p1 = profile_.psi1(a);
        // R lies under the tangent line at a; the vertical foot (a, -psi(a)) is in R.
        if (y2 + gap * gap / (1.0 + p1 * p1) > r2) return true;
        if (y2 + gap * gap <= r2) return false;
    }
    const auto [na, nb] = planar_nearest(a, b);
    const double da = a - na, db = b - nb;
    return y2 + da * da + db * db > r2;
}

double PlanarRegionC::area() const {
    auto f = [&](double t) { return t - profile_.psi(t); };
    return numeric::integrate(f, 0.0, 1.0, 1e-12, 32).value;
}

double distance_to_C(const Profile& profile, const Point3& x) {
    return PlanarRegionC(profile).distance(x);
}

// ---------------------------------------------------------------- tangency

TangentScore tangent_member(const DistanceFn& body, const Point3& x, const Vec3& v,
                            std::span<const double> ladder) {
    if (ladder.empty()) throw PreconditionError("tangent ladder is empty");
    for (std::size_t i = 1; i < ladder.size(); ++i) {
        if (!(ladder[i] < ladder[i - 1])) throw PreconditionError("tangent ladder must decrease");
    }
    if (std::abs(norm(v) - 1.0) > 1e-12) throw PreconditionError("tangent direction must be a unit vector");
    if (!(body(x) < 1e-9)) throw PreconditionError("base point is not in the body");
    TangentScore ts;
    for (double eps : ladder) ts.ratios.push_back(body(x + eps * v) / eps);
    for (std::size_t i = 1; i < ts.ratios.size(); ++i) {
        if (ts.ratios[i] > ts.ratios[i - 1] * (1.0 + 1e-6) + kLadderSlack) ts.ladder_consistent = false;
    }
    ts.score = ts.ratios.back();
    return ts;
}

std::vector<TangentScore> tangent_member(std::span<const DistanceFn> bodies, const Point3& x,
                                         const Vec3& v, std::span<const double> ladder) {
    std::vector<TangentScore> out;
    out.reserve(bodies.size());
    for (const auto& b : bodies) out.push_back(tangent_member(b, x, v, ladder));
    return out;
}

std::vector<double> default_tangent_ladder() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

}  // namespace tubelab
