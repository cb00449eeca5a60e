#pragma once

// Independent reference computations used by the tests. None of them call
// into the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "tubelab/vec3.hpp"

namespace oracle {

using tubelab::Point3;
using tubelab::Vec3;

struct Projection {
    Point3 point;
    double distance = std::numeric_limits<double>::infinity();
};

namespace detail {

// Solves the k x k system g w = b by Gaussian elimination with partial pivoting.
template <int N>
bool solve(std::array<std::array<double, N>, N> g, std::array<double, N> b, int k, std::array<double, N>& w) {
    for (int c = 0; c < k; ++c) {
        int piv = c;
        for (int r = c + 1; r < k; ++r)
            if (std::abs(g[r][c]) > std::abs(g[piv][c])) piv = r;
        if (std::abs(g[piv][c]) < 1e-14) return false;
        std::swap(g[c], g[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < k; ++r) {
            const double f = g[r][c] / g[c][c];
            for (int j = c; j < k; ++j) g[r][j] -= f * g[c][j];
            b[r] -= f * b[c];
        }
    }
    for (int c = k - 1; c >= 0; --c) {
        double s = b[c];
        for (int j = c + 1; j < k; ++j) s -= g[c][j] * w[j];
        w[c] = s / g[c][c];
    }
    return true;
}

}  // namespace detail

/// Euclidean projection onto co(V) by enumerating every vertex subset of size
/// at most 4: the projection lies in the relative interior of some simplex
/// spanned by vertices and equals the affine projection onto that simplex, so
/// the nearest feasible affine projection is the exact answer.
inline Projection project_onto_hull(const std::vector<Point3>& V, const Point3& x) {
    Projection best;
    const int n = static_cast<int>(V.size());
    std::vector<int> idx;
    auto consider = [&](const std::vector<int>& s) {
        const int k = static_cast<int>(s.size()) - 1;
        const Point3& v0 = V[s[0]];
        std::array<double, 3> lam{};
        if (k > 0) {
            std::array<std::array<double, 3>, 3> g{};
            std::array<double, 3> b{};
            for (int i = 0; i < k; ++i) {
                const Vec3 ei = V[s[i + 1]] - v0;
                b[i] = dot(x - v0, ei);
                for (int j = 0; j < k; ++j) g[i][j] = dot(ei, V[s[j + 1]] - v0);
            }
            // reject nearly dependent subsets relative to their scale
            double scale = 0.0;
            for (int i = 0; i < k; ++i) scale = std::max(scale, g[i][i]);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) g[i][j] /= scale;
            for (int i = 0; i < k; ++i) b[i] /= scale;
            if (!detail::solve<3>(g, b, k, lam)) return;
        }
        double w0 = 1.0;
        for (int i = 0; i < k; ++i) {
            if (lam[i] < -1e-13) return;
            w0 -= lam[i];
        }
        if (w0 < -1e-13) return;
        Point3 p = v0;
        for (int i = 0; i < k; ++i) p += lam[i] * (V[s[i + 1]] - v0);
        const double d = tubelab::norm(x - p);
        if (d < best.distance) best = {p, d};
    };
    for (int a = 0; a < n; ++a) {
        consider({a});
        for (int b = a + 1; b < n; ++b) {
            consider({a, b});
            for (int c = b + 1; c < n; ++c) {
                consider({a, b, c});
                for (int d = c + 1; d < n; ++d) consider({a, b, c, d});
            }
        }
    }
    return best;
}

/// Distance from (a, b) to the segment [p, q] in the plane.
inline double segment_distance_2d(double a, double b, double px, double py, double qx, double qy) {
    const double dx = qx - px, dy = qy - py;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((a - px) * dx + (b - py) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(a - px - t * dx, b - py - t * dy);
}

}  // namespace oracle
