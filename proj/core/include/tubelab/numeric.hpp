#pragma once

// Scalar numerics shared by the profile, geometry and estimator modules:
// bracketed bisection, golden-section search and adaptive Simpson quadrature.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tubelab/errors.hpp"

namespace tubelab::numeric {

inline constexpr int kMaxBisectionSteps = 200;

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int steps = 0;
};

/// Solves f(x) = target for a nondecreasing f on [lo, hi].
///
/// Terminates once |f(x) - target| < tol. When the bracket collapses to
/// adjacent doubles before that, the better endpoint is returned if its
/// residual is within 64 * tol (rounding noise of f), otherwise NumericFailure.
template <class F>
RootResult bisect_increasing(F&& f, double lo, double hi, double target, double tol,
                             int max_steps = kMaxBisectionSteps) {
    if (!(tol > 0.0)) throw DomainError("bisection tolerance must be positive");
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (std::abs(flo) < tol) return {lo, flo, 0};
    if (std::abs(fhi) < tol) return {hi, fhi, 0};
    if (flo > 0.0 || fhi < 0.0) {
        throw NumericFailure("bisection bracket does not contain the target");
    }
    for (int step = 1; step <= max_steps; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            const auto best = std::abs(flo) < std::abs(fhi) ? RootResult{lo, flo, step}
                                                            : RootResult{hi, fhi, step};
            if (std::abs(best.residual) <= 64.0 * tol) return best;
            throw NumericFailure("bisection bracket collapsed without meeting tolerance");
        }
        const double fm = f(mid) - target;
        if (!std::isfinite(fm)) throw NumericFailure("non-finite value during bisection");
        if (std::abs(fm) < tol) return {mid, fm, step};
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    throw NumericFailure("bisection did not converge within " + std::to_string(max_steps) +
                         " steps");
}

/// Golden-section search for the minimum of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double xtol = 1e-12,
                                             int max_steps = 200) {
    constexpr double kInvPhi = 0.6180339887498948482;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < max_steps && (b - a) > xtol; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
};

namespace detail {

template <class F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole,
                       double eps, int depth, QuadratureResult& acc) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    acc.evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        acc.error_estimate += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, acc) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, acc);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to relative tolerance rel_tol.
///
/// The interval is first split into `initial_panels` panels; each panel is
/// refined recursively where the local Richardson error estimate is large, so
/// subdivision follows the curvature of the integrand.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                           int initial_panels = 16, int max_depth = 48) {
    QuadratureResult acc;
    if (a == b) return acc;
    if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("non-finite integration limits");
    const double h = (b - a) / initial_panels;
    struct Panel { double a, b, fa, fm, fb, whole; };
    double coarse = 0.0;
    double coarse_abs = 0.0;
    std::pair<double, double> prev{a, f(a)};
    acc.evaluations = 1;
    Panel panels[256];
    const int n = initial_panels > 256 ? 256 : initial_panels;
    for (int i = 0; i < n; ++i) {
        const double pa = prev.first;
        const double pb = (i + 1 == n) ? b : a + (i + 1) * h;
        const double fa = prev.second;
        const double fm = f(0.5 * (pa + pb));
        const double fb = f(pb);
        acc.evaluations += 2;
        const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        panels[i] = {pa, pb, fa, fm, fb, whole};
        coarse += whole;
        coarse_abs += std::abs(whole);
        prev = {pb, fb};
    }
    if (!std::isfinite(coarse)) throw NumericFailure("non-finite integrand");
    const double eps = rel_tol * std::max(coarse_abs, std::numeric_limits<double>::min());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& p = panels[i];
        total += detail::simpson_recurse(f, p.a, p.b, p.fa, p.fm, p.fb, p.whole, eps / n,
                                         max_depth, acc);
    }
    if (!std::isfinite(total)) throw NumericFailure("non-finite quadrature result");
    acc.value = total;
    return acc;
}

/// Least-squares polynomial c0 + c1 x + ... + c_deg x^deg through (x, y), by
/// the normal equations with partial pivoting. Optional per-point weights
/// (1/sigma^2 for heteroscedastic data). Throws FitError when singular.
inline std::vector<double> polyfit(std::span<const double> x, std::span<const double> y, int deg,
                                   std::span<const double> weights = {}) {
    const int m = deg + 1;
    const int w = m + 1;
    std::vector<double> a(static_cast<std::size_t>(m * w), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        std::vector<double> pw(2 * m, 1.0);
        pw[0] = weights.empty() ? 1.0 : weights[k];
        for (int i = 1; i < 2 * m; ++i) pw[i] = pw[i - 1] * x[k];
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) a[i * w + j] += pw[i + j];
            a[i * w + m] += pw[i] * y[k];
        }
    }
    for (int c = 0; c < m; ++c) {
        int piv = c;
        for (int i = c + 1; i < m; ++i)
            if (std::abs(a[i * w + c]) > std::abs(a[piv * w + c])) piv = i;
        if (a[piv * w + c] == 0.0) throw FitError("singular least-squares system");
        for (int j = 0; j < w; ++j) std::swap(a[c * w + j], a[piv * w + j]);
        for (int i = 0; i < m; ++i) {
            if (i == c) continue;
            const double f = a[i * w + c] / a[c * w + c];
            for (int j = c; j < w; ++j) a[i * w + j] -= f * a[c * w + j];
        }
    }
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[i] = a[i * w + m] / a[i * w + i];
    return out;
}

}  // namespace tubelab::numeric
