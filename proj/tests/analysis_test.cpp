#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tubelab/analysis.hpp"
#include "tubelab/errors.hpp"

using namespace tubelab;

namespace {

McConfig config(std::uint64_t n, std::uint64_t seed = 1) {
    McConfig c;
    c.n_samples = n;
    c.seed = seed;
    c.strata = 50;
    return c;
}

const CounterexamplePair& pair26() {
    static const auto p = build_counterexample(Profile::power_law(2, 6), 1e-5);
    return p;
}

ExcessSeries synthetic(const std::vector<double>& r, double (*f)(double), double se = 0.0) {
    ExcessSeries s;
    s.profile = "synthetic";
    for (double x : r) s.entries.push_back({x, f(x), se, ExcessRoute::via_A, 0, 0, false});
    return s;
}

}  // namespace

TEST_CASE("union boundary area") {
    const auto& pair = pair26();
    CHECK(pair.C().area() == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(surface_area_union(pair) ==
          doctest::Approx(pair.M().surface_area() + pair.M_prime().surface_area() - 2.0 / 6.0).epsilon(1e-12));
    const auto half = build_counterexample(pair.profile(), 5e-6);
    CHECK(std::abs(surface_area_union(half) - surface_area_union(pair)) <= 1e-3);
}

TEST_CASE("excess basics") {
    const auto& pair = pair26();
    const auto zero = excess(pair, 0.0, config(1000));
    CHECK(zero.value == 0.0);
    CHECK(zero.std_error == 0.0);
    CHECK_THROWS_AS(excess(pair, -1e-3, config(1000)), DomainError);
    CHECK_THROWS_AS(excess(pair, 0.2, config(1000)), DomainError);
    CHECK(excess_route_from_string("direct") == ExcessRoute::direct);
    CHECK(to_string(ExcessRoute::via_A) == "via_A");
    CHECK_THROWS(excess_route_from_string("sideways"));
}

TEST_CASE("excess at r = 0.01 lies in the power-law band") {
    const auto& pair = pair26();
    const double r = 0.01;
    const auto e = excess(pair, r, config(1'000'000, 3));
    const auto k = corollary_constants(2, 6);
    CHECK(e.value < -3 * e.std_error);
    CHECK(-e.value >= (2.0 / 3.0) * (std::pow(r, 1.5) - r * r) - 3 * e.std_error);
    CHECK(-e.value <= k.c_pq * std::pow(r, 1.5) + 3 * e.std_error);
}

TEST_CASE("direct and via_A routes differ by O(r^2)") {
    const auto& pair = pair26();
    std::vector<double> ratio, ratio_se;
    for (double r : {0.05, 0.02}) {
        const auto a = excess(pair, r, config(400'000, 5), ExcessRoute::via_A);
        const auto d = excess(pair, r, config(400'000, 6), ExcessRoute::direct);
        CHECK(d.route == ExcessRoute::direct);
        ratio.push_back((d.value - a.value) / (r * r));
        ratio_se.push_back(std::hypot(a.std_error, d.std_error) / (r * r));
    }
    // the same quadratic coefficient at both radii
    CHECK(std::abs(ratio[0] - ratio[1]) <= 3 * std::hypot(ratio_se[0], ratio_se[1]) + 0.05 * std::abs(ratio[0]));
}

TEST_CASE("excess scans") {
    const auto& pair = pair26();
    const std::vector<double> grid{1e-3, std::pow(10, -2.5), 1e-2, std::pow(10, -1.5)};
    const auto s = excess_scan(pair, grid, config(100'000, 7));
    REQUIRE(s.entries.size() == 4);
    for (const auto& e : s.entries) CHECK(e.value < 0.0);

    std::vector<double> rev(grid.rbegin(), grid.rend());
    const auto t = excess_scan(pair, rev, config(100'000, 7));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(t.entries[3 - i].r == s.entries[i].r);
        CHECK(t.entries[3 - i].value == s.entries[i].value);
        CHECK(t.entries[3 - i].seed == s.entries[i].seed);
    }
    CHECK(derive_seed(7, 1e-3) != derive_seed(7, 1e-2));
    CHECK(derive_seed(7, 1e-3) == derive_seed(7, 1e-3));

    CHECK_THROWS_AS(excess_scan(pair, std::vector<double>{}, config(1000)), PreconditionError);
    CHECK_THROWS_AS(excess_scan(pair, std::vector<double>{1e-3, 1e-3}, config(1000)), PreconditionError);

    // CSV round trip, comment lines skipped
    const auto back = ExcessSeries::from_csv("# manifest 0123456789abcdef\n" + s.to_csv());
    REQUIRE(back.entries.size() == s.entries.size());
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        CHECK(back.entries[i].r == s.entries[i].r);
        CHECK(back.entries[i].value == s.entries[i].value);
        CHECK(back.entries[i].std_error == s.entries[i].std_error);
        CHECK(back.entries[i].route == s.entries[i].route);
    }
    CHECK(s.to_csv().rfind(kSeriesCsvHeader, 0) == 0);
    CHECK(s.to_json().at("entries").size() == 4);
}

TEST_CASE("geometric grids") {
    const auto g = geometric_grid(1e-3, 3e-2, 6);
    REQUIRE(g.size() == 6);
    CHECK(g.front() == doctest::Approx(1e-3));
    CHECK(g.back() == doctest::Approx(3e-2));
    for (std::size_t i = 2; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
}

TEST_CASE("exponent fits on synthetic series") {
    const auto grid = geometric_grid(1e-4, 1e-1, 12);
    const auto exact = synthetic(grid, [](double r) { return -r * r; });
    const auto f = fit_exponent(exact);
    CHECK(std::abs(f.slope - 2.0) <= 1e-12);
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.points == 12);

    auto mix = [](double r) { return -(2.0 / 3.0) * std::pow(r, 1.5) - 0.1 * r * r; };
    const auto mixed = synthetic(grid, mix);
    double prev = 2.0;
    for (double hi : {1e-1, 1e-2, 1e-3}) {
        const auto w = fit_exponent(mixed, {1e-4, hi});
        CAPTURE(hi);
        CHECK(w.slope > 1.5);
        CHECK(w.slope < 2.0);
        CHECK(w.slope < prev);
        prev = w.slope;
    }

    // noise-dominated points drop out; too few survivors is an error
    auto noisy = synthetic(grid, [](double r) { return -r * r; });
    for (std::size_t i = 0; i < 9; ++i) noisy.entries[i].std_error = 1.0;
    CHECK_THROWS_AS(fit_exponent(noisy), FitError);
    noisy.entries[0].std_error = 0.0;
    const auto g = fit_exponent(noisy);
    CHECK(g.points == 4);
    CHECK(g.excluded == 8);
    CHECK_THROWS_AS(fit_exponent(exact, {0.5, 1.0}), FitError);
}

TEST_CASE("fit on the upper envelope recovers 1 + (p+1)/q") {
    for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 6}, {3, 8}, {2, 9}}) {
        const auto pr = Profile::power_law(p, q);
        std::vector<double> r = geometric_grid(1e-6, 1e-4, 10), v;
        for (double x : r) v.push_back(-2 * x * x * integral_I(pr, x));
        CHECK(std::abs(fit_power_law(r, v).slope - (1.0 + (p + 1.0) / q)) <= 0.02);
    }
}

TEST_CASE("bound envelope for (2,6)") {
    const auto pr = Profile::power_law(2, 6);
    const auto k = corollary_constants(2, 6);
    const double r = 1e-3;
    const auto b = theoretical_bounds(pr, r);
    CHECK(b.upper == doctest::Approx(-(2.0 / 3.0) * (std::pow(r, 1.5) - r * r)).epsilon(1e-12));
    CHECK(std::abs(b.upper + 2.0415e-5) < 1e-8);
    CHECK(b.upper_corrected == doctest::Approx(b.upper / 2));
    // c(2,6) r^1.5 up to the O(r^2) terms
    CHECK(std::abs(b.lower + k.c_pq * std::pow(r, 1.5)) <= 5 * r * r);
    CHECK(b.alpha == doctest::Approx(k.alpha_closed).epsilon(1e-9));
    CHECK(b.rho_r == doctest::Approx(k.rho_coeff * std::pow(r, 1.0 / 6.0)));
    REQUIRE(b.exponent.has_value());
    CHECK(*b.exponent == 1.5);
    CHECK(*b.corollary_lower_coeff == doctest::Approx(-k.c_pq));
    CHECK(*b.corollary_upper_coeff == doctest::Approx(-2.0 / 3.0));
    CHECK(*b.theorem_lower_coeff == doctest::Approx(-16.0 / 3.0));
    CHECK(*b.theorem_upper_coeff == doctest::Approx(-1.0 / 3.0));
    CHECK_FALSE(b.epsilon_lambda.has_value());

    // lower <= upper wherever rho(r) <= 1
    const double r_edge = std::pow(k.rho_coeff, -6.0);
    for (double x : geometric_grid(1e-8, 0.999 * r_edge, 40)) {
        const auto bx = theoretical_bounds(pr, x);
        CHECK(bx.lower <= bx.upper);
    }
    // at rho(r) = 1 only the 2 r int_0^1 psi term is left
    const auto edge = theoretical_bounds(pr, r_edge * (1 - 1e-12));
    CHECK(edge.lower == doctest::Approx(-2.0 * edge.r / 3.0).epsilon(1e-6));
    CHECK_THROWS_AS(theoretical_bounds(pr, r_edge * 1.01), DomainError);
    CHECK_THROWS_AS(theoretical_bounds(pr, 0.0), DomainError);
}

TEST_CASE("bound envelope for the log decay profile") {
    const auto d = log_driver(1.5);
    const auto pr = profile_from_epsilon(d);
    const double alpha = compute_alpha(pr);
    CHECK_THROWS_AS(theoretical_bounds(pr, 1e-3, alpha), DomainError);
    const double r = 1e-3;
    const auto e = epsilon_bounds(pr, r, alpha);
    CHECK(e.lambda == doctest::Approx(16 - 4 * alpha));
    CHECK(e.upper == doctest::Approx(-2 * r * d.eps(r)));
    CHECK(e.lower == doctest::Approx(-16 * r * eps_over_t_integral(d, r) + e.lambda * r * d.eps(r)));
    CHECK(e.lower < e.upper);
    CHECK_THROWS_AS(epsilon_bounds(Profile::power_law(2, 6), r, 1.1), PreconditionError);
}

TEST_CASE("sandwich check") {
    const auto pr = Profile::power_law(2, 6);
    const auto grid = geometric_grid(1e-3, 3e-2, 6);

    // a series halfway between the bounds passes
    ExcessSeries mid;
    for (double r : grid) {
        const auto b = theoretical_bounds(pr, r);
        mid.entries.push_back({r, 0.5 * (b.lower + b.upper), 1e-9, ExcessRoute::via_A, 0, 0, false});
    }
    const auto ok = sandwich_check(mid, pr);
    CHECK(ok.pass);
    CHECK(ok.upper_slack == 0.0);
    CHECK(ok.lower_slack == 0.0);

    // E == 0 breaks the strictly negative upper bound
    ExcessSeries zero;
    for (double r : grid) zero.entries.push_back({r, 0.0, 0.0, ExcessRoute::via_A, 0, 0, false});
    const auto bad = sandwich_check(zero, pr);
    CHECK_FALSE(bad.pass);
    REQUIRE_FALSE(bad.violations.empty());
    CHECK(bad.violations.front().side == "upper");
    CHECK(bad.to_json().at("pass") == false);

    // a measured scan
    const auto s = excess_scan(pair26(), geometric_grid(1e-3, 3e-2, 4), config(200'000, 17));
    CHECK(sandwich_check(s, pr).pass);
    const auto plot = plot_data_csv(s, pr);
    CHECK(plot.rfind("r,E,se,lower,upper\n", 0) == 0);
    CHECK(std::count(plot.begin(), plot.end(), '\n') == 5);
}

TEST_CASE("o(r) for convex pairs with thin intersections") {
    const auto grid = geometric_grid(0.1, 1e-3, 5);
    for (int dim : {2, 1, 0}) {
        for (std::uint64_t seed : {1u, 2u}) {
            const auto cp = random_contact_pair(seed, dim);
            CHECK(cp.contact_dimension == dim);
            if (dim < 2) CHECK(cp.contact_area == 0.0);
            if (dim == 2) CHECK(cp.contact_area > 0.0);
            std::vector<ExcessValue> v;
            for (double r : grid) v.push_back(contact_pair_excess(cp, r, config(100'000, seed)));
            const auto chk = little_o_check(v);
            CAPTURE(dim);
            CAPTURE(seed);
            CHECK(chk.pass);
            if (chk.fit) CHECK(chk.fit->slope >= 1.9);
        }
    }
    CHECK_THROWS_AS(random_contact_pair(1, 3), PreconditionError);
}

TEST_CASE("o(r) for the counterexample") {
    const auto grid = geometric_grid(0.1, 1e-3, 5);
    std::vector<ExcessValue> v;
    for (double r : grid) v.push_back(excess(pair26(), r, config(200'000, derive_seed(3, r))));
    const auto chk = little_o_check(v);
    CHECK(chk.pass);
    for (std::size_t i = 1; i < chk.ratio.size(); ++i) CHECK(chk.ratio[i] < chk.ratio[i - 1]);
}

TEST_CASE("Minkowski content") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
    const std::vector<double> eps{0.08, 0.04, 0.02, 0.01};
    const auto cfg = config(1'000'000, 2);

    const DistanceToSet segment = [](const Point3& x) {
        return std::hypot(x.x1 - std::clamp(x.x1, 0.0, 1.0), x.x2, x.x3);
    };
    const auto seg = minkowski_content(segment, Box({0, -1e-9, -1e-9}, {1, 1e-9, 1e-9}), 1, eps, cfg);
    CHECK(seg.value == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(seg.non_rectifiable);

    const DistanceToSet cube_boundary = [](const Point3& x) {
        double out = 0.0, in = 1.0;
        for (int i = 0; i < 3; ++i) {
            const double d = std::max(-x[i], x[i] - 1.0);
            if (d > 0) out += d * d;
            in = std::min({in, x[i], 1.0 - x[i]});
        }
        return out > 0 ? std::sqrt(out) : in;
    };
    const auto cb = minkowski_content(cube_boundary, Box({0, 0, 0}, {1, 1, 1}), 2, eps, cfg);
    CHECK(cb.value == doctest::Approx(6.0).epsilon(0.02));

    const auto pr = Profile::power_law(2, 6);
    const DistanceToSet curve = [&](const Point3& x) { return distance_to_psi_curve(pr, x); };
    const auto cc = minkowski_content(curve, Box({0, -1e-9, -1}, {1, 1e-9, 0}), 1, eps, cfg);
    CHECK(cc.value == doctest::Approx((2 * std::sqrt(5.0) + std::asinh(2.0)) / 4).epsilon(0.02));

    // a surface measured as if it were a curve: the ratio blows up like 1/eps
    const auto wrong = minkowski_content(cube_boundary, Box({0, 0, 0}, {1, 1, 1}), 1, eps, config(100'000));
    CHECK(wrong.non_rectifiable);

    CHECK_THROWS_AS(minkowski_content(segment, Box({0, 0, 0}, {1, 1, 1}), 1, std::vector<double>{0.1, 0.2, 0.05}, cfg),
                    PreconditionError);
    CHECK_THROWS_AS(minkowski_content(segment, Box({0, 0, 0}, {1, 1, 1}), 1, std::vector<double>{0.1, 0.05}, cfg),
                    PreconditionError);
}
