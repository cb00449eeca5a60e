#include <doctest.h>

#include <cmath>
#include <vector>

#include "tubelab/errors.hpp"
#include "tubelab/profiles.hpp"
#include "tubelab/random.hpp"

using namespace tubelab;

namespace {

// Closed forms for psi = t^p, phi = t^q, written out independently of the library.
double theta_slope(int p, int q) { return (q / (q - 1.0)) * ((p - 1.0) / p); }

double kappa(int p, int q) {
    return double(p * p) / (q * q) * std::pow((q - 1.0) / q * p / (p - 1.0), 2 * q - 2);
}

double alpha_closed(int p, int q) {
    return 1.0 + 2.0 * double(q * q) / (p * p) * std::pow(theta_slope(p, q), 2 * q - 2);
}

double c_pq(int p, int q) {
    return 2.0 * std::pow(kappa(p, q) + 2.0, (p + 1.0) / (2.0 * q)) * (1.0 / (q - p - 1.0) + 1.0 / (p + 1.0));
}

double I_closed(int p, int q, double r) { return (std::pow(r, (p + 1.0) / q - 1.0) - 1.0) / (q - p - 1.0); }

}  // namespace

TEST_CASE("power profile construction enforces q > p+1 >= 3") {
    CHECK_NOTHROW(PowerProfile::make(2, 6));
    CHECK_NOTHROW(PowerProfile::make(3, 5));
    CHECK_THROWS_AS(PowerProfile::make(2, 3), PreconditionError);
    CHECK_THROWS_AS(PowerProfile::make(1, 6), PreconditionError);
    CHECK_THROWS_AS(corollary_constants(2, 3), PreconditionError);

    const auto pr = Profile::power_law(2, 6);
    CHECK(pr.psi(0.0) == 0.0);
    CHECK(pr.phi(0.0) == 0.0);
    CHECK(pr.psi(1.0) == 1.0);
    CHECK(pr.phi(1.0) == 1.0);
}

TEST_CASE("corollary constants for (2,6)") {
    const auto k = corollary_constants(2, 6);
    CHECK(k.exponent == 1.5);
    CHECK(k.theta_slope == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(k.alpha_closed == doctest::Approx(1.0 + 18.0 * std::pow(0.6, 10)).epsilon(1e-14));
    CHECK(k.alpha_closed == doctest::Approx(1.10883912).epsilon(1e-8));
    CHECK(k.c_pq == doctest::Approx(c_pq(2, 6)).epsilon(1e-14));
    CHECK(std::abs(k.c_pq - 2.8328) < 1e-3);
    CHECK(std::abs(k.rho_coeff - 1.2856) < 1e-3);
    CHECK(k.rho_coeff == doctest::Approx(std::pow(kappa(2, 6) + 2.0, 1.0 / 12.0)).epsilon(1e-14));
    CHECK(k.upper_coeff == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("solve_theta matches the linear closed form") {
    const auto p26 = Profile::power_law(2, 6);
    CHECK(solve_theta(p26, 0.5) == doctest::Approx(0.3).epsilon(1e-11));
    CHECK(solve_theta(p26, 0.0) == 0.0);

    const auto p35 = Profile::power_law(3, 5);
    CHECK(std::abs(solve_theta(p35, 0.4) - 1.0 / 3.0) < 1e-11);

    RandomStream rng(11, 0);
    for (int i = 0; i < 100; ++i) {
        const double t = rng.uniform();
        const double th = solve_theta(p26, t);
        CHECK(std::abs(th - 0.6 * t) <= 1e-10);
    }
}

TEST_CASE("solve_theta satisfies its defining equation and stays in (0, t)") {
    for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 6}, {3, 8}, {2, 9}}) {
        const auto pr = Profile::power_law(p, q);
        RandomStream rng(5, p * 100 + q);
        for (int i = 0; i < 200; ++i) {
            const double t = 1e-3 + (1.0 - 1e-3) * rng.uniform();
            const double th = solve_theta(pr, t);
            CHECK(th > 0.0);
            CHECK(th < t);
            const double lhs = th - pr.phi(th) / pr.phi1(th);
            const double rhs = t - pr.psi(t) / pr.psi1(t);
            CHECK(std::abs(lhs - rhs) < 1e-11);
        }
    }
    const auto pr = Profile::power_law(2, 6);
    CHECK_THROWS_AS(solve_theta(pr, 0.5, 0.0), DomainError);
    CHECK_THROWS_AS(solve_theta(pr, 1.5), DomainError);
}

TEST_CASE("compute_alpha agrees with the closed formula") {
    for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 6}, {3, 5}, {3, 8}}) {
        CAPTURE(p);
        CAPTURE(q);
        const double a = compute_alpha(Profile::power_law(p, q));
        CHECK(a >= 1.0);
        CHECK(std::abs(a - alpha_closed(p, q)) < 1e-6);
    }
    // integrand tends to 1 at the origin
    CHECK(alpha_integrand(Profile::power_law(2, 6), 0.0) == doctest::Approx(1.0));
    CHECK(alpha_integrand(Profile::power_law(2, 6), 1e-6) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(compute_alpha(Profile::power_law(2, 6), 8), PreconditionError);
}

TEST_CASE("compute_alpha_normal uses psi' in place of psi") {
    for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 6}, {3, 5}, {3, 8}}) {
        CAPTURE(p);
        CAPTURE(q);
        const double k2 = double(q * q) / (p * p) * std::pow(theta_slope(p, q), 2 * q - 2);
        const double a = compute_alpha_normal(Profile::power_law(p, q));
        CHECK(std::abs(a - (1.0 + k2 * (1.0 + p * p))) < 1e-6);
        CHECK(a > compute_alpha(Profile::power_law(p, q)));
    }
    CHECK(compute_alpha_normal(Profile::power_law(2, 6)) == doctest::Approx(1.0 + 45.0 * std::pow(0.6, 10)));
    CHECK(alpha_normal_integrand(Profile::power_law(2, 6), 0.0) == 1.0);
}

TEST_CASE("integral_I closed form and quadrature") {
    const auto pr = Profile::power_law(2, 6);
    CHECK(integral_I(pr, 0.01) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(integral_I(pr, 1.0) == 0.0);
    for (double r : {1e-6, 1e-4, 3e-3, 0.02, 0.3, 0.9}) {
        CAPTURE(r);
        CHECK(integral_I(pr, r) == doctest::Approx(I_closed(2, 6, r)).epsilon(1e-13));
        CHECK(std::abs(integral_I_quadrature(pr, r) - integral_I(pr, r)) <= 1e-7 * integral_I(pr, r));
    }
    const auto p38 = Profile::power_law(3, 8);
    CHECK(integral_I(p38, 1e-3) == doctest::Approx(I_closed(3, 8, 1e-3)).epsilon(1e-13));

    double prev = integral_I(pr, 1e-8);
    for (int k = 1; k <= 40; ++k) {
        const double r = 1e-8 * std::pow(1e8, k / 40.0);
        const double v = integral_I(pr, r);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(integral_I(pr, 0.0), DomainError);
    CHECK_THROWS_AS(integral_I(pr, -1.0), DomainError);
    CHECK_THROWS_AS(integral_I(pr, 1.5), DomainError);
}

TEST_CASE("rho(r) for power profiles") {
    const auto pr = Profile::power_law(2, 6);
    const auto k = corollary_constants(2, 6);
    CHECK(rho_of_r(pr, 1e-3) == doctest::Approx(k.rho_coeff * std::pow(1e-3, 1.0 / 6.0)));
}

TEST_CASE("validate_profile on power laws") {
    const auto good = validate_profile(Profile::power_law(2, 6));
    CHECK(good.pass());
    for (const auto& c : good.checks) {
        CAPTURE(c.name);
        CHECK(c.pass);
    }
    // each hypothesis listed exactly once
    for (size_t i = 0; i < good.checks.size(); ++i)
        for (size_t j = i + 1; j < good.checks.size(); ++j) CHECK(good.checks[i].name != good.checks[j].name);

    const auto bad = validate_profile(Profile::power_law(2, 3));
    CHECK_FALSE(bad.pass());
    REQUIRE(bad.find("corollary: q > p+1 >= 3") != nullptr);
    CHECK_FALSE(bad.find("corollary: q > p+1 >= 3")->pass);

    CHECK_THROWS_AS(validate_profile(Profile::power_law(2, 6), 8), PreconditionError);
}

TEST_CASE("validate_profile flags phi/psi not tending to 0") {
    ProfileFunctions f;
    f.psi = [](double t) { return t * t; };
    f.psi1 = [](double t) { return 2 * t; };
    f.psi2 = [](double) { return 2.0; };
    f.phi = f.psi;
    f.phi1 = f.psi1;
    f.phi2 = f.psi2;
    const auto rep = validate_profile(Profile::from_functions(f, "t2-t2"));
    CHECK_FALSE(rep.pass());
    REQUIRE(rep.find("lim phi/psi = 0") != nullptr);
    CHECK_FALSE(rep.find("lim phi/psi = 0")->pass);
}

TEST_CASE("validate_profile reports non-finite values") {
    ProfileFunctions f;
    f.psi = [](double t) { return t * t; };
    f.psi1 = [](double t) { return 2 * t; };
    f.psi2 = [](double) { return 2.0; };
    f.phi = [](double t) { return t > 0.5 && t < 0.51 ? std::nan("") : std::pow(t, 6); };
    f.phi1 = [](double t) { return 6 * std::pow(t, 5); };
    f.phi2 = [](double t) { return 30 * std::pow(t, 4); };
    const auto rep = validate_profile(Profile::from_functions(f, "holey"));
    CHECK_FALSE(rep.pass());
    CHECK(rep.find("non-finite") != nullptr);
}

TEST_CASE("validate_profile catches inconsistent derivatives") {
    ProfileFunctions f;
    f.psi = [](double t) { return t * t; };
    f.psi1 = [](double t) { return 2 * t; };
    f.psi2 = [](double) { return 2.0; };
    f.phi = [](double t) { return std::pow(t, 6); };
    f.phi1 = [](double t) { return 5 * std::pow(t, 5); };  // wrong
    f.phi2 = [](double t) { return 30 * std::pow(t, 4); };
    CHECK_FALSE(validate_profile(Profile::from_functions(f, "bad-d1")).pass());
}

TEST_CASE("epsilon drivers") {
    CHECK(validate_driver(log_driver(1.5)).pass());
    CHECK_FALSE(validate_driver(zero_driver()).pass());
    CHECK_FALSE(validate_driver(sqrt_driver()).pass());
    CHECK_THROWS_AS(profile_from_epsilon(zero_driver()), PreconditionError);
    CHECK_THROWS_AS(profile_from_epsilon(sqrt_driver()), PreconditionError);

    // closed-form primitives: 2 kappa / |ln r|^0.5 and kappa r^a / a
    const auto d = log_driver(1.5);
    for (double r : {1e-6, 1e-3, 0.05}) {
        CAPTURE(r);
        CHECK(eps_over_t_integral(d, r) == doctest::Approx(2.0 * d.scale / std::sqrt(-std::log(r))).epsilon(1e-12));
    }
    // the log tail decays like u^-0.5, too slowly for the truncated quadrature
    CHECK_THROWS_AS(eps_over_t_integral_quadrature(d, 1e-3), DomainError);
    const auto pw = power_driver(0.3);
    CHECK(validate_driver(pw).pass());
    for (double r : {1e-6, 1e-3, 0.1}) {
        CAPTURE(r);
        CHECK(eps_over_t_integral_quadrature(pw, r) == doctest::Approx(pw.eps(r) / 0.3).epsilon(1e-8));
    }
}

TEST_CASE("profile built from the log decay function") {
    const auto d = log_driver(1.5);
    const auto pr = profile_from_epsilon(d);
    CHECK(pr.kind() == ProfileKind::epsilon);
    CHECK(validate_profile(pr).pass());

    // I'(r) = (eps/r)' below the splice, so I(r) - eps(r)/r is constant there
    // and I(r) r = eps(r) + O(r)
    const double k = integral_I(pr, 1e-3) - d.eps(1e-3) / 1e-3;
    for (double r : {1e-4, 1e-5, 1e-6, 1e-8}) {
        CAPTURE(r);
        CHECK(integral_I(pr, r) - d.eps(r) / r == doctest::Approx(k).epsilon(1e-6));
        CHECK(std::abs(integral_I(pr, r) * r - d.eps(r)) <= std::abs(k) * r * (1 + 1e-6));
    }
    // phi^{-1}(r) = (3 (int_0^r eps/t - eps(r)))^(1/3) below the splice
    const double r = 1e-3;
    const double expected = std::cbrt(3.0 * (eps_over_t_integral(d, r) - d.eps(r)));
    CHECK(pr.phi_inverse(r) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(pr.phi(pr.phi_inverse(r)) == doctest::Approx(r).epsilon(1e-9));
}

TEST_CASE("profile JSON round trip") {
    for (const auto& pr : {Profile::power_law(3, 8), profile_from_epsilon(log_driver(1.5))}) {
        const auto back = Profile::from_json(pr.to_json());
        CHECK(back.to_json() == pr.to_json());
        for (double t : {0.01, 0.3, 0.7, 0.95}) CHECK(back.phi(t) == doctest::Approx(pr.phi(t)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(Profile::from_json({{"kind", "nope"}}), PreconditionError);
}
