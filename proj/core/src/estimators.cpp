#include "tubelab/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <thread>
#include <vector>

#include "tubelab/errors.hpp"
#include "tubelab/numeric.hpp"
#include "tubelab/random.hpp"

namespace tubelab {

Box::Box(const Point3& lo_, const Point3& hi_) : lo(lo_), hi(hi_) {
    if (!is_finite(lo) || !is_finite(hi)) throw DomainError("non-finite box corner");
    if (!(lo.x1 < hi.x1 && lo.x2 < hi.x2 && lo.x3 < hi.x3)) throw DomainError("box has zero volume");
}

double Box::volume() const { return (hi.x1 - lo.x1) * (hi.x2 - lo.x2) * (hi.x3 - lo.x3); }

Box Box::inflated(double r) const {
    const Vec3 d{r, r, r};
    return Box(lo - d, hi + d);
}

Box2::Box2(double x0, double y0, double x1, double y1) : lo{x0, y0}, hi{x1, y1} {
    if (!(x0 < x1 && y0 < y1)) throw DomainError("box has zero area");
}

double Box2::area() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]); }

void McConfig::validate() const {
    if (n_samples < kMinSamples) {
        throw PreconditionError("n_samples must be at least " + std::to_string(kMinSamples));
    }
    if (strata == 0 || n_samples % strata != 0) throw PreconditionError("strata must divide n_samples");
    if (threads < 0) throw PreconditionError("threads must be non-negative");
}

nlohmann::json McConfig::to_json() const {
    return {{"n_samples", n_samples}, {"seed", seed}, {"strata", strata}};
}

int resolve_threads(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("TUBELAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0 && (requested <= 0 || cap < n)) n = requested > 0 ? std::min(n, cap) : cap;
    }
    return std::max(1, n);
}

nlohmann::json VolumeEstimate::to_json() const {
    return {{"value", value},          {"std_error", std_error}, {"n_samples", n_samples},
            {"seed", seed},            {"box_volume", box_volume}, {"hits", hits}};
}

namespace {

// Runs count_stratum(s) for every stratum on a small pool and sums the hit
// counts in stratum order.
template <class F>
std::uint64_t run_strata(const McConfig& cfg, F&& count_stratum) {
    const std::uint64_t S = cfg.strata;
    std::vector<std::uint64_t> hits(S, 0);
    const int nt = static_cast<int>(std::min<std::uint64_t>(S, resolve_threads(cfg.threads)));
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        try {
            for (std::uint64_t s; !failed && (s = next.fetch_add(1)) < S;) hits[s] = count_stratum(s);
        } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
        }
    };
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(nt);
        for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    return total;
}

VolumeEstimate make_estimate(std::uint64_t hits, const McConfig& cfg, double box_volume) {
    VolumeEstimate e;
    e.hits = hits;
    e.n_samples = cfg.n_samples;
    e.seed = cfg.seed;
    e.box_volume = box_volume;
    const double p = static_cast<double>(hits) / static_cast<double>(cfg.n_samples);
    e.value = box_volume * p;
    e.std_error = box_volume * std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.n_samples));
    return e;
}

}  // namespace

VolumeEstimate mc_volume(const Predicate3& inside, const Box& box, const McConfig& cfg) {
    cfg.validate();
    const std::uint64_t per = cfg.n_samples / cfg.strata;
    const double w = (box.hi.x1 - box.lo.x1) / static_cast<double>(cfg.strata);
    const auto hits = run_strata(cfg, [&](std::uint64_t s) {
        RandomStream rng(cfg.seed, s);
        const double a = box.lo.x1 + w * static_cast<double>(s);
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < per; ++i) {
            const double x1 = a + w * rng.uniform();
            const double x2 = rng.uniform(box.lo.x2, box.hi.x2);
            const double x3 = rng.uniform(box.lo.x3, box.hi.x3);
            h += inside({x1, x2, x3}) ? 1 : 0;
        }
        return h;
    });
    return make_estimate(hits, cfg, box.volume());
}

VolumeEstimate mc_area(const Predicate2& inside, const Box2& box, const McConfig& cfg) {
    cfg.validate();
    const std::uint64_t per = cfg.n_samples / cfg.strata;
    const double w = (box.hi[0] - box.lo[0]) / static_cast<double>(cfg.strata);
    const auto hits = run_strata(cfg, [&](std::uint64_t s) {
        RandomStream rng(cfg.seed, s);
        const double a = box.lo[0] + w * static_cast<double>(s);
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < per; ++i) {
            const double x = a + w * rng.uniform();
            const double y = rng.uniform(box.lo[1], box.hi[1]);
            h += inside(x, y) ? 1 : 0;
        }
        return h;
    });
    return make_estimate(hits, cfg, box.area());
}

Box envelope_box() { return Box({0.0, -1.0, -1.0}, {1.0, 1.0, 0.0}); }

VolumeEstimate tube_volume_union(const CounterexamplePair& pair, double r, const McConfig& cfg) {
    if (!(r >= 0.0)) throw DomainError("tube radius must be non-negative");
    return mc_volume([&](const Point3& x) { return pair.in_union_tube(x, r); }, envelope_box().inflated(r), cfg);
}

VolumeEstimate tube_volume_M(const CounterexamplePair& pair, double r, const McConfig& cfg) {
    if (!(r >= 0.0)) throw DomainError("tube radius must be non-negative");
    const Box b({-r, -r, -1.0 - r}, {1.0 + r, 1.0 + r, r});
    return mc_volume([&](const Point3& x) { return pair.in_tube_M(x, r); }, b, cfg);
}

VolumeEstimate tube_volume_intersection(const CounterexamplePair& pair, double r, const McConfig& cfg) {
    if (!(r > 0.0)) throw DomainError("tube radius must be positive");
    const Box b({-r, -r, -1.0 - r}, {1.0 + r, r, r});
    return mc_volume([&](const Point3& x) { return pair.in_tube_M(x, r) && pair.in_tube_M_prime(x, r); }, b,
                     cfg);
}

Box A_half_box(const CounterexamplePair& pair, double r) {
    const double w = std::sqrt(pair.alpha()) * r;
    return Box({0.0, -w, -1.0 - r}, {1.0 + r, 0.0, r});
}

VolumeEstimate volume_A_half(const CounterexamplePair& pair, double r, const McConfig& cfg, int side) {
    if (!(r > 0.0 && r <= 0.2)) throw DomainError("volume_A needs 0 < r <= 0.2");
    if (side == 0) throw PreconditionError("side must be -1 or +1");
    const Box half = A_half_box(pair, r);
    if (side < 0) return mc_volume([&](const Point3& x) { return membership_A(pair, x, r); }, half, cfg);
    const Box up({half.lo.x1, 0.0, half.lo.x3}, {half.hi.x1, -half.lo.x2, half.hi.x3});
    return mc_volume([&](const Point3& x) { return membership_A(pair, x, r); }, up, cfg);
}

VolumeEstimate volume_A(const CounterexamplePair& pair, double r, const McConfig& cfg) {
    VolumeEstimate e = volume_A_half(pair, r, cfg, -1);
    e.value *= 2.0;
    e.std_error *= 2.0;
    e.box_volume *= 2.0;
    return e;
}

nlohmann::json SteinerCoeffs::to_json() const {
    return {{"c0", c0}, {"c1", c1}, {"c2", c2}, {"c3", c3}, {"dimension", dimension}, {"degenerate", degenerate}};
}

SteinerCoeffs steiner_3d(const ConvexPolytope3& body) {
    if (body.empty()) throw DomainError("Steiner coefficients of an empty body");
    SteinerCoeffs s;
    s.dimension = body.dimension();
    s.degenerate = body.degenerate();
    s.c0 = body.dimension() == 3 ? body.volume() : 0.0;
    s.c1 = body.surface_area();
    for (const auto& e : body.edges()) s.c2 += 0.5 * e.length * e.exterior_angle;
    s.c3 = 4.0 * std::numbers::pi / 3.0;
    return s;
}

double disk_union_area(double r) {
    if (!(r >= 0.0)) throw DomainError("radius must be non-negative");
    const double R = 1.0 + r;
    return 2.0 * R * R * (std::numbers::pi - std::acos(1.0 / R)) + 2.0 * std::sqrt(2.0 * r + r * r);
}

double disk_union_expansion_coefficient(std::span<const double> r_grid) {
    if (r_grid.size() < 3) throw PreconditionError("expansion fit needs at least 3 radii");
    std::vector<double> s;
    std::vector<double> g;
    for (double r : r_grid) {
        if (!(r > 0.0)) throw DomainError("expansion radii must be positive");
        s.push_back(std::sqrt(r));
        g.push_back((disk_union_area(r) - 2.0 * std::numbers::pi - 4.0 * std::numbers::pi * r) / (r * s.back()));
    }
    return numeric::polyfit(s, g, 2)[0];
}

double exact_A_check_volume(const Profile& profile, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("exact_A_check_volume needs 0 < r <= 1");
    return 0.5 * r * r * integral_I(profile, r);
}

double psi_curve_length(const Profile& profile) {
    auto f = [&](double t) {
        const double d = profile.psi1(t);
        return std::sqrt(1.0 + d * d);
    };
    return numeric::integrate(f, 0.0, 1.0, 1e-12, 64).value;
}

double curve_tube_volume(const Profile& profile, double r) {
    if (!(r >= 0.0 && r <= 0.1)) throw DomainError("curve_tube_volume needs 0 <= r <= 0.1");
    return std::numbers::pi * psi_curve_length(profile) * r * r + 4.0 * std::numbers::pi / 3.0 * r * r * r;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string estimate_csv_row(double r, const VolumeEstimate& e) {
    return format_double(r) + ',' + format_double(e.value) + ',' + format_double(e.std_error) + ',' +
           std::to_string(e.n_samples) + ',' + std::to_string(e.seed);
}

}  // namespace tubelab
