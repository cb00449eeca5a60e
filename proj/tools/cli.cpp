#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "tubelab/analysis.hpp"
#include "tubelab/errors.hpp"
#include "tubelab/estimators.hpp"
#include "tubelab/polytope.hpp"
#include "tubelab/profiles.hpp"
#include "tubelab/random.hpp"
#include "tubelab/scene.hpp"

namespace tubelab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A hypothesis or acceptance property did not hold.
struct PropertyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProfileArgs {
    std::vector<int> power;
    std::string epsilon;
    double exponent = 1.5;
    std::optional<double> scale;
    std::optional<double> beta;
    std::string json_file;

    void attach(CLI::App* app) {
        app->add_option("--power", power, "psi = t^p, phi = t^q")->expected(2);
        app->add_option("--epsilon", epsilon, "decay function: log, power, sqrt, zero");
        app->add_option("--exp", exponent, "exponent of the decay function");
        app->add_option("--scale", scale, "scale of the decay function");
        app->add_option("--beta", beta, "splice point of the decay profile");
        app->add_option("--profile", json_file, "profile JSON file");
    }

    EpsilonDriver driver() const {
        EpsilonDriver d;
        if (epsilon == "log") d = log_driver(exponent);
        else if (epsilon == "power") d = power_driver(exponent);
        else if (epsilon == "sqrt") d = sqrt_driver();
        else if (epsilon == "zero") d = zero_driver();
        else throw PreconditionError("unknown epsilon driver '" + epsilon + "'");
        if (scale || beta) d = driver_by_name(epsilon, exponent, scale.value_or(d.scale), beta.value_or(d.beta));
        return d;
    }

    Profile resolve() const {
        const int given = (power.empty() ? 0 : 1) + (epsilon.empty() ? 0 : 1) + (json_file.empty() ? 0 : 1);
        if (given > 1) throw PreconditionError("give exactly one of --power, --epsilon, --profile");
        if (!json_file.empty()) return Profile::from_json(json::parse(read_text(json_file)));
        if (!epsilon.empty()) return profile_from_epsilon(driver());
        if (power.empty()) return Profile::power(PowerProfile::make(2, 6));
        return Profile::power(PowerProfile::make(power[0], power[1]));
    }

    json to_json() const {
        json j;
        if (!power.empty()) j["power"] = power;
        if (!epsilon.empty()) {
            j["epsilon"] = epsilon;
            j["exp"] = exponent;
            if (scale) j["scale"] = *scale;
            if (beta) j["beta"] = *beta;
        }
        if (!json_file.empty()) j["profile_file"] = json_file;
        if (j.empty()) j["power"] = {2, 6};
        return j;
    }
};

struct McArgs {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t strata = 0;  // 0: largest divisor of samples up to 64
    int threads = 0;

    void attach(CLI::App* app, std::uint64_t default_samples = 1'000'000) {
        samples = default_samples;
        app->add_option("--samples,-n", samples, "Monte Carlo samples per estimate");
        app->add_option("--seed", seed, "random seed");
        app->add_option("--strata", strata, "number of strata (must divide --samples; default: largest divisor up to 64)");
        app->add_option("--threads", threads, "worker threads (0: TUBELAB_THREADS or all cores)");
    }

    McConfig config() const {
        McConfig c;
        c.n_samples = samples;
        c.seed = seed;
        c.strata = strata;
        if (c.strata == 0) {
            c.strata = 64;
            while (c.strata > 1 && samples % c.strata != 0) --c.strata;
        }
        c.threads = threads;
        c.validate();
        return c;
    }
};

struct GridArgs {
    double from = 1e-3;
    double to = 3e-2;
    int points = 6;
    std::vector<double> list;

    void attach(CLI::App* app, const char* list_flag = "--r") {
        app->add_option("--r-from", from, "smallest radius");
        app->add_option("--r-to", to, "largest radius");
        app->add_option("--points", points, "number of geometric grid points");
        app->add_option(list_flag, list, "explicit radii (overrides the geometric grid)");
    }
    std::vector<double> grid() const { return list.empty() ? geometric_grid(from, to, points) : list; }
};

std::string with_manifest_line(const std::string& csv, const RunManifest& m) {
    return "# manifest " + m.hash() + '\n' + csv;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- validate

int cmd_validate(const ProfileArgs& pa, int grid, std::ostream& out) {
    json report;
    bool pass = true;
    try {
        if (!pa.epsilon.empty()) {
            const auto d = pa.driver();
            const auto dr = validate_driver(d, grid);
            report["driver"] = dr.to_json();
            pass = dr.pass();
            if (pass) {
                const auto pr = validate_profile(profile_from_epsilon(d), grid);
                report["profile"] = pr.to_json();
                pass = pr.pass();
            }
        } else {
            const auto pr = validate_profile(pa.resolve(), grid);
            report["profile"] = pr.to_json();
            pass = pr.pass();
        }
    } catch (const PreconditionError& e) {
        if (pa.power.empty()) throw;
        report["error"] = e.what();
        pass = false;
    } catch (const ConstructionError& e) {
        report["error"] = e.what();
        pass = false;
    }
    report["pass"] = pass;
    emit(out, report);
    return pass ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------- build

int cmd_build(const ProfileArgs& pa, double delta, const std::string& out_dir, std::ostream& out) {
    const auto profile = pa.resolve();
    RunManifest m("build", {{"profile", pa.to_json()}, {"delta", delta}});
    const auto pair = build_counterexample(profile, delta);
    auto scene = pair.to_json();
    scene["manifest"] = m.hash();
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        write_text(dir / "scene.json", scene.dump(2) + '\n');
        write_text(dir / "M.off", pair.M().to_off());
        write_text(dir / "M_prime.off", pair.M_prime().to_off());
        for (const char* f : {"scene.json", "M.off", "M_prime.off"}) m.add_output(dir / f);
        m.write(dir / "manifest.json");
    }
    emit(out, scene);
    return kExitOk;
}

// ---------------------------------------------------------------- scan

int cmd_scan(const ProfileArgs& pa, const GridArgs& ga, const McArgs& ma, double delta, const std::string& route_name,
             const std::string& out_dir, std::ostream& out) {
    const auto cfg = ma.config();
    const auto route = excess_route_from_string(route_name);
    const auto grid = ga.grid();
    const auto profile = pa.resolve();
    RunManifest m("scan", {{"profile", pa.to_json()},
                           {"delta", delta},
                           {"route", route_name},
                           {"grid", grid},
                           {"mc", cfg.to_json()}});
    const auto pair = build_counterexample(profile, delta);
    const auto series = excess_scan(pair, grid, cfg, route);

    json bounds = json::array();
    const double alpha = pair.alpha();
    for (const auto& e : series.entries) {
        try {
            bounds.push_back(theoretical_bounds(profile, e.r, alpha).to_json());
        } catch (const DomainError& ex) {
            bounds.push_back({{"r", e.r}, {"error", ex.what()}});
        }
    }
    json summary{{"manifest", m.hash()}, {"series", series.to_json()}, {"bounds", bounds}};
    try {
        summary["fit"] = fit_exponent(series).to_json();
    } catch (const FitError& ex) {
        summary["fit"] = {{"error", ex.what()}};
    }
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        write_text(dir / "series.csv", with_manifest_line(series.to_csv(), m));
        write_text(dir / "bounds.json", summary.dump(2) + '\n');
        m.add_output(dir / "series.csv");
        m.add_output(dir / "bounds.json");
        if (profile.kind() == ProfileKind::power) {
            write_text(dir / "plot.csv", with_manifest_line(plot_data_csv(series, profile), m));
            m.add_output(dir / "plot.csv");
        }
        m.write(dir / "manifest.json");
    }
    out << series.to_csv();
    return kExitOk;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const std::string& file, const std::vector<double>& window, std::optional<double> expect, double tol,
            std::ostream& out) {
    const auto series = ExcessSeries::from_csv(read_text(file));
    FitWindow w;
    if (window.size() == 2) w = {window[0], window[1]};
    ExponentFit f;
    try {
        f = fit_exponent(series, w);
    } catch (const FitError& e) {
        throw PropertyFailure(e.what());
    }
    json j = f.to_json();
    j["input"] = file;
    bool pass = true;
    if (expect) {
        pass = std::abs(f.slope - *expect) <= tol;
        j["expected"] = *expect;
        j["tolerance"] = tol;
        j["pass"] = pass;
    }
    out << "slope " << format_double(f.slope) << '\n';
    emit(out, j);
    return pass ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------- bounds

int cmd_bounds(const ProfileArgs& pa, const GridArgs& ga, const std::string& series_file, std::ostream& out) {
    const auto profile = pa.resolve();
    const double alpha = compute_alpha(profile);
    if (!series_file.empty()) {
        const auto series = ExcessSeries::from_csv(read_text(series_file));
        const auto verdict = sandwich_check(series, profile);
        emit(out, verdict.to_json());
        return verdict.pass ? kExitOk : kExitProperty;
    }
    json rows = json::array();
    for (double r : ga.grid()) {
        json row;
        try {
            row = theoretical_bounds(profile, r, alpha).to_json();
        } catch (const DomainError& e) {
            row = {{"r", r}, {"error", e.what()}};
        }
        if (profile.driver()) row["epsilon"] = epsilon_bounds(profile, r, alpha).to_json();
        rows.push_back(row);
    }
    emit(out, {{"profile", profile.to_json()},
               {"alpha", alpha},
               {"alpha_normal", compute_alpha_normal(profile)},
               {"bounds", rows}});
    return kExitOk;
}

// ---------------------------------------------------------------- steiner

ConvexPolytope3 steiner_body(const std::string& body, const std::string& off_file, std::uint64_t seed) {
    if (!off_file.empty()) {
        std::ifstream in(off_file);
        if (!in) throw IoError("cannot read " + off_file);
        return ConvexPolytope3::read_off(in);
    }
    std::vector<Point3> pts;
    if (body == "cube") {
        for (int i = 0; i < 8; ++i) pts.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
    } else if (body == "tetra") {
        pts = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    } else if (body == "point") {
        pts = {{0, 0, 0}};
    } else if (body == "random") {
        RandomStream rng(seed, 0);
        for (int i = 0; i < 20; ++i) pts.push_back(0.5 * rng.unit_vector() * (0.5 + 0.5 * rng.uniform()));
    } else {
        throw PreconditionError("unknown body '" + body + "'");
    }
    return ConvexPolytope3::hull(pts);
}

int cmd_steiner(const std::string& body, const std::string& off_file, const std::vector<double>& radii,
                const McArgs& ma, bool check, std::ostream& out) {
    const auto poly = steiner_body(body, off_file, ma.seed);
    const auto s = steiner_3d(poly);
    json j{{"coefficients", s.to_json()}};
    json rows = json::array();
    bool pass = true;
    const auto cfg = ma.config();
    for (double r : radii) {
        json row{{"r", r}, {"steiner", s.volume_at(r)}};
        if (check) {
            const auto b = poly.bounds();
            const auto est = mc_volume([&](const Point3& x) { return within_distance(poly, x, r); },
                                       Box(b[0], b[1]).inflated(r), cfg);
            const bool ok = std::abs(est.value - s.volume_at(r)) <= 3.0 * est.std_error;
            row["mc"] = est.to_json();
            row["pass"] = ok;
            pass = pass && ok;
        }
        rows.push_back(row);
    }
    j["volumes"] = rows;
    if (check) j["pass"] = pass;
    emit(out, j);
    return pass ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------- disks2d

int cmd_disks2d(const std::vector<double>& radii, const McArgs& ma, bool mc, bool expansion, std::ostream& out) {
    bool pass = true;
    json rows = json::array();
    for (double r : radii) {
        out << format_double(disk_union_area(r)) << '\n';
        json row{{"r", r}, {"area", disk_union_area(r)}};
        if (mc) {
            const auto est = mc_area([&](double x, double y) { return DiskUnion2D::in_tube(x, y, r); },
                                     Box2(-2.0 - r, -1.0 - r, 2.0 + r, 1.0 + r), ma.config());
            const bool ok = std::abs(est.value - disk_union_area(r)) <= 3.0 * est.std_error;
            row["mc"] = est.to_json();
            row["pass"] = ok;
            pass = pass && ok;
        }
        rows.push_back(row);
    }
    json j{{"areas", rows}};
    if (expansion) {
        const auto g = geometric_grid(1e-4, 1e-2, 9);
        const double c = disk_union_expansion_coefficient(g);
        const double ref = -8.0 * std::sqrt(2.0) / 3.0;
        const bool ok = std::abs(c / ref - 1.0) <= 0.01;
        j["expansion"] = {{"coefficient", c}, {"reference", ref}, {"pass", ok}};
        pass = pass && ok;
    }
    if (mc || expansion) emit(out, j);
    return pass ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------- tangency

int cmd_tangency(const ProfileArgs& pa, int points, int dirs, std::uint64_t seed, double delta, double plane_fraction,
                 const std::string& out_dir, std::ostream& out) {
    const auto profile = pa.resolve();
    RunManifest m("tangency", {{"profile", pa.to_json()},
                               {"points", points},
                               {"dirs", dirs},
                               {"seed", seed},
                               {"delta", delta},
                               {"plane_fraction", plane_fraction}});
    const auto extra = tangency_parameters(points);
    const auto pair = build_counterexample(profile, delta, extra);
    const auto rep = tangency_report(pair, points, dirs, seed, {}, plane_fraction);
    auto j = rep.to_json();
    j["manifest"] = m.hash();
    if (!out_dir.empty()) {
        write_text(fs::path(out_dir) / "tangency.json", j.dump(2) + '\n');
        m.add_output(fs::path(out_dir) / "tangency.json");
        m.write(fs::path(out_dir) / "manifest.json");
    }
    j.erase("points");
    emit(out, j);
    return rep.pass() ? kExitOk : kExitProperty;
}

// ---------------------------------------------------------------- content

int cmd_content(const std::string& set, const ProfileArgs& pa, std::vector<double> eps, const McArgs& ma,
                std::ostream& out) {
    if (eps.empty()) eps = {0.08, 0.04, 0.02, 0.01};
    DistanceToSet dist;
    std::optional<Box> bounds;
    int p_dim = 1;
    std::optional<double> reference;
    if (set == "segment") {
        dist = [](const Point3& x) { return std::hypot(x.x1 - std::clamp(x.x1, 0.0, 1.0), x.x2, x.x3); };
        bounds = Box({0.0, -1e-9, -1e-9}, {1.0, 1e-9, 1e-9});
        reference = 1.0;
    } else if (set == "cube-boundary") {
        dist = [](const Point3& x) {
            double outside = 0.0;
            double inside = std::numeric_limits<double>::infinity();
            for (int i = 0; i < 3; ++i) {
                const double d = std::max(-x[i], x[i] - 1.0);
                if (d > 0.0) outside += d * d;
                inside = std::min({inside, x[i], 1.0 - x[i]});
            }
            return outside > 0.0 ? std::sqrt(outside) : std::max(0.0, inside);
        };
        bounds = Box({0, 0, 0}, {1, 1, 1});
        p_dim = 2;
        reference = 6.0;
    } else if (set == "psi-curve") {
        const auto profile = std::make_shared<Profile>(pa.resolve());
        dist = [profile](const Point3& x) { return distance_to_psi_curve(*profile, x); };
        bounds = Box({0.0, -1e-9, -1.0}, {1.0, 1e-9, 0.0});
        reference = psi_curve_length(*profile);
    } else {
        throw PreconditionError("unknown set '" + set + "'");
    }
    const auto mcnt = minkowski_content(dist, *bounds, p_dim, eps, ma.config());
    json j = mcnt.to_json();
    j["set"] = set;
    j["p"] = p_dim;
    if (reference) j["reference"] = *reference;
    emit(out, j);
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tubelab: tube volumes of unions of convex bodies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tubelab 0.1.0");

    ProfileArgs pa;
    McArgs ma;
    GridArgs ga;
    std::string out_dir;
    double delta = 1e-5;

    auto* validate = app.add_subcommand("validate", "check the profile hypotheses");
    pa.attach(validate);
    int grid_n = 1024;
    validate->add_option("--grid", grid_n, "uniform grid size");

    auto* build = app.add_subcommand("build", "build the counterexample pair");
    pa.attach(build);
    build->add_option("--delta", delta, "chord sagitta bound");
    build->add_option("--out", out_dir, "output directory");

    auto* scan = app.add_subcommand("scan", "excess E(r) over a radius grid");
    pa.attach(scan);
    ga.attach(scan);
    ma.attach(scan);
    std::string route = "via_A";
    scan->add_option("--delta", delta, "chord sagitta bound");
    scan->add_option("--route", route, "via_A or direct");
    scan->add_option("--out", out_dir, "output directory");

    auto* fit = app.add_subcommand("fit", "log-log exponent fit of a series CSV");
    std::string series_file;
    std::vector<double> window;
    std::optional<double> expect;
    double tol = 0.1;
    fit->add_option("series", series_file, "series CSV")->required();
    fit->add_option("--window", window, "r_min r_max")->expected(2);
    fit->add_option("--expect", expect, "expected slope");
    fit->add_option("--tol", tol, "tolerance on the slope");

    auto* bounds = app.add_subcommand("bounds", "theoretical bound envelopes, or a sandwich check");
    pa.attach(bounds);
    ga.attach(bounds);
    std::string sandwich_file;
    bounds->add_option("--series", sandwich_file, "series CSV to check against the bounds");

    auto* steiner = app.add_subcommand("steiner", "Steiner polynomial of a convex polytope");
    std::string body = "cube";
    std::string off_file;
    std::vector<double> steiner_r{0.05, 0.2, 0.5};
    bool steiner_check = false;
    steiner->add_option("--body", body, "cube, tetra, point or random");
    steiner->add_option("--off", off_file, "OFF mesh");
    steiner->add_option("--r", steiner_r, "radii");
    steiner->add_flag("--check", steiner_check, "compare with Monte Carlo");
    ma.attach(steiner);

    auto* disks = app.add_subcommand("disks2d", "two tangent unit disks");
    std::vector<double> disk_r{0.0};
    bool disk_mc = false;
    bool disk_expansion = false;
    disks->add_option("--r", disk_r, "radii");
    disks->add_flag("--mc", disk_mc, "compare with Monte Carlo");
    disks->add_flag("--expansion", disk_expansion, "fit the r^(3/2) coefficient");
    ma.attach(disks);

    auto* tangency = app.add_subcommand("tangency", "tangent-cone evidence along the contact curve");
    pa.attach(tangency);
    int points = 50;
    int dirs = 64;
    std::uint64_t tseed = 7;
    double tdelta = 1e-6;
    double plane_fraction = 0.0;
    tangency->add_option("--points", points, "contact points");
    tangency->add_option("--dirs", dirs, "directions per point");
    tangency->add_option("--seed", tseed, "random seed");
    tangency->add_option("--delta", tdelta, "chord sagitta bound");
    tangency->add_option("--plane-fraction", plane_fraction, "share of in-plane directions");
    tangency->add_option("--out", out_dir, "output directory");

    auto* content = app.add_subcommand("content", "Minkowski content estimate");
    std::string set = "segment";
    std::vector<double> eps;
    content->add_option("--set", set, "segment, cube-boundary or psi-curve");
    content->add_option("--eps", eps, "decreasing radii");
    pa.attach(content);
    ma.attach(content);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o;
        std::ostringstream er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(pa, grid_n, out);
        if (build->parsed()) return cmd_build(pa, delta, out_dir, out);
        if (scan->parsed()) return cmd_scan(pa, ga, ma, delta, route, out_dir, out);
        if (fit->parsed()) return cmd_fit(series_file, window, expect, tol, out);
        if (bounds->parsed()) return cmd_bounds(pa, ga, sandwich_file, out);
        if (steiner->parsed()) return cmd_steiner(body, off_file, steiner_r, ma, steiner_check, out);
        if (disks->parsed()) return cmd_disks2d(disk_r, ma, disk_mc, disk_expansion, out);
        if (tangency->parsed()) return cmd_tangency(pa, points, dirs, tseed, tdelta, plane_fraction, out_dir, out);
        if (content->parsed()) return cmd_content(set, pa, eps, ma, out);
    } catch (const PropertyFailure& e) {
        err << "tubelab: " << e.what() << '\n';
        return kExitProperty;
    } catch (const std::exception& e) {
        err << "tubelab: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace tubelab::cli
