#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace tubelab::cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "tubelab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tubelab_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors") {
    CHECK(invoke({}).code == kExitUsage);
    CHECK(invoke({"frobnicate"}).code == kExitUsage);
    CHECK(invoke({"--help"}).code == kExitOk);
    CHECK(invoke({"scan", "-n", "500"}).code == kExitUsage);
    CHECK(invoke({"scan", "--power", "2", "6", "--epsilon", "log"}).code == kExitUsage);
    CHECK(invoke({"steiner", "--body", "dodecahedron"}).code == kExitUsage);
}

TEST_CASE("validate") {
    CHECK(invoke({"validate", "--power", "2", "6"}).code == kExitOk);
    const auto bad = invoke({"validate", "--power", "2", "3"});
    CHECK(bad.code == kExitProperty);
    CHECK(nlohmann::json::parse(bad.out).at("pass") == false);
    CHECK(invoke({"validate", "--epsilon", "log"}).code == kExitOk);
    CHECK(invoke({"validate", "--epsilon", "sqrt"}).code == kExitProperty);
}

TEST_CASE("disks2d") {
    const auto r = invoke({"disks2d", "--r", "0"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("6.283185", 0) == 0);
    CHECK(invoke({"disks2d", "--r", "0.01", "--mc", "-n", "100000"}).code == kExitOk);
}

TEST_CASE("scan output is reproducible") {
    TempDir tmp;
    const std::vector<std::string> base{"scan", "--r", "0.01", "0.02", "-n", "20000", "--seed", "4"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    REQUIRE(invoke(with({"--out", tmp / "a", "--threads", "1"})).code == kExitOk);
    REQUIRE(invoke(with({"--out", tmp / "b", "--threads", "4"})).code == kExitOk);
    REQUIRE(invoke(with({"--out", tmp / "c", "--threads", "16"})).code == kExitOk);
    const auto a = slurp(tmp / "a/series.csv");
    CHECK(a.rfind("# manifest ", 0) == 0);
    CHECK(a == slurp(tmp / "b/series.csv"));
    CHECK(a == slurp(tmp / "c/series.csv"));
    CHECK(slurp(tmp / "a/plot.csv") == slurp(tmp / "c/plot.csv"));
    const auto manifest = nlohmann::json::parse(slurp(tmp / "a/manifest.json"));
    CHECK(manifest.at("outputs").size() == 3);

    CHECK(invoke(with({"--out", "/proc/tubelab/denied"})).code == kExitUsage);

    // fit needs four usable points; two are not enough
    CHECK(invoke({"fit", tmp / "a/series.csv"}).code == kExitProperty);
    CHECK(invoke({"fit", tmp / "missing.csv"}).code == kExitUsage);
}

TEST_CASE("fit and bounds on a scan") {
    TempDir tmp;
    REQUIRE(invoke({"scan", "--r-from", "1e-3", "--r-to", "3e-2", "--points", "5", "-n", "200000", "--out",
                     tmp / "s"})
                .code == kExitOk);
    const auto f = invoke({"fit", tmp / "s/series.csv", "--expect", "1.5", "--tol", "0.3"});
    CHECK(f.code == kExitOk);
    CHECK(f.out.rfind("slope ", 0) == 0);
    CHECK(invoke({"bounds", "--series", tmp / "s/series.csv"}).code == kExitOk);
    const auto b = invoke({"bounds", "--r", "0.001", "0.01"});
    CHECK(b.code == kExitOk);
    CHECK(nlohmann::json::parse(b.out).at("bounds").size() == 2);
    CHECK(invoke({"bounds", "--epsilon", "log", "--r", "0.001"}).code == kExitOk);
}

TEST_CASE("steiner") {
    const auto s = invoke({"steiner", "--body", "cube", "--r", "0.2"});
    CHECK(s.code == kExitOk);
    const auto j = nlohmann::json::parse(s.out);
    CHECK(j.at("volumes")[0].at("steiner").get<double>() == doctest::Approx(1 + 6 * 0.2 + 3.14159265358979 * 0.12 +
                                                                             4.18879020478639 * 0.008));
    CHECK(invoke({"steiner", "--body", "tetra", "--check", "-n", "200000"}).code == kExitOk);
}

TEST_CASE("build and tangency") {
    TempDir tmp;
    CHECK(invoke({"build", "--delta", "1e-4", "--out", tmp / "scene"}).code == kExitOk);
    CHECK(fs::exists(tmp / "scene/M.off"));
    CHECK(fs::exists(tmp / "scene/manifest.json"));
    CHECK(invoke({"tangency", "--points", "10", "--dirs", "16", "--delta", "1e-5"}).code == kExitOk);
}
