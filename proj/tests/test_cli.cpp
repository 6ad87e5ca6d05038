#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hrw/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hrw_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

json geometric_walk(int n, double c) {
    return {{"N", n}, {"law", {{"type", "geometric"}, {"c", c}}}};
}

} // namespace

TEST_CASE("validate: diagnostics, not exceptions") {
    SUBCASE("well-formed config yields no diagnostics") {
        const json cfg{{"experiment", "degree"}, {"walk", geometric_walk(4, 2.0)}};
        CHECK(hrw::cli::validate(cfg).empty());
    }

    SUBCASE("missing seed on a simulation is named") {
        const json cfg{{"experiment", "simulate"},
                       {"walk", geometric_walk(2, 1.0)},
                       {"params", {{"replicas", 10}, {"scheme", "discrete"}, {"steps", 5}}}};
        const auto diags = hrw::cli::validate(cfg);
        REQUIRE_FALSE(diags.empty());
        bool found = false;
        for (const auto& d : diags) found = found || d.find("seed") != std::string::npos;
        CHECK(found);
    }

    SUBCASE("occupation on a transient walk is refused") {
        const json cfg{{"experiment", "occupation"},
                       {"walk", geometric_walk(4, 2.0)},
                       {"seed", 1},
                       {"params", {{"replicas", 10}, {"t", 100.0}}}};
        const auto diags = hrw::cli::validate(cfg);
        REQUIRE_FALSE(diags.empty());
        bool found = false;
        for (const auto& d : diags) found = found || d.find("recurrent") != std::string::npos;
        CHECK(found);
    }

    SUBCASE("unknown experiment") {
        const json cfg{{"experiment", "frobnicate"}, {"walk", geometric_walk(2, 1.0)}};
        CHECK_FALSE(hrw::cli::validate(cfg).empty());
    }

    SUBCASE("invalid walk reported with context") {
        const json cfg{{"experiment", "degree"}, {"walk", geometric_walk(2, 5.0)}};
        const auto diags = hrw::cli::validate(cfg);
        REQUIRE_FALSE(diags.empty());
        CHECK(diags[0].find("walk") != std::string::npos);
    }
}

TEST_CASE("degree experiment writes an artifact and a summary") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "degree"}, {"walk", geometric_walk(4, 2.0)}};
    CHECK(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    const auto artifact = json::parse(slurp(tmp.path / "out" / "degree.json"));
    CHECK(artifact["gamma"].get<double>() == doctest::Approx(1.0));
    CHECK(artifact["decoration"] == "minus");
}

TEST_CASE("transition experiment: one step to the origin is impossible") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "transition"},
                   {"walk", geometric_walk(2, 1.0)},
                   {"params", {{"n", 1}, {"rad", 0}}}};
    CHECK(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    const auto artifact = json::parse(slurp(tmp.path / "out" / "transition.json"));
    CHECK(std::fabs(artifact["p"].get<double>()) < 1e-15);
}

TEST_CASE("artifacts are byte-reproducible across reruns") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "simulate"},
                   {"walk", geometric_walk(2, 1.0)},
                   {"seed", 31415},
                   {"params",
                    {{"replicas", 500}, {"scheme", "discrete"}, {"steps", 40}, {"csv", true}}}};
    REQUIRE(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    const std::string csv1 = slurp(tmp.path / "out" / "simulate.csv");
    const std::string json1 = slurp(tmp.path / "out" / "simulate.json");
    opts.threads = 4;
    REQUIRE(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    CHECK(slurp(tmp.path / "out" / "simulate.csv") == csv1);
    CHECK(slurp(tmp.path / "out" / "simulate.json") == json1);
    CHECK_FALSE(csv1.empty());
}

TEST_CASE("validation failures exit with the dedicated code") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "green"}, {"walk", geometric_walk(2, 1.0)}};
    // missing params.zeta
    CHECK(hrw::cli::run(cfg, opts) == hrw::cli::kExitValidation);
}

TEST_CASE("green experiment reports divergence as a value, not an error") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "green"},
                   {"walk", geometric_walk(2, 1.0)},
                   {"params", {{"zeta", 1.0}}}};
    CHECK(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    const auto artifact = json::parse(slurp(tmp.path / "out" / "green.json"));
    CHECK(artifact["divergent"].get<bool>());
    CHECK(artifact["value"].is_null());
}

TEST_CASE("kernel table artifact matches the CSV schema") {
    TempDir tmp;
    hrw::cli::Options opts;
    opts.out_dir = (tmp.path / "out").string();
    opts.quiet = true;
    const json cfg{{"experiment", "kernel-table"}, {"walk", geometric_walk(2, 1.0)}};
    CHECK(hrw::cli::run(cfg, opts) == hrw::cli::kExitOk);
    const std::string csv = slurp(tmp.path / "out" / "kernel_table.csv");
    CHECK(csv.rfind("j,r,f,h,s,d\n", 0) == 0);
}
