#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end checks of the installed binary (path via NSK_BIN).
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScratch = "cli_scratch";

std::string bin_path() {
    const char* p = std::getenv("NSK_BIN");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    fs::create_directories(kScratch);
    const fs::path of = kScratch / "stdout.txt", ef = kScratch / "stderr.txt";
    const std::string cmd =
        bin_path() + " " + args + " >" + of.string() + " 2>" + ef.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(of);
    r.err = slurp(ef);
    return r;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    os << text;
}

json manifest_files(const fs::path& dir) {
    json m = json::parse(slurp(dir / "manifest.json"));
    return m.at("files");
}

const char* kTinyAnalyze =
    "seed = 7\n"
    "[sequence]\n"
    "kind = glued\n"
    "first = 3\n"
    "last = 3\n"
    "base_nx = 16\n"
    "nx_cap = 256\n"
    "domain_half_width = 1.0\n"
    "base = constant:z\n"
    "[bubble]\n"
    "center = 0 0\n"
    "scale = 1\n"
    "p = 0 1\n"
    "q = 1\n"
    "[analysis]\n"
    "epsilon0 = 0.6\n"
    "c0 = 4\n"
    "delta = 1.5\n"
    "lambda_ladder = 2 4\n"
    "m_cap = 4\n"
    "e0_cap = 100\n"
    "gauge_window_nx = 256\n"
    "blowup_nx = 128\n"
    "blowup_half_width = 4\n";

}  // namespace

TEST_CASE("make-fixtures emits a deterministic corpus") {
    fs::remove_all(kScratch);
    const fs::path d1 = kScratch / "fx1", d2 = kScratch / "fx2";
    RunResult r1 = run("make-fixtures --out " + d1.string() + " --grid 128");
    REQUIRE(r1.status == 0);
    for (const char* f : {"chi_b1.nsk", "inv_abs.nsk", "bump.nsk", "bubble_deg1.nsk",
                          "bubble_deg2.nsk", "geodesic.nsk", "laurent_g.nsk",
                          "manifest.json"})
        CHECK(fs::exists(d1 / f));

    RunResult r2 = run("make-fixtures --out " + d2.string() + " --grid 128");
    REQUIRE(r2.status == 0);
    CHECK(manifest_files(d1) == manifest_files(d2));
}

TEST_CASE("norms subcommand: values, grammar, and failure exits") {
    const fs::path fx = kScratch / "fx1";
    if (!fs::exists(fx / "chi_b1.nsk")) {
        REQUIRE(run("make-fixtures --out " + fx.string() + " --grid 128").status == 0);
    }

    RunResult r = run("norms " + (fx / "chi_b1.nsk").string() + " l21 morrey:1:2");
    REQUIRE(r.status == 0);
    json j = json::parse(r.out);
    REQUIRE(j.at("values").size() == 2);
    CHECK(j["values"][0]["norm"] == "l21");
    const double l21 = j["values"][0]["value"].get<double>();
    CHECK(std::abs(l21 - std::sqrt(M_PI)) <= 0.05 * std::sqrt(M_PI));
    CHECK(j["values"][1].contains("growth"));
    const double mor = j["values"][1]["value"].get<double>();
    CHECK(std::abs(mor - M_PI) <= 0.06 * M_PI);

    RunResult bad = run("norms " + (fx / "chi_b1.nsk").string() + " l99");
    CHECK(bad.status == 2);
    CHECK(bad.err.find("l21") != std::string::npos);

    RunResult missing = run("norms " + (kScratch / "absent.nsk").string() + " l2");
    CHECK(missing.status == 3);
}

TEST_CASE("flow subcommand runs a short trajectory and rejects unstable steps") {
    const fs::path cfgp = kScratch / "flow.ini";
    write_file(cfgp,
               "seed = 5\n"
               "[flow]\n"
               "base = geodesic:0.8\n"
               "nx = 48\n"
               "half_width = 1.0\n"
               "steps = 5\n"
               "dt_factor = 0.15\n"
               "stride = 2\n");
    const fs::path out = kScratch / "flow_out";
    RunResult r = run("flow --config " + cfgp.string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    CHECK(fs::exists(out / "final.nsk"));
    CHECK(fs::exists(out / "manifest.json"));
    const std::string traj = slurp(out / "trajectory.csv");
    CHECK(traj.rfind("step,time,energy,tau_l1,tau_llogl,tau_morrey\n", 0) == 0);

    const fs::path badp = kScratch / "flow_bad.ini";
    write_file(badp,
               "[flow]\n"
               "base = geodesic:0.8\n"
               "nx = 48\n"
               "steps = 5\n"
               "dt_factor = 0.5\n");
    RunResult bad = run("flow --config " + badp.string() + " --out " +
                        (kScratch / "flow_bad_out").string());
    CHECK(bad.status == 4);
}

TEST_CASE("analyze subcommand: artifacts, verdict lines, reruns byte-identical") {
    const fs::path cfgp = kScratch / "analyze.ini";
    write_file(cfgp, kTinyAnalyze);

    const fs::path a = kScratch / "an_a", b = kScratch / "an_b";
    RunResult r = run("analyze --config " + cfgp.string() + " --out " + a.string());
    REQUIRE(r.status == 0);
    for (const char* f : {"decomposition.json", "neck_ledger.csv", "residuals.csv",
                          "plot_residual_energy.csv", "plot_neck_l2.csv",
                          "plot_neck_l21.csv", "manifest.json"})
        CHECK(fs::exists(a / f));
    CHECK(slurp(a / "residuals.csv")
              .rfind("n,residual_E,residual_21,residual_osc,residual_hess\n", 0) == 0);
    CHECK(r.out.find("energy identity:") != std::string::npos);
    CHECK(r.out.find("identity expected: yes") != std::string::npos);

    RunResult r2 = run("analyze --config " + cfgp.string() + " --out " + b.string());
    REQUIRE(r2.status == 0);
    CHECK(manifest_files(a) == manifest_files(b));

    const fs::path empty = kScratch / "empty.ini";
    write_file(empty, "[sequence]\nkind = glued\n");
    RunResult none =
        run("analyze --config " + empty.string() + " --out " + (kScratch / "an_c").string());
    CHECK(none.status == 2);
}

TEST_CASE("hopf subcommand reports a conformality-sized Hopf differential") {
    const fs::path fx = kScratch / "fx1";
    if (!fs::exists(fx / "bubble_deg1.nsk")) {
        REQUIRE(run("make-fixtures --out " + fx.string() + " --grid 128").status == 0);
    }
    const fs::path out = kScratch / "hopf_out";
    RunResult r =
        run("hopf " + (fx / "bubble_deg1.nsk").string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    CHECK(fs::exists(out / "hopf.json"));
    json j = json::parse(r.out);
    CHECK(j.at("hopf_l1_over_energy").get<double>() <= 0.2);
    CHECK(j.at("energy").get<double>() > 1.0);
}

TEST_CASE("gauge subcommand solves the geodesic oracle exactly") {
    const fs::path fx = kScratch / "fx1";
    if (!fs::exists(fx / "geodesic.nsk")) {
        REQUIRE(run("make-fixtures --out " + fx.string() + " --grid 128").status == 0);
    }
    const fs::path out = kScratch / "gauge_out";
    RunResult r =
        run("gauge " + (fx / "geodesic.nsk").string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    CHECK(fs::exists(out / "gauge.json"));
    CHECK(fs::exists(out / "manifest.json"));
    json j = json::parse(slurp(out / "gauge.json"));
    CHECK(j.at("kappa").get<double>() <= 1e-9);
    CHECK(j.at("b_dist_to_identity").get<double>() <= 1e-9);
}

TEST_CASE("top-level usage") {
    CHECK(run("").status == 2);
    CHECK(run("--help").status == 0);
}
