#include "doctest.h"

#include "cgdft/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace cgdft;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "cgdft_cli_tests";

/// Runs the CLI with stdout and stderr captured to `log`; returns the exit code.
int run(const std::string& args, const std::string& env = {}, const std::string& log = "log.txt")
{
    fs::create_directories(kRoot);
    const std::string cmd =
        "cd " + kRoot.string() + " && " + env + " " + CGDFT_CLI + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

const char* kTiny = "[model]\nM = 32\n"
                    "[hierarchy]\nlevels = [1, 2, 3, 4]\n"
                    "[quasi]\nlevel = 2\nradii = [0.1, 0.01]\n"
                    "[modulus]\nlevel = 2\nradii = [0.0, 0.01, 0.0001]\n"
                    "[blowup]\nlevel = 2\n"
                    "[verify]\nfixed_point_levels = [1, 2]\nfixed_point_samples = 2\ntwo_particle_samples = 1\n"
                    "two_particle_points = 16\none_particle_samples = 2\nrecovery_samples = 1\nrecovery_level = 2\n"
                    "sweep_densities = 1\nderivative_pairs = 2\nderivative_level = 2\nquasi_samples = 2\n"
                    "modulus_samples = 2\nbounds_samples = 4\nfenchel_densities = 2\nfenchel_potentials = 2\n"
                    "convexity_triples = 2\nks_directions = 1\n";

}  // namespace

TEST_CASE("invert on a forward-generated density")
{
    fs::remove_all(kRoot / "invert");
    REQUIRE(run("invert --out invert --seed 3") == 0);
    const auto doc = nlohmann::json::parse(slurp(kRoot / "invert" / "inversion.json"));
    CHECK(doc.at("converged").get<bool>());
    CHECK(doc.at("residual").get<double>() <= 1e-6);
    CHECK(doc.at("config").at("seed") == 3);
    CHECK(doc.at("trace").size() == static_cast<std::size_t>(doc.at("iterations").get<int>() + 1));
    const CsvTable t = read_csv(kRoot / "invert" / "inversion.csv");
    CHECK(t.rows.size() == 8);
    const auto meta = nlohmann::json::parse(slurp(kRoot / "invert" / "inversion.meta.json"));
    CHECK(meta.contains("generated_at"));
    CHECK(meta.at("config").at("model").at("M") == 128);
    for (const auto& entry : fs::directory_iterator(kRoot / "invert"))
        CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("configuration errors exit with 2 and write nothing")
{
    write_file(kRoot / "negative.toml", "[model]\nlambda = -1.0\n");
    write_file(kRoot / "unknown.json", R"({"model": {"M": 32, "colour": "red"}})");
    for (const char* args : {"invert --config negative.toml --out bad1", "invert --config unknown.json --out bad2",
                             "invert --out bad3 --tol nonsense=1", "invert --out bad4 --tol inversion=x",
                             "invert --config missing.toml --out bad5", "frobnicate --out bad6", "invert"}) {
        CHECK(run(args) == 2);
    }
    CHECK(run("invert --out bad7", "CGDFT_THREADS=0") == 2);
    for (const char* dir : {"bad1", "bad2", "bad3", "bad4", "bad5", "bad6", "bad7"})
        CHECK_FALSE(fs::exists(kRoot / dir));
    CHECK(slurp(kRoot / "log.txt").find("config error") != std::string::npos);
}

TEST_CASE("failing assertions exit with 1 and name the invariant")
{
    write_file(kRoot / "expect.toml", "[model]\nM = 32\n[hierarchy]\nlevels = [1, 2, 3]\n"
                                      "[probe]\ndensity = \"node\"\nexpect = \"representable\"\n");
    fs::remove_all(kRoot / "probe_fail");
    CHECK(run("probe --config expect.toml --out probe_fail", "", "fail.txt") == 1);
    CHECK(slurp(kRoot / "fail.txt").find("failed: Thm V-limit :: verdict is representable") != std::string::npos);
}

TEST_CASE("report: sweep monotonicity column, probe verdict, empty directory")
{
    write_file(kRoot / "sweep.toml", "[model]\nM = 32\n[hierarchy]\nlevels = [1, 2, 3, 4]\n");
    fs::remove_all(kRoot / "sweep");
    REQUIRE(run("sweep --config sweep.toml --out sweep") == 0);
    const CsvTable t = read_csv(kRoot / "sweep" / "sweep.csv");
    const int col = t.column("monotone");
    for (const auto& row : t.rows)
        CHECK(row[col] == "OK");
    REQUIRE(run("report sweep", "", "report.txt") == 0);
    CHECK(slurp(kRoot / "report.txt").find("monotone") != std::string::npos);

    write_file(kRoot / "probe.toml", "[model]\nM = 64\n[probe]\ndensity = \"forward\"\nexpect = \"representable\"\n");
    fs::remove_all(kRoot / "probe");
    REQUIRE(run("probe --config probe.toml --out probe") == 0);
    const auto doc = nlohmann::json::parse(slurp(kRoot / "probe" / "probe.json"));
    REQUIRE(run("report probe", "", "report.txt") == 0);
    CHECK(slurp(kRoot / "report.txt").find("verdict: " + doc.at("verdict").get<std::string>()) != std::string::npos);

    fs::create_directories(kRoot / "empty");
    fs::remove_all(kRoot / "empty");
    fs::create_directories(kRoot / "empty");
    CHECK(run("report empty") != 0);
    CHECK(run("report does_not_exist") != 0);
    write_file(kRoot / "corrupt" / "table.csv", "a,b\n1\n");
    CHECK(run("report corrupt") != 0);
}

TEST_CASE("verify-all: traceability anchors and byte-identical CSV bodies")
{
    write_file(kRoot / "tiny.toml", kTiny);
    fs::remove_all(kRoot / "va1");
    fs::remove_all(kRoot / "va2");
    fs::remove_all(kRoot / "va3");
    const int first = run("verify-all --config tiny.toml --out va1 --seed 5", "CGDFT_THREADS=1");
    const int second = run("verify-all --config tiny.toml --out va2 --seed 5", "CGDFT_THREADS=3");
    CHECK(first == second);
    CHECK((first == 0 || first == 1));
    const std::string trace = slurp(kRoot / "va1" / "traceability.txt");
    for (const char* anchor : {"Thm CG-HK-P", "Thm F-limit", "Thm Diff-Thm", "Thm V-Cont-Thm", "Thm Continuity-Thm",
                               "Eq F-bound", "Eq KS-decomp", "Eq KS-potls", "Thm V-limit", "Eq LF-transform"})
        CHECK(trace.find(anchor) != std::string::npos);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(kRoot / "va1")) {
        if (entry.path().extension() != ".csv")
            continue;
        ++compared;
        CHECK(slurp(entry.path()) == slurp(kRoot / "va2" / entry.path().filename()));
    }
    CHECK(compared >= 10);
    const CsvTable t = read_csv(kRoot / "va1" / "traceability.csv");
    CHECK(t.rows.size() >= 11);

    run("verify-all --config tiny.toml --out va3 --seed 6");
    CHECK(slurp(kRoot / "va1" / "fixed_point_fixed_point.csv") != slurp(kRoot / "va3" / "fixed_point_fixed_point.csv"));
}
