#include "cgdft/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace cgdft;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

/// Desk-scale configuration with the full sample counts of the acceptance suite.
RunConfig acceptance_config()
{
    RunConfig c;
    c.seed = 20240501;
    auto& v = c.verify;
    v.fixed_point_levels = {1, 2, 3, 4};
    v.fixed_point_samples = 50;
    v.two_particle_samples = 5;
    v.one_particle_samples = 20;
    v.recovery_samples = 10;
    v.sweep_densities = 5;
    v.derivative_pairs = 50;
    v.derivative_level = 3;
    v.quasi_samples = 10;
    v.modulus_samples = 10;
    v.bounds_samples = 200;
    v.fenchel_densities = 25;
    v.fenchel_potentials = 20;
    v.convexity_triples = 100;
    v.ks_directions = 10;
    c.quasi.radii.clear();
    const int K = 20;
    for (int k = 0; k < K; ++k)
        c.quasi.radii.push_back(std::pow(10.0, -1.0 - 2.0 * k / (K - 1)));
    return c;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string failed_checks(const Outcome& o)
{
    std::string out;
    for (const auto& c : o.checks)
        if (!c.passed)
            out += "; failed '" + c.name + "'" + (c.detail.empty() ? "" : " (" + c.detail + ")");
    return out;
}

struct Line {
    int id = 0;
    bool passed = false;
    std::string detail;
};

void print(const Line& l)
{
    std::cout << "criterion " << l.id << ": " << (l.passed ? "PASS" : "FAIL") << "  " << l.detail << std::endl;
}

/// Runs verify-all through the command-line tool and returns the exit code and wall time.
std::pair<int, double> run_cli(const fs::path& dir)
{
    fs::remove_all(dir);
    const std::string cmd =
        std::string(CGDFT_CLI) + " verify-all --out " + dir.string() + " > " + dir.string() + ".log 2>&1";
    const auto start = Clock::now();
    const int status = std::system(cmd.c_str());
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, seconds};
}

Line reproducibility()
{
    const fs::path root = fs::temp_directory_path() / "cgdft_acceptance";
    fs::create_directories(root);
    const auto [code_a, secs_a] = run_cli(root / "run_a");
    const auto [code_b, secs_b] = run_cli(root / "run_b");
    int compared = 0;
    int differing = 0;
    if (fs::exists(root / "run_a")) {
        for (const auto& entry : fs::directory_iterator(root / "run_a")) {
            if (entry.path().extension() != ".csv")
                continue;
            ++compared;
            if (slurp(entry.path()) != slurp(root / "run_b" / entry.path().filename()))
                ++differing;
        }
    }
    const double worst = std::max(secs_a, secs_b);
    std::ostringstream d;
    d << compared << " CSV files compared, " << differing << " differ; exit codes " << code_a << "/" << code_b
      << "; slower run " << std::round(worst) << " s (limit 3600 s)";
    const bool ok = compared > 0 && differing == 0 && code_a == code_b && (code_a == 0 || code_a == 1) &&
                    worst <= 3600;
    return {12, ok, d.str()};
}

}  // namespace

int main(int argc, char** argv)
{
    // --known-fail k: criterion k is still run and printed, but does not set the exit code.
    std::set<int> known_fail;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--known-fail")
            known_fail.insert(std::atoi(argv[++i]));

    const RunConfig config = acceptance_config();
    const double limits[] = {600, 0, 0, 1200};
    std::vector<Line> lines;
    for (const auto& section : verify_sections()) {
        const auto start = Clock::now();
        const Outcome o = run_verify_section(section.id, config);
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        Line l{section.id, o.passed(), ""};
        std::ostringstream d;
        d << section.name << ": " << o.checks.size() << " checks, " << std::round(seconds * 10) / 10 << " s";
        if (section.id <= 4 && limits[section.id - 1] > 0) {
            d << " (limit " << limits[section.id - 1] << " s)";
            l.passed = l.passed && seconds <= limits[section.id - 1];
        }
        for (const auto& note : o.notes)
            d << "; " << note;
        d << failed_checks(o);
        l.detail = d.str();
        print(l);
        lines.push_back(l);
    }
    lines.push_back(reproducibility());
    print(lines.back());

    int unexpected = 0;
    for (const auto& l : lines)
        if (!l.passed && !known_fail.count(l.id))
            ++unexpected;
    std::cout << "acceptance: " << std::count_if(lines.begin(), lines.end(), [](const Line& l) { return l.passed; })
              << "/" << lines.size() << " criteria pass";
    if (!known_fail.empty()) {
        std::cout << " (known failures:";
        for (int k : known_fail)
            std::cout << ' ' << k;
        std::cout << ")";
    }
    std::cout << std::endl;
    return unexpected == 0 ? 0 : 1;
}
