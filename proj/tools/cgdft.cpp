#include "cgdft/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

const char* describe(const std::string& name)
{
    if (name == "invert")
        return "invert one density to its representing potential";
    if (name == "sweep")
        return "F_n across the scale hierarchy";
    if (name == "probe")
        return "representability probe of a fine density";
    if (name == "quasi")
        return "quasi-continuity table of rho -> v[rho] rho";
    if (name == "modulus")
        return "continuity modulus of F";
    if (name == "blowup")
        return "node-density probe and oscillating-potential table";
    if (name == "ks")
        return "exact Kohn-Sham decomposition";
    return "every property check with a traceability report";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coarse-grained density functional toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> tolerances;
    for (const auto& name : cgdft::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "TOML or JSON run configuration (defaults if omitted)");
        sub->add_option("--out", out_dir, "artifact directory")->required();
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        sub->add_option("--tol", tolerances, "tolerance override name=value (repeatable)");
    }
    std::string report_dir;
    CLI::App* report = app.add_subcommand("report", "plain-text summary of an artifact directory");
    report->add_option("dir", report_dir, "artifact directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (report->parsed()) {
        try {
            std::cout << cgdft::report(report_dir);
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "report: " << e.what() << '\n';
            return kExitFailure;
        }
    }

    const std::string experiment = app.get_subcommands().front()->get_name();
    cgdft::RunConfig config;
    int threads = 1;
    try {
        if (!config_path.empty())
            config = cgdft::load_config(config_path);
        if (seed)
            config.seed = *seed;
        for (const auto& t : tolerances)
            cgdft::apply_tolerance_override(config, t);
        threads = cgdft::thread_cap();
    } catch (const cgdft::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    cgdft::Outcome outcome;
    try {
        outcome = cgdft::run_experiment(experiment, config, threads);
    } catch (const cgdft::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << experiment << " aborted: " << e.what() << '\n';
        return kExitFailure;
    }

    try {
        cgdft::write_outcome(outcome, config, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot write artifacts: " << e.what() << '\n';
        return kExitFailure;
    }
    std::cout << cgdft::summary_text(outcome);
    if (!outcome.passed()) {
        for (const auto& c : outcome.checks)
            if (!c.passed)
                std::cerr << "failed: " << c.anchor << " :: " << c.name << '\n';
        return kExitFailure;
    }
    return 0;
}
