#pragma once

#include "cgdft/config.hpp"
#include "cgdft/io.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cgdft {

/// One asserted invariant of an experiment.
struct Check {
    std::string name;
    /// Theorem or equation the invariant comes from.
    std::string anchor;
    bool passed = false;
    std::string detail;
};

struct Outcome {
    std::string experiment;
    std::vector<Check> checks;
    /// Written as <name>.csv plus a <name>.meta.json sidecar.
    std::vector<std::pair<std::string, CsvTable>> tables;
    /// Written as <name>.json.
    std::vector<std::pair<std::string, nlohmann::json>> documents;
    /// Free-form lines for the summary (verdicts, fitted exponents).
    std::vector<std::string> notes;
    double seconds = 0;

    bool passed() const;
    void check(std::string name, std::string anchor, bool passed, std::string detail);
};

/// invert, sweep, probe, quasi, modulus, blowup, ks, verify-all.
const std::vector<std::string>& experiment_names();

/// Throws ConfigError for an unknown name or a config the experiment cannot use.
Outcome run_experiment(const std::string& name, const RunConfig& config, int threads = 1);

struct VerifySection {
    int id = 0;
    std::string name;
    std::string anchor;
};

/// The verify-all sections, one per acceptance property.
const std::vector<VerifySection>& verify_sections();
Outcome run_verify_section(int id, const RunConfig& config);
/// Sections run on up to `threads` workers; results are merged in section order.
Outcome verify_all(const RunConfig& config, int threads);

/// Creates `dir` and writes every table, document, summary.json and summary.txt atomically.
void write_outcome(const Outcome& outcome, const RunConfig& config, const std::filesystem::path& dir);
std::string summary_text(const Outcome& outcome);

/// CGDFT_THREADS if set (must be a positive integer), otherwise the hardware concurrency.
int thread_cap();

/// Plain-text tables of an artifact directory; throws Error if it holds no artifacts.
std::string report(const std::filesystem::path& dir);

}  // namespace cgdft
