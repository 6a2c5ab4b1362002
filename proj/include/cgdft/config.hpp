#pragma once

#include "cgdft/multiscale.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cgdft {

/// Schema violation in a run configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

struct ModelConfig {
    Scalar L = 1.0;
    int M = 128;
    int N = 1;
    Scalar lambda = 1.0;
    Scalar a = 0.5;

    ModelSpec spec() const { return ModelSpec{Grid(L, M), N, lambda, a}; }
};

enum class DensitySource {
    /// Ground density of a random smooth cell potential (representable by construction).
    forward,
    /// Random interior cell averages.
    random,
    /// Random smooth fine density.
    smooth,
    uniform,
    /// Quadratic node regularized at node_width grid spacings.
    node,
    /// Ground density of the empty box.
    box,
    /// Explicit cell averages (normalized to N).
    values
};

std::string to_string(DensitySource s);

struct DensityConfig {
    DensitySource source = DensitySource::smooth;
    /// Sup norm of the generating potential for `forward`.
    Scalar amplitude = 10;
    int modes = 3;
    /// Spread of `random` cell averages.
    Scalar spread = 0.6;
    Scalar node_x0 = 0.5;
    Scalar node_width = 1;
    std::vector<Scalar> values;

    static DensityConfig of(DensitySource source, Scalar spread = 0.6)
    {
        DensityConfig d;
        d.source = source;
        d.spread = spread;
        return d;
    }
};

struct InvertConfig {
    int level = 3;
    DensityConfig density = DensityConfig::of(DensitySource::forward);
};

struct SweepConfig {
    DensityConfig density = DensityConfig::of(DensitySource::smooth);
    /// Relative size of the per-level noise (0: plain projections).
    Scalar perturb = 0;
};

struct ProbeConfig {
    DensityConfig density = DensityConfig::of(DensitySource::node);
    ProbeThresholds thresholds;
    /// Verdict asserted by the run; empty asserts nothing.
    std::string expect;
};

struct QuasiConfig {
    int level = 3;
    std::vector<Scalar> radii{1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3};
    int samples = 20;
    DensityConfig density = DensityConfig::of(DensitySource::smooth);
};

struct ModulusConfig {
    int level = 3;
    /// Multiplied by N.
    std::vector<Scalar> radii{0, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    int samples = 10;
    ModulusSampling sampling = ModulusSampling::both_halves;
    DensityConfig density = DensityConfig::of(DensitySource::smooth);
};

struct BlowupConfig {
    int level = 3;
    Scalar amplitude = 10;
    OscillationOptions oscillation;
    /// Empty: l = 4h 2^(k/2), k = 0..4.
    std::vector<Scalar> ells;
    Scalar node_width = 1;
    Scalar exponent_lo = 0.8;
    Scalar exponent_hi = 1.2;
};

struct KsConfig {
    int level = 2;
    int directions = 10;
    DensityConfig density = DensityConfig::of(DensitySource::random, 0.4);
};

/// Sample counts of the verify-all sections.
struct VerifyConfig {
    std::vector<int> fixed_point_levels{1, 2, 3, 4};
    int fixed_point_samples = 10;
    int two_particle_samples = 2;
    /// Grid for the two-particle sections (Kohn-Sham and the N = 2 inversions).
    int two_particle_points = 32;
    int one_particle_samples = 10;
    int recovery_samples = 4;
    int recovery_level = 4;
    int sweep_densities = 2;
    int derivative_pairs = 10;
    int derivative_level = 3;
    int quasi_samples = 6;
    int modulus_samples = 6;
    int bounds_samples = 50;
    int fenchel_densities = 10;
    int fenchel_potentials = 10;
    int convexity_triples = 20;
    int ks_directions = 3;
};

/// Named tolerances; every name has a default and --tol may only override known names.
class Tolerances {
public:
    Tolerances();
    Scalar operator[](const std::string& name) const;
    void set(const std::string& name, Scalar value);
    const std::map<std::string, Scalar>& all() const { return values_; }

private:
    std::map<std::string, Scalar> values_;
};

struct RunConfig {
    ModelConfig model;
    std::vector<int> levels{1, 2, 3, 4, 5};
    std::uint64_t seed = 1;
    Tolerances tol;
    InvertConfig invert;
    SweepConfig sweep;
    ProbeConfig probe;
    QuasiConfig quasi;
    ModulusConfig modulus;
    BlowupConfig blowup;
    KsConfig ks;
    VerifyConfig verify;

    /// Inversion options carrying the configured tolerances.
    InversionOptions inversion() const;
};

/// Validates a JSON document against the schema; unknown keys are errors.
RunConfig parse_config(const nlohmann::json& doc);
/// `.json` files are JSON, everything else TOML.
RunConfig load_config(const std::filesystem::path& path);
/// "name=value" from the command line.
void apply_tolerance_override(RunConfig& config, const std::string& assignment);
/// The resolved configuration, defaults included.
nlohmann::json to_json(const RunConfig& config);

}  // namespace cgdft
