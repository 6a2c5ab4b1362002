#include "cgdft/config.hpp"

#include "cgdft/io.hpp"

#include <toml.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cgdft {

namespace {

/// Reads keys out of one JSON object and remembers which were used.
class Section {
public:
    Section(const nlohmann::json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            fail(path_.empty() ? "configuration must be a table" : "must be a table");
    }

    [[noreturn]] void fail(const std::string& what, const std::string& key = {}) const
    {
        std::string where = path_;
        if (!key.empty())
            where += (where.empty() ? "" : ".") + key;
        throw ConfigError(where.empty() ? what : where + ": " + what);
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const nlohmann::json* take(const std::string& key)
    {
        if (!node_.contains(key))
            return nullptr;
        used_.insert(key);
        return &node_.at(key);
    }

    Section child(const std::string& key)
    {
        static const nlohmann::json empty = nlohmann::json::object();
        const nlohmann::json* node = take(key);
        return Section(node ? *node : empty, path_.empty() ? key : path_ + "." + key);
    }

    void number(const std::string& key, Scalar& out)
    {
        if (const auto* n = take(key)) {
            if (!n->is_number())
                fail("expected a number", key);
            out = n->get<Scalar>();
            if (!std::isfinite(out))
                fail("must be finite", key);
        }
    }

    void integer(const std::string& key, int& out)
    {
        if (const auto* n = take(key)) {
            if (!n->is_number_integer())
                fail("expected an integer", key);
            out = n->get<int>();
        }
    }

    void text(const std::string& key, std::string& out)
    {
        if (const auto* n = take(key)) {
            if (!n->is_string())
                fail("expected a string", key);
            out = n->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<Scalar>& out)
    {
        if (const auto* n = take(key)) {
            if (!n->is_array())
                fail("expected an array of numbers", key);
            out.clear();
            for (const auto& x : *n) {
                if (!x.is_number())
                    fail("expected an array of numbers", key);
                out.push_back(x.get<Scalar>());
            }
        }
    }

    void integers(const std::string& key, std::vector<int>& out)
    {
        if (const auto* n = take(key)) {
            if (!n->is_array())
                fail("expected an array of integers", key);
            out.clear();
            for (const auto& x : *n) {
                if (!x.is_number_integer())
                    fail("expected an array of integers", key);
                out.push_back(x.get<int>());
            }
        }
    }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!used_.count(it.key()))
                fail("unknown key", it.key());
    }

    const std::string& path() const { return path_; }

private:
    const nlohmann::json& node_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const Section& s, const std::string& key, const std::string& what)
{
    if (!ok)
        s.fail(what, key);
}

DensitySource density_source(const Section& s, const std::string& name)
{
    static const std::map<std::string, DensitySource> names{
        {"forward", DensitySource::forward}, {"random", DensitySource::random}, {"smooth", DensitySource::smooth},
        {"uniform", DensitySource::uniform}, {"node", DensitySource::node},     {"box", DensitySource::box},
        {"values", DensitySource::values}};
    const auto it = names.find(name);
    if (it == names.end())
        s.fail("unknown density source '" + name + "'", "density");
    return it->second;
}

/// density = "<source>" plus the optional [<section>.density_options] table.
void read_density(Section& s, DensityConfig& d)
{
    std::string source = to_string(d.source);
    s.text("density", source);
    d.source = density_source(s, source);
    Section o = s.child("density_options");
    o.number("amplitude", d.amplitude);
    o.integer("modes", d.modes);
    o.number("spread", d.spread);
    o.number("node_x0", d.node_x0);
    o.number("node_width", d.node_width);
    o.numbers("values", d.values);
    o.finish();
    require(d.amplitude >= 0, o, "amplitude", "must be >= 0");
    require(d.modes >= 1, o, "modes", "must be >= 1");
    require(d.spread >= 0 && d.spread < 1, o, "spread", "must lie in [0, 1)");
    require(d.node_width > 0, o, "node_width", "must be > 0");
    require(d.source != DensitySource::values || !d.values.empty(), o, "values",
            "required when density = \"values\"");
    for (Scalar v : d.values)
        require(v > 0, o, "values", "cell averages must be positive");
}

void require_level(const Section& s, const std::string& key, int level, const ModelConfig& m)
{
    require(level >= 0 && (1 << level) <= m.M, s, key, "level outside 0.." + std::to_string(Grid(m.L, m.M).depth()));
}

void require_samples(const Section& s, const std::string& key, int n)
{
    require(n >= 1, s, key, "must be >= 1");
}

}  // namespace

std::string to_string(DensitySource s)
{
    switch (s) {
    case DensitySource::forward: return "forward";
    case DensitySource::random: return "random";
    case DensitySource::smooth: return "smooth";
    case DensitySource::uniform: return "uniform";
    case DensitySource::node: return "node";
    case DensitySource::box: return "box";
    case DensitySource::values: return "values";
    }
    return "?";
}

Tolerances::Tolerances()
    : values_{{"inversion", 1e-6},   {"gauge", 1e-8},     {"recovery", 1e-4},     {"one_particle", 1e-5},
              {"monotonicity", 1e-7}, {"grid_gap", 0.02},  {"derivative", 1e-4},   {"quotient_monotone", 1e-6},
              {"quasi_ratio", 0.1},   {"modulus", 1e-5},   {"fenchel_young", 1e-8}, {"convexity", 1e-7},
              {"excess", 1e-9},       {"identity", 1e-12}, {"hartree", 0.1},       {"exchange_correlation", 1e-3},
              {"drift", 0.05},        {"blowup_growth", 2}}
{
}

Scalar Tolerances::operator[](const std::string& name) const
{
    const auto it = values_.find(name);
    if (it == values_.end())
        throw InvalidArgument("unknown tolerance '" + name + "'");
    return it->second;
}

void Tolerances::set(const std::string& name, Scalar value)
{
    const auto it = values_.find(name);
    if (it == values_.end())
        throw ConfigError("tolerances: unknown tolerance '" + name + "'");
    if (!(value > 0) || !std::isfinite(value))
        throw ConfigError("tolerances." + name + ": must be a positive finite number");
    it->second = value;
}

InversionOptions RunConfig::inversion() const
{
    InversionOptions o;
    o.tolerance = tol["inversion"];
    o.gauge_tolerance = tol["gauge"];
    return o;
}

RunConfig parse_config(const nlohmann::json& doc)
{
    RunConfig c;
    Section root(doc, "");

    Section m = root.child("model");
    m.number("L", c.model.L);
    m.integer("M", c.model.M);
    m.integer("N", c.model.N);
    m.number("lambda", c.model.lambda);
    m.number("a", c.model.a);
    m.finish();
    require(c.model.L > 0, m, "L", "must be > 0");
    require(c.model.M >= 2 && (c.model.M & (c.model.M - 1)) == 0, m, "M", "must be a power of two >= 2");
    require(c.model.N >= 1 && c.model.N <= c.model.M, m, "N", "must lie in 1..M");
    require(c.model.lambda >= 0, m, "lambda", "must be >= 0");
    require(c.model.a > 0, m, "a", "must be > 0");

    Section h = root.child("hierarchy");
    h.integers("levels", c.levels);
    h.finish();
    require(!c.levels.empty(), h, "levels", "must not be empty");
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        require_level(h, "levels", c.levels[i], c.model);
        require(i == 0 || c.levels[i] > c.levels[i - 1], h, "levels", "must be strictly increasing");
    }

    if (const auto* s = root.take("seed")) {
        if (!s->is_number_unsigned())
            root.fail("expected a non-negative integer", "seed");
        c.seed = s->get<std::uint64_t>();
    }

    Section t = root.child("tolerances");
    for (const auto& [name, value] : c.tol.all()) {
        Scalar v = value;
        t.number(name, v);
        if (t.has(name))
            c.tol.set(name, v);
    }
    t.finish();

    Section inv = root.child("invert");
    inv.integer("level", c.invert.level);
    read_density(inv, c.invert.density);
    inv.finish();
    require_level(inv, "level", c.invert.level, c.model);

    Section sw = root.child("sweep");
    read_density(sw, c.sweep.density);
    sw.number("perturb", c.sweep.perturb);
    sw.finish();
    require(c.sweep.perturb >= 0, sw, "perturb", "must be >= 0");

    Section pr = root.child("probe");
    read_density(pr, c.probe.density);
    pr.number("stable_change", c.probe.thresholds.stable_change);
    pr.number("blowup_growth", c.probe.thresholds.blowup_growth);
    pr.number("v_cap", c.probe.thresholds.v_cap);
    pr.number("window_lo", c.probe.thresholds.window_lo);
    pr.number("window_hi", c.probe.thresholds.window_hi);
    pr.text("expect", c.probe.expect);
    pr.finish();
    require(c.probe.thresholds.stable_change > 0, pr, "stable_change", "must be > 0");
    require(c.probe.thresholds.blowup_growth > 1, pr, "blowup_growth", "must be > 1");
    require(c.probe.thresholds.v_cap > 0, pr, "v_cap", "must be > 0");
    require(0 <= c.probe.thresholds.window_lo && c.probe.thresholds.window_lo < c.probe.thresholds.window_hi &&
                c.probe.thresholds.window_hi <= 1,
            pr, "window_lo", "window must satisfy 0 <= lo < hi <= 1");
    require(c.probe.expect.empty() || c.probe.expect == "representable" || c.probe.expect == "blowup" ||
                c.probe.expect == "inconclusive",
            pr, "expect", "must be representable, blowup or inconclusive");
    require(c.levels.size() >= 3, h, "levels", "the probe needs at least three levels");

    Section q = root.child("quasi");
    q.integer("level", c.quasi.level);
    q.numbers("radii", c.quasi.radii);
    q.integer("samples", c.quasi.samples);
    read_density(q, c.quasi.density);
    q.finish();
    require_level(q, "level", c.quasi.level, c.model);
    require_samples(q, "samples", c.quasi.samples);
    require(!c.quasi.radii.empty(), q, "radii", "must not be empty");
    for (Scalar r : c.quasi.radii)
        require(r > 0 && r < 2, q, "radii", "radii must lie in (0, 2)");

    Section mo = root.child("modulus");
    mo.integer("level", c.modulus.level);
    mo.numbers("radii", c.modulus.radii);
    mo.integer("samples", c.modulus.samples);
    std::string sampling = c.modulus.sampling == ModulusSampling::both_halves ? "both" : "lower";
    mo.text("sampling", sampling);
    read_density(mo, c.modulus.density);
    mo.finish();
    require_level(mo, "level", c.modulus.level, c.model);
    require_samples(mo, "samples", c.modulus.samples);
    require(sampling == "both" || sampling == "lower", mo, "sampling", "must be both or lower");
    c.modulus.sampling = sampling == "both" ? ModulusSampling::both_halves : ModulusSampling::lower_half;
    require(!c.modulus.radii.empty(), mo, "radii", "must not be empty");
    for (Scalar r : c.modulus.radii)
        require(r >= 0 && r < 1, mo, "radii", "radii must lie in [0, 1)");

    Section b = root.child("blowup");
    b.integer("level", c.blowup.level);
    b.number("amplitude", c.blowup.amplitude);
    std::string shape = to_string(c.blowup.oscillation.shape);
    b.text("shape", shape);
    b.number("support_lo", c.blowup.oscillation.support_lo);
    b.number("support_hi", c.blowup.oscillation.support_hi);
    b.numbers("ells", c.blowup.ells);
    b.number("node_width", c.blowup.node_width);
    b.number("exponent_lo", c.blowup.exponent_lo);
    b.number("exponent_hi", c.blowup.exponent_hi);
    b.finish();
    require_level(b, "level", c.blowup.level, c.model);
    require(c.blowup.amplitude >= 0, b, "amplitude", "must be >= 0");
    try {
        c.blowup.oscillation.shape = bump_shape_from_string(shape);
    } catch (const InvalidArgument&) {
        b.fail("unknown shape '" + shape + "'", "shape");
    }
    require(0 <= c.blowup.oscillation.support_lo && c.blowup.oscillation.support_lo < c.blowup.oscillation.support_hi &&
                c.blowup.oscillation.support_hi <= 1,
            b, "support_lo", "support must satisfy 0 <= lo < hi <= 1");
    const Scalar h4 = 4 * Grid(c.model.L, c.model.M).spacing();
    for (Scalar ell : c.blowup.ells)
        require(ell >= h4 * (1 - 1e-12), b, "ells", "wavelengths must be >= 4h");
    require(c.blowup.node_width > 0, b, "node_width", "must be > 0");
    require(c.blowup.exponent_lo < c.blowup.exponent_hi, b, "exponent_lo", "must be below exponent_hi");

    Section k = root.child("ks");
    k.integer("level", c.ks.level);
    k.integer("directions", c.ks.directions);
    read_density(k, c.ks.density);
    k.finish();
    require_level(k, "level", c.ks.level, c.model);
    require_samples(k, "directions", c.ks.directions);

    Section v = root.child("verify");
    VerifyConfig& vc = c.verify;
    v.integers("fixed_point_levels", vc.fixed_point_levels);
    v.integer("fixed_point_samples", vc.fixed_point_samples);
    v.integer("two_particle_samples", vc.two_particle_samples);
    v.integer("two_particle_points", vc.two_particle_points);
    v.integer("one_particle_samples", vc.one_particle_samples);
    v.integer("recovery_samples", vc.recovery_samples);
    v.integer("recovery_level", vc.recovery_level);
    v.integer("sweep_densities", vc.sweep_densities);
    v.integer("derivative_pairs", vc.derivative_pairs);
    v.integer("derivative_level", vc.derivative_level);
    v.integer("quasi_samples", vc.quasi_samples);
    v.integer("modulus_samples", vc.modulus_samples);
    v.integer("bounds_samples", vc.bounds_samples);
    v.integer("fenchel_densities", vc.fenchel_densities);
    v.integer("fenchel_potentials", vc.fenchel_potentials);
    v.integer("convexity_triples", vc.convexity_triples);
    v.integer("ks_directions", vc.ks_directions);
    v.finish();
    require(!vc.fixed_point_levels.empty(), v, "fixed_point_levels", "must not be empty");
    for (int l : vc.fixed_point_levels)
        require_level(v, "fixed_point_levels", l, c.model);
    require_level(v, "recovery_level", vc.recovery_level, c.model);
    require_level(v, "derivative_level", vc.derivative_level, c.model);
    require(vc.two_particle_points >= 4 && (vc.two_particle_points & (vc.two_particle_points - 1)) == 0, v,
            "two_particle_points", "must be a power of two >= 4");
    for (auto [key, value] : {std::pair{"fixed_point_samples", vc.fixed_point_samples},
                              {"one_particle_samples", vc.one_particle_samples},
                              {"recovery_samples", vc.recovery_samples},
                              {"sweep_densities", vc.sweep_densities},
                              {"derivative_pairs", vc.derivative_pairs},
                              {"quasi_samples", vc.quasi_samples},
                              {"modulus_samples", vc.modulus_samples},
                              {"bounds_samples", vc.bounds_samples},
                              {"fenchel_densities", vc.fenchel_densities},
                              {"fenchel_potentials", vc.fenchel_potentials},
                              {"convexity_triples", vc.convexity_triples},
                              {"ks_directions", vc.ks_directions}})
        require_samples(v, key, value);
    require(vc.two_particle_samples >= 0, v, "two_particle_samples", "must be >= 0");

    root.finish();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    nlohmann::json doc;
    if (path.extension() == ".json") {
        try {
            doc = nlohmann::json::parse(text.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    } else {
        try {
            const toml::table table = toml::parse(text.str(), path.string());
            std::ostringstream json;
            json << toml::json_formatter{table};
            doc = nlohmann::json::parse(json.str());
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << path.string() << ": " << e.description() << " (line " << e.source().begin.line << ")";
            throw ConfigError(msg.str());
        }
    }
    return parse_config(doc);
}

void apply_tolerance_override(RunConfig& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--tol expects name=value, got '" + assignment + "'");
    const std::string name = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    Scalar x = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), x);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw ConfigError("--tol " + name + ": '" + value + "' is not a number");
    config.tol.set(name, x);
}

namespace {

/// Adds density and density_options in the input schema.
nlohmann::json with_density(nlohmann::json section, const DensityConfig& d)
{
    section["density"] = to_string(d.source);
    section["density_options"] = {{"amplitude", d.amplitude},   {"modes", d.modes},
                                  {"spread", d.spread},         {"node_x0", d.node_x0},
                                  {"node_width", d.node_width}, {"values", d.values}};
    return section;
}

}  // namespace

nlohmann::json to_json(const RunConfig& c)
{
    nlohmann::json j;
    j["model"] = {{"L", c.model.L}, {"M", c.model.M}, {"N", c.model.N}, {"lambda", c.model.lambda}, {"a", c.model.a}};
    j["hierarchy"] = {{"levels", c.levels}};
    j["seed"] = c.seed;
    j["tolerances"] = c.tol.all();
    j["invert"] = with_density({{"level", c.invert.level}}, c.invert.density);
    j["sweep"] = with_density({{"perturb", c.sweep.perturb}}, c.sweep.density);
    j["probe"] = with_density({{"stable_change", c.probe.thresholds.stable_change},
                  {"blowup_growth", c.probe.thresholds.blowup_growth},
                  {"v_cap", c.probe.thresholds.v_cap},
                  {"window_lo", c.probe.thresholds.window_lo},
                  {"window_hi", c.probe.thresholds.window_hi},
                  {"expect", c.probe.expect}},
                             c.probe.density);
    j["quasi"] = with_density({{"level", c.quasi.level}, {"radii", c.quasi.radii}, {"samples", c.quasi.samples}},
                              c.quasi.density);
    j["modulus"] = with_density({{"level", c.modulus.level},
                                 {"radii", c.modulus.radii},
                                 {"samples", c.modulus.samples},
                                 {"sampling", c.modulus.sampling == ModulusSampling::both_halves ? "both" : "lower"}},
                                c.modulus.density);
    j["blowup"] = {{"level", c.blowup.level},
                   {"amplitude", c.blowup.amplitude},
                   {"shape", to_string(c.blowup.oscillation.shape)},
                   {"support_lo", c.blowup.oscillation.support_lo},
                   {"support_hi", c.blowup.oscillation.support_hi},
                   {"ells", c.blowup.ells},
                   {"node_width", c.blowup.node_width},
                   {"exponent_lo", c.blowup.exponent_lo},
                   {"exponent_hi", c.blowup.exponent_hi}};
    j["ks"] = with_density({{"level", c.ks.level}, {"directions", c.ks.directions}}, c.ks.density);
    const VerifyConfig& v = c.verify;
    j["verify"] = {{"fixed_point_levels", v.fixed_point_levels},
                   {"fixed_point_samples", v.fixed_point_samples},
                   {"two_particle_samples", v.two_particle_samples},
                   {"two_particle_points", v.two_particle_points},
                   {"one_particle_samples", v.one_particle_samples},
                   {"recovery_samples", v.recovery_samples},
                   {"recovery_level", v.recovery_level},
                   {"sweep_densities", v.sweep_densities},
                   {"derivative_pairs", v.derivative_pairs},
                   {"derivative_level", v.derivative_level},
                   {"quasi_samples", v.quasi_samples},
                   {"modulus_samples", v.modulus_samples},
                   {"bounds_samples", v.bounds_samples},
                   {"fenchel_densities", v.fenchel_densities},
                   {"fenchel_potentials", v.fenchel_potentials},
                   {"convexity_triples", v.convexity_triples},
                   {"ks_directions", v.ks_directions}};
    return j;
}

}  // namespace cgdft
