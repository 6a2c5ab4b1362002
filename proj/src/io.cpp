#include "cgdft/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cgdft {

std::string format_scalar(Scalar x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

/// Quotes fields holding a comma, quote or line break (quotes doubled).
void append_field(std::string& out, const std::string& field)
{
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        out += field;
        return;
    }
    out += '"';
    for (char ch : field) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    out += '"';
}

}  // namespace

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out += ',';
            append_field(out, fields[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows)
        line(r);
    return out;
}

int CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    throw InvalidArgument("csv: no column named '" + name + "'");
}

std::string cell(Scalar x) { return format_scalar(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(bool x) { return x ? "true" : "false"; }

CsvTable parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    auto end_record = [&] {
        if (any || !field.empty() || !fields.empty()) {
            fields.push_back(std::move(field));
            records.push_back(std::move(fields));
        }
        fields.clear();
        field.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch != '"')
                field += ch;
            else if (i + 1 < text.size() && text[i + 1] == '"')
                field += text[++i];
            else
                quoted = false;
        } else if (ch == '"') {
            quoted = any = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (ch == '\n') {
            end_record();
        } else if (ch != '\r') {
            field += ch;
            any = true;
        }
    }
    if (quoted)
        throw Error("csv: unterminated quoted field");
    end_record();
    if (records.empty())
        throw Error("csv: empty file");
    CsvTable t;
    t.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            throw Error("csv: row with " + std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_csv(s.str());
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json json_scalar(Scalar x)
{
    if (std::isfinite(x))
        return x;
    return format_scalar(x);
}

nlohmann::json json_vector(const Vector& v)
{
    nlohmann::json out = nlohmann::json::array();
    for (Scalar x : v)
        out.push_back(json_scalar(x));
    return out;
}

nlohmann::json to_json(const InversionResult& r, bool with_trace)
{
    nlohmann::json j;
    j["level"] = r.level;
    j["F"] = json_scalar(r.F_value);
    j["residual"] = json_scalar(r.residual);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["cancelled"] = r.cancelled;
    j["degeneracy"] = r.degeneracy;
    j["gauge_error"] = json_scalar(r.gauge_error);
    j["gauge_identity_error"] = json_scalar(r.gauge_identity_error);
    j["target"] = json_vector(r.target.values);
    j["potential"] = json_vector(r.potential.values);
    j["potential_gauge_offset"] = json_scalar(r.potential.gauge_offset);
    j["mixing_weights"] = json_vector(r.mixing_weights);
    j["lambda_density"] = json_vector(r.lambda_density.values);
    if (with_trace) {
        nlohmann::json t = nlohmann::json::array();
        for (const auto& it : r.trace)
            t.push_back({{"iteration", it.iteration},
                         {"residual", json_scalar(it.residual)},
                         {"dual", json_scalar(it.dual_value)},
                         {"step", json_scalar(it.step)},
                         {"degeneracy", it.degeneracy}});
        j["trace"] = std::move(t);
    }
    return j;
}

nlohmann::json to_json(const KsReport& r)
{
    nlohmann::json j;
    j["level"] = r.level;
    j["F"] = json_scalar(r.F);
    j["T_s"] = json_scalar(r.T_s);
    j["E_H"] = json_scalar(r.E_H);
    j["E_xc"] = json_scalar(r.E_xc);
    j["v"] = json_vector(r.v.values);
    j["v_s"] = json_vector(r.v_s.values);
    j["phi"] = json_vector(r.phi.values);
    j["v_xc"] = json_vector(r.v_xc.values);
    j["v_xc_gauge_offset"] = json_scalar(r.v_xc.gauge_offset);
    j["interacting"] = to_json(r.interacting, false);
    j["kohn_sham"] = to_json(r.kohn_sham, false);
    return j;
}

CsvTable inversion_table(const InversionResult& r)
{
    CsvTable t{{"cell", "center", "target", "lambda_projection", "potential"}, {}};
    const ScaleHierarchy hierarchy(r.target.grid);
    const Vector lambda = project_values(r.target.grid, r.lambda_density.values, r.level);
    for (int c = 0; c < r.target.values.size(); ++c)
        t.rows.push_back({cell(c), cell(hierarchy.cell_center(c, r.level)), cell(r.target.values[c]),
                          cell(lambda[c]), cell(r.potential.values[c])});
    return t;
}

CsvTable trace_table(const InversionResult& r)
{
    CsvTable t{{"iteration", "residual", "dual", "step", "degeneracy"}, {}};
    for (const auto& it : r.trace)
        t.rows.push_back(
            {cell(it.iteration), cell(it.residual), cell(it.dual_value), cell(it.step), cell(it.degeneracy)});
    return t;
}

CsvTable quotient_table(const QuotientTrace& q)
{
    CsvTable t{{"s", "quotient", "converged"}, {}};
    for (std::size_t i = 0; i < q.s_values.size(); ++i)
        t.rows.push_back({cell(q.s_values[i]), cell(q.quotients[i]), cell(static_cast<bool>(q.converged[i]))});
    return t;
}

CsvTable slice_table(const SliceReport& s)
{
    CsvTable t{{"s", "F", "converged"}, {}};
    for (std::size_t i = 0; i < s.s_grid.size(); ++i)
        t.rows.push_back({cell(s.s_grid[i]), cell(s.F_values[i]), cell(static_cast<bool>(s.converged[i]))});
    return t;
}

CsvTable sweep_table(const ScaleSweep& sweep, Scalar monotonicity_tolerance)
{
    CsvTable t{{"n", "D_n", "F_n", "dist_1", "dist_2", "lambda_dist_1", "lambda_dist_2", "lambda_to_projection",
                "v_sup", "residual", "iterations", "converged", "monotone"},
               {}};
    auto add = [&](const ScaleSweepRow& r, const std::string& name, const std::string& monotone) {
        t.rows.push_back({name, cell(r.D_n), cell(r.F_n), cell(r.dist_p.at(1)), cell(r.dist_p.at(2)),
                          cell(r.lambda_dist_p.at(1)), cell(r.lambda_dist_p.at(2)), cell(r.lambda_to_projection),
                          cell(r.v_sup), cell(r.residual), cell(r.iterations), cell(r.converged), monotone});
    };
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const bool ok = i == 0 || sweep.rows[i].F_n >= sweep.rows[i - 1].F_n - monotonicity_tolerance;
        add(sweep.rows[i], cell(sweep.rows[i].n), ok ? "OK" : "VIOLATION");
    }
    if (!sweep.grid_row.dist_p.empty()) {
        const bool ok = sweep.rows.empty() || sweep.grid_row.F_n >= sweep.rows.back().F_n - monotonicity_tolerance;
        add(sweep.grid_row, "grid", ok ? "OK" : "VIOLATION");
    }
    return t;
}

CsvTable probe_table(const ProbeVerdict& verdict)
{
    CsvTable t{{"n", "v_sup", "window_change", "reference_error", "residual", "converged"}, {}};
    for (std::size_t i = 0; i < verdict.sweep.rows.size(); ++i) {
        const auto& r = verdict.sweep.rows[i];
        const Scalar change = i == 0 ? std::nan("") : verdict.window_change[i - 1];
        const Scalar ref = i < verdict.reference_error.size() ? verdict.reference_error[i] : std::nan("");
        t.rows.push_back({cell(r.n), cell(r.v_sup), cell(change), cell(ref), cell(r.residual), cell(r.converged)});
    }
    return t;
}

CsvTable quasi_table(const std::vector<QuasiContinuityRow>& rows)
{
    CsvTable t{{"radius", "product_distance", "window_distance", "evaluated", "failures"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({cell(r.radius), cell(r.product_distance), cell(r.window_distance), cell(r.evaluated),
                          cell(r.failures)});
    return t;
}

CsvTable modulus_table(const std::vector<ModulusRow>& rows)
{
    CsvTable t{{"radius", "modulus", "slope", "evaluated", "failures"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({cell(r.radius), cell(r.modulus), cell(r.slope), cell(r.evaluated), cell(r.failures)});
    return t;
}

CsvTable oscillation_table(const OscillationTable& table)
{
    CsvTable t{{"ell", "pairing", "energy", "drift", "amplitude"}, {}};
    for (const auto& r : table.rows)
        t.rows.push_back({cell(r.ell), cell(r.pairing), cell(r.energy), cell(r.drift), cell(r.amplitude)});
    return t;
}

CsvTable ks_table(const KsReport& r)
{
    CsvTable t{{"cell", "center", "density", "v", "v_s", "phi", "v_xc"}, {}};
    const ScaleHierarchy hierarchy(r.interacting.target.grid);
    for (int c = 0; c < r.v.values.size(); ++c)
        t.rows.push_back({cell(c), cell(hierarchy.cell_center(c, r.level)), cell(r.interacting.target.values[c]),
                          cell(r.v.values[c]), cell(r.v_s.values[c]), cell(r.phi.values[c]), cell(r.v_xc.values[c])});
    return t;
}

}  // namespace cgdft
