#pragma once

// The symkernel command-line front end, kept in a header so the test suite
// can drive it in-process.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "symkernel/envelopes.hpp"
#include "symkernel/error.hpp"
#include "symkernel/lattice.hpp"
#include "symkernel/models.hpp"
#include "symkernel/oracles.hpp"
#include "symkernel/report.hpp"
#include "symkernel/rootdata.hpp"
#include "symkernel/volume.hpp"

namespace symkernel::app {

class UsageError : public Error {
public:
    using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitComputation = 3;

/// Everything a run needs. Loaded from --config, then overridden by flags.
struct Config {
    std::string command;
    std::string kind; // envelope: green | heat
    std::string space = "H3R";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;

    std::vector<double> r;
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> epsilon;
    std::vector<std::vector<double>> x_plus;
    std::vector<double> direction;
    std::optional<double> alpha0;
    std::int64_t budget = 100000;
    bool allow_outside_hypothesis = false;

    std::string model;
    std::optional<int> size;
    std::vector<Eigen::MatrixXd> generators;
    std::string name = "lattice";
    int max_word_length = 6;
    double dedup_tol = 1e-7;
    std::int64_t max_samples = 200000;
};

namespace detail {

inline std::vector<double> arange(double lo, double hi, double step)
{
    std::vector<double> values;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + 1e-12)
            break;
        values.push_back(v);
    }
    return values;
}

inline std::string short_real(double x)
{
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
    return std::string(buffer, result.ptr);
}

inline Eigen::MatrixXd parse_matrix(const nlohmann::json& rows)
{
    if (!rows.is_array() || rows.empty())
        throw UsageError("a generator must be a nonempty list of rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw UsageError("a generator must be a square matrix");
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

/// Applies the keys of a JSON config; unknown keys are rejected so a typo
/// cannot silently fall back to a default.
inline void apply_json(Config& cfg, const nlohmann::json& j)
{
    if (!j.is_object())
        throw UsageError("config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "command")
                cfg.command = value.get<std::string>();
            else if (key == "kind")
                cfg.kind = value.get<std::string>();
            else if (key == "space")
                cfg.space = value.get<std::string>();
            else if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else if (key == "threads")
                cfg.threads = value.get<int>();
            else if (key == "out")
                cfg.out = value.get<std::string>();
            else if (key == "r")
                cfg.r = value.get<std::vector<double>>();
            else if (key == "t")
                cfg.t = value.get<std::vector<double>>();
            else if (key == "s")
                cfg.s = value.get<std::vector<double>>();
            else if (key == "epsilon")
                cfg.epsilon = value.get<std::vector<double>>();
            else if (key == "x_plus")
                cfg.x_plus = value.get<std::vector<std::vector<double>>>();
            else if (key == "direction")
                cfg.direction = value.get<std::vector<double>>();
            else if (key == "alpha0")
                cfg.alpha0 = value.get<double>();
            else if (key == "budget")
                cfg.budget = value.get<std::int64_t>();
            else if (key == "allow_outside_hypothesis")
                cfg.allow_outside_hypothesis = value.get<bool>();
            else if (key == "model")
                cfg.model = value.get<std::string>();
            else if (key == "size")
                cfg.size = value.get<int>();
            else if (key == "generators") {
                cfg.generators.clear();
                for (const auto& g : value)
                    cfg.generators.push_back(parse_matrix(g));
            } else if (key == "name")
                cfg.name = value.get<std::string>();
            else if (key == "max_word_length")
                cfg.max_word_length = value.get<int>();
            else if (key == "dedup_tol")
                cfg.dedup_tol = value.get<double>();
            else if (key == "max_samples")
                cfg.max_samples = value.get<std::int64_t>();
            else
                throw UsageError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    }
}

inline nlohmann::json load_json_file(const std::string& path)
{
    std::ifstream file(path);
    if (!file)
        throw UsageError("cannot read config " + path);
    try {
        return nlohmann::json::parse(file);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path + " is not valid JSON: " + e.what());
    }
}

inline void require_nonempty(const std::vector<double>& grid, const char* what)
{
    if (grid.empty())
        throw UsageError(std::string("grid '") + what + "' is empty");
    for (const double v : grid)
        if (!std::isfinite(v))
            throw UsageError(std::string("grid '") + what + "' has a non-finite entry");
}

inline std::vector<std::string> x_plus_columns(const RestrictedRootSystem& rs)
{
    std::vector<std::string> columns;
    for (int i = 0; i < rs.ambient_dim(); ++i)
        columns.push_back("x_plus_" + std::to_string(i));
    return columns;
}

inline void push_coords(std::vector<Cell>& row, const Eigen::VectorXd& h)
{
    for (Eigen::Index i = 0; i < h.size(); ++i)
        row.emplace_back(h[i] == 0.0 ? 0.0 : h[i]); // no "-0"
}

inline ChamberVector to_chamber(const RestrictedRootSystem& rs, const std::vector<double>& coords)
{
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(coords.data(), static_cast<Eigen::Index>(coords.size()));
    if (!rs.in_closed_chamber(h))
        throw UsageError(rs.name() + ": point lies outside the closed chamber (or has the wrong size)");
    return ChamberVector{h};
}

inline Eigen::VectorXd unit_direction(const RestrictedRootSystem& rs, const Config& cfg)
{
    Eigen::VectorXd u = cfg.direction.empty() ? interior_direction(rs).coords : to_chamber(rs, cfg.direction).coords;
    if (!(u.norm() > 0.0))
        throw UsageError("direction must be nonzero");
    return u / u.norm();
}

/// Points of the envelope sweep: explicit x_plus, or r times a unit chamber direction.
inline std::vector<CartanCoordinate> envelope_points(const RestrictedRootSystem& rs, const Config& cfg)
{
    std::vector<CartanCoordinate> points;
    if (!cfg.x_plus.empty()) {
        for (const auto& p : cfg.x_plus) {
            const ChamberVector h = to_chamber(rs, p);
            points.push_back({h, h.coords.norm()});
        }
        return points;
    }
    const std::vector<double> radii = cfg.r.empty() ? arange(2.0, 10.0, 1.0) : cfg.r;
    require_nonempty(radii, "r");
    const Eigen::VectorXd u = unit_direction(rs, cfg);
    for (const double r : radii) {
        if (r < 0.0)
            throw UsageError("grid 'r' must be nonnegative");
        points.push_back({ChamberVector{r * u}, r});
    }
    return points;
}

inline Table envelope_table(const Config& cfg)
{
    const RestrictedRootSystem rs = catalog_space(cfg.space);
    const auto points = envelope_points(rs, cfg);
    const auto policy = cfg.allow_outside_hypothesis ? HypothesisPolicy::allow_outside : HypothesisPolicy::enforce;
    const OperatorSpec op = cfg.alpha0 ? OperatorSpec{*cfg.alpha0} : OperatorSpec::scalar_laplacian(rs);

    Table table;
    table.columns = {"space"};
    for (const auto& c : x_plus_columns(rs))
        table.columns.push_back(c);
    for (const char* c : {"d", "t_or_s", "value", "log_value", "branch", "in_theorem"})
        table.columns.emplace_back(c);

    const bool green = cfg.kind == "green";
    if (!green && cfg.kind != "heat")
        throw UsageError("envelope kind must be 'green' or 'heat'");
    const std::vector<double> params =
        green ? (cfg.s.empty() ? std::vector<double>{0.25, 0.5, 1.0, 2.0} : cfg.s)
              : (cfg.t.empty() ? std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0, 8.0} : cfg.t);
    require_nonempty(params, green ? "s" : "t");

    for (const auto& point : points) {
        for (const double p : params) {
            EnvelopeValue v;
            try {
                v = green ? green_envelope(rs, point, SpectralParameter(p), policy) : heat_envelope(rs, point, p, op, policy);
            } catch (const HypothesisError& e) {
                throw UsageError(std::string(e.what()) + "; set allow_outside_hypothesis to sweep below it");
            }
            std::vector<Cell> row{cfg.space};
            push_coords(row, point.x_plus.coords);
            row.insert(row.end(), {Cell{point.distance}, Cell{p}, Cell{v.value}, Cell{v.log_value},
                                   Cell{std::string(branch_name(v.branch))},
                                   Cell{static_cast<std::int64_t>(v.within_hypothesis)}});
            table.add(std::move(row));
        }
    }
    return table;
}

/// Origin, points on the chamber edges and deep interior points, |x+| <= 6.
inline std::vector<ChamberVector> default_volume_points(const RestrictedRootSystem& rs)
{
    std::vector<Eigen::VectorXd> rays;
    for (Eigen::Index i = 0; i < rs.dual_basis().cols(); ++i)
        rays.push_back(rs.dual_basis().col(i).normalized());
    rays.push_back(interior_direction(rs).coords.normalized());

    std::vector<ChamberVector> points{ChamberVector{Eigen::VectorXd::Zero(rs.ambient_dim())}};
    for (const auto& ray : rays) {
        for (const double length : {1.5, 3.0, 6.0}) {
            const Eigen::VectorXd h = length * ray;
            const bool seen = std::any_of(points.begin(), points.end(),
                                          [&](const ChamberVector& p) { return (p.coords - h).norm() < 1e-12; });
            if (!seen)
                points.push_back(ChamberVector{h});
        }
    }
    return points;
}

inline Table volume_table(const Config& cfg)
{
    const RestrictedRootSystem rs = catalog_space(cfg.space);
    std::vector<ChamberVector> points;
    if (cfg.x_plus.empty())
        points = default_volume_points(rs);
    else
        for (const auto& p : cfg.x_plus)
            points.push_back(to_chamber(rs, p));
    const std::vector<double> eps = cfg.epsilon.empty() ? arange(0.1, 0.9, 0.1) : cfg.epsilon;
    require_nonempty(eps, "epsilon");
    if (cfg.budget < 10000)
        throw UsageError("budget must be at least 10000 samples");

    Table table;
    table.columns = {"space"};
    for (const auto& c : x_plus_columns(rs))
        table.columns.push_back(c);
    for (const char* c : {"epsilon", "envelope", "quadrature", "std_error", "ratio"})
        table.columns.emplace_back(c);

    std::uint64_t stream = 0;
    for (const auto& point : points) {
        for (const double e : eps) {
            if (!(e > 0.0 && e < 1.0))
                throw UsageError("epsilon values must lie in (0, 1)");
            const VolumeSampling sampling{cfg.budget, mix_seed(cfg.seed, stream++), cfg.threads};
            const VolumeEnvelope env = volume_envelope(rs, point, e);
            const VolumeEstimate q = volume_quadrature(rs, point, e, sampling);
            std::vector<Cell> row{cfg.space};
            push_coords(row, point.coords);
            row.insert(row.end(), {Cell{e}, Cell{env.value}, Cell{q.estimate}, Cell{q.std_error},
                                   Cell{q.estimate / env.value}});
            table.add(std::move(row));
        }
    }
    return table;
}

/// Ratio baselines checked by `validate`.
struct Baseline {
    std::string name;
    std::vector<double> ratios;
    double lo = 0.0;       // ratio interval, when lo < hi
    double hi = 0.0;
    double max_spread = 0.0; // max/min bound, when positive
    double worst_self_error = 0.0;
    double max_self_error = 0.0; // bound on oracle self-error, when positive
};

struct Validation {
    Table rows;
    Table summary;
    bool pass = true;
};

/// t in {0.25, 0.5, 1, 2, ..., r}, or the configured t grid restricted to t <= r.
inline std::vector<double> heat_times(const Config& cfg, double r)
{
    std::vector<double> base = cfg.t;
    if (base.empty()) {
        base = {0.25, 0.5};
        for (const double k : arange(1.0, r, 1.0))
            base.push_back(k);
    }
    std::vector<double> times;
    for (const double t : base)
        if (t > 0.0 && t <= r)
            times.push_back(t);
    return times;
}

inline Validation validate_space(const Config& cfg)
{
    const bool h3 = cfg.space == "H3R";
    const bool h2 = cfg.space == "H2R";
    if (!h3 && !h2)
        throw UsageError("validate has exact oracles for H2R and H3R only, not " + cfg.space);
    const RestrictedRootSystem rs = catalog_space(cfg.space);
    const OperatorSpec op = OperatorSpec::scalar_laplacian(rs);
    const std::vector<double> radii = cfg.r.empty() ? arange(2.0, h3 ? 30.0 : 20.0, 1.0) : cfg.r;
    require_nonempty(radii, "r");
    for (const double r : radii)
        if (r < kEnvelopeMinDistance)
            throw UsageError("validate sweeps the regime d >= 2; grid 'r' has " + format_real(r));

    Validation out;
    out.rows.columns = {"case", "r", "t_or_s", "exact", "envelope", "ratio"};
    std::vector<Baseline> baselines;

    auto coord = [&](double r) { return CartanCoordinate{ChamberVector{Eigen::VectorXd::Constant(1, r)}, r}; };
    auto add = [&](Baseline& b, const std::string& label, double r, double p, double log_exact, double log_env) {
        const double ratio = std::exp(log_exact - log_env);
        out.rows.add({label, r, p, std::exp(log_exact), std::exp(log_env), ratio});
        b.ratios.push_back(ratio);
    };

    if (h3) {
        Baseline green{"green", {}, 0.159, 0.163};
        const std::vector<double> params = cfg.s.empty() ? std::vector<double>{0.25, 0.5, 1.0, 2.0} : cfg.s;
        require_nonempty(params, "s");
        for (const double r : radii)
            for (const double s : params) {
                const double log_exact = std::log(h3_green_closed_form(s, r));
                add(green, "green", r, s, log_exact, green_envelope(rs, coord(r), SpectralParameter(s)).log_value);
            }
        baselines.push_back(std::move(green));

        Baseline heat{"heat", {}, 0.0, 0.0, 5.0};
        for (const double r : radii)
            for (const double t : heat_times(cfg, r))
                add(heat, "heat", r, t, log_h3_heat(t, r), heat_envelope(rs, coord(r), t, op).log_value);
        baselines.push_back(std::move(heat));
    } else {
        Baseline heat{"heat", {}, 0.0, 0.0, 10.0, 0.0, 1e-6};
        for (const double r : radii)
            for (const double t : heat_times(cfg, r)) {
                const OracleValue exact = h2_heat_mckean(t, r);
                heat.worst_self_error = std::max(heat.worst_self_error, exact.rel_error);
                add(heat, "heat", r, t, exact.log_value, heat_envelope(rs, coord(r), t, op).log_value);
            }
        baselines.push_back(std::move(heat));
    }

    out.summary.columns = {"case", "count", "min_ratio", "max_ratio", "geometric_mean", "spread", "criterion", "pass"};
    for (const auto& b : baselines) {
        if (b.ratios.empty())
            throw UsageError("validate: case '" + b.name + "' has an empty grid");
        const RatioSummary s = summarize_ratios(b.ratios);
        bool pass = true;
        std::string criterion;
        if (b.lo < b.hi) {
            pass = pass && s.min >= b.lo && s.max <= b.hi;
            criterion = "ratio in [" + short_real(b.lo) + ";" + short_real(b.hi) + "]";
        }
        if (b.max_spread > 0.0) {
            pass = pass && s.spread() <= b.max_spread;
            criterion = "max/min <= " + short_real(b.max_spread);
        }
        if (b.max_self_error > 0.0) {
            pass = pass && b.worst_self_error <= b.max_self_error;
            criterion += "; self-error <= " + short_real(b.max_self_error);
        }
        out.pass = out.pass && pass;
        out.summary.add({b.name, static_cast<std::int64_t>(s.count), s.min, s.max, s.geometric_mean, s.spread(),
                         criterion, std::string(pass ? "yes" : "no")});
    }
    return out;
}

inline Table spaces_table(const Config& cfg, bool explicit_space)
{
    const std::vector<std::string> labels =
        explicit_space ? std::vector<std::string>{cfg.space}
                       : std::vector<std::string>{"H2R", "H3R", "H4R", "H2C", "H3C", "SL2R", "SL3R", "SL4R"};
    Table table;
    table.columns = {"space", "rank", "dim", "multiplicity_sum", "rho_norm", "beta", "rho_min"};
    for (const auto& label : labels) {
        const RestrictedRootSystem rs = catalog_space(label);
        table.add({label, static_cast<std::int64_t>(rs.rank()), static_cast<std::int64_t>(rs.dim()),
                   static_cast<std::int64_t>(rs.multiplicity_sum()), rs.rho_norm(), beta_exponent(rs), rho_min(rs)});
    }
    return table;
}

inline LatticeSpec lattice_spec(const Config& cfg)
{
    if (cfg.model.empty())
        throw UsageError("lattice needs a 'model' (hyperboloid or unimodular)");
    LatticeSpec spec;
    spec.model = parse_model(cfg.model);
    spec.name = cfg.name;
    spec.generators = cfg.generators;
    if (!spec.generators.empty())
        spec.size = static_cast<int>(spec.generators.front().rows());
    else
        spec.size = cfg.size.value_or(spec.model == Model::hyperboloid ? 3 : 2);
    if (cfg.size && *cfg.size != spec.size)
        throw UsageError("config 'size' disagrees with the generator size");
    return spec;
}

struct LatticeRun {
    nlohmann::ordered_json report;
    Table samples;
};

inline LatticeRun lattice_run(const Config& cfg, const std::string& samples_path)
{
    const LatticeSpec spec = lattice_spec(cfg);
    if (cfg.max_word_length < 1)
        throw UsageError("max_word_length must be at least 1");
    if (cfg.max_samples < 1)
        throw UsageError("max_samples must be positive");
    try {
        validate(spec);
    } catch (const ModelError& e) {
        throw UsageError(e.what());
    }
    const RestrictedRootSystem rs = lattice_space(spec);
    const OperatorSpec op = cfg.alpha0 ? OperatorSpec{*cfg.alpha0} : OperatorSpec::scalar_laplacian(rs);

    const Orbit orbit = enumerate_orbit(
        spec, OrbitOptions{cfg.max_word_length, cfg.dedup_tol, static_cast<std::size_t>(cfg.max_samples), cfg.threads});

    LatticeRun run;
    run.samples.columns = {"word_length", "dist", "rho_radial"};
    for (const auto& s : orbit.samples)
        run.samples.add({static_cast<std::int64_t>(s.word_length), s.dist, s.rho_radial});

    const CriticalExponents ce = critical_exponents(orbit.samples);
    const InequalityCheck check = exponent_inequality_check(rs, ce.delta, ce.delta_tilde);
    const auto& d = ce.diagnostics;
    auto nan_to_null = [](double x) { return std::isnan(x) ? nlohmann::ordered_json() : nlohmann::ordered_json(x); };

    auto& j = run.report;
    j["name"] = spec.name;
    j["space"] = rs.name();
    j["samples"] = orbit.samples.size();
    j["depth"] = orbit.depth;
    j["delta"] = ce.delta;
    j["delta_tilde"] = ce.delta_tilde;
    j["alpha0"] = op.alpha0;
    j["lambda0_lower"] = lambda0_lower_bound(op, ce.delta_tilde);
    j["spectral_statement"] = spectral_bound_statement(op, ce.delta_tilde);
    j["inequality_margins"] = {{"lower", check.lower_margin}, {"upper", check.upper_margin}, {"holds", check.holds}};
    j["diagnostics"] = {{"complete_radius", d.complete_radius},
                        {"shell_width", d.shell_width},
                        {"shells", d.shells},
                        {"window", {d.window_lo, d.window_hi}},
                        {"counting_slope", d.counting_slope},
                        {"residual_rms", d.residual_rms},
                        {"modified_residual_rms", d.modified_residual_rms},
                        {"series_abscissa", nan_to_null(d.series_abscissa)},
                        {"modified_series_abscissa", nan_to_null(d.modified_series_abscissa)}};
    j["warnings"] = orbit.warnings;
    j["samples_csv_path"] = samples_path.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(samples_path);
    return run;
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty())
        out << text;
    else
        write_text(path, text);
}

inline std::pair<int, std::string> classify(const std::exception& e)
{
    if (dynamic_cast<const UsageError*>(&e))
        return {kExitUsage, "UsageError"};
    if (dynamic_cast<const CatalogError*>(&e))
        return {kExitUsage, "CatalogError"};
    if (dynamic_cast<const HypothesisError*>(&e))
        return {kExitUsage, "HypothesisError"};
    if (dynamic_cast<const ModelError*>(&e))
        return {kExitUsage, "ModelError"};
    if (dynamic_cast<const DomainError*>(&e))
        return {kExitUsage, "DomainError"};
    if (dynamic_cast<const TruncationError*>(&e))
        return {kExitComputation, "TruncationError"};
    if (dynamic_cast<const EstimationError*>(&e))
        return {kExitComputation, "EstimationError"};
    if (dynamic_cast<const QuadratureError*>(&e))
        return {kExitComputation, "QuadratureError"};
    if (dynamic_cast<const StructuralError*>(&e))
        return {kExitComputation, "StructuralError"};
    if (dynamic_cast<const ComputationError*>(&e))
        return {kExitComputation, "ComputationError"};
    return {kExitComputation, "Error"};
}

inline int error_record(std::ostream& err, int code, const std::string& type, const std::string& message,
                        nlohmann::ordered_json extra = {})
{
    nlohmann::ordered_json record{{"status", "error"},
                                  {"kind", code == kExitUsage ? "usage" : "computation"},
                                  {"exit_code", code},
                                  {"error_type", type},
                                  {"message", message}};
    if (!extra.is_null())
        record["detail"] = std::move(extra);
    err << record.dump() << "\n";
    return code;
}

} // namespace detail

/// Runs one command; returns the exit status. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kernel envelopes, volume estimates and critical exponents on symmetric spaces", "symkernel"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path;
    std::string space;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_path;
    std::string kind;
    auto* config_opt = app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* space_opt = app.add_option("--space", space, "catalog label: HnR, HnC or SLnR");
    auto* seed_opt = app.add_option("--seed", seed, "random seed for Monte Carlo");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out_path, "output path (stdout when omitted)");

    auto* spaces_cmd = app.add_subcommand("spaces", "list catalog spaces");
    auto* envelope_cmd = app.add_subcommand("envelope", "evaluate the green or heat envelope on a grid");
    envelope_cmd->add_option("kind", kind, "green | heat")->required()->check(CLI::IsMember({"green", "heat"}));
    auto* volume_cmd = app.add_subcommand("volume", "Monte Carlo ball volumes against their envelope");
    auto* validate_cmd = app.add_subcommand("validate", "exact kernels against envelopes on H2R or H3R");
    auto* lattice_cmd = app.add_subcommand("lattice", "orbit enumeration and critical exponents");
    for (auto* sub : {spaces_cmd, envelope_cmd, volume_cmd, validate_cmd, lattice_cmd})
        sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return detail::error_record(err, kExitUsage, "UsageError", e.what());
    }

    try {
        Config cfg;
        if (config_opt->count() > 0)
            detail::apply_json(cfg, detail::load_json_file(config_path));
        for (auto* sub : app.get_subcommands())
            cfg.command = sub->get_name();
        if (envelope_cmd->parsed())
            cfg.kind = kind;
        if (space_opt->count() > 0)
            cfg.space = space;
        if (seed_opt->count() > 0)
            cfg.seed = seed;
        if (threads_opt->count() > 0)
            cfg.threads = threads;
        if (out_opt->count() > 0)
            cfg.out = out_path;
        if (cfg.threads < 1)
            throw UsageError("threads must be positive");

        if (cfg.command == "spaces") {
            detail::emit(render_csv(detail::spaces_table(cfg, space_opt->count() > 0)), cfg.out, out);
        } else if (cfg.command == "envelope") {
            detail::emit(render_csv(detail::envelope_table(cfg)), cfg.out, out);
        } else if (cfg.command == "volume") {
            detail::emit(render_csv(detail::volume_table(cfg)), cfg.out, out);
        } else if (cfg.command == "validate") {
            const detail::Validation v = detail::validate_space(cfg);
            if (cfg.out.empty()) {
                out << render_csv(v.rows) << "\n" << render_csv(v.summary);
            } else {
                write_text(cfg.out, render_csv(v.rows));
                write_text(cfg.out + ".summary.csv", render_csv(v.summary));
            }
            if (!v.pass)
                return detail::error_record(err, kExitComputation, "BaselineFailure",
                                            "validate: at least one ratio baseline failed; see the summary");
        } else if (cfg.command == "lattice") {
            const std::string samples_path = cfg.out.empty() ? std::string() : cfg.out + ".samples.csv";
            const detail::LatticeRun run = detail::lattice_run(cfg, samples_path);
            if (!samples_path.empty())
                emit_csv(run.samples, samples_path);
            detail::emit(render_json(run.report), cfg.out, out);
        }
        return kExitOk;
    } catch (const TruncationError& e) {
        return detail::error_record(err, kExitComputation, "TruncationError", e.what(),
                                    {{"partial_samples", e.partial_orbit.samples.size()},
                                     {"depth", e.partial_orbit.depth}});
    } catch (const std::exception& e) {
        const auto [code, type] = detail::classify(e);
        return detail::error_record(err, code, type, e.what());
    }
}

} // namespace symkernel::app
