// ehd-lab: command-line front end. Every output starts with a manifest (command, parameters,
// tool version, tolerances) so identical invocations give bit-identical files.

#include "ehd/arc_spectrum.hpp"
#include "ehd/error.hpp"
#include "ehd/field_lab.hpp"
#include "ehd/parallel.hpp"
#include "ehd/partition_optimizer.hpp"
#include "ehd/regularized_solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using nlohmann::ordered_json;

namespace {

constexpr const char* tool_version = "1.0.0";

enum class Format { csv, json };

struct Report {
    std::string command;
    ordered_json parameters = ordered_json::object();
    ordered_json tolerances = ordered_json::object();
    ordered_json summary = ordered_json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<ordered_json>> rows;
    std::vector<std::string> outputs;
    int exit_code = 0;

    ordered_json manifest() const
    {
        ordered_json m;
        m["tool"] = "ehd-lab";
        m["version"] = tool_version;
        m["command"] = command;
        m["parameters"] = parameters;
        m["tolerances"] = tolerances;
        m["threads"] = ehd::thread_count();
        m["outputs"] = outputs;
        return m;
    }

    std::vector<std::string> manifest_lines() const
    {
        std::vector<std::string> lines{"tool: ehd-lab " + std::string(tool_version), "command: " + command};
        for (const auto& [k, v] : parameters.items()) lines.push_back("parameter " + k + " = " + scalar(v));
        for (const auto& [k, v] : tolerances.items()) lines.push_back("tolerance " + k + " = " + scalar(v));
        lines.push_back("threads: " + std::to_string(ehd::thread_count()));
        for (const auto& o : outputs) lines.push_back("output: " + o);
        return lines;
    }

    static std::string scalar(const ordered_json& v)
    {
        if (v.is_number_float()) {
            const double x = v.get<double>();
            if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
            if (std::isnan(x)) return "nan";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }
        if (v.is_string()) return v.get<std::string>();
        if (v.is_null()) return "";
        return v.dump();
    }
};

// JSON has no infinities: they are written as null.
ordered_json number(double x)
{
    return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

void emit(std::ostream& os, const Report& r, Format format)
{
    if (format == Format::json) {
        ordered_json out;
        out["manifest"] = r.manifest();
        out["summary"] = r.summary;
        if (!r.columns.empty()) {
            out["table"]["columns"] = r.columns;
            out["table"]["rows"] = ordered_json::array();
            for (const auto& row : r.rows) out["table"]["rows"].push_back(row);
        }
        os << out.dump(2) << "\n";
        return;
    }
    for (const auto& line : r.manifest_lines()) os << "# " << line << "\n";
    for (const auto& [k, v] : r.summary.items()) os << "# summary " << k << " = " << Report::scalar(v) << "\n";
    if (r.columns.empty()) {
        // Summary-only commands print the summary as a one-row table.
        bool first = true;
        for (const auto& [k, v] : r.summary.items()) {
            os << (first ? "" : ",") << k;
            first = false;
        }
        os << "\n";
        first = true;
        for (const auto& [k, v] : r.summary.items()) {
            os << (first ? "" : ",") << Report::scalar(v);
            first = false;
        }
        os << "\n";
        return;
    }
    for (std::size_t k = 0; k < r.columns.size(); ++k) os << (k ? "," : "") << r.columns[k];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << Report::scalar(row[k]);
        os << "\n";
    }
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream os(path);
    ehd::require(bool(os), ehd::Errc::io, "cannot open '" + path + "' for writing");
    return os;
}

ehd::Phase parse_phase(const std::string& s)
{
    if (s == "gas") return ehd::Phase::gas;
    if (s == "fluid") return ehd::Phase::fluid;
    throw ehd::Error(ehd::Errc::domain, "phase must be gas or fluid");
}

ehd::Arc parse_arc(const std::string& s)
{
    const auto comma = s.find(',');
    ehd::require(comma != std::string::npos, ehd::Errc::domain, "arc must be given as a,b in radians");
    double a = 0.0, b = 0.0;
    try {
        a = std::stod(s.substr(0, comma));
        b = std::stod(s.substr(comma + 1));
    } catch (const std::exception&) {
        throw ehd::Error(ehd::Errc::domain, "arc endpoints must be numbers: '" + s + "'");
    }
    return ehd::make_arc(a, b);
}

ehd::SpectrumConfig spectrum_config(int n_grid, const std::string& method)
{
    ehd::SpectrumConfig c;
    c.n_grid = n_grid;
    if (method == "grid") c.method = ehd::SpectrumMethod::grid;
    else if (method == "shooting") c.method = ehd::SpectrumMethod::shooting;
    else throw ehd::Error(ehd::Errc::domain, "method must be grid or shooting");
    return c;
}

ordered_json spectrum_tolerances(const ehd::SpectrumConfig& c)
{
    ordered_json t;
    t["n_grid"] = c.n_grid;
    t["richardson"] = c.extrapolate;
    t["method"] = ehd::to_string(c.method);
    t["shooting_tol"] = c.shooting_tol;
    return t;
}

struct Options {
    std::string format = "csv";
    std::string out;
    // eigen
    std::string arc = "0,1.5707963267948966";
    std::string phase = "gas";
    int n = 2048;
    // taylor, matched
    double tol = 1e-10;
    std::string method = "grid";
    // betastar
    std::string family = "connected";
    int scan = 256;
    // monitor
    std::string field;
    std::string check = "phi";
    double beta = 1.0;
    double beta_star = 3.8290;
    double gamma = 0.25;
    int dimension = 2;
    int samples = 100;
    unsigned seed = 20240611;
    // solve
    std::string config;
    // cusp
    std::string curve;
    // sample
    std::string kind = "matched";
    int n_r = 200;
    int n_theta = 128;
    double dr = 1.0 / 200;
};

Report run_eigen(const Options& o)
{
    const ehd::Arc arc = parse_arc(o.arc);
    const ehd::Phase phase = parse_phase(o.phase);
    const ehd::EigenResult e = ehd::eigenvalue(ehd::ArcSet{arc}, phase, o.n);
    Report r;
    r.command = "eigen";
    r.parameters["arc_lo"] = arc.lo;
    r.parameters["arc_hi"] = arc.hi;
    r.parameters["phase"] = o.phase;
    r.parameters["n"] = o.n;
    r.tolerances["grid_cells"] = o.n;
    r.tolerances["relative_residual"] = e.relative_residual;
    r.summary["lambda_grid"] = e.lambda;
    const bool extrapolate = o.n >= 32 && o.n % 2 == 0;
    const double lambda = extrapolate ? ehd::extrapolated_eigenvalue(ehd::ArcSet{arc}, phase, o.n) : e.lambda;
    r.tolerances["richardson"] = extrapolate;
    r.summary["lambda"] = lambda;
    r.summary["alpha"] = ehd::alpha_of(lambda, phase);
    r.summary["bc_lo"] = ehd::to_string(e.bc[0]);
    r.summary["bc_hi"] = ehd::to_string(e.bc[1]);
    if (!o.out.empty()) {
        r.outputs.push_back(o.out);
        Report table = r;
        table.columns = {"theta", "g"};
        for (Eigen::Index k = 0; k < e.grid.size(); ++k) table.rows.push_back({e.grid(k), e.eigenfunction(k)});
        std::ofstream os = open_output(o.out);
        emit(os, table, Format::csv);
    }
    return r;
}

Report run_taylor(const Options& o)
{
    const ehd::SpectrumConfig c = spectrum_config(o.n, o.method);
    const ehd::TaylorCone t = ehd::taylor_cone(o.tol, c);
    Report r;
    r.command = "taylor";
    r.parameters["tol"] = o.tol;
    r.tolerances = spectrum_tolerances(c);
    r.summary["theta_t"] = t.theta_t;
    r.summary["theta_t_deg"] = t.theta_t * 180.0 / ehd::pi;
    r.summary["opening_deg"] = t.opening_deg;
    r.summary["alpha"] = t.alpha;
    return r;
}

Report run_matched(const Options& o)
{
    const ehd::SpectrumConfig c = spectrum_config(o.n, o.method);
    const ehd::MatchedHomogeneity m = ehd::matched_homogeneity(o.tol, c);
    Report r;
    r.command = "matched";
    r.parameters["tol"] = o.tol;
    r.tolerances = spectrum_tolerances(c);
    r.summary["theta1"] = m.theta1;
    r.summary["alpha_star"] = m.alpha_star;
    r.summary["lambda_star"] = m.lambda_star;
    r.summary["residual"] = m.residual;
    r.summary["gas_arc_hi"] = m.gas_arc.hi;
    r.summary["bisection_steps"] = m.bisection_steps;
    r.summary["matched_split_value"] = 2.0 * std::sqrt(m.alpha_star * (m.alpha_star + 1.0));
    return r;
}

Report run_betastar(const Options& o)
{
    const ehd::SpectrumConfig c = spectrum_config(o.n, o.method);
    ehd::BetaStarReport b;
    if (o.family == "connected") b = ehd::beta_star_connected(o.scan, o.tol, c);
    else if (o.family == "two") b = ehd::beta_star_two_component(o.scan, o.tol, c);
    else throw ehd::Error(ehd::Errc::domain, "family must be connected or two");
    Report r;
    r.command = "betastar";
    r.parameters["family"] = o.family;
    r.parameters["scan"] = o.scan;
    r.parameters["tol"] = o.tol;
    r.tolerances = spectrum_tolerances(c);
    r.tolerances["grid_error"] = b.grid_error;
    r.summary["best_value"] = b.best_value;
    r.summary["theta"] = b.best_config.theta;
    r.summary["a"] = b.best_config.a;
    r.summary["b"] = b.best_config.b;
    r.summary["certified_lower_bound_ok"] = b.certified_lower_bound_ok;
    if (o.family == "two") {
        r.summary["connected_value"] = b.connected_value;
        r.summary["undercuts_connected"] = b.undercuts_connected;
    }
    if (!o.out.empty()) {
        r.outputs.push_back(o.out);
        Report table = r;
        table.columns = {"theta", "a", "b", "value"};
        for (const auto& p : b.scan) table.rows.push_back({p.config.theta, p.config.a, p.config.b, number(p.value)});
        std::ofstream os = open_output(o.out);
        emit(os, table, Format::csv);
    }
    return r;
}

void add_curve(Report& r, const ehd::MonitorCurve& curve)
{
    r.columns = {"r", "value"};
    double worst = 0.0;
    for (std::size_t k = 0; k < curve.radii.size(); ++k) {
        r.rows.push_back({curve.radii[k], number(curve.values[k])});
        worst = std::max(worst, std::abs(curve.values[k]));
    }
    r.summary["kind"] = ehd::to_string(curve.kind);
    r.summary["max_abs"] = worst;
}

Report run_monitor(const Options& o)
{
    const ehd::MeridianField f = ehd::load_field(o.field);
    const ehd::IdentityTolerance identity;
    Report r;
    r.command = "monitor";
    r.parameters["field"] = o.field;
    r.parameters["check"] = o.check;
    r.parameters["beta"] = o.beta;
    r.parameters["betastar"] = o.beta_star;
    r.parameters["n"] = o.dimension;
    r.tolerances["h"] = f.h();
    r.tolerances["c1"] = identity.c1;
    r.tolerances["c2"] = identity.c2;
    r.tolerances["identity"] = identity(f);
    r.summary["provenance"] = f.provenance();

    const ehd::GrowthParams params{o.beta, o.gamma, o.beta_star, o.dimension};
    if (o.check == "phi") {
        add_curve(r, ehd::monitor_curve(f, ehd::MonitorKind::phi, params));
        bool monotone = true;
        for (std::size_t k = 1; k < r.rows.size(); ++k) {
            monotone = monotone && r.rows[k][1].get<double>() >= r.rows[k - 1][1].get<double>() - identity(f);
        }
        r.summary["nondecreasing"] = monotone;
    } else if (o.check == "weiss") {
        add_curve(r, ehd::monitor_curve(f, ehd::MonitorKind::weiss_m, params));
    } else if (o.check == "flux") {
        add_curve(r, ehd::monitor_curve(f, ehd::MonitorKind::residual, params));
    } else if (o.check == "jm") {
        add_curve(r, ehd::jm_relation_residual(f, o.beta, o.dimension));
    } else if (o.check == "firstvar") {
        r.parameters["samples"] = o.samples;
        r.parameters["seed"] = o.seed;
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double reach = f.r_max() - 2.0 * f.dr();
        r.columns = {"c1", "c2", "radius", "a1", "a2", "residual"};
        double worst = 0.0;
        while (int(r.rows.size()) < o.samples) {
            ehd::TestVectorField phi;
            phi.radius = (0.1 + 0.2 * unit(rng)) * reach;
            phi.c1 = 0.6 * reach * unit(rng);
            phi.c2 = (-0.6 + 1.2 * unit(rng)) * reach;
            phi.a1 = -1.0 + 2.0 * unit(rng);
            phi.a2 = -1.0 + 2.0 * unit(rng);
            if (std::hypot(phi.c1, phi.c2) + phi.radius > reach) continue;
            const double res = ehd::first_variation_residual(f, phi);
            worst = std::max(worst, res);
            r.rows.push_back({phi.c1, phi.c2, phi.radius, phi.a1, phi.a2, res});
        }
        r.summary["max_residual"] = worst;
        r.summary["scaled_tolerance"] = 10.0 * f.h() * f.h() * f.scale();
    } else if (o.check == "cacc") {
        const ehd::CaccioppoliReport c = ehd::caccioppoli_check(f);
        r.summary["lhs_plus"] = c.lhs_plus;
        r.summary["rhs_plus"] = c.rhs_plus;
        r.summary["lhs_minus"] = c.lhs_minus;
        r.summary["rhs_minus"] = c.rhs_minus;
        r.summary["c_min"] = number(c.c_min);
    } else {
        throw ehd::Error(ehd::Errc::domain, "check must be phi, weiss, flux, firstvar, jm or cacc");
    }
    return r;
}

Report run_solve(const Options& o)
{
    const ehd::SolverConfig c = ehd::load_solver_config(o.config);
    const ehd::SolverState s = ehd::solve(c);
    Report r;
    r.command = "solve";
    r.parameters["config"] = o.config;
    {
        std::ostringstream cfg;
        ehd::write_solver_config(cfg, c);
        std::string line;
        std::istringstream in(cfg.str());
        while (std::getline(in, line)) {
            const auto eq = line.find(" = ");
            r.parameters[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    r.tolerances["newton_tol"] = c.newton.tol;
    r.tolerances["h"] = c.h;
    r.summary["converged"] = s.converged;
    r.summary["iterations"] = s.iterations;
    r.summary["picard_steps"] = s.picard_steps;
    r.summary["residual_norm"] = s.residual_norm;
    r.summary["initialization"] = s.initialization;
    const ehd::FreeBoundaryCurve curve = ehd::extract_free_boundary(s);
    r.summary["free_boundary_points"] = curve.points.size();
    if (!curve.points.empty()) {
        // The solver domain excludes the origin; the curve is in solver coordinates.
        r.summary["free_boundary_start_x1"] = curve.points.front()[0];
        r.summary["free_boundary_start_x2"] = curve.points.front()[1];
    }
    r.summary["singular_points"] = ehd::detect_singular_set(s, 0.05).size();

    if (!o.out.empty()) {
        r.outputs = {o.out + "_v.txt", o.out + "_u.txt", o.out + "_boundary.csv"};
        const auto manifest = r.manifest_lines();
        {
            std::ofstream os = open_output(r.outputs[0]);
            std::string prov;
            for (const auto& m : manifest) prov += m + "; ";
            ehd::write_field(os, ehd::state_field(s, "v from ehd-lab solve; " + prov));
        }
        {
            std::ofstream os = open_output(r.outputs[1]);
            ehd::CartesianField u = ehd::recover_u(s);
            u.provenance += "; " + r.command + " " + o.config;
            ehd::write_field(os, u);
        }
        {
            std::ofstream os = open_output(r.outputs[2]);
            ehd::write_curve(os, curve, manifest);
        }
    }
    if (!s.converged) {
        std::cerr << "ehd-lab: iteration-failure: Newton did not converge: residual "
                  << Report::scalar(s.residual_norm) << " after " << s.iterations << " iterations\n";
        r.exit_code = 3;
    }
    return r;
}

Report run_cusp(const Options& o)
{
    std::ifstream is(o.curve);
    ehd::require(bool(is), ehd::Errc::io, "cannot open '" + o.curve + "'");
    const ehd::CuspReport c = ehd::cusp_ratio(ehd::read_curve(is));
    Report r;
    r.command = "cusp";
    r.parameters["curve"] = o.curve;
    r.columns = {"arclength", "ratio"};
    for (std::size_t k = 0; k < c.ratio.radii.size(); ++k) r.rows.push_back({c.ratio.radii[k], c.ratio.values[k]});
    r.summary["loglog_slope"] = number(c.loglog_slope);
    r.summary["infinite_vertices"] = c.infinite_vertices;
    return r;
}

Report run_sample(const Options& o)
{
    const ehd::FieldGrid grid{o.n_r, o.n_theta, o.dr};
    ehd::require(grid.n_r >= 4 && grid.n_theta >= 4 && grid.dr > 0.0, ehd::Errc::domain, "invalid field grid");
    Report r;
    r.command = "sample";
    r.parameters["kind"] = o.kind;
    r.parameters["n_r"] = o.n_r;
    r.parameters["n_theta"] = o.n_theta;
    r.parameters["dr"] = o.dr;
    r.parameters["n"] = o.n;
    ehd::MeridianField f = [&] {
        if (o.kind == "x2") {
            return ehd::sample_field([](double, double x2) { return x2; }, grid, ehd::PhaseRule::all_gas, "u = x2");
        }
        if (o.kind == "neg_x1sq") {
            return ehd::sample_field([](double x1, double) { return -x1 * x1; }, grid, ehd::PhaseRule::by_sign,
                                     "u = -x1^2");
        }
        if (o.kind == "matched") {
            const ehd::MatchedHomogeneity m = ehd::matched_homogeneity(o.tol);
            return ehd::make_homogeneous_field(m.alpha_star, ehd::eigenvalue(ehd::ArcSet{m.gas_arc}, ehd::Phase::gas, o.n),
                                               ehd::eigenvalue(ehd::ArcSet{m.fluid_arc}, ehd::Phase::fluid, o.n), grid);
        }
        throw ehd::Error(ehd::Errc::domain, "kind must be x2, neg_x1sq or matched");
    }();
    r.summary["h"] = f.h();
    r.summary["scale"] = f.scale();
    ehd::require(!o.out.empty(), ehd::Errc::domain, "sample needs --out");
    r.outputs.push_back(o.out);
    std::ofstream os = open_output(o.out);
    ehd::write_field(os, f);
    return r;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ehd-lab: spectra, partitions, monotonicity monitors and the regularized solver"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };
    const auto spectrum = [&](CLI::App* sub) {
        sub->add_option("--n", o.n, "grid cells on (0, pi)");
        sub->add_option("--method", o.method, "grid or shooting")->check(CLI::IsMember({"grid", "shooting"}));
    };

    CLI::App* eigen = app.add_subcommand("eigen", "ground state of one arc");
    eigen->add_option("--arc", o.arc, "a,b in radians")->required();
    eigen->add_option("--phase", o.phase, "gas or fluid")->check(CLI::IsMember({"gas", "fluid"}));
    eigen->add_option("--n", o.n, "grid cells on (0, pi)");
    eigen->add_option("--out", o.out, "eigenfunction CSV");
    common(eigen);

    CLI::App* taylor = app.add_subcommand("taylor", "gas cone of degree one half");
    taylor->add_option("--tol", o.tol, "bisection tolerance");
    spectrum(taylor);
    common(taylor);

    CLI::App* matched = app.add_subcommand("matched", "matched homogeneity split");
    matched->add_option("--tol", o.tol, "bisection tolerance");
    spectrum(matched);
    common(matched);

    CLI::App* betastar = app.add_subcommand("betastar", "minimal split value over a partition family");
    betastar->add_option("--family", o.family, "connected or two")->check(CLI::IsMember({"connected", "two"}));
    betastar->add_option("--scan", o.scan, "scan resolution");
    betastar->add_option("--tol", o.tol, "refinement tolerance");
    betastar->add_option("--out", o.out, "scan CSV");
    spectrum(betastar);
    common(betastar);

    CLI::App* monitor = app.add_subcommand("monitor", "monotonicity monitors and identities of a field");
    monitor->add_option("--field", o.field, "field table")->required();
    monitor->add_option("--check", o.check, "phi, weiss, flux, firstvar, jm or cacc")
        ->check(CLI::IsMember({"phi", "weiss", "flux", "firstvar", "jm", "cacc"}));
    monitor->add_option("--beta", o.beta, "Weiss exponent");
    monitor->add_option("--betastar", o.beta_star, "ACF exponent");
    monitor->add_option("--dimension", o.dimension, "dimension constant in M");
    monitor->add_option("--samples", o.samples, "test vector fields for firstvar");
    monitor->add_option("--seed", o.seed, "seed for firstvar");
    common(monitor);

    CLI::App* solve = app.add_subcommand("solve", "regularized free boundary solve");
    solve->add_option("--config", o.config, "key = value config file")->required();
    solve->add_option("--out", o.out, "prefix for v, u and boundary files");
    common(solve);

    CLI::App* cusp = app.add_subcommand("cusp", "cusp diagnostic of a free boundary curve");
    cusp->add_option("--curve", o.curve, "CSV of x1,x2 points")->required();
    common(cusp);

    CLI::App* sample = app.add_subcommand("sample", "write a reference field table");
    sample->add_option("--kind", o.kind, "x2, neg_x1sq or matched")->check(CLI::IsMember({"x2", "neg_x1sq", "matched"}));
    sample->add_option("--n-r", o.n_r, "radial samples");
    sample->add_option("--n-theta", o.n_theta, "angular samples");
    sample->add_option("--dr", o.dr, "radial step");
    sample->add_option("--n", o.n, "eigen grid cells for matched fields");
    sample->add_option("--out", o.out, "field table")->required();
    common(sample);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Report r;
        if (*eigen) r = run_eigen(o);
        else if (*taylor) r = run_taylor(o);
        else if (*matched) r = run_matched(o);
        else if (*betastar) r = run_betastar(o);
        else if (*monitor) r = run_monitor(o);
        else if (*solve) r = run_solve(o);
        else if (*cusp) r = run_cusp(o);
        else r = run_sample(o);
        emit(std::cout, r, o.format == "json" ? Format::json : Format::csv);
        return r.exit_code;
    } catch (const ehd::Error& e) {
        std::cerr << "ehd-lab: " << ehd::to_string(e.code()) << ": " << e.what() << "\n";
        return ehd::is_numerical(e.code()) ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "ehd-lab: " << e.what() << "\n";
        return 2;
    }
}
