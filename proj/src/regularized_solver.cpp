#include "ehd/regularized_solver.hpp"

#include "ehd/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ehd {

namespace {

double smoothstep(double t, int ramp)
{
    require(ramp >= 1 && ramp <= 3, Errc::domain, "ramp order must be 1, 2 or 3");
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    switch (ramp) {
    case 1: return t * t * (3.0 - 2.0 * t);
    case 2: return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    case 3: return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
    }
    throw Error(Errc::domain, "ramp order must be 1, 2 or 3");
}

double smoothstep_derivative(double t, int ramp)
{
    require(ramp >= 1 && ramp <= 3, Errc::domain, "ramp order must be 1, 2 or 3");
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = t * (1.0 - t);
    switch (ramp) {
    case 1: return 6.0 * s;
    case 2: return 30.0 * s * s;
    case 3: return 140.0 * s * s * s;
    }
    throw Error(Errc::domain, "ramp order must be 1, 2 or 3");
}

// Interior unknowns are numbered (i - 1) + (j - 1) (n1 - 1) for 1 <= i < n1, 1 <= j < n2.
struct Layout {
    int n1 = 0;
    int n2 = 0;
    double x1_min = 0.0;
    double h = 0.0;

    int m1() const { return n1 - 1; }
    int unknowns() const { return (n1 - 1) * (n2 - 1); }
    int index(int i, int j) const { return (i - 1) + (j - 1) * (n1 - 1); }
    double x(int i) const { return x1_min + i * h; }
};

// Row i of the equation divided by x1:
//   [(v_E - v)/x_{i+1/2} - (v - v_W)/x_{i-1/2}] / h^2 + (v_N - 2v + v_S) / (x_i h^2) + v B(v) / x_i^3.
// The linear part is symmetric, which lets Newton and Picard use an LDL^T factorization.
double scaled_residual(const Layout& g, const Eigen::MatrixXd& v, int i, int j, double eps, int ramp)
{
    const double h2 = g.h * g.h;
    const double xe = g.x(i) + 0.5 * g.h;
    const double xw = g.x(i) - 0.5 * g.h;
    const double x = g.x(i);
    const double c = v(i, j);
    return ((v(i + 1, j) - c) / xe - (c - v(i - 1, j)) / xw) / h2 + (v(i, j + 1) - 2.0 * c + v(i, j - 1)) / (x * h2) +
           c * b_eps(c, eps, ramp) / (x * x * x);
}

enum class Linearization { newton, picard, gas_linear };

// Assembles the scaled Jacobian (Newton), the lagged-coefficient operator (Picard), or the
// B = 1 operator at the current iterate.
Eigen::SparseMatrix<double> assemble(const Layout& g, const Eigen::MatrixXd& v, double eps, int ramp, Linearization kind)
{
    const double h2 = g.h * g.h;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(std::size_t(g.unknowns()) * 5);
    for (int j = 1; j < g.n2; ++j) {
        for (int i = 1; i < g.n1; ++i) {
            const int k = g.index(i, j);
            const double x = g.x(i);
            const double ce = 1.0 / ((x + 0.5 * g.h) * h2);
            const double cw = 1.0 / ((x - 0.5 * g.h) * h2);
            const double cn = 1.0 / (x * h2);
            const double c = v(i, j);
            double reaction = 0.0;
            switch (kind) {
            case Linearization::newton:
                reaction = b_eps(c, eps, ramp) + c * b_eps_derivative(c, eps, ramp);
                break;
            case Linearization::picard: reaction = b_eps(c, eps, ramp); break;
            case Linearization::gas_linear: reaction = 1.0; break;
            }
            t.emplace_back(k, k, -(ce + cw + 2.0 * cn) + reaction / (x * x * x));
            if (i + 1 < g.n1) t.emplace_back(k, g.index(i + 1, j), ce);
            if (i > 1) t.emplace_back(k, g.index(i - 1, j), cw);
            if (j + 1 < g.n2) t.emplace_back(k, g.index(i, j + 1), cn);
            if (j > 1) t.emplace_back(k, g.index(i, j - 1), cn);
        }
    }
    Eigen::SparseMatrix<double> a(g.unknowns(), g.unknowns());
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

Eigen::VectorXd scaled_residual_vector(const Layout& g, const Eigen::MatrixXd& v, double eps, int ramp)
{
    Eigen::VectorXd r(g.unknowns());
    for (int j = 1; j < g.n2; ++j) {
        for (int i = 1; i < g.n1; ++i) r(g.index(i, j)) = scaled_residual(g, v, i, j, eps, ramp);
    }
    return r;
}

double residual_max(const Layout& g, const Eigen::MatrixXd& v, double eps, int ramp)
{
    double worst = 0.0;
    for (int j = 1; j < g.n2; ++j) {
        for (int i = 1; i < g.n1; ++i) worst = std::max(worst, std::abs(g.x(i) * scaled_residual(g, v, i, j, eps, ramp)));
    }
    return worst;
}

// Solves A d = rhs by LDL^T, falling back to LU; returns false if both fail.
bool linear_solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& rhs, Eigen::VectorXd& d)
{
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        d = ldlt.solve(rhs);
        if (ldlt.info() == Eigen::Success && d.allFinite()) return true;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) return false;
    d = lu.solve(rhs);
    return lu.info() == Eigen::Success && d.allFinite();
}

void add_interior(const Layout& g, Eigen::MatrixXd& v, const Eigen::VectorXd& d, double step)
{
    for (int j = 1; j < g.n2; ++j) {
        for (int i = 1; i < g.n1; ++i) v(i, j) += step * d(g.index(i, j));
    }
}

Layout layout_of(const SolverState& s)
{
    return Layout{int(s.v.rows()) - 1, int(s.v.cols()) - 1, s.x1_min, s.h};
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == value.size() && used > 0, Errc::config, "key '" + key + "' expects a number, got '" + value + "'");
    return x;
}

int parse_int(const std::string& key, const std::string& value)
{
    const double x = parse_number(key, value);
    require(x == std::floor(x) && std::abs(x) < 1e9, Errc::config, "key '" + key + "' expects an integer");
    return int(x);
}

} // namespace

double b_eps(double z, double epsilon, int ramp)
{
    require(epsilon > 0.0, Errc::domain, "epsilon must be positive");
    return smoothstep(1.0 + z / epsilon, ramp);
}

double b_eps_derivative(double z, double epsilon, int ramp)
{
    require(epsilon > 0.0, Errc::domain, "epsilon must be positive");
    return smoothstep_derivative(1.0 + z / epsilon, ramp) / epsilon;
}

const char* to_string(DirichletData data) noexcept
{
    switch (data) {
    case DirichletData::x1x2: return "x1x2";
    case DirichletData::neg_x1sq: return "neg_x1sq";
    case DirichletData::mixed: return "mixed";
    case DirichletData::saddle: return "saddle";
    }
    return "mixed";
}

DirichletData dirichlet_data_from_string(const std::string& name)
{
    if (name == "x1x2") return DirichletData::x1x2;
    if (name == "neg_x1sq") return DirichletData::neg_x1sq;
    if (name == "mixed") return DirichletData::mixed;
    if (name == "saddle") return DirichletData::saddle;
    throw Error(Errc::config, "unknown Dirichlet data '" + name + "' (x1x2, neg_x1sq, mixed, saddle)");
}

double SolverConfig::boundary_value(double x1, double x2) const
{
    switch (data) {
    case DirichletData::x1x2: return x1 * x2;
    case DirichletData::neg_x1sq: return -x1 * x1;
    case DirichletData::mixed: return x2 > 0.0 ? x1 * x2 : x1 * x1 * x2;
    case DirichletData::saddle: {
        const double a = x1 - center_x1;
        const double b = x2 - center_x2;
        return b * b - a * a + offset;
    }
    }
    return 0.0;
}

int SolverConfig::n1() const
{
    return int(std::lround((x1_max - x1_min) / h));
}

int SolverConfig::n2() const
{
    return int(std::lround((x2_max - x2_min) / h));
}

void SolverConfig::validate() const
{
    require(h > 0.0, Errc::config, "h must be positive");
    require(epsilon > 0.0, Errc::config, "epsilon must be positive");
    require(newton.tol > 0.0, Errc::config, "newton tol must be positive");
    require(newton.max_iter >= 1, Errc::config, "newton max_iter must be at least 1");
    require(newton.damping > 0.0 && newton.damping <= 1.0, Errc::config, "newton damping must lie in (0, 1]");
    require(ramp >= 1 && ramp <= 3, Errc::config, "ramp must be 1, 2 or 3");
    require(x1_max > x1_min && x2_max > x2_min, Errc::config, "domain must be a nonempty rectangle");
    require(x1_min >= 4.0 * h * (1.0 - 1e-12), Errc::config, "x1_min must be at least 4h (the axis is excluded)");
    const double s1 = (x1_max - x1_min) / h;
    const double s2 = (x2_max - x2_min) / h;
    require(std::abs(s1 - std::round(s1)) <= 1e-9 * s1 && std::abs(s2 - std::round(s2)) <= 1e-9 * s2, Errc::config,
            "domain sides must be integer multiples of h");
    require(n1() >= 4 && n2() >= 4, Errc::config, "grid needs at least 4 cells per side");
}

SolverConfig parse_solver_config(std::istream& is)
{
    SolverConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, Errc::config, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "epsilon") c.epsilon = parse_number(key, value);
        else if (key == "h") c.h = parse_number(key, value);
        else if (key == "x1_min") c.x1_min = parse_number(key, value);
        else if (key == "x1_max") c.x1_max = parse_number(key, value);
        else if (key == "x2_min") c.x2_min = parse_number(key, value);
        else if (key == "x2_max") c.x2_max = parse_number(key, value);
        else if (key == "data") c.data = dirichlet_data_from_string(value);
        else if (key == "center_x1") c.center_x1 = parse_number(key, value);
        else if (key == "center_x2") c.center_x2 = parse_number(key, value);
        else if (key == "offset") c.offset = parse_number(key, value);
        else if (key == "max_iter") c.newton.max_iter = parse_int(key, value);
        else if (key == "tol") c.newton.tol = parse_number(key, value);
        else if (key == "damping") c.newton.damping = parse_number(key, value);
        else if (key == "ramp") c.ramp = parse_int(key, value);
        else if (key == "init") {
            if (value == "gas_linear") c.init = Initialization::gas_linear;
            else if (value == "boundary_data") c.init = Initialization::boundary_data;
            else throw Error(Errc::config, "init must be gas_linear or boundary_data");
        } else {
            throw Error(Errc::config, "unknown config key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

SolverConfig load_solver_config(const std::string& path)
{
    std::ifstream is(path);
    require(bool(is), Errc::io, "cannot open '" + path + "'");
    return parse_solver_config(is);
}

void write_solver_config(std::ostream& os, const SolverConfig& c)
{
    char buf[64];
    const auto put = [&](const char* key, double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << key << " = " << buf << "\n";
    };
    put("epsilon", c.epsilon);
    put("h", c.h);
    put("x1_min", c.x1_min);
    put("x1_max", c.x1_max);
    put("x2_min", c.x2_min);
    put("x2_max", c.x2_max);
    os << "data = " << to_string(c.data) << "\n";
    put("center_x1", c.center_x1);
    put("center_x2", c.center_x2);
    put("offset", c.offset);
    os << "max_iter = " << c.newton.max_iter << "\n";
    put("tol", c.newton.tol);
    put("damping", c.newton.damping);
    os << "ramp = " << c.ramp << "\n";
    os << "init = " << (c.init == Initialization::gas_linear ? "gas_linear" : "boundary_data") << "\n";
}

double discrete_residual(const SolverState& state, double epsilon, int ramp)
{
    return residual_max(layout_of(state), state.v, epsilon, ramp);
}

SolverState solve(const SolverConfig& config)
{
    config.validate();
    const Layout g{config.n1(), config.n2(), config.x1_min, config.h};
    const double eps = config.epsilon;
    const int ramp = config.ramp;

    SolverState s;
    s.x1_min = config.x1_min;
    s.x2_min = config.x2_min;
    s.h = config.h;
    s.v.resize(g.n1 + 1, g.n2 + 1);
    for (int j = 0; j <= g.n2; ++j) {
        for (int i = 0; i <= g.n1; ++i) s.v(i, j) = config.boundary_value(s.x1(i), s.x2(j));
    }

    if (config.init == Initialization::gas_linear) {
        // B = 1 everywhere: the linear gas equation, a subsolution of the regularized one.
        Eigen::MatrixXd zero_interior = s.v;
        for (int j = 1; j < g.n2; ++j) {
            for (int i = 1; i < g.n1; ++i) zero_interior(i, j) = 0.0;
        }
        Eigen::VectorXd b(g.unknowns());
        for (int j = 1; j < g.n2; ++j) {
            for (int i = 1; i < g.n1; ++i) {
                // Boundary contributions only: the reaction term vanishes at v = 0.
                b(g.index(i, j)) = scaled_residual(g, zero_interior, i, j, eps, ramp);
            }
        }
        Eigen::VectorXd d;
        const bool ok = linear_solve(assemble(g, s.v, eps, ramp, Linearization::gas_linear), -b, d);
        require(ok, Errc::iteration_failure, "initial linear solve failed");
        s.v = zero_interior;
        add_interior(g, s.v, d, 1.0);
        s.initialization = "gas_linear";
    } else {
        s.initialization = "boundary_data";
    }

    s.residual_norm = residual_max(g, s.v, eps, ramp);
    s.history.push_back(s.residual_norm);
    while (s.residual_norm > config.newton.tol && s.iterations < config.newton.max_iter) {
        ++s.iterations;
        const Eigen::VectorXd r = scaled_residual_vector(g, s.v, eps, ramp);
        Eigen::VectorXd d;
        bool accepted = false;
        if (linear_solve(assemble(g, s.v, eps, ramp, Linearization::newton), -r, d)) {
            for (double step = config.newton.damping; step >= 1.0 / 64.0; step *= 0.5) {
                Eigen::MatrixXd trial = s.v;
                add_interior(g, trial, d, step);
                const double norm = residual_max(g, trial, eps, ramp);
                if (norm < (1.0 - 1e-4 * step) * s.residual_norm) {
                    s.v = std::move(trial);
                    s.residual_norm = norm;
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            // Lagged-coefficient step: solve with B frozen at the current iterate.
            if (!linear_solve(assemble(g, s.v, eps, ramp, Linearization::picard), -r, d)) break;
            add_interior(g, s.v, d, 1.0);
            s.residual_norm = residual_max(g, s.v, eps, ramp);
            ++s.picard_steps;
        }
        s.history.push_back(s.residual_norm);
    }
    s.converged = s.residual_norm <= config.newton.tol;
    return s;
}

CartesianField recover_u(const SolverState& state)
{
    CartesianField f;
    f.x1_min = state.x1_min;
    f.x2_min = state.x2_min;
    f.h = state.h;
    f.values.resize(state.v.rows(), state.v.cols());
    for (Eigen::Index j = 0; j < state.v.cols(); ++j) {
        for (Eigen::Index i = 0; i < state.v.rows(); ++i) {
            const double v = state.v(i, j);
            f.values(i, j) = v > 0.0 ? v / state.x1(i) : v;
        }
    }
    f.provenance = "recovered u from regularized solve (" + state.initialization + ")";
    return f;
}

Eigen::MatrixXd transform_v(const CartesianField& u)
{
    Eigen::MatrixXd v(u.values.rows(), u.values.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double x = u.values(i, j);
            v(i, j) = x > 0.0 ? u.x1(i) * x : x;
        }
    }
    return v;
}

std::vector<FreeBoundaryCurve> zero_contours(const SolverState& state)
{
    const Eigen::MatrixXd& v = state.v;
    const Eigen::Index n1 = v.rows();
    const Eigen::Index n2 = v.cols();
    // Edge ids: 2 (i + j n1) for the edge (i, j)-(i+1, j), plus one for (i, j)-(i, j+1).
    const auto h_edge = [&](Eigen::Index i, Eigen::Index j) { return 2 * (i + j * n1); };
    const auto v_edge = [&](Eigen::Index i, Eigen::Index j) { return 2 * (i + j * n1) + 1; };
    const auto inside = [&](Eigen::Index i, Eigen::Index j) { return v(i, j) > 0.0; };

    std::map<Eigen::Index, std::array<double, 2>> point;
    const auto crossing = [&](Eigen::Index id, Eigen::Index i, Eigen::Index j, Eigen::Index i2, Eigen::Index j2) {
        if (!point.count(id)) {
            const double a = v(i, j);
            const double b = v(i2, j2);
            const double t = a / (a - b);
            point[id] = {state.x1(i) + t * double(i2 - i) * state.h, state.x2(j) + t * double(j2 - j) * state.h};
        }
        return id;
    };

    std::vector<std::array<Eigen::Index, 2>> segments;
    for (Eigen::Index j = 0; j + 1 < n2; ++j) {
        for (Eigen::Index i = 0; i + 1 < n1; ++i) {
            const bool a = inside(i, j), b = inside(i + 1, j), c = inside(i + 1, j + 1), d = inside(i, j + 1);
            // Crossing edges in order bottom, right, top, left.
            std::vector<Eigen::Index> e;
            if (a != b) e.push_back(crossing(h_edge(i, j), i, j, i + 1, j));
            if (b != c) e.push_back(crossing(v_edge(i + 1, j), i + 1, j, i + 1, j + 1));
            if (d != c) e.push_back(crossing(h_edge(i, j + 1), i, j + 1, i + 1, j + 1));
            if (a != d) e.push_back(crossing(v_edge(i, j), i, j, i, j + 1));
            if (e.size() == 2) {
                segments.push_back({e[0], e[1]});
            } else if (e.size() == 4) {
                const double center = 0.25 * (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1));
                if ((center > 0.0) == a) {
                    segments.push_back({e[0], e[1]});   // cut off corner (i+1, j)
                    segments.push_back({e[2], e[3]});   // cut off corner (i, j+1)
                } else {
                    segments.push_back({e[3], e[0]});
                    segments.push_back({e[1], e[2]});
                }
            }
        }
    }

    std::map<Eigen::Index, std::vector<std::size_t>> touching;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        touching[segments[k][0]].push_back(k);
        touching[segments[k][1]].push_back(k);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<FreeBoundaryCurve> out;
    const auto trace = [&](Eigen::Index start) {
        FreeBoundaryCurve curve;
        Eigen::Index at = start;
        curve.points.push_back(point[at]);
        for (;;) {
            std::size_t next = segments.size();
            for (std::size_t k : touching[at]) {
                if (!used[k]) {
                    next = k;
                    break;
                }
            }
            if (next == segments.size()) break;
            used[next] = true;
            at = segments[next][0] == at ? segments[next][1] : segments[next][0];
            curve.points.push_back(point[at]);
        }
        out.push_back(std::move(curve));
    };
    // Open chains start at edges touched once; the remaining segments form closed loops.
    for (const auto& [id, list] : touching) {
        if (list.size() == 1 && !used[list[0]]) trace(id);
    }
    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (!used[k]) trace(segments[k][0]);
    }
    return out;
}

FreeBoundaryCurve extract_free_boundary(const SolverState& state)
{
    const std::vector<FreeBoundaryCurve> contours = zero_contours(state);
    if (contours.empty()) return {};
    const double x1_max = state.x1(state.v.rows() - 1);
    const double x2_max = state.x2(state.v.cols() - 1);
    std::array<double, 2> anchor{state.x1_min, state.x2_min};
    for (double a : {state.x1_min, x1_max}) {
        for (double b : {state.x2_min, x2_max}) {
            if (std::hypot(a, b) < std::hypot(anchor[0], anchor[1])) anchor = {a, b};
        }
    }
    const auto dist = [&](const std::array<double, 2>& p) { return std::hypot(p[0] - anchor[0], p[1] - anchor[1]); };

    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < contours.size(); ++k) {
        for (const auto& p : contours[k].points) {
            if (dist(p) < best_d) {
                best_d = dist(p);
                best = k;
            }
        }
    }
    FreeBoundaryCurve curve = contours[best];
    const bool closed = curve.points.size() > 2 && curve.points.front() == curve.points.back();
    if (closed) {
        curve.points.pop_back();
        const auto nearest = std::min_element(curve.points.begin(), curve.points.end(),
                                              [&](const auto& a, const auto& b) { return dist(a) < dist(b); });
        std::rotate(curve.points.begin(), nearest, curve.points.end());
        curve.points.push_back(curve.points.front());
    } else if (dist(curve.points.back()) < dist(curve.points.front())) {
        std::reverse(curve.points.begin(), curve.points.end());
    }
    return curve;
}

std::vector<std::array<double, 2>> detect_singular_set(const SolverState& state, double tol_grad)
{
    require(tol_grad > 0.0, Errc::domain, "gradient tolerance must be positive");
    const Eigen::MatrixXd& v = state.v;
    const Eigen::Index n1 = v.rows();
    const Eigen::Index n2 = v.cols();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flag =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n1, n2, false);
    for (Eigen::Index j = 1; j + 1 < n2; ++j) {
        for (Eigen::Index i = 1; i + 1 < n1; ++i) {
            const double g1 = (v(i + 1, j) - v(i - 1, j)) / (2.0 * state.h);
            const double g2 = (v(i, j + 1) - v(i, j - 1)) / (2.0 * state.h);
            flag(i, j) = std::abs(v(i, j)) <= tol_grad * state.h && std::hypot(g1, g2) <= tol_grad;
        }
    }
    std::vector<std::array<double, 2>> out;
    std::vector<std::array<Eigen::Index, 2>> stack;
    for (Eigen::Index j = 0; j < n2; ++j) {
        for (Eigen::Index i = 0; i < n1; ++i) {
            if (!flag(i, j)) continue;
            double s1 = 0.0, s2 = 0.0;
            int count = 0;
            flag(i, j) = false;
            stack.push_back({i, j});
            while (!stack.empty()) {
                const auto [a, b] = stack.back();
                stack.pop_back();
                s1 += state.x1(a);
                s2 += state.x2(b);
                ++count;
                for (Eigen::Index da = -1; da <= 1; ++da) {
                    for (Eigen::Index db = -1; db <= 1; ++db) {
                        const Eigen::Index p = a + da, q = b + db;
                        if (p >= 0 && q >= 0 && p < n1 && q < n2 && flag(p, q)) {
                            flag(p, q) = false;
                            stack.push_back({p, q});
                        }
                    }
                }
            }
            out.push_back({s1 / count, s2 / count});
        }
    }
    return out;
}

CartesianField state_field(const SolverState& state, std::string provenance)
{
    CartesianField f;
    f.x1_min = state.x1_min;
    f.x2_min = state.x2_min;
    f.h = state.h;
    f.values = state.v;
    f.provenance = std::move(provenance);
    return f;
}

} // namespace ehd
