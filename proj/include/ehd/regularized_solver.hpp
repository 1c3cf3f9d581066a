#pragma once

// Regularized transformed equation on a rectangle away from the axis:
//
//   0 = Delta v - (1/x1) d1 v + x1^-2 v B_eps(v),
//
// where B_eps ramps from 0 at v = -eps to 1 at v = 0. Gas nodes carry v = x1 u,
// fluid nodes v = u.

#include "ehd/field_lab.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace ehd {

/// Smoothstep order: 1 is C^1 (cubic), 2 is C^2 (quintic), 3 is C^3 (septic).
double b_eps(double z, double epsilon, int ramp = 2);
double b_eps_derivative(double z, double epsilon, int ramp = 2);

enum class DirichletData {
    x1x2,       // v = x1 x2
    neg_x1sq,   // v = -x1^2
    mixed,      // v = x1 x2 for x2 > 0, x1^2 x2 below; each branch solves its own phase
    saddle,     // v = (x2 - c2)^2 - (x1 - c1)^2 + offset
};

const char* to_string(DirichletData data) noexcept;
DirichletData dirichlet_data_from_string(const std::string& name);

/// gas_linear starts Newton from the linear solve with B = 1 (a subsolution, since v B_eps(v) >= v);
/// boundary_data extends the Dirichlet function into the interior.
enum class Initialization { gas_linear, boundary_data };

struct NewtonOptions {
    int max_iter = 25;
    double tol = 1e-10;
    double damping = 1.0;   // initial step length before backtracking
};

struct SolverConfig {
    double epsilon = 0.05;
    double h = 0.01;
    double x1_min = 0.2;
    double x1_max = 1.2;
    double x2_min = -0.5;
    double x2_max = 0.5;
    DirichletData data = DirichletData::mixed;
    double center_x1 = 0.7;
    double center_x2 = 0.0;
    double offset = 0.0;
    NewtonOptions newton;
    int ramp = 2;
    Initialization init = Initialization::gas_linear;

    /// Boundary value at (x1, x2).
    double boundary_value(double x1, double x2) const;
    /// Throws Errc::config on violated invariants.
    void validate() const;
    int n1() const;   // number of cells along x1
    int n2() const;
};

/// Plain-text "key = value" lines; '#' starts a comment.
SolverConfig parse_solver_config(std::istream& is);
SolverConfig load_solver_config(const std::string& path);
void write_solver_config(std::ostream& os, const SolverConfig& config);

struct SolverState {
    double x1_min = 0.0;
    double x2_min = 0.0;
    double h = 0.0;
    Eigen::MatrixXd v;                 // (n1 + 1) x (n2 + 1) nodes including the boundary
    double residual_norm = 0.0;        // max norm over interior nodes
    int iterations = 0;
    int picard_steps = 0;
    bool converged = false;
    std::vector<double> history;       // residual norm after each iteration, starting with the initial guess
    std::string initialization;

    double x1(Eigen::Index i) const { return x1_min + double(i) * h; }
    double x2(Eigen::Index j) const { return x2_min + double(j) * h; }
};

/// Max-norm residual of the discrete equation over interior nodes.
double discrete_residual(const SolverState& state, double epsilon, int ramp = 2);

SolverState solve(const SolverConfig& config);

/// u = v / x1 where v > 0, u = v where v <= 0.
CartesianField recover_u(const SolverState& state);
/// v = x1 u where u > 0, v = u elsewhere.
Eigen::MatrixXd transform_v(const CartesianField& u);

/// All zero contours of v (marching squares, linear interpolation on cell edges).
std::vector<FreeBoundaryCurve> zero_contours(const SolverState& state);

/// The contour passing closest to the domain corner nearest the origin, ordered from that end.
/// Empty when v has no sign change.
FreeBoundaryCurve extract_free_boundary(const SolverState& state);

/// Nodes with |v| <= tol_grad h and |grad v| <= tol_grad, clustered by adjacency to mean points.
std::vector<std::array<double, 2>> detect_singular_set(const SolverState& state, double tol_grad);

/// v as a Cartesian table.
CartesianField state_field(const SolverState& state, std::string provenance = {});

} // namespace ehd
