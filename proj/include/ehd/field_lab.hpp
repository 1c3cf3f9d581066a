#pragma once

// Sampled two-phase meridian fields and the integral quantities of the
// monotonicity formulas.
//
// A MeridianField stores u(r_i, theta_j) on the polar grid
//   r_i = i dr (i = 1..N_r),  theta_j = (j - 1/2) dtheta (j = 1..N_theta),  dtheta = pi / N_theta,
// so the axis is never sampled. With x1 = r sin(theta), x2 = r cos(theta) the gas part u+
// carries the weight x1 and the fluid part u- the weight 1/x1:
//
//   I+(r) = int_{B_r} x1 |grad u+|^2 dx        J+(r) = int_{dB_r} x1 (u+)^2 dS
//   I-(r) = int_{B_r} |grad u-|^2 / x1 dx      J-(r) = int_{dB_r} (u-)^2 / x1 dS
//
// Energies are ring sums (midpoint rule in theta) integrated radially by a
// third-order cumulative rule starting from zero at the origin.

#include "ehd/arc_spectrum.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ehd {

/// How samples are assigned to phases. by_sign is the physical convention (u > 0 gas,
/// u < 0 fluid); all_gas / all_fluid treat the whole field, of either sign, as one phase.
enum class PhaseRule { by_sign, all_gas, all_fluid };

const char* to_string(PhaseRule rule) noexcept;
PhaseRule phase_rule_from_string(const std::string& name);

struct FieldGrid {
    int n_r = 200;
    int n_theta = 128;
    double dr = 1.0 / 200;
};

class MeridianField {
public:
    MeridianField(FieldGrid grid, Eigen::MatrixXd values, PhaseRule rule = PhaseRule::by_sign,
                  std::string provenance = {});

    const FieldGrid& grid() const { return grid_; }
    int n_r() const { return grid_.n_r; }
    int n_theta() const { return grid_.n_theta; }
    double dr() const { return grid_.dr; }
    double dtheta() const { return pi / grid_.n_theta; }
    /// Zero-based accessors: r(0) = dr, theta(0) = dtheta / 2.
    double r(int i) const { return (i + 1) * grid_.dr; }
    double theta(int j) const { return (j + 0.5) * dtheta(); }
    double r_max() const { return grid_.n_r * grid_.dr; }
    /// Grid parameter used in tolerances: max(dr, dtheta).
    double h() const;
    /// max |u|^2, the scale of the weighted energies.
    double scale() const;

    const Eigen::MatrixXd& values() const { return values_; }   // n_r x n_theta
    PhaseRule phase_rule() const { return rule_; }
    const std::string& provenance() const { return provenance_; }

private:
    FieldGrid grid_;
    Eigen::MatrixXd values_;
    PhaseRule rule_;
    std::string provenance_;
};

/// Samples u(x1, x2) on the polar grid.
MeridianField sample_field(const std::function<double(double, double)>& u, FieldGrid grid,
                           PhaseRule rule = PhaseRule::by_sign, std::string provenance = {});

/// balanced rescales the fluid eigenfunction so that x1 |grad u+|^2 = |grad u-|^2 / x1 on a
/// shared interface ray; stored uses the normalized eigenfunctions as they are.
enum class Amplitude { stored, balanced };

/// u = r^alpha g+(theta) on the gas support, -c r^(alpha+1) g-(theta) on the fluid support.
/// Either eigen result may be absent for a one-phase field.
MeridianField make_homogeneous_field(double alpha, const std::optional<EigenResult>& gas,
                                     const std::optional<EigenResult>& fluid, FieldGrid grid,
                                     Amplitude amplitude = Amplitude::balanced);

/// Tolerance for identity checks on a field: c1 h^2 + c2 scale.
struct IdentityTolerance {
    double c1 = 10.0;
    double c2 = 1e-10;

    double operator()(const MeridianField& field) const;
};

enum class Part { plus, minus, total };

double energy_ring(const MeridianField& field, double r, Part part = Part::total);    // I+, I-, I
double boundary_mass(const MeridianField& field, double r, Part part = Part::total);  // J+, J-, J

/// Phi(r) = r^(-2 beta*) I+(r) I-(r).
double acf_phi(const MeridianField& field, double r, double beta_star);

/// M(r) = r^(-2b-n+1) I - b r^(-2b-n) J+ - (b+1) r^(-2b-n) J-.
double weiss_m(const MeridianField& field, double r, double beta, int n = 2);

/// 2 r^(-2b-n+1) int_{dB_r} [x1 (d_r u+ - b u+/r)^2 + (d_r u- - (b+1) u-/r)^2 / x1] dS.
double weiss_m_prime_rhs(const MeridianField& field, double r, double beta, int n = 2);

/// |dM/dr - weiss_m_prime_rhs| with dM/dr by central differences over one radial step.
double weiss_m_prime_residual(const MeridianField& field, double r, double beta, int n = 2);

/// |I(r) - int_{dB_r} (x1 u+ d_r u+ + u- d_r u- / x1) dS|.
double flux_identity_residual(const MeridianField& field, double r);

enum class MonitorKind { phi, weiss_m, i_total, i_plus, i_minus, j_plus, j_minus, residual };

const char* to_string(MonitorKind kind) noexcept;

struct MonitorCurve {
    std::vector<double> radii;
    std::vector<double> values;
    MonitorKind kind = MonitorKind::residual;
};

struct GrowthParams {
    double beta = 1.0;
    double gamma = 0.25;
    double beta_star = 2.0;
    int n = 2;
};

/// Samples a monitor at every grid radius r_i >= 3 dr.
MonitorCurve monitor_curve(const MeridianField& field, MonitorKind kind, const GrowthParams& params = {});

/// (r^(-2b-n) J)' - (2/r) M at interior grid radii, derivative by central differences.
MonitorCurve jm_relation_residual(const MeridianField& field, double beta, int n = 2);

/// phi(x) = (a1 x1 psi, a2 psi) with the C^2 bump psi = (1 - |x - c|^2 / rho^2)^3 on |x - c| < rho.
struct TestVectorField {
    double c1 = 0.0;
    double c2 = 0.0;
    double radius = 0.1;
    double a1 = 1.0;
    double a2 = 1.0;

    std::array<double, 2> value(double x1, double x2) const;
    /// {d1 phi1, d2 phi1, d1 phi2, d2 phi2}
    std::array<double, 4> jacobian(double x1, double x2) const;
};

/// |int [(x1|grad u+|^2 + |grad u-|^2/x1) div phi - 2 x1 grad u+ Dphi grad u+
///       - (2/x1) grad u- Dphi grad u- + (|grad u+|^2 - |grad u-|^2/x1^2) phi1] dx|.
double first_variation_residual(const MeridianField& field, const TestVectorField& phi);

/// exact_grid returns samples on the scaled grid dr / r_m (no interpolation);
/// same_grid resamples onto the input grid by cubic interpolation along rays.
enum class RescaleMode { exact_grid, same_grid };

/// u_m(x) = u+(r_m x) / r_m^gamma - u-(r_m x) / r_m^(gamma+1).
MeridianField rescale_field(const MeridianField& field, double r_m, double gamma,
                            RescaleMode mode = RescaleMode::exact_grid);

struct CaccioppoliReport {
    double lhs_plus = 0.0;   // int_{B_1} x1 |grad u+|^2
    double rhs_plus = 0.0;   // int_{B_2 \ B_1} x1 (u+)^2
    double lhs_minus = 0.0;
    double rhs_minus = 0.0;
    double c_min = 0.0;      // smallest C satisfying both; 0/0 counts as 0
};

/// Requires r_max >= 2.
CaccioppoliReport caccioppoli_check(const MeridianField& field);

struct CauchySchwarzReport {
    // Ring integrals on dB_r for each phase, weight w = x1 (gas) or 1/x1 (fluid).
    std::array<double, 2> mixed{};       // int w u d_r u
    std::array<double, 2> mass{};        // int w u^2
    std::array<double, 2> radial{};      // int w (d_r u)^2
    std::array<double, 2> tangential{};  // int w (d_tau u)^2
    bool mixed_ok = false;     // |mixed| <= sqrt(mass radial)
    bool gradient_ok = false;  // radial + tangential >= 2 sqrt(radial tangential)
};

CauchySchwarzReport cauchy_schwarz_chain(const MeridianField& field, double r);

/// Cylindrical velocity components (radial, axial) = (-d2 u / x1, d1 u / x1) on fluid nodes,
/// zero on gas nodes. Azimuthal rotation by the angle of the meridian plane gives the 3-D field.
struct MeridianVelocity {
    Eigen::MatrixXd radial;
    Eigen::MatrixXd axial;
};

MeridianVelocity recover_velocity(const MeridianField& field);

struct FreeBoundaryCurve {
    std::vector<std::array<double, 2>> points;   // (x1, x2), first point at the origin-side end
};

struct CuspReport {
    MonitorCurve ratio;                        // |x1 / x2| against arclength from the first point
    double loglog_slope = 0.0;                 // least-squares slope of log ratio against log arclength
    std::vector<std::size_t> infinite_vertices;  // vertices with x2 = 0, omitted from ratio
};

/// Requires the first point within 1e-3 of the origin.
CuspReport cusp_ratio(const FreeBoundaryCurve& curve);

/// Two-phase field on a rectangular grid away from the axis: values(i, j) = u(x1_min + i h, x2_min + j h).
struct CartesianField {
    double x1_min = 0.0;
    double x2_min = 0.0;
    double h = 0.0;
    Eigen::MatrixXd values;
    std::string provenance;

    double x1(Eigen::Index i) const { return x1_min + double(i) * h; }
    double x2(Eigen::Index j) const { return x2_min + double(j) * h; }
};

struct Box {
    double x1_lo = 0.0, x1_hi = 0.0, x2_lo = 0.0, x2_hi = 0.0;
};

/// |int_box (x1|grad u+|^2 + |grad u-|^2/x1) dx - int_{d box} (x1 u+ d_nu u+ + u- d_nu u- / x1) dS|.
/// The box corners are snapped to grid nodes and must lie at least one node inside the grid.
double box_flux_residual(const CartesianField& field, const Box& box);

// Plain-text table: '#'-prefixed metadata, one header line "N_r N_theta dr", one row "i j u"
// per node (one-based indices). Cartesian fields use the header "n1 n2 h" and a
// "# grid: cartesian x1_min x2_min" line.
void write_field(std::ostream& os, const MeridianField& field);
MeridianField read_field(std::istream& is);
void write_field(std::ostream& os, const CartesianField& field);
CartesianField read_cartesian_field(std::istream& is);
void save_field(const std::string& path, const MeridianField& field);
MeridianField load_field(const std::string& path);

/// Two-column CSV "r,value" preceded by '#' manifest lines.
void write_monitor(std::ostream& os, const MonitorCurve& curve, const std::vector<std::string>& manifest = {});

/// CSV of (x1, x2) points, optional '#' lines ignored.
FreeBoundaryCurve read_curve(std::istream& is);
void write_curve(std::ostream& os, const FreeBoundaryCurve& curve, const std::vector<std::string>& manifest = {});

} // namespace ehd
