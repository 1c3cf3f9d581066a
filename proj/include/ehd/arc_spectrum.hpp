#pragma once

// Weighted Rayleigh-quotient eigenvalues on arcs of the unit half-circle.
//
// An arc is parameterized by the polar angle theta in (0, pi) measured from the
// symmetry axis, so that x1 = sin(theta) and x2 = cos(theta). The gas phase uses
// the weight sin(theta), the fluid phase the weight 1/sin(theta):
//
//   lambda+(G) = inf  int sin f'^2 / int sin f^2
//   lambda-(G) = inf  int f'^2/sin / int f^2/sin
//
// with Dirichlet conditions at interior endpoints. At the axis (theta = 0 or pi)
// the gas problem is unconstrained (natural) and the fluid problem Dirichlet.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace ehd {

inline constexpr double pi = 3.14159265358979323846;

enum class Phase { gas, fluid };

enum class EndCondition { dirichlet, natural };

const char* to_string(Phase phase) noexcept;
const char* to_string(EndCondition bc) noexcept;

struct Arc {
    double lo = 0.0;
    double hi = pi;

    double length() const { return hi - lo; }
    bool touches_north() const { return lo == 0.0; }
    bool touches_south() const { return hi == pi; }
    /// Image under theta -> pi - theta.
    Arc reflected() const;
};

/// Validating constructor. Endpoints within 1e-14 of an axis are snapped onto it.
Arc make_arc(double lo, double hi);

class ArcSet {
public:
    ArcSet() = default;
    ArcSet(std::initializer_list<Arc> arcs);
    explicit ArcSet(std::vector<Arc> arcs);

    const std::vector<Arc>& arcs() const { return arcs_; }
    bool empty() const { return arcs_.empty(); }
    double measure() const;
    ArcSet reflected() const;
    /// Complement in (0, pi); shared endpoints are dropped.
    ArcSet complement() const;
    bool contains(const ArcSet& other) const;

private:
    std::vector<Arc> arcs_;
};

EndCondition end_condition(double endpoint, Phase phase);

struct EigenResult {
    double lambda = 0.0;
    double alpha = 0.0;
    Phase phase = Phase::gas;
    Arc support;                     // minimizing component
    Eigen::VectorXd grid;            // theta nodes on the support, endpoints included
    Eigen::VectorXd eigenfunction;   // nonnegative, weighted L2 norm one
    Eigen::VectorXd mass;            // quadrature weights of the weighted L2 product
    std::array<EndCondition, 2> bc{EndCondition::dirichlet, EndCondition::dirichlet};
    double relative_residual = 0.0;
};

/// Reference grid spacing for an n_grid run: arcs shorter than four of these are degenerate.
inline double reference_spacing(int n_grid) { return pi / n_grid; }

/// Ground state of the discretized Rayleigh quotient; n_grid cells per component.
EigenResult eigenvalue(const ArcSet& arcs, Phase phase, int n_grid);

/// One Richardson step over (n_grid/2, n_grid) for second-order convergence.
double extrapolated_eigenvalue(const ArcSet& arcs, Phase phase, int n_grid);

/// Discrete Rayleigh quotient of the stored eigenfunction, recomputed from scratch.
double rayleigh_quotient(const EigenResult& result);

/// Prufer shooting with bisection in lambda; independent of the grid discretization.
double shoot_oracle(const Arc& arc, Phase phase, double tol);

/// Homogeneity exponent: gas alpha(alpha+1) = lambda, fluid alpha(alpha-1) = lambda.
double alpha_of(double lambda, Phase phase);
double lambda_of(double alpha, Phase phase);

enum class SpectrumMethod { grid, shooting };

const char* to_string(SpectrumMethod method) noexcept;

struct SpectrumConfig {
    int n_grid = 2048;
    bool extrapolate = true;
    SpectrumMethod method = SpectrumMethod::grid;
    double shooting_tol = 1e-12;
};

/// Eigenvalue of a single arc according to the configured method.
double arc_eigenvalue(const Arc& arc, Phase phase, const SpectrumConfig& config = {});

/// Thread-safe memo of arc eigenvalues, keyed by (arc, phase, config).
class SpectrumCache {
public:
    double lookup_or_compute(const Arc& arc, Phase phase, const SpectrumConfig& config,
                             const std::function<double()>& compute);
    std::size_t size() const;
    void clear();

    static SpectrumCache& global();

private:
    struct Key {
        std::uint64_t lo_bits;
        std::uint64_t hi_bits;
        int phase;
        int n_grid;
        int flags;
        std::uint64_t tol_bits;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    mutable std::shared_mutex mutex_;
    std::unordered_map<Key, double, KeyHash> values_;
};

/// arc_eigenvalue through the global cache; arcs touching only theta = pi share entries
/// with their mirror images.
double cached_eigenvalue(const Arc& arc, Phase phase, const SpectrumConfig& config = {});

/// Minimum of cached_eigenvalue over the components.
double arcset_eigenvalue(const ArcSet& arcs, Phase phase, const SpectrumConfig& config = {});

/// I+(theta) = lambda+((0, theta)).
double i_plus(double theta, const SpectrumConfig& config = {});
/// I-(theta) = lambda-((0, theta)).
double i_minus(double theta, const SpectrumConfig& config = {});

struct MatchedHomogeneity {
    double theta1 = 0.0;        // fluid arc (0, theta1) up to reflection
    double alpha_star = 0.0;
    double lambda_star = 0.0;
    double residual = 0.0;      // |1 + alpha+(pi - theta1) - alpha-(theta1)|
    Arc gas_arc;                // (0, pi - theta1)
    Arc fluid_arc;              // (pi - theta1, pi)
    Arc gas_arc_reflected;      // (theta1, pi)
    Arc fluid_arc_reflected;    // (0, theta1)
    int bisection_steps = 0;
};

/// Unique root of I+(pi - theta) = I-(theta), located by bisection.
MatchedHomogeneity matched_homogeneity(double tol, const SpectrumConfig& config = {});

struct TaylorCone {
    double theta_t = 0.0;      // gas arc (0, theta_t)
    double opening_deg = 0.0;  // full opening angle of the fluid cone
    double alpha = 0.0;
};

/// Gas arc whose ground state is homogeneous of degree one half.
TaylorCone taylor_cone(double tol, const SpectrumConfig& config = {});

struct SubstitutionIdentity {
    double fluid_energy = 0.0;   // int (g')^2 / sin, g = sin f
    double fluid_mass = 0.0;     // int f^2 / sin
    double gas_energy = 0.0;     // int sin (f')^2
    double gas_mass = 0.0;       // int sin f^2

    double residual() const { return fluid_energy - (fluid_mass + gas_energy); }
};

/// Evaluates both sides of int (g')^2/sin = int f^2/sin + int sin (f')^2 by composite
/// Gauss-Legendre quadrature; f must vanish at the arc endpoints.
SubstitutionIdentity substitution_identity(const Arc& arc, const std::function<double(double)>& f,
                                           const std::function<double(double)>& df, int panels = 256);

} // namespace ehd
