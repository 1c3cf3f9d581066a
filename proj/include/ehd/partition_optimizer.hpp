#pragma once

// Minimization of sqrt(lambda+(G)) + sqrt(lambda-(complement of G)) over gas arc sets G
// of the half-circle, restricted to the connected and two-component families.

#include "ehd/arc_spectrum.hpp"

#include <vector>

namespace ehd {

enum class Family { connected, two_component };

const char* to_string(Family family) noexcept;

struct SplitConfig {
    ArcSet gamma_plus;    // gas side
    ArcSet gamma_minus;   // fluid side
    Family family = Family::connected;
    // Parameters of the family: theta for connected, (a, b) for two_component.
    double theta = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Gas (0, theta), fluid (theta, pi).
SplitConfig connected_split(double theta);
/// Gas (0, a) U (b, pi), fluid (a, b).
SplitConfig two_component_split(double a, double b);

struct ScanPoint {
    SplitConfig config;
    double value = 0.0;
};

struct BetaStarReport {
    double best_value = 0.0;
    SplitConfig best_config;
    std::vector<ScanPoint> scan;
    double grid_error = 0.0;               // |value(n_grid) - value(2 n_grid)| at the minimizer
    bool certified_lower_bound_ok = false; // best_value - grid_error >= 2 - tol
    // Two-component runs only: connected minimum for comparison. Numerical evidence, not a proof.
    double connected_value = 0.0;
    bool undercuts_connected = false;
};

/// sqrt(lambda+(gamma_plus)) + sqrt(lambda-(gamma_minus)).
double split_value(const SplitConfig& config, const SpectrumConfig& spectrum = {});
double split_value(const SplitConfig& config, int n_grid);

/// Scan of theta followed by golden-section refinement. Requires n_scan >= 64.
BetaStarReport beta_star_connected(int n_scan, double tol, const SpectrumConfig& spectrum = {});

/// Scan over 0 < a < b < pi (n_scan points per axis) followed by coordinate-wise golden-section
/// refinement. Requires n_scan >= 32.
BetaStarReport beta_star_two_component(int n_scan, double tol, const SpectrumConfig& spectrum = {});

} // namespace ehd
