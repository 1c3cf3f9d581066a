#include "ehd/partition_optimizer.hpp"

#include "ehd/error.hpp"
#include "ehd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehd {

namespace {

constexpr double scan_margin = 0.05;
const double golden = 0.5 * (std::sqrt(5.0) - 1.0);

// Smallest admissible arc length for the configured grid.
double min_width(const SpectrumConfig& spectrum)
{
    return 4.0 * reference_spacing(spectrum.n_grid);
}

template <typename F>
std::pair<double, double> golden_section(F&& f, double lo, double hi, double x_tol)
{
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > x_tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

double grid_error_at(const SplitConfig& config, const SpectrumConfig& spectrum, double value)
{
    if (spectrum.method == SpectrumMethod::shooting) {
        return spectrum.shooting_tol;
    }
    SpectrumConfig fine = spectrum;
    fine.n_grid *= 2;
    return std::abs(split_value(config, fine) - value);
}

void certify(BetaStarReport& report, const SpectrumConfig& spectrum, double tol)
{
    report.grid_error = grid_error_at(report.best_config, spectrum, report.best_value);
    report.certified_lower_bound_ok = report.best_value - report.grid_error >= 2.0 - tol;
}

} // namespace

const char* to_string(Family family) noexcept
{
    return family == Family::connected ? "connected" : "two_component";
}

SplitConfig connected_split(double theta)
{
    require(theta > 0.0 && theta < pi, Errc::domain, "split angle must lie in (0, pi)");
    SplitConfig c;
    c.gamma_plus = ArcSet{make_arc(0.0, theta)};
    c.gamma_minus = ArcSet{make_arc(theta, pi)};
    c.family = Family::connected;
    c.theta = theta;
    return c;
}

SplitConfig two_component_split(double a, double b)
{
    require(0.0 < a && a < b && b < pi, Errc::domain, "two-component split needs 0 < a < b < pi");
    SplitConfig c;
    c.gamma_plus = ArcSet{make_arc(0.0, a), make_arc(b, pi)};
    c.gamma_minus = ArcSet{make_arc(a, b)};
    c.family = Family::two_component;
    c.a = a;
    c.b = b;
    return c;
}

double split_value(const SplitConfig& config, const SpectrumConfig& spectrum)
{
    return std::sqrt(arcset_eigenvalue(config.gamma_plus, Phase::gas, spectrum)) +
           std::sqrt(arcset_eigenvalue(config.gamma_minus, Phase::fluid, spectrum));
}

double split_value(const SplitConfig& config, int n_grid)
{
    SpectrumConfig spectrum;
    spectrum.n_grid = n_grid;
    return split_value(config, spectrum);
}

BetaStarReport beta_star_connected(int n_scan, double tol, const SpectrumConfig& spectrum)
{
    require(n_scan >= 64, Errc::domain, "connected scan needs n_scan >= 64");
    const double lo = std::max(scan_margin, min_width(spectrum));
    const double hi = pi - lo;
    const double step = (hi - lo) / (n_scan - 1);

    BetaStarReport report;
    report.scan.resize(n_scan);
    parallel_for(std::size_t(n_scan), [&](std::size_t i) {
        const SplitConfig c = connected_split(lo + double(i) * step);
        report.scan[i] = {c, split_value(c, spectrum)};
    });

    // Strict comparison keeps the smallest theta on ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.scan.size(); ++i) {
        if (report.scan[i].value < report.scan[best].value) best = i;
    }

    const double left = std::max(lo, report.scan[best].config.theta - step);
    const double right = std::min(hi, report.scan[best].config.theta + step);
    const auto f = [&](double t) { return split_value(connected_split(t), spectrum); };
    auto [theta, value] = golden_section(f, left, right, 1e-10);
    if (report.scan[best].value <= value) {
        theta = report.scan[best].config.theta;
        value = report.scan[best].value;
    }

    report.best_config = connected_split(theta);
    report.best_value = value;
    certify(report, spectrum, tol);
    return report;
}

BetaStarReport beta_star_two_component(int n_scan, double tol, const SpectrumConfig& spectrum)
{
    require(n_scan >= 32, Errc::domain, "two-component scan needs n_scan >= 32 per axis");
    const double w = min_width(spectrum);
    const double lo = std::max(scan_margin, w);
    const double hi = pi - lo;
    const double step = (hi - lo) / (n_scan - 1);

    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < n_scan; ++i) {
        for (int j = i + 1; j < n_scan; ++j) {
            const double a = lo + i * step;
            const double b = lo + j * step;
            if (b - a >= w) pairs.emplace_back(a, b);
        }
    }

    BetaStarReport report;
    report.scan.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        const SplitConfig c = two_component_split(pairs[k].first, pairs[k].second);
        report.scan[k] = {c, split_value(c, spectrum)};
    });

    // Pairs are generated in lexicographic (a, b) order, so a strict comparison breaks
    // ties by smaller a, then smaller b.
    std::size_t best = 0;
    for (std::size_t k = 1; k < report.scan.size(); ++k) {
        if (report.scan[k].value < report.scan[best].value) best = k;
    }

    double a = report.scan[best].config.a;
    double b = report.scan[best].config.b;
    double value = report.scan[best].value;
    for (int sweep = 0; sweep < 20; ++sweep) {
        const double before = value;

        const double a_lo = std::max(lo, a - step);
        const double a_hi = std::min(b - w, a + step);
        if (a_hi > a_lo) {
            const auto fa = [&](double t) { return split_value(two_component_split(t, b), spectrum); };
            const auto [ta, va] = golden_section(fa, a_lo, a_hi, 1e-9);
            if (va < value) {
                a = ta;
                value = va;
            }
        }
        const double b_lo = std::max(a + w, b - step);
        const double b_hi = std::min(hi, b + step);
        if (b_hi > b_lo) {
            const auto fb = [&](double t) { return split_value(two_component_split(a, t), spectrum); };
            const auto [tb, vb] = golden_section(fb, b_lo, b_hi, 1e-9);
            if (vb < value) {
                b = tb;
                value = vb;
            }
        }
        if (before - value < 1e-12) break;
    }

    report.best_config = two_component_split(a, b);
    report.best_value = value;
    certify(report, spectrum, tol);

    const BetaStarReport connected = beta_star_connected(std::max(64, 2 * n_scan), tol, spectrum);
    report.connected_value = connected.best_value;
    report.undercuts_connected = report.best_value < connected.best_value - tol;
    return report;
}

} // namespace ehd
