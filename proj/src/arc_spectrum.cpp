#include "ehd/arc_spectrum.hpp"

#include "ehd/error.hpp"
#include "ehd/quadrature.hpp"
#include "ehd/tridiagonal.hpp"
#include "ode.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace ehd {

namespace {

constexpr double axis_snap = 1e-14;

double weight(Phase phase, double theta)
{
    const double s = std::sin(theta);
    return phase == Phase::gas ? s : 1.0 / s;
}

// Exact integral of the weight over [a, b], written to avoid cancellation.
double weight_integral(Phase phase, double a, double b)
{
    if (phase == Phase::gas) {
        return 2.0 * std::sin(0.5 * (a + b)) * std::sin(0.5 * (b - a));
    }
    // log(tan(b/2) / tan(a/2))
    return std::log1p(std::sin(0.5 * (b - a)) / (std::cos(0.5 * b) * std::sin(0.5 * a)));
}

std::string describe(const Arc& arc)
{
    std::ostringstream os;
    os.precision(17);
    os << "(" << arc.lo << ", " << arc.hi << ")";
    return os.str();
}

struct ComponentProblem {
    TridiagonalPencil<double> pencil;
    Eigen::VectorXd grid;
    Eigen::VectorXd node_mass;
    int first_unknown = 0;
    std::array<EndCondition, 2> bc{};
};

ComponentProblem assemble(const Arc& arc, Phase phase, int cells)
{
    ComponentProblem prob;
    prob.bc = {end_condition(arc.lo, phase), end_condition(arc.hi, phase)};
    const double h = arc.length() / cells;
    prob.grid = Eigen::VectorXd::LinSpaced(cells + 1, arc.lo, arc.hi);
    prob.grid(cells) = arc.hi;

    Eigen::VectorXd stiff(cells);
    for (int i = 0; i < cells; ++i) {
        stiff(i) = weight(phase, arc.lo + (i + 0.5) * h) / h;
    }

    prob.node_mass = Eigen::VectorXd::Zero(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        const double a = std::max(arc.lo, prob.grid(i) - 0.5 * h);
        const double b = std::min(arc.hi, prob.grid(i) + 0.5 * h);
        const bool dirichlet_end = (i == 0 && prob.bc[0] == EndCondition::dirichlet) ||
                                   (i == cells && prob.bc[1] == EndCondition::dirichlet);
        if (!dirichlet_end) {
            prob.node_mass(i) = weight_integral(phase, a, b);
        }
    }

    prob.first_unknown = prob.bc[0] == EndCondition::natural ? 0 : 1;
    const int last_unknown = prob.bc[1] == EndCondition::natural ? cells : cells - 1;
    const int n = last_unknown - prob.first_unknown + 1;
    prob.pencil.diag.resize(n);
    prob.pencil.off.resize(std::max(n - 1, 0));
    prob.pencil.mass.resize(n);
    for (int k = 0; k < n; ++k) {
        const int i = prob.first_unknown + k;
        double d = 0.0;
        if (i > 0) d += stiff(i - 1);
        if (i < cells) d += stiff(i);
        prob.pencil.diag(k) = d;
        prob.pencil.mass(k) = prob.node_mass(i);
        if (k + 1 < n) {
            prob.pencil.off(k) = -stiff(i);
        }
    }
    return prob;
}

void check_component(const Arc& arc, int n_grid)
{
    require(n_grid >= 16, Errc::domain, "n_grid must be at least 16, got " + std::to_string(n_grid));
    require(arc.length() >= 4.0 * reference_spacing(n_grid), Errc::degenerate_arc,
            "arc " + describe(arc) + " is shorter than four grid cells at n_grid = " + std::to_string(n_grid));
}

EigenResult solve_component(const Arc& arc, Phase phase, int n_grid, bool check = true)
{
    if (check) check_component(arc, n_grid);
    const ComponentProblem prob = assemble(arc, phase, n_grid);
    const EigenPair<double> pair = ground_state(prob.pencil);
    if (!(pair.relative_residual < 1e-8) || !std::isfinite(pair.value)) {
        std::ostringstream os;
        os << "eigen-iteration did not converge on " << describe(arc) << " (relative residual "
           << pair.relative_residual << ")";
        throw Error(Errc::iteration_failure, os.str());
    }

    EigenResult result;
    result.lambda = std::max(pair.value, 0.0);
    result.alpha = alpha_of(result.lambda, phase);
    result.phase = phase;
    result.support = arc;
    result.grid = prob.grid;
    result.mass = prob.node_mass;
    result.bc = prob.bc;
    result.relative_residual = pair.relative_residual;
    result.eigenfunction = Eigen::VectorXd::Zero(prob.grid.size());
    result.eigenfunction.segment(prob.first_unknown, pair.vector.size()) = pair.vector.cwiseMax(0.0);
    return result;
}

// Regular solution at the north pole as a hypergeometric series in s = sin^2(theta/2):
// P(theta) = 1 - lambda * sum_{k>=1} d_k s^k, d_1 = 1, d_k = d_{k-1} ((k-1)k - lambda) / k^2.
// Returns (y, p y') with p = w the phase weight.
std::pair<double, double> regular_branch(double theta, double lambda, Phase phase)
{
    const double s = std::sin(0.5 * theta) * std::sin(0.5 * theta);
    const double half_sin2 = 0.5 * std::sin(theta) * std::sin(theta);
    double d = 1.0;
    double pow_s = s;           // s^k
    double pow_prev = 1.0;      // s^(k-1)
    double sum_d = 0.0;         // sum d_k s^k
    double sum_kd = 0.0;        // sum k d_k s^(k-1)
    for (int k = 1; k < 2000; ++k) {
        if (k > 1) {
            d *= ((k - 1.0) * k - lambda) / (double(k) * k);
        }
        const double t1 = d * pow_s;
        const double t2 = k * d * pow_prev;
        sum_d += t1;
        sum_kd += t2;
        if (k > 4 && std::abs(t2) <= 1e-18 * std::abs(sum_kd) && std::abs(t1) <= 1e-18 * (1.0 + std::abs(sum_d))) {
            break;
        }
        pow_prev = pow_s;
        pow_s *= s;
    }
    const double legendre = 1.0 - lambda * sum_d;
    if (phase == Phase::gas) {
        return {legendre, -lambda * half_sin2 * sum_kd};
    }
    // fluid: g = -sin(theta) dP/dtheta scaled by 1/lambda, and (g'/sin) = P.
    return {half_sin2 * sum_kd, legendre};
}

double prufer_rhs(Phase phase, double lambda, double theta, double phi)
{
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double w = weight(phase, theta);
    return c * c / w + lambda * w * s * s;
}

// Difference of the left and right Prufer angles at the arc midpoint; increasing in lambda
// and zero at each eigenvalue (modulo pi).
double prufer_mismatch(const Arc& arc, Phase phase, double lambda)
{
    const double mid = 0.5 * (arc.lo + arc.hi);
    const double delta = std::min({0.25, arc.length() / 4.0, 0.5 / std::sqrt(lambda + 1.0)});
    const auto rhs = [&](double t, double phi) { return prufer_rhs(phase, lambda, t, phi); };
    const double rtol = 1e-13;
    const double atol = 1e-15;

    double left_start = arc.lo;
    double left_phi = 0.0;
    if (arc.touches_north()) {
        const auto [y, py] = regular_branch(delta, lambda, phase);
        left_start = delta;
        left_phi = std::atan2(y, py);
    }
    double right_start = arc.hi;
    double right_phi = pi;
    if (arc.touches_south()) {
        const auto [y, py] = regular_branch(delta, lambda, phase);
        right_start = pi - delta;
        right_phi = std::atan2(y, -py);
    }
    const double phi_l = detail::integrate_dopri5(rhs, left_start, left_phi, mid, rtol, atol);
    const double phi_r = detail::integrate_dopri5(rhs, right_start, right_phi, mid, rtol, atol);
    return phi_l - phi_r;
}

} // namespace

const char* to_string(Phase phase) noexcept
{
    return phase == Phase::gas ? "gas" : "fluid";
}

const char* to_string(EndCondition bc) noexcept
{
    return bc == EndCondition::natural ? "natural" : "dirichlet";
}

const char* to_string(SpectrumMethod method) noexcept
{
    return method == SpectrumMethod::grid ? "grid" : "shooting";
}

Arc Arc::reflected() const
{
    return Arc{pi - hi, pi - lo};
}

Arc make_arc(double lo, double hi)
{
    if (std::abs(lo) <= axis_snap) lo = 0.0;
    if (std::abs(hi - pi) <= axis_snap) hi = pi;
    require(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && hi <= pi && lo < hi, Errc::domain,
            "invalid arc (" + std::to_string(lo) + ", " + std::to_string(hi) + "): need 0 <= lo < hi <= pi");
    return Arc{lo, hi};
}

ArcSet::ArcSet(std::initializer_list<Arc> arcs) : ArcSet(std::vector<Arc>(arcs)) {}

ArcSet::ArcSet(std::vector<Arc> arcs) : arcs_(std::move(arcs))
{
    for (Arc& a : arcs_) {
        a = make_arc(a.lo, a.hi);
    }
    std::sort(arcs_.begin(), arcs_.end(), [](const Arc& a, const Arc& b) { return a.lo < b.lo; });
    for (std::size_t i = 1; i < arcs_.size(); ++i) {
        require(arcs_[i].lo > arcs_[i - 1].hi, Errc::domain,
                "arcs " + describe(arcs_[i - 1]) + " and " + describe(arcs_[i]) + " overlap or touch");
    }
}

double ArcSet::measure() const
{
    double m = 0.0;
    for (const Arc& a : arcs_) m += a.length();
    return m;
}

ArcSet ArcSet::reflected() const
{
    std::vector<Arc> out;
    for (const Arc& a : arcs_) out.push_back(a.reflected());
    return ArcSet(std::move(out));
}

ArcSet ArcSet::complement() const
{
    std::vector<Arc> out;
    double cursor = 0.0;
    for (const Arc& a : arcs_) {
        if (a.lo > cursor) out.push_back(Arc{cursor, a.lo});
        cursor = a.hi;
    }
    if (cursor < pi) out.push_back(Arc{cursor, pi});
    return ArcSet(std::move(out));
}

bool ArcSet::contains(const ArcSet& other) const
{
    return std::all_of(other.arcs().begin(), other.arcs().end(), [&](const Arc& inner) {
        return std::any_of(arcs_.begin(), arcs_.end(),
                           [&](const Arc& outer) { return outer.lo <= inner.lo && inner.hi <= outer.hi; });
    });
}

EndCondition end_condition(double endpoint, Phase phase)
{
    const bool on_axis = endpoint == 0.0 || endpoint == pi;
    return on_axis && phase == Phase::gas ? EndCondition::natural : EndCondition::dirichlet;
}

EigenResult eigenvalue(const ArcSet& arcs, Phase phase, int n_grid)
{
    require(!arcs.empty(), Errc::domain, "eigenvalue of an empty arc set");
    for (const Arc& a : arcs.arcs()) check_component(a, n_grid);

    EigenResult best;
    bool have = false;
    for (const Arc& a : arcs.arcs()) {
        EigenResult r = solve_component(a, phase, n_grid);
        if (!have || r.lambda < best.lambda) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

double extrapolated_eigenvalue(const ArcSet& arcs, Phase phase, int n_grid)
{
    require(n_grid % 2 == 0 && n_grid / 2 >= 16, Errc::domain,
            "Richardson extrapolation needs an even n_grid >= 32, got " + std::to_string(n_grid));
    require(!arcs.empty(), Errc::domain, "eigenvalue of an empty arc set");
    for (const Arc& a : arcs.arcs()) check_component(a, n_grid);

    double best = std::numeric_limits<double>::infinity();
    for (const Arc& a : arcs.arcs()) {
        const double fine = solve_component(a, phase, n_grid).lambda;
        const double coarse = solve_component(a, phase, n_grid / 2, false).lambda;
        best = std::min(best, std::max(0.0, fine + (fine - coarse) / 3.0));
    }
    return best;
}

double rayleigh_quotient(const EigenResult& result)
{
    const Eigen::Index n = result.grid.size();
    double energy = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double h = result.grid(i + 1) - result.grid(i);
        const double df = (result.eigenfunction(i + 1) - result.eigenfunction(i)) / h;
        energy += weight(result.phase, 0.5 * (result.grid(i) + result.grid(i + 1))) * df * df * h;
    }
    const double mass = result.eigenfunction.cwiseAbs2().dot(result.mass);
    return energy / mass;
}

double shoot_oracle(const Arc& arc_in, Phase phase, double tol)
{
    require(tol >= 1e-12, Errc::domain, "shooting tolerance must be at least 1e-12");
    const Arc arc = make_arc(arc_in.lo, arc_in.hi);

    const double at_zero = prufer_mismatch(arc, phase, 0.0);
    if (at_zero >= -1e-12) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (prufer_mismatch(arc, phase, hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) {
            throw Error(Errc::bracket_failure, "no eigenvalue bracket in (0, 1e6) on " + describe(arc));
        }
    }
    for (int it = 0; it < 200 && hi - lo > tol * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (prufer_mismatch(arc, phase, mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double alpha_of(double lambda, Phase phase)
{
    require(lambda >= 0.0, Errc::domain, "eigenvalue must be nonnegative, got " + std::to_string(lambda));
    const double root = std::sqrt(1.0 + 4.0 * lambda);
    return phase == Phase::gas ? 0.5 * (root - 1.0) : 0.5 * (root + 1.0);
}

double lambda_of(double alpha, Phase phase)
{
    return phase == Phase::gas ? alpha * (alpha + 1.0) : alpha * (alpha - 1.0);
}

double arc_eigenvalue(const Arc& arc, Phase phase, const SpectrumConfig& config)
{
    if (config.method == SpectrumMethod::shooting) {
        return shoot_oracle(arc, phase, config.shooting_tol);
    }
    const ArcSet set{arc};
    return config.extrapolate ? extrapolated_eigenvalue(set, phase, config.n_grid)
                              : eigenvalue(set, phase, config.n_grid).lambda;
}

std::size_t SpectrumCache::KeyHash::operator()(const Key& k) const noexcept
{
    std::size_t h = std::hash<std::uint64_t>{}(k.lo_bits);
    const auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(std::hash<std::uint64_t>{}(k.hi_bits));
    mix(std::hash<std::uint64_t>{}(k.tol_bits));
    mix(std::size_t(k.phase * 131 + k.flags * 7 + k.n_grid * 8191));
    return h;
}

double SpectrumCache::lookup_or_compute(const Arc& arc, Phase phase, const SpectrumConfig& config,
                                        const std::function<double()>& compute)
{
    const Key key{std::bit_cast<std::uint64_t>(arc.lo), std::bit_cast<std::uint64_t>(arc.hi), int(phase),
                  config.n_grid, int(config.extrapolate) | (int(config.method) << 1),
                  std::bit_cast<std::uint64_t>(config.shooting_tol)};
    {
        std::shared_lock lock(mutex_);
        if (auto it = values_.find(key); it != values_.end()) {
            return it->second;
        }
    }
    // Computed outside the lock; the value is a pure function of the key.
    const double value = compute();
    std::unique_lock lock(mutex_);
    values_.emplace(key, value);
    return value;
}

std::size_t SpectrumCache::size() const
{
    std::shared_lock lock(mutex_);
    return values_.size();
}

void SpectrumCache::clear()
{
    std::unique_lock lock(mutex_);
    values_.clear();
}

SpectrumCache& SpectrumCache::global()
{
    static SpectrumCache cache;
    return cache;
}

double cached_eigenvalue(const Arc& arc, Phase phase, const SpectrumConfig& config)
{
    // South-pole arcs are stored under their mirror image so both orientations share entries.
    const Arc key = arc.touches_south() && !arc.touches_north() ? arc.reflected() : arc;
    return SpectrumCache::global().lookup_or_compute(key, phase, config,
                                                     [&] { return arc_eigenvalue(key, phase, config); });
}

double arcset_eigenvalue(const ArcSet& arcs, Phase phase, const SpectrumConfig& config)
{
    require(!arcs.empty(), Errc::domain, "eigenvalue of an empty arc set");
    double best = std::numeric_limits<double>::infinity();
    for (const Arc& a : arcs.arcs()) {
        best = std::min(best, cached_eigenvalue(a, phase, config));
    }
    return best;
}

namespace {

double polar_cap_eigenvalue(double theta, Phase phase, const SpectrumConfig& config)
{
    require(theta > 0.0 && theta < pi, Errc::domain,
            "theta must lie in (0, pi), got " + std::to_string(theta));
    return cached_eigenvalue(Arc{0.0, theta}, phase, config);
}

} // namespace

double i_plus(double theta, const SpectrumConfig& config)
{
    return polar_cap_eigenvalue(theta, Phase::gas, config);
}

double i_minus(double theta, const SpectrumConfig& config)
{
    return polar_cap_eigenvalue(theta, Phase::fluid, config);
}

MatchedHomogeneity matched_homogeneity(double tol, const SpectrumConfig& config)
{
    require(tol >= 1e-10, Errc::domain, "matched homogeneity tolerance must be at least 1e-10");
    const auto mismatch = [&](double theta) { return i_plus(pi - theta, config) - i_minus(theta, config); };

    double lo = 0.05;
    double hi = pi - 0.05;
    const double f_lo = mismatch(lo);
    const double f_hi = mismatch(hi);
    if (!(f_lo < 0.0 && f_hi > 0.0)) {
        std::ostringstream os;
        os << "I+(pi - theta) - I-(theta) does not change sign on [" << lo << ", " << hi << "]: " << f_lo
           << ", " << f_hi;
        throw Error(Errc::monotonicity_violation, os.str());
    }

    MatchedHomogeneity out;
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (mismatch(mid) < 0.0 ? lo : hi) = mid;
        ++out.bisection_steps;
    }
    const double theta1 = 0.5 * (lo + hi);
    const double lam_plus = i_plus(pi - theta1, config);
    const double lam_minus = i_minus(theta1, config);
    out.theta1 = theta1;
    out.alpha_star = alpha_of(lam_plus, Phase::gas);
    out.lambda_star = lam_plus;
    out.residual = std::abs(1.0 + out.alpha_star - alpha_of(lam_minus, Phase::fluid));
    out.gas_arc = Arc{0.0, pi - theta1};
    out.fluid_arc = Arc{pi - theta1, pi};
    out.gas_arc_reflected = Arc{theta1, pi};
    out.fluid_arc_reflected = Arc{0.0, theta1};
    if (!(out.residual < tol)) {
        std::ostringstream os;
        os << "matched homogeneity residual " << out.residual << " exceeds tolerance " << tol;
        throw Error(Errc::iteration_failure, os.str());
    }
    return out;
}

TaylorCone taylor_cone(double tol, const SpectrumConfig& config)
{
    require(tol >= 1e-10, Errc::domain, "Taylor cone tolerance must be at least 1e-10");
    const double target = lambda_of(0.5, Phase::gas);
    double lo = 0.5;
    double hi = pi - 0.05;
    const double g_lo = i_plus(lo, config) - target;
    const double g_hi = i_plus(hi, config) - target;
    if (!(g_lo > 0.0 && g_hi < 0.0)) {
        throw Error(Errc::monotonicity_violation, "I+(theta) - 3/4 does not change sign on the search interval");
    }
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (i_plus(mid, config) > target ? lo : hi) = mid;
    }
    TaylorCone out;
    out.theta_t = 0.5 * (lo + hi);
    out.alpha = alpha_of(i_plus(out.theta_t, config), Phase::gas);
    out.opening_deg = 2.0 * (pi - out.theta_t) * 180.0 / pi;
    if (!(std::abs(out.alpha - 0.5) < std::max(tol, 1e-9))) {
        throw Error(Errc::iteration_failure, "Taylor cone exponent did not converge to 1/2");
    }
    return out;
}

SubstitutionIdentity substitution_identity(const Arc& arc, const std::function<double(double)>& f,
                                           const std::function<double(double)>& df, int panels)
{
    SubstitutionIdentity out;
    const auto g_prime = [&](double t) { return std::cos(t) * f(t) + std::sin(t) * df(t); };
    out.fluid_energy = integrate<double>([&](double t) { const double gp = g_prime(t); return gp * gp / std::sin(t); },
                                         arc.lo, arc.hi, panels);
    out.fluid_mass = integrate<double>([&](double t) { const double v = f(t); return v * v / std::sin(t); },
                                       arc.lo, arc.hi, panels);
    out.gas_energy = integrate<double>([&](double t) { const double d = df(t); return std::sin(t) * d * d; },
                                       arc.lo, arc.hi, panels);
    out.gas_mass = integrate<double>([&](double t) { const double v = f(t); return std::sin(t) * v * v; },
                                     arc.lo, arc.hi, panels);
    return out;
}

} // namespace ehd
