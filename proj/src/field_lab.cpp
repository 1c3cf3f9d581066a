#include "ehd/field_lab.hpp"

#include "ehd/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ehd {

namespace {

// +1 gas, -1 fluid, 0 unassigned (u == 0 under the sign rule).
int node_phase(PhaseRule rule, double u)
{
    switch (rule) {
    case PhaseRule::all_gas: return 1;
    case PhaseRule::all_fluid: return -1;
    case PhaseRule::by_sign: break;
    }
    return u > 0.0 ? 1 : (u < 0.0 ? -1 : 0);
}

// Two samples may share a difference stencil unless they lie in strictly opposite phases.
bool compatible(PhaseRule rule, double a, double b)
{
    return rule != PhaseRule::by_sign || !(a * b < 0.0);
}

// Derivative at position k of a line of samples, preferring central differences and falling
// back to one-sided second-order formulas when the stencil would cross a phase interface.
// sample(m) must accept m in [lo, hi].
template <typename Sample>
double phase_aware_derivative(PhaseRule rule, Sample&& sample, int k, int lo, int hi, double step)
{
    const double u = sample(k);
    const auto ok = [&](int m) { return m >= lo && m <= hi && compatible(rule, u, sample(m)); };
    if (ok(k - 1) && ok(k + 1)) {
        return (sample(k + 1) - sample(k - 1)) / (2.0 * step);
    }
    if (ok(k + 1) && ok(k + 2)) {
        return (-3.0 * u + 4.0 * sample(k + 1) - sample(k + 2)) / (2.0 * step);
    }
    if (ok(k - 1) && ok(k - 2)) {
        return (3.0 * u - 4.0 * sample(k - 1) + sample(k - 2)) / (2.0 * step);
    }
    if (ok(k + 1)) return (sample(k + 1) - u) / step;
    if (ok(k - 1)) return (u - sample(k - 1)) / step;
    return 0.0;
}

struct Gradients {
    Eigen::MatrixXd ur;   // d_r u
    Eigen::MatrixXd ut;   // (1/r) d_theta u
};

Gradients gradients(const MeridianField& f)
{
    const int nr = f.n_r();
    const int nt = f.n_theta();
    const Eigen::MatrixXd& u = f.values();
    Gradients g{Eigen::MatrixXd(nr, nt), Eigen::MatrixXd(nr, nt)};
    for (int i = 0; i < nr; ++i) {
        // Even reflection across the axis: theta_{-1-k} mirrors theta_k, likewise at theta = pi.
        const auto ring = [&](int j) {
            if (j < 0) j = -j - 1;
            if (j >= nt) j = 2 * nt - j - 1;
            return u(i, j);
        };
        for (int j = 0; j < nt; ++j) {
            g.ut(i, j) = phase_aware_derivative(f.phase_rule(), ring, j, -2, nt + 1, f.dtheta()) / f.r(i);
        }
    }
    for (int j = 0; j < nt; ++j) {
        const auto ray = [&](int i) { return u(i, j); };
        for (int i = 0; i < nr; ++i) {
            g.ur(i, j) = phase_aware_derivative(f.phase_rule(), ray, i, 0, nr - 1, f.dr());
        }
    }
    return g;
}

// Per-ring integrals, index k = 0 at r = 0 (all zero) and k = i + 1 at r_i.
struct RingData {
    double dr = 0.0;
    int n = 0;
    // [0] gas, [1] fluid; each over the circle of radius r with dS = r dtheta.
    std::array<std::vector<double>, 2> energy;     // int w |grad u|^2 dS
    std::array<std::vector<double>, 2> mass;       // int w u^2 dS          (J)
    std::array<std::vector<double>, 2> flux;       // int w u d_r u dS
    std::array<std::vector<double>, 2> radial;     // int w (d_r u)^2 dS
    std::array<std::vector<double>, 2> tangential; // int w (d_tau u)^2 dS
    std::array<std::vector<double>, 2> cumulative_energy;  // I over B_r
    std::array<std::vector<double>, 2> cumulative_mass;    // int_{B_r} w u^2 dx
};

std::vector<double> cumulate(const std::vector<double>& f, double h)
{
    const std::size_t n = f.size() - 1;
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double step;
        if (k + 2 <= n) {
            step = h / 12.0 * (5.0 * f[k] + 8.0 * f[k + 1] - f[k + 2]);
        } else {
            step = h / 12.0 * (-f[k - 1] + 8.0 * f[k] + 5.0 * f[k + 1]);
        }
        out[k + 1] = out[k] + step;
    }
    return out;
}

RingData ring_data(const MeridianField& f)
{
    require(f.n_r() >= 4, Errc::resolution, "field needs at least 4 radial samples");
    const Gradients g = gradients(f);
    RingData d;
    d.dr = f.dr();
    d.n = f.n_r();
    for (int p = 0; p < 2; ++p) {
        for (auto* v : {&d.energy[p], &d.mass[p], &d.flux[p], &d.radial[p], &d.tangential[p]}) {
            v->assign(d.n + 1, 0.0);
        }
    }
    const double dt = f.dtheta();
    for (int i = 0; i < f.n_r(); ++i) {
        const double r = f.r(i);
        for (int j = 0; j < f.n_theta(); ++j) {
            const double u = f.values()(i, j);
            const int phase = node_phase(f.phase_rule(), u);
            if (phase == 0) continue;
            const int p = phase > 0 ? 0 : 1;
            const double x1 = r * std::sin(f.theta(j));
            const double w = (phase > 0 ? x1 : 1.0 / x1) * r * dt;
            const double ur = g.ur(i, j);
            const double ut = g.ut(i, j);
            d.energy[p][i + 1] += w * (ur * ur + ut * ut);
            d.mass[p][i + 1] += w * u * u;
            d.flux[p][i + 1] += w * u * ur;
            d.radial[p][i + 1] += w * ur * ur;
            d.tangential[p][i + 1] += w * ut * ut;
        }
    }
    for (int p = 0; p < 2; ++p) {
        d.cumulative_energy[p] = cumulate(d.energy[p], d.dr);
        d.cumulative_mass[p] = cumulate(d.mass[p], d.dr);
    }
    return d;
}

void check_radius(const MeridianField& f, double r)
{
    if (!(r >= 3.0 * f.dr() * (1.0 - 1e-12) && r <= f.r_max() * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << "radius " << r << " outside the resolved range [" << 3.0 * f.dr() << ", " << f.r_max() << "]";
        throw Error(Errc::resolution, os.str());
    }
}

double at_radius(const std::vector<double>& v, double dr, double r)
{
    const double t = std::clamp(r / dr, 0.0, double(v.size() - 1));
    const std::size_t k = std::min<std::size_t>(std::size_t(t), v.size() - 2);
    const double frac = t - double(k);
    // Exact grid radii are returned without blending.
    if (frac == 0.0) return v[k];
    return (1.0 - frac) * v[k] + frac * v[k + 1];
}

double select(const std::array<std::vector<double>, 2>& v, double dr, double r, Part part)
{
    switch (part) {
    case Part::plus: return at_radius(v[0], dr, r);
    case Part::minus: return at_radius(v[1], dr, r);
    case Part::total: break;
    }
    return at_radius(v[0], dr, r) + at_radius(v[1], dr, r);
}

double weiss_m_from(const RingData& d, double r, double beta, int n)
{
    const double I = select(d.cumulative_energy, d.dr, r, Part::total);
    const double jp = select(d.mass, d.dr, r, Part::plus);
    const double jm = select(d.mass, d.dr, r, Part::minus);
    const double s = std::pow(r, -2.0 * beta - n);
    return s * r * I - beta * s * jp - (beta + 1.0) * s * jm;
}

double m_prime_rhs_from(const RingData& d, double r, double beta, int n)
{
    double sum = 0.0;
    for (int p = 0; p < 2; ++p) {
        const double b = (p == 0 ? beta : beta + 1.0) / r;
        const double R = at_radius(d.radial[p], d.dr, r);
        const double F = at_radius(d.flux[p], d.dr, r);
        const double J = at_radius(d.mass[p], d.dr, r);
        sum += R - 2.0 * b * F + b * b * J;
    }
    return 2.0 * std::pow(r, -2.0 * beta - n + 1.0) * sum;
}

// Cubic Lagrange interpolation through four consecutive samples starting at k0.
double lagrange4(const double* y, double t)
{
    const double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    const double l1 = t * (t - 2) * (t - 3) / 2.0;
    const double l2 = -t * (t - 1) * (t - 3) / 2.0;
    const double l3 = t * (t - 1) * (t - 2) / 6.0;
    return l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3];
}

double eval_eigenfunction(const EigenResult& e, double theta)
{
    const Arc& s = e.support;
    if (theta <= s.lo || theta >= s.hi) return 0.0;
    const Eigen::Index n = e.grid.size();
    const double h = (s.hi - s.lo) / double(n - 1);
    const double t = (theta - s.lo) / h;
    const Eigen::Index k0 = std::clamp<Eigen::Index>(Eigen::Index(t) - 1, 0, n - 4);
    return std::max(0.0, lagrange4(e.eigenfunction.data() + k0, t - double(k0)));
}

// |g'| at an endpoint of the support by a one-sided second-order difference.
double endpoint_slope(const EigenResult& e, bool at_hi)
{
    const Eigen::Index n = e.grid.size();
    const double h = e.support.length() / double(n - 1);
    const Eigen::VectorXd& g = e.eigenfunction;
    if (at_hi) {
        return std::abs(3.0 * g(n - 1) - 4.0 * g(n - 2) + g(n - 3)) / (2.0 * h);
    }
    return std::abs(-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * h);
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

} // namespace

const char* to_string(PhaseRule rule) noexcept
{
    switch (rule) {
    case PhaseRule::by_sign: return "by_sign";
    case PhaseRule::all_gas: return "all_gas";
    case PhaseRule::all_fluid: return "all_fluid";
    }
    return "by_sign";
}

PhaseRule phase_rule_from_string(const std::string& name)
{
    if (name == "by_sign") return PhaseRule::by_sign;
    if (name == "all_gas") return PhaseRule::all_gas;
    if (name == "all_fluid") return PhaseRule::all_fluid;
    throw Error(Errc::io, "unknown phase rule '" + name + "'");
}

const char* to_string(MonitorKind kind) noexcept
{
    switch (kind) {
    case MonitorKind::phi: return "phi";
    case MonitorKind::weiss_m: return "weiss_m";
    case MonitorKind::i_total: return "i_total";
    case MonitorKind::i_plus: return "i_plus";
    case MonitorKind::i_minus: return "i_minus";
    case MonitorKind::j_plus: return "j_plus";
    case MonitorKind::j_minus: return "j_minus";
    case MonitorKind::residual: return "residual";
    }
    return "residual";
}

MeridianField::MeridianField(FieldGrid grid, Eigen::MatrixXd values, PhaseRule rule, std::string provenance)
    : grid_(grid), values_(std::move(values)), rule_(rule), provenance_(std::move(provenance))
{
    require(grid_.n_r >= 4 && grid_.n_theta >= 4 && grid_.dr > 0.0, Errc::domain,
            "field grid needs n_r >= 4, n_theta >= 4 and dr > 0");
    require(values_.rows() == grid_.n_r && values_.cols() == grid_.n_theta, Errc::domain,
            "field values do not match the grid shape");
    require(values_.allFinite(), Errc::domain, "field values must be finite");
}

double MeridianField::h() const
{
    return std::max(grid_.dr, dtheta());
}

double MeridianField::scale() const
{
    return values_.cwiseAbs2().maxCoeff();
}

double IdentityTolerance::operator()(const MeridianField& field) const
{
    return c1 * field.h() * field.h() + c2 * field.scale();
}

MeridianField sample_field(const std::function<double(double, double)>& u, FieldGrid grid, PhaseRule rule,
                           std::string provenance)
{
    Eigen::MatrixXd v(grid.n_r, grid.n_theta);
    const double dt = pi / grid.n_theta;
    for (int i = 0; i < grid.n_r; ++i) {
        const double r = (i + 1) * grid.dr;
        for (int j = 0; j < grid.n_theta; ++j) {
            const double t = (j + 0.5) * dt;
            v(i, j) = u(r * std::sin(t), r * std::cos(t));
        }
    }
    return MeridianField(grid, std::move(v), rule, std::move(provenance));
}

MeridianField make_homogeneous_field(double alpha, const std::optional<EigenResult>& gas,
                                     const std::optional<EigenResult>& fluid, FieldGrid grid, Amplitude amplitude)
{
    require(gas || fluid, Errc::domain, "homogeneous field needs at least one phase");
    require(alpha >= 0.0, Errc::domain, "homogeneity exponent must be nonnegative");
    if (gas) require(gas->phase == Phase::gas, Errc::domain, "gas eigenfunction has the wrong phase");
    if (fluid) require(fluid->phase == Phase::fluid, Errc::domain, "fluid eigenfunction has the wrong phase");

    double fluid_scale = 1.0;
    std::ostringstream prov;
    prov.precision(17);
    prov << "homogeneous alpha=" << alpha;
    if (gas && fluid) {
        const Arc& a = gas->support;
        const Arc& b = fluid->support;
        require(a.hi <= b.lo || b.hi <= a.lo, Errc::support_overlap, "gas and fluid supports overlap");
        if (amplitude == Amplitude::balanced) {
            const bool gas_first = std::abs(a.hi - b.lo) < 1e-12;
            const bool fluid_first = std::abs(b.hi - a.lo) < 1e-12;
            if (gas_first || fluid_first) {
                const double theta_i = gas_first ? a.hi : a.lo;
                const double slope_gas = endpoint_slope(*gas, gas_first);
                const double slope_fluid = endpoint_slope(*fluid, !gas_first);
                fluid_scale = std::sin(theta_i) * slope_gas / slope_fluid;
            }
        }
        prov << " gas=(" << a.lo << "," << a.hi << ") fluid=(" << b.lo << "," << b.hi
             << ") fluid_scale=" << fluid_scale;
    }

    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_r, grid.n_theta);
    const double dt = pi / grid.n_theta;
    for (int j = 0; j < grid.n_theta; ++j) {
        const double t = (j + 0.5) * dt;
        const double gp = gas ? eval_eigenfunction(*gas, t) : 0.0;
        const double gm = fluid ? eval_eigenfunction(*fluid, t) : 0.0;
        for (int i = 0; i < grid.n_r; ++i) {
            const double r = (i + 1) * grid.dr;
            v(i, j) = std::pow(r, alpha) * gp - fluid_scale * std::pow(r, alpha + 1.0) * gm;
        }
    }
    return MeridianField(grid, std::move(v), PhaseRule::by_sign, prov.str());
}

double energy_ring(const MeridianField& field, double r, Part part)
{
    check_radius(field, r);
    const RingData d = ring_data(field);
    return select(d.cumulative_energy, d.dr, r, part);
}

double boundary_mass(const MeridianField& field, double r, Part part)
{
    check_radius(field, r);
    const RingData d = ring_data(field);
    return select(d.mass, d.dr, r, part);
}

double acf_phi(const MeridianField& field, double r, double beta_star)
{
    check_radius(field, r);
    const RingData d = ring_data(field);
    return std::pow(r, -2.0 * beta_star) * select(d.cumulative_energy, d.dr, r, Part::plus) *
           select(d.cumulative_energy, d.dr, r, Part::minus);
}

double weiss_m(const MeridianField& field, double r, double beta, int n)
{
    check_radius(field, r);
    return weiss_m_from(ring_data(field), r, beta, n);
}

double weiss_m_prime_rhs(const MeridianField& field, double r, double beta, int n)
{
    check_radius(field, r);
    return m_prime_rhs_from(ring_data(field), r, beta, n);
}

double weiss_m_prime_residual(const MeridianField& field, double r, double beta, int n)
{
    const double dr = field.dr();
    check_radius(field, r - dr);
    check_radius(field, r + dr);
    const RingData d = ring_data(field);
    const double dm = (weiss_m_from(d, r + dr, beta, n) - weiss_m_from(d, r - dr, beta, n)) / (2.0 * dr);
    return std::abs(dm - m_prime_rhs_from(d, r, beta, n));
}

double flux_identity_residual(const MeridianField& field, double r)
{
    check_radius(field, r);
    const RingData d = ring_data(field);
    return std::abs(select(d.cumulative_energy, d.dr, r, Part::total) - select(d.flux, d.dr, r, Part::total));
}

MonitorCurve monitor_curve(const MeridianField& field, MonitorKind kind, const GrowthParams& params)
{
    const RingData d = ring_data(field);
    MonitorCurve out;
    out.kind = kind;
    for (int i = 2; i < field.n_r(); ++i) {
        const double r = field.r(i);
        double v = 0.0;
        switch (kind) {
        case MonitorKind::phi:
            v = std::pow(r, -2.0 * params.beta_star) * select(d.cumulative_energy, d.dr, r, Part::plus) *
                select(d.cumulative_energy, d.dr, r, Part::minus);
            break;
        case MonitorKind::weiss_m: v = weiss_m_from(d, r, params.beta, params.n); break;
        case MonitorKind::i_total: v = select(d.cumulative_energy, d.dr, r, Part::total); break;
        case MonitorKind::i_plus: v = select(d.cumulative_energy, d.dr, r, Part::plus); break;
        case MonitorKind::i_minus: v = select(d.cumulative_energy, d.dr, r, Part::minus); break;
        case MonitorKind::j_plus: v = select(d.mass, d.dr, r, Part::plus); break;
        case MonitorKind::j_minus: v = select(d.mass, d.dr, r, Part::minus); break;
        case MonitorKind::residual:
            v = std::abs(select(d.cumulative_energy, d.dr, r, Part::total) - select(d.flux, d.dr, r, Part::total));
            break;
        }
        out.radii.push_back(r);
        out.values.push_back(v);
    }
    return out;
}

MonitorCurve jm_relation_residual(const MeridianField& field, double beta, int n)
{
    const RingData d = ring_data(field);
    const double dr = field.dr();
    const auto scaled_j = [&](double r) { return std::pow(r, -2.0 * beta - n) * select(d.mass, dr, r, Part::total); };
    MonitorCurve out;
    out.kind = MonitorKind::residual;
    for (int i = 3; i + 1 < field.n_r(); ++i) {
        const double r = field.r(i);
        const double derivative = (scaled_j(r + dr) - scaled_j(r - dr)) / (2.0 * dr);
        out.radii.push_back(r);
        out.values.push_back(derivative - 2.0 / r * weiss_m_from(d, r, beta, n));
    }
    return out;
}

std::array<double, 2> TestVectorField::value(double x1, double x2) const
{
    const double q = ((x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2)) / (radius * radius);
    if (q >= 1.0) return {0.0, 0.0};
    const double psi = (1.0 - q) * (1.0 - q) * (1.0 - q);
    return {a1 * x1 * psi, a2 * psi};
}

std::array<double, 4> TestVectorField::jacobian(double x1, double x2) const
{
    const double q = ((x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2)) / (radius * radius);
    if (q >= 1.0) return {0.0, 0.0, 0.0, 0.0};
    const double psi = (1.0 - q) * (1.0 - q) * (1.0 - q);
    const double dpsi = -3.0 * (1.0 - q) * (1.0 - q) / (radius * radius);   // d psi / d q times 1/rho^2
    const double p1 = dpsi * 2.0 * (x1 - c1);
    const double p2 = dpsi * 2.0 * (x2 - c2);
    return {a1 * (psi + x1 * p1), a1 * x1 * p2, a2 * p1, a2 * p2};
}

double first_variation_residual(const MeridianField& field, const TestVectorField& phi)
{
    require(phi.radius > 0.0, Errc::support, "test field radius must be positive");
    const double reach = std::hypot(phi.c1, phi.c2) + phi.radius;
    require(reach <= field.r_max() - 2.0 * field.dr(), Errc::support,
            "test field support reaches the outer boundary of the grid");

    const Gradients g = gradients(field);
    const double dt = field.dtheta();
    double sum = 0.0;
    for (int i = 0; i < field.n_r(); ++i) {
        const double r = field.r(i);
        for (int j = 0; j < field.n_theta(); ++j) {
            const double u = field.values()(i, j);
            const int phase = node_phase(field.phase_rule(), u);
            if (phase == 0) continue;
            const double s = std::sin(field.theta(j));
            const double c = std::cos(field.theta(j));
            const double x1 = r * s;
            const double x2 = r * c;
            const auto J = phi.jacobian(x1, x2);
            if (J[0] == 0.0 && J[1] == 0.0 && J[2] == 0.0 && J[3] == 0.0) continue;
            const auto v = phi.value(x1, x2);
            const double g1 = s * g.ur(i, j) + c * g.ut(i, j);
            const double g2 = c * g.ur(i, j) - s * g.ut(i, j);
            const double grad2 = g1 * g1 + g2 * g2;
            const double div = J[0] + J[3];
            const double quad = g1 * (J[0] * g1 + J[1] * g2) + g2 * (J[2] * g1 + J[3] * g2);
            double integrand;
            if (phase > 0) {
                integrand = x1 * grad2 * div - 2.0 * x1 * quad + grad2 * v[0];
            } else {
                integrand = grad2 / x1 * div - 2.0 / x1 * quad - grad2 / (x1 * x1) * v[0];
            }
            sum += integrand * r * field.dr() * dt;
        }
    }
    return std::abs(sum);
}

MeridianField rescale_field(const MeridianField& field, double r_m, double gamma, RescaleMode mode)
{
    require(r_m > 0.0 && r_m <= 1.0, Errc::domain, "rescaling radius must lie in (0, 1]");
    require(gamma > 0.0 && gamma < 0.5, Errc::domain, "rescaling exponent must lie in (0, 1/2)");
    const double gas_factor = std::pow(r_m, -gamma);
    const double fluid_factor = std::pow(r_m, -gamma - 1.0);
    const auto scaled = [&](double u) {
        const int phase = node_phase(field.phase_rule(), u);
        return u * (phase > 0 ? gas_factor : fluid_factor);
    };

    std::ostringstream prov;
    prov.precision(17);
    prov << one_line(field.provenance()) << " | rescaled r_m=" << r_m << " gamma=" << gamma << " mode="
         << (mode == RescaleMode::exact_grid ? "exact_grid" : "same_grid");

    if (mode == RescaleMode::exact_grid) {
        FieldGrid grid = field.grid();
        grid.dr = field.dr() / r_m;
        return MeridianField(grid, field.values().unaryExpr(scaled), field.phase_rule(), prov.str());
    }

    const int nr = field.n_r();
    Eigen::MatrixXd v(nr, field.n_theta());
    std::vector<double> ray(nr);
    for (int j = 0; j < field.n_theta(); ++j) {
        for (int i = 0; i < nr; ++i) ray[i] = field.values()(i, j);
        for (int i = 0; i < nr; ++i) {
            // Position of r_m r_i in zero-based sample coordinates (sample k sits at (k+1) dr).
            const double t = r_m * field.r(i) / field.dr() - 1.0;
            const int k0 = std::clamp(int(std::floor(t)) - 1, 0, nr - 4);
            v(i, j) = scaled(lagrange4(ray.data() + k0, t - k0));
        }
    }
    return MeridianField(field.grid(), std::move(v), field.phase_rule(), prov.str());
}

CaccioppoliReport caccioppoli_check(const MeridianField& field)
{
    require(field.r_max() >= 2.0 * (1.0 - 1e-12), Errc::resolution, "Caccioppoli check needs r_max >= 2");
    const RingData d = ring_data(field);
    CaccioppoliReport out;
    out.lhs_plus = at_radius(d.cumulative_energy[0], d.dr, 1.0);
    out.lhs_minus = at_radius(d.cumulative_energy[1], d.dr, 1.0);
    out.rhs_plus = at_radius(d.cumulative_mass[0], d.dr, 2.0) - at_radius(d.cumulative_mass[0], d.dr, 1.0);
    out.rhs_minus = at_radius(d.cumulative_mass[1], d.dr, 2.0) - at_radius(d.cumulative_mass[1], d.dr, 1.0);
    const auto ratio = [](double lhs, double rhs) {
        if (lhs == 0.0) return 0.0;
        return rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    };
    out.c_min = std::max(ratio(out.lhs_plus, out.rhs_plus), ratio(out.lhs_minus, out.rhs_minus));
    return out;
}

CauchySchwarzReport cauchy_schwarz_chain(const MeridianField& field, double r)
{
    check_radius(field, r);
    const RingData d = ring_data(field);
    CauchySchwarzReport out;
    out.mixed_ok = true;
    out.gradient_ok = true;
    for (int p = 0; p < 2; ++p) {
        out.mixed[p] = at_radius(d.flux[p], d.dr, r);
        out.mass[p] = at_radius(d.mass[p], d.dr, r);
        out.radial[p] = at_radius(d.radial[p], d.dr, r);
        out.tangential[p] = at_radius(d.tangential[p], d.dr, r);
        const double slack = 1e-12 * (out.mass[p] + out.radial[p] + out.tangential[p]);
        out.mixed_ok = out.mixed_ok && std::abs(out.mixed[p]) <= std::sqrt(out.mass[p] * out.radial[p]) + slack;
        out.gradient_ok = out.gradient_ok &&
                          out.radial[p] + out.tangential[p] >= 2.0 * std::sqrt(out.radial[p] * out.tangential[p]) - slack;
    }
    return out;
}

MeridianVelocity recover_velocity(const MeridianField& field)
{
    const Gradients g = gradients(field);
    MeridianVelocity out{Eigen::MatrixXd::Zero(field.n_r(), field.n_theta()),
                         Eigen::MatrixXd::Zero(field.n_r(), field.n_theta())};
    for (int i = 0; i < field.n_r(); ++i) {
        for (int j = 0; j < field.n_theta(); ++j) {
            if (node_phase(field.phase_rule(), field.values()(i, j)) >= 0) continue;
            const double s = std::sin(field.theta(j));
            const double c = std::cos(field.theta(j));
            const double x1 = field.r(i) * s;
            const double d1 = s * g.ur(i, j) + c * g.ut(i, j);
            const double d2 = c * g.ur(i, j) - s * g.ut(i, j);
            out.radial(i, j) = -d2 / x1;
            out.axial(i, j) = d1 / x1;
        }
    }
    return out;
}

CuspReport cusp_ratio(const FreeBoundaryCurve& curve)
{
    require(curve.points.size() >= 2, Errc::domain, "cusp diagnostic needs at least two points");
    const auto& p0 = curve.points.front();
    require(std::hypot(p0[0], p0[1]) <= 1e-3, Errc::domain, "curve must start within 1e-3 of the origin");

    CuspReport out;
    out.ratio.kind = MonitorKind::residual;
    double s = 0.0;
    std::vector<double> lx, ly;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        const double ds = std::hypot(b[0] - a[0], b[1] - a[1]);
        require(ds > 0.0, Errc::domain, "curve has repeated points");
        s += ds;
        if (b[1] == 0.0) {
            out.infinite_vertices.push_back(k);
            continue;
        }
        const double ratio = std::abs(b[0] / b[1]);
        out.ratio.radii.push_back(s);
        out.ratio.values.push_back(ratio);
        if (ratio > 0.0) {
            lx.push_back(std::log(s));
            ly.push_back(std::log(ratio));
        }
    }
    if (lx.size() >= 2) {
        const Eigen::Map<const Eigen::VectorXd> x(lx.data(), Eigen::Index(lx.size()));
        const Eigen::Map<const Eigen::VectorXd> y(ly.data(), Eigen::Index(ly.size()));
        const double mx = x.mean();
        const double my = y.mean();
        const double sxx = (x.array() - mx).square().sum();
        out.loglog_slope = sxx > 0.0 ? ((x.array() - mx) * (y.array() - my)).sum() / sxx : 0.0;
    } else {
        out.loglog_slope = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double box_flux_residual(const CartesianField& field, const Box& box)
{
    const Eigen::Index n1 = field.values.rows();
    const Eigen::Index n2 = field.values.cols();
    const auto index = [&](double x, double x0) { return Eigen::Index(std::llround((x - x0) / field.h)); };
    const Eigen::Index i0 = index(box.x1_lo, field.x1_min), i1 = index(box.x1_hi, field.x1_min);
    const Eigen::Index j0 = index(box.x2_lo, field.x2_min), j1 = index(box.x2_hi, field.x2_min);
    require(i0 >= 1 && j0 >= 1 && i1 <= n1 - 2 && j1 <= n2 - 2 && i1 > i0 && j1 > j0, Errc::support,
            "flux box must lie at least one node inside the grid");

    const Eigen::MatrixXd& u = field.values;
    const PhaseRule rule = PhaseRule::by_sign;
    const auto d1 = [&](Eigen::Index i, Eigen::Index j) {
        return phase_aware_derivative(rule, [&](int m) { return u(m, j); }, int(i), 0, int(n1 - 1), field.h);
    };
    const auto d2 = [&](Eigen::Index i, Eigen::Index j) {
        return phase_aware_derivative(rule, [&](int m) { return u(i, m); }, int(j), 0, int(n2 - 1), field.h);
    };
    const auto weight = [&](Eigen::Index i, Eigen::Index j) {
        const double x1 = field.x1(i);
        return u(i, j) > 0.0 ? x1 : (u(i, j) < 0.0 ? 1.0 / x1 : 0.0);
    };
    const auto trap = [](Eigen::Index k, Eigen::Index lo, Eigen::Index hi) { return (k == lo || k == hi) ? 0.5 : 1.0; };

    double volume = 0.0;
    for (Eigen::Index i = i0; i <= i1; ++i) {
        for (Eigen::Index j = j0; j <= j1; ++j) {
            const double a = d1(i, j), b = d2(i, j);
            volume += trap(i, i0, i1) * trap(j, j0, j1) * weight(i, j) * (a * a + b * b);
        }
    }
    volume *= field.h * field.h;

    double boundary = 0.0;
    for (Eigen::Index j = j0; j <= j1; ++j) {
        boundary += trap(j, j0, j1) * (weight(i1, j) * u(i1, j) * d1(i1, j) - weight(i0, j) * u(i0, j) * d1(i0, j));
    }
    for (Eigen::Index i = i0; i <= i1; ++i) {
        boundary += trap(i, i0, i1) * (weight(i, j1) * u(i, j1) * d2(i, j1) - weight(i, j0) * u(i, j0) * d2(i, j0));
    }
    boundary *= field.h;
    return std::abs(volume - boundary);
}

void write_field(std::ostream& os, const MeridianField& field)
{
    char buf[64];
    os << "# provenance: " << one_line(field.provenance()) << "\n";
    os << "# grid: polar\n";
    os << "# phase_rule: " << to_string(field.phase_rule()) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", field.dr());
    os << "N_r N_theta dr\n" << field.n_r() << " " << field.n_theta() << " " << buf << "\n";
    os << "i j u\n";
    for (int i = 0; i < field.n_r(); ++i) {
        for (int j = 0; j < field.n_theta(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", field.values()(i, j));
            os << i + 1 << " " << j + 1 << " " << buf << "\n";
        }
    }
}

namespace {

struct TableHeader {
    std::string provenance;
    std::string grid = "polar";
    std::string phase_rule = "by_sign";
    double x1_min = 0.0;
    double x2_min = 0.0;
    long rows = 0;
    long cols = 0;
    double step = 0.0;
};

bool next_content_line(std::istream& is, std::string& line, TableHeader* header)
{
    while (std::getline(is, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line[0] == '#') {
            if (!header) continue;
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "provenance:") {
                std::getline(ls >> std::ws, header->provenance);
            } else if (key == "grid:") {
                ls >> header->grid;
                if (header->grid == "cartesian") ls >> header->x1_min >> header->x2_min;
            } else if (key == "phase_rule:") {
                ls >> header->phase_rule;
            }
            continue;
        }
        return true;
    }
    return false;
}

Eigen::MatrixXd read_table(std::istream& is, TableHeader& header)
{
    std::string line;
    require(next_content_line(is, line, &header), Errc::io, "field table is empty");
    require(next_content_line(is, line, &header), Errc::io, "field table lacks the grid header");
    {
        std::istringstream ls(line);
        require(bool(ls >> header.rows >> header.cols >> header.step), Errc::io, "malformed grid header: " + line);
    }
    require(header.rows > 0 && header.cols > 0 && header.step > 0.0, Errc::io, "invalid grid header: " + line);
    require(next_content_line(is, line, &header), Errc::io, "field table lacks the column header");

    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(header.rows, header.cols, std::numeric_limits<double>::quiet_NaN());
    long count = 0;
    while (next_content_line(is, line, &header)) {
        std::istringstream ls(line);
        long i, j;
        double u;
        require(bool(ls >> i >> j >> u), Errc::io, "malformed field row: " + line);
        require(i >= 1 && i <= header.rows && j >= 1 && j <= header.cols, Errc::io, "field row out of range: " + line);
        v(i - 1, j - 1) = u;
        ++count;
    }
    require(count == header.rows * header.cols && v.allFinite(), Errc::io, "field table is incomplete");
    return v;
}

} // namespace

MeridianField read_field(std::istream& is)
{
    TableHeader header;
    Eigen::MatrixXd v = read_table(is, header);
    require(header.grid == "polar", Errc::io, "expected a polar field table, found grid '" + header.grid + "'");
    return MeridianField(FieldGrid{int(header.rows), int(header.cols), header.step}, std::move(v),
                         phase_rule_from_string(header.phase_rule), header.provenance);
}

void write_field(std::ostream& os, const CartesianField& field)
{
    char buf[96];
    os << "# provenance: " << one_line(field.provenance) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g %.17g", field.x1_min, field.x2_min);
    os << "# grid: cartesian " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", field.h);
    os << "n1 n2 h\n" << field.values.rows() << " " << field.values.cols() << " " << buf << "\n";
    os << "i j u\n";
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < field.values.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", field.values(i, j));
            os << i + 1 << " " << j + 1 << " " << buf << "\n";
        }
    }
}

CartesianField read_cartesian_field(std::istream& is)
{
    TableHeader header;
    Eigen::MatrixXd v = read_table(is, header);
    require(header.grid == "cartesian", Errc::io, "expected a cartesian field table");
    CartesianField f;
    f.x1_min = header.x1_min;
    f.x2_min = header.x2_min;
    f.h = header.step;
    f.values = std::move(v);
    f.provenance = header.provenance;
    return f;
}

void save_field(const std::string& path, const MeridianField& field)
{
    std::ofstream os(path);
    require(bool(os), Errc::io, "cannot open '" + path + "' for writing");
    write_field(os, field);
    require(bool(os), Errc::io, "failed writing '" + path + "'");
}

MeridianField load_field(const std::string& path)
{
    std::ifstream is(path);
    require(bool(is), Errc::io, "cannot open '" + path + "'");
    return read_field(is);
}

void write_monitor(std::ostream& os, const MonitorCurve& curve, const std::vector<std::string>& manifest)
{
    for (const std::string& m : manifest) os << "# " << one_line(m) << "\n";
    os << "# kind: " << to_string(curve.kind) << "\n";
    os << "r,value\n";
    char buf[64];
    for (std::size_t k = 0; k < curve.radii.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", curve.radii[k], curve.values[k]);
        os << buf << "\n";
    }
}

FreeBoundaryCurve read_curve(std::istream& is)
{
    FreeBoundaryCurve curve;
    std::string line;
    while (next_content_line(is, line, nullptr)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x1, x2;
        if (!(ls >> x1 >> x2)) {
            // A non-numeric first line is a column header.
            require(curve.points.empty(), Errc::io, "malformed curve row: " + line);
            continue;
        }
        curve.points.push_back({x1, x2});
    }
    return curve;
}

void write_curve(std::ostream& os, const FreeBoundaryCurve& curve, const std::vector<std::string>& manifest)
{
    for (const std::string& m : manifest) os << "# " << one_line(m) << "\n";
    os << "x1,x2\n";
    char buf[64];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", p[0], p[1]);
        os << buf << "\n";
    }
}

} // namespace ehd
