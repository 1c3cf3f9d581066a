#include "doctest.h"

#include "ehd/error.hpp"
#include "ehd/field_lab.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ehd;
using namespace oracle;

namespace {

const FieldGrid unit_grid{200, 128, 1.0 / 200};

MeridianField axial_field(FieldGrid grid = unit_grid)
{
    return sample_field([](double, double x2) { return x2; }, grid, PhaseRule::all_gas, "u = x2");
}

MeridianField fluid_field(FieldGrid grid = unit_grid)
{
    return sample_field([](double x1, double) { return -x1 * x1; }, grid, PhaseRule::by_sign, "u = -x1^2");
}

MeridianField matched_field(FieldGrid grid = unit_grid)
{
    const MatchedHomogeneity m = matched_homogeneity(1e-8);
    const EigenResult gas = eigenvalue(ArcSet{m.gas_arc}, Phase::gas, 2048);
    const EigenResult fluid = eigenvalue(ArcSet{m.fluid_arc}, Phase::fluid, 2048);
    return make_homogeneous_field(m.alpha_star, gas, fluid, grid);
}


} // namespace

TEST_CASE("weighted energies and boundary masses of exact fields")
{
    const MeridianField up = axial_field();
    const MeridianField down = fluid_field();
    const double h2 = up.h() * up.h();
    for (double r : {0.2, 0.5, 0.9}) {
        CHECK(std::abs(energy_ring(up, r, Part::plus) - 2.0 * r * r * r / 3.0) < h2);
        CHECK(std::abs(boundary_mass(up, r, Part::plus) - 2.0 * std::pow(r, 4) / 3.0) < h2);
        CHECK(energy_ring(up, r, Part::minus) == 0.0);
        CHECK(std::abs(energy_ring(down, r, Part::minus) - 8.0 * r * r * r / 3.0) < h2);
        CHECK(std::abs(boundary_mass(down, r, Part::minus) - 4.0 * std::pow(r, 4) / 3.0) < h2);
        CHECK(boundary_mass(down, r, Part::plus) == 0.0);
    }
    const MeridianField zero(unit_grid, Eigen::MatrixXd::Zero(200, 128));
    CHECK(energy_ring(zero, 0.5) == 0.0);
    CHECK(boundary_mass(zero, 0.5) == 0.0);

    const MonitorCurve i = monitor_curve(up, MonitorKind::i_plus);
    for (std::size_t k = 1; k < i.values.size(); ++k) CHECK(i.values[k] >= i.values[k - 1]);
}

TEST_CASE("resolution errors")
{
    const MeridianField f = axial_field();
    CHECK_THROWS_AS(energy_ring(f, 2.0 * f.dr()), Error);
    CHECK_THROWS_AS(boundary_mass(f, 1.5), Error);
    try {
        energy_ring(f, 1e-3);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::resolution);
    }
    CHECK_THROWS_AS(weiss_m_prime_residual(f, 1.0, 1.0), Error);
}

TEST_CASE("Weiss monitor vanishes on homogeneous solutions")
{
    const IdentityTolerance tol;
    for (const MeridianField& f : {axial_field(), fluid_field()}) {
        for (double r = 0.2; r <= 0.9 + 1e-12; r += 0.05) {
            CHECK(std::abs(weiss_m(f, r, 1.0)) <= tol(f));
            CHECK(flux_identity_residual(f, r) <= tol(f));
            CHECK(weiss_m_prime_residual(f, r, 1.0) <= tol(f));
        }
        const MonitorCurve jm = jm_relation_residual(f, 1.0);
        for (double v : jm.values) CHECK(std::abs(v) <= 10.0 * f.h());
    }
}

TEST_CASE("Weiss derivative identity with a mismatched exponent")
{
    // u = -x1^2, beta = 1/2: M = 2r/3 and both sides of the derivative identity equal 2/3.
    const MeridianField f = fluid_field();
    for (double r : {0.3, 0.6, 0.8}) {
        CHECK(weiss_m(f, r, 0.5) == doctest::Approx(2.0 * r / 3.0).epsilon(1e-3));
        CHECK(weiss_m_prime_rhs(f, r, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
        CHECK(weiss_m_prime_residual(f, r, 0.5) <= 10.0 * f.h() * f.h());
    }
    const MeridianField zero(unit_grid, Eigen::MatrixXd::Zero(200, 128));
    CHECK(weiss_m_prime_residual(zero, 0.5, 0.5) == 0.0);
    for (double v : jm_relation_residual(zero, 1.0).values) CHECK(v == 0.0);
}

TEST_CASE("first variation of exact solutions")
{
    const auto fields = random_test_fields(7, 100, 0.9);
    for (const MeridianField& f : {axial_field(), fluid_field()}) {
        const double tol = 10.0 * f.h() * f.h() * f.scale();
        double worst = 0.0;
        for (const TestVectorField& phi : fields) worst = std::max(worst, first_variation_residual(f, phi));
        CHECK(worst <= tol);
        MESSAGE(f.provenance() << ": worst first variation " << worst << " against " << tol);
    }
    TestVectorField outside;
    outside.c2 = 0.9;
    outside.radius = 0.1;
    CHECK_THROWS_AS(first_variation_residual(axial_field(), outside), Error);
}

TEST_CASE("test vector field derivatives")
{
    const TestVectorField phi{0.3, -0.2, 0.25, 0.7, -0.4};
    const double e = 1e-6;
    for (auto [x1, x2] : {std::pair{0.35, -0.1}, std::pair{0.2, -0.3}, std::pair{0.45, -0.2}}) {
        const auto J = phi.jacobian(x1, x2);
        const auto p1 = phi.value(x1 + e, x2), m1 = phi.value(x1 - e, x2);
        const auto p2 = phi.value(x1, x2 + e), m2 = phi.value(x1, x2 - e);
        CHECK(J[0] == doctest::Approx((p1[0] - m1[0]) / (2 * e)).epsilon(1e-6));
        CHECK(J[1] == doctest::Approx((p2[0] - m2[0]) / (2 * e)).epsilon(1e-6));
        CHECK(J[2] == doctest::Approx((p1[1] - m1[1]) / (2 * e)).epsilon(1e-6));
        CHECK(J[3] == doctest::Approx((p2[1] - m2[1]) / (2 * e)).epsilon(1e-6));
    }
    CHECK(phi.value(0.0, -0.2)[0] == 0.0);
}

TEST_CASE("matched homogeneous field")
{
    const MatchedHomogeneity m = matched_homogeneity(1e-8);
    const MeridianField f = matched_field();
    const IdentityTolerance tol;

    for (double r = 0.2; r <= 0.9 + 1e-12; r += 0.1) {
        CHECK(std::abs(weiss_m(f, r, m.alpha_star)) <= tol(f));
        CHECK(flux_identity_residual(f, r) <= tol(f));
    }
    // Near the origin the weight r^(-2b-n) amplifies the O((dr/r)^2) gradient error.
    const MonitorCurve jm = jm_relation_residual(f, m.alpha_star);
    for (std::size_t k = 0; k < jm.radii.size(); ++k) {
        if (jm.radii[k] >= 0.1) CHECK(std::abs(jm.values[k]) <= 10.0 * f.h());
    }

    // Exponent 2 alpha + 1 makes Phi scale invariant.
    const MonitorCurve flat = monitor_curve(f, MonitorKind::phi, GrowthParams{1.0, 0.25, 2.0 * m.alpha_star + 1.0, 2});
    const double reference = acf_phi(f, 0.5, 2.0 * m.alpha_star + 1.0);
    CHECK(reference > 0.0);
    for (std::size_t k = 0; k < flat.radii.size(); ++k) {
        if (flat.radii[k] >= 0.1) CHECK(std::abs(flat.values[k] / reference - 1.0) <= 10.0 * f.h() * f.h());
    }

    // With the optimal exponent Phi is nondecreasing.
    const double beta_star = 3.8290;
    const MonitorCurve phi = monitor_curve(f, MonitorKind::phi, GrowthParams{1.0, 0.25, beta_star, 2});
    for (std::size_t k = 1; k < phi.values.size(); ++k) CHECK(phi.values[k] >= phi.values[k - 1] * (1.0 - 1e-10));

    const auto fields = random_test_fields(11, 100, 0.9);
    double worst = 0.0;
    for (const TestVectorField& v : fields) worst = std::max(worst, first_variation_residual(f, v));
    MESSAGE("matched field worst first variation " << worst << ", scale " << f.scale());
    CHECK(worst <= 10.0 * f.h() * f.h() * f.scale());
}

TEST_CASE("one-phase fields have vanishing Phi")
{
    for (const MeridianField& f : {axial_field(), fluid_field()}) {
        for (double v : monitor_curve(f, MonitorKind::phi).values) CHECK(v == 0.0);
    }
}

TEST_CASE("decay of the rescaled ACF product below the critical exponent")
{
    const MeridianField f = matched_field();
    for (double alpha : {0.5, 1.0, 1.9}) {
        const auto product = [&](double r) {
            return std::pow(r, -2.0 * alpha) * energy_ring(f, r, Part::plus) * energy_ring(f, r, Part::minus);
        };
        CHECK(product(0.02) < 1e-3 * product(1.0));
        CHECK(product(0.1) < product(0.5));
    }
}

TEST_CASE("blow-up rescaling")
{
    const MeridianField f = sample_field([](double x1, double x2) { return x2 + 0.3 * x1 * x2 - 0.8 * x1 * x1; },
                                         unit_grid, PhaseRule::by_sign, "mixed polynomial");
    const double beta_star = 3.83;
    const double gamma = 0.3;
    for (double rm : {0.5, 0.25}) {
        const MeridianField g = rescale_field(f, rm, gamma);
        const double lhs = acf_phi(g, 1.0, beta_star);
        const double rhs = std::pow(rm, 2.0 * (beta_star - 2.0 * gamma - 1.0)) * acf_phi(f, rm, beta_star);
        CHECK(rhs > 0.0);
        CHECK(std::abs(lhs / rhs - 1.0) <= 1e-6);

        const MeridianField s = rescale_field(f, rm, gamma, RescaleMode::same_grid);
        const double resampled = acf_phi(s, 1.0, beta_star);
        CHECK(std::abs(resampled / rhs - 1.0) <= 0.05);
    }

    const MeridianField same = rescale_field(f, 1.0, gamma, RescaleMode::same_grid);
    CHECK((same.values() - f.values()).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(rescale_field(f, 1.0, gamma).values() == f.values());
    CHECK_THROWS_AS(rescale_field(f, 0.5, 0.5), Error);
    CHECK_THROWS_AS(rescale_field(f, 1.5, 0.3), Error);
}

TEST_CASE("rescaling leaves a homogeneous field of matching degree unchanged")
{
    // Gas cap (0, t) whose degree is 0.4, found by bisection on the cap eigenvalue.
    const double degree = 0.4;
    double lo = 1.8, hi = pi - 0.05;
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (alpha_of(arc_eigenvalue(make_arc(0.0, mid), Phase::gas), Phase::gas) > degree ? lo : hi) = mid;
    }
    const EigenResult cap = eigenvalue(ArcSet{make_arc(0.0, 0.5 * (lo + hi))}, Phase::gas, 2048);
    const MeridianField f = make_homogeneous_field(cap.alpha, cap, std::nullopt, unit_grid);
    const MeridianField g = rescale_field(f, 0.5, cap.alpha, RescaleMode::same_grid);
    double worst = 0.0;
    for (int i = 10; i < f.n_r(); ++i) {
        worst = std::max(worst, (g.values().row(i) - f.values().row(i)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-4 * std::sqrt(f.scale()));
}

TEST_CASE("Caccioppoli constants")
{
    const FieldGrid wide{400, 128, 1.0 / 200};
    const CaccioppoliReport up = caccioppoli_check(axial_field(wide));
    CHECK(up.lhs_plus == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
    CHECK(up.rhs_plus == doctest::Approx(62.0 / 15.0).epsilon(1e-3));
    CHECK(up.c_min == doctest::Approx(10.0 / 62.0).epsilon(1e-3));

    const CaccioppoliReport down = caccioppoli_check(fluid_field(wide));
    CHECK(down.lhs_minus == doctest::Approx(8.0 / 3.0).epsilon(1e-3));
    CHECK(down.rhs_minus == doctest::Approx(124.0 / 15.0).epsilon(1e-3));
    CHECK(down.c_min == doctest::Approx(20.0 / 62.0).epsilon(1e-3));

    const CaccioppoliReport zero = caccioppoli_check(MeridianField(wide, Eigen::MatrixXd::Zero(400, 128)));
    CHECK(zero.c_min == 0.0);
    CHECK_THROWS_AS(caccioppoli_check(axial_field()), Error);
}

TEST_CASE("Cauchy-Schwarz chain on ring data")
{
    const MeridianField mixed = sample_field(
        [](double x1, double x2) { return x2 + 0.5 * x1 * x2 - 0.7 * x1 * x1 + 0.2 * std::sin(5 * x1); }, unit_grid);
    for (const MeridianField& f : {axial_field(), fluid_field(), matched_field(), mixed}) {
        for (double r = 0.05; r <= 1.0; r += 0.05) {
            const CauchySchwarzReport c = cauchy_schwarz_chain(f, r);
            CHECK(c.mixed_ok);
            CHECK(c.gradient_ok);
        }
    }
}

TEST_CASE("velocity recovery")
{
    const MeridianField f = fluid_field();
    const MeridianVelocity v = recover_velocity(f);
    const double tol = 10.0 * f.h() * f.h();
    CHECK(v.radial.cwiseAbs().maxCoeff() < tol);
    CHECK((v.axial.array() + 2.0).abs().maxCoeff() < tol);

    // u = -x1^2 (2 + x2) / 2 gives (-d2 u / x1, d1 u / x1) = (x1 / 2, -(2 + x2)).
    const MeridianField g = sample_field([](double x1, double x2) { return -0.5 * x1 * x1 * (2.0 + x2); }, unit_grid);
    const MeridianVelocity w = recover_velocity(g);
    const int i = 100, j = 40;
    const double x1 = g.r(i) * std::sin(g.theta(j));
    CHECK(w.radial(i, j) == doctest::Approx(0.5 * x1).epsilon(tol));
    CHECK(w.axial(i, j) == doctest::Approx(-(2.0 + g.r(i) * std::cos(g.theta(j)))).epsilon(tol));
    CHECK(recover_velocity(axial_field()).axial.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cusp diagnostic")
{
    const double theta = 0.6;
    FreeBoundaryCurve ray;
    for (int k = 0; k <= 200; ++k) {
        const double t = k / 200.0;
        ray.points.push_back({t * std::sin(theta), t * std::cos(theta)});
    }
    const CuspReport r = cusp_ratio(ray);
    REQUIRE(r.ratio.values.size() == 200);
    for (double v : r.ratio.values) CHECK(std::abs(v - std::tan(theta)) <= 1e-12);
    CHECK(std::abs(r.loglog_slope) < 1e-10);

    FreeBoundaryCurve parabola;
    for (int k = 0; k <= 400; ++k) {
        const double t = 0.1 * k / 400.0;
        parabola.points.push_back({t * t, t});
    }
    const CuspReport p = cusp_ratio(parabola);
    CHECK(std::abs(p.loglog_slope - 1.0) <= 0.05);
    for (std::size_t k = 1; k < p.ratio.radii.size(); ++k) CHECK(p.ratio.radii[k] > p.ratio.radii[k - 1]);

    FreeBoundaryCurve flat{{{0.0, 0.0}, {0.1, 0.1}, {0.2, 0.0}, {0.3, 0.1}}};
    const CuspReport fl = cusp_ratio(flat);
    REQUIRE(fl.infinite_vertices.size() == 1);
    CHECK(fl.infinite_vertices[0] == 2);

    FreeBoundaryCurve far{{{0.1, 0.1}, {0.2, 0.2}}};
    CHECK_THROWS_AS(cusp_ratio(far), Error);
}

TEST_CASE("box flux identity on Cartesian samples")
{
    CartesianField f;
    f.x1_min = 0.1;
    f.x2_min = -0.5;
    f.h = 0.005;
    f.values.resize(161, 201);
    for (Eigen::Index i = 0; i < 161; ++i) {
        for (Eigen::Index j = 0; j < 201; ++j) f.values(i, j) = f.x2(j) > 0 ? f.x2(j) : -f.x1(i) * f.x1(i);
    }
    CHECK(box_flux_residual(f, Box{0.2, 0.6, 0.05, 0.4}) <= 10.0 * f.h * f.h);
    CHECK(box_flux_residual(f, Box{0.2, 0.6, -0.4, -0.05}) <= 10.0 * f.h * f.h);
    CHECK_THROWS_AS(box_flux_residual(f, Box{0.1, 0.6, 0.05, 0.4}), Error);
}

TEST_CASE("table round trips")
{
    const MeridianField f = matched_field(FieldGrid{20, 16, 0.05});
    std::stringstream ss;
    write_field(ss, f);
    const MeridianField g = read_field(ss);
    CHECK(g.values() == f.values());
    CHECK(g.dr() == f.dr());
    CHECK(g.phase_rule() == f.phase_rule());
    CHECK(g.provenance() == f.provenance());

    const MeridianField a = axial_field(FieldGrid{8, 8, 0.125});
    std::stringstream sa;
    write_field(sa, a);
    CHECK(read_field(sa).phase_rule() == PhaseRule::all_gas);

    CartesianField c;
    c.x1_min = 0.25;
    c.x2_min = -1.0 / 3.0;
    c.h = 0.1;
    c.values = Eigen::MatrixXd::Random(5, 7);
    c.provenance = "random";
    std::stringstream sc;
    write_field(sc, c);
    const CartesianField d = read_cartesian_field(sc);
    CHECK(d.values == c.values);
    CHECK(d.x2_min == c.x2_min);

    std::stringstream bad("# nothing\nN_r N_theta dr\n2 2 0.1\ni j u\n1 1 0.0\n");
    CHECK_THROWS_AS(read_field(bad), Error);

    FreeBoundaryCurve curve{{{0.0, 0.0}, {0.125, 0.5}}};
    std::stringstream cs;
    write_curve(cs, curve, {"source: test"});
    CHECK(read_curve(cs).points == curve.points);

    std::stringstream ms;
    write_monitor(ms, monitor_curve(a, MonitorKind::i_total), {"field: axial"});
    CHECK(ms.str().find("r,value") != std::string::npos);
}

TEST_CASE("homogeneous field construction")
{
    const EigenResult north = eigenvalue(ArcSet{make_arc(0.0, pi / 2)}, Phase::gas, 2048);
    const MeridianField f = make_homogeneous_field(north.alpha, north, std::nullopt, unit_grid);
    // g+ = c cos(theta): u is a multiple of x2 on the upper quadrant.
    const double c = f.values()(99, 0) / (f.r(99) * std::cos(f.theta(0)));
    for (int j = 0; j < 64; ++j) {
        CHECK(std::abs(f.values()(149, j) - c * f.r(149) * std::cos(f.theta(j))) < 1e-6 * std::abs(c));
    }
    const EigenResult south = eigenvalue(ArcSet{make_arc(pi / 2, pi)}, Phase::fluid, 2048);
    CHECK_THROWS_AS(make_homogeneous_field(1.0, north, eigenvalue(ArcSet{make_arc(1.0, pi)}, Phase::fluid, 512),
                                           unit_grid),
                    Error);
    CHECK_NOTHROW(make_homogeneous_field(1.0, north, south, unit_grid, Amplitude::stored));
}
