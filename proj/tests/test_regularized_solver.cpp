#include "doctest.h"

#include "ehd/error.hpp"
#include "ehd/regularized_solver.hpp"

#include <cmath>
#include <sstream>

using namespace ehd;

namespace {

double branch_error(const SolverConfig& c)
{
    const SolverState s = solve(c);
    REQUIRE(s.converged);
    double err = 0.0;
    for (Eigen::Index j = 0; j < s.v.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.v.rows(); ++i) {
            err = std::max(err, std::abs(s.v(i, j) - c.boundary_value(s.x1(i), s.x2(j))));
        }
    }
    return err;
}

SolverConfig upper_gas(double h)
{
    SolverConfig c;
    c.data = DirichletData::x1x2;
    c.h = h;
    c.x2_min = 0.1;
    c.x2_max = 1.1;
    return c;
}

SolverConfig pure_fluid(double h)
{
    SolverConfig c;
    c.data = DirichletData::neg_x1sq;
    c.h = h;
    c.x1_min = 0.3;   // -x1^2 <= -0.09 < -epsilon on the whole domain
    c.x1_max = 1.3;
    return c;
}

SolverState sampled(double x1_min, double x2_min, double h, int n, double (*f)(double, double))
{
    SolverState s;
    s.x1_min = x1_min;
    s.x2_min = x2_min;
    s.h = h;
    s.v.resize(n + 1, n + 1);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) s.v(i, j) = f(s.x1(i), s.x2(j));
    }
    return s;
}

// Offset of the saddle data at which the solution's saddle value on the symmetry line is zero.
SolverState critical_saddle(double h)
{
    double lo = -0.5, hi = 0.5;
    SolverConfig c;
    c.data = DirichletData::saddle;
    c.h = h;
    const auto saddle_value = [](const SolverState& s) {
        const Eigen::Index mid = (s.v.cols() - 1) / 2;
        return s.v.col(mid).maxCoeff();
    };
    for (int k = 0; k < 50; ++k) {
        c.offset = 0.5 * (lo + hi);
        (saddle_value(solve(c)) > 0.0 ? hi : lo) = c.offset;
    }
    c.offset = 0.5 * (lo + hi);
    return solve(c);
}

} // namespace

TEST_CASE("regularizing ramp")
{
    CHECK(b_eps(1.0, 0.1) == 1.0);
    CHECK(b_eps(0.0, 0.1) == 1.0);
    CHECK(b_eps(-0.2, 0.1) == 0.0);
    CHECK(b_eps(-0.05, 0.1) == doctest::Approx(0.5));
    for (int ramp : {1, 2, 3}) {
        double previous = 0.0;
        for (int k = 0; k <= 400; ++k) {
            const double z = -0.15 + 0.2 * k / 400.0;
            const double b = b_eps(z, 0.1, ramp);
            CHECK(b >= previous);
            CHECK(b >= (z > 0.0 ? 1.0 : 0.0));
            CHECK(b_eps(z, 0.05, ramp) <= b);
            previous = b;
            if (z > -0.099 && z < -0.001) {
                const double fd = (b_eps(z + 1e-7, 0.1, ramp) - b_eps(z - 1e-7, 0.1, ramp)) / 2e-7;
                CHECK(b_eps_derivative(z, 0.1, ramp) == doctest::Approx(fd).epsilon(1e-5));
            }
        }
        CHECK(b_eps_derivative(-0.1, 0.1, ramp) == 0.0);
        CHECK(b_eps_derivative(0.0, 0.1, ramp) == 0.0);
    }
    CHECK_THROWS_AS(b_eps(0.0, 0.0), Error);
    CHECK_THROWS_AS(b_eps(0.0, 0.1, 4), Error);
}

TEST_CASE("closed-form branches are reproduced at second order")
{
    const double coarse = branch_error(upper_gas(0.02));
    const double fine = branch_error(upper_gas(0.01));
    CHECK(fine <= 0.2 * 0.01 * 0.01);
    CHECK(coarse / fine >= 3.5);
    MESSAGE("x1 x2: errors " << coarse << ", " << fine << ", ratio " << coarse / fine);

    // The flux form is exact on -x1^2: only rounding remains.
    CHECK(branch_error(pure_fluid(0.02)) <= 1e-12);
    CHECK(branch_error(pure_fluid(0.01)) <= 1e-12);
}

TEST_CASE("Newton on the mixed problem")
{
    SolverConfig c;
    c.h = 0.005;   // 200 x 200 cells
    const SolverState s = solve(c);
    CHECK(s.v.rows() == 201);
    CHECK(s.v.cols() == 201);
    CHECK(s.converged);
    CHECK(s.iterations <= 25);
    CHECK(s.residual_norm <= 1e-10);
    CHECK(s.history.size() == std::size_t(s.iterations + 1));
    CHECK(discrete_residual(s, c.epsilon) == s.residual_norm);
    CHECK(s.initialization == "gas_linear");
    CHECK(s.v.allFinite());

    const SolverState again = solve(c);
    CHECK(again.v == s.v);

    SolverConfig from_data = c;
    from_data.h = 0.02;
    from_data.init = Initialization::boundary_data;
    const SolverState d = solve(from_data);
    CHECK(d.converged);
    CHECK(d.initialization == "boundary_data");

    SolverConfig starved = c;
    starved.h = 0.02;
    starved.newton.max_iter = 1;
    starved.newton.tol = 1e-300;
    const SolverState t = solve(starved);
    CHECK_FALSE(t.converged);
    CHECK(t.iterations == 1);
    CHECK(t.residual_norm > 0.0);
}

TEST_CASE("recovering u and transforming back")
{
    SolverConfig c;
    c.h = 0.01;
    const SolverState s = solve(c);
    const CartesianField u = recover_u(s);
    const Eigen::MatrixXd v = transform_v(u);
    CHECK(((v - s.v).array().abs() <= 4e-16 * s.v.array().abs()).all());

    const SolverState gas = sampled(0.2, 0.1, 0.01, 50, [](double x1, double x2) { return x1 * x2; });
    const CartesianField ug = recover_u(gas);
    for (Eigen::Index j = 0; j < ug.values.cols(); ++j) {
        for (Eigen::Index i = 0; i < ug.values.rows(); ++i) {
            CHECK(ug.values(i, j) == doctest::Approx(ug.x2(j)).epsilon(1e-15));
        }
    }
    const SolverState fluid = sampled(0.2, -0.5, 0.01, 50, [](double x1, double) { return -x1 * x1; });
    CHECK(recover_u(fluid).values == fluid.v);
}

namespace {

// Max flux-form residual of div(x1 grad u) on nodes whose 3x3 neighbourhood has v > eps,
// and of div(grad u / x1) where it has v < -eps.
std::array<double, 2> phase_residuals(const SolverState& s, double eps)
{
    const CartesianField u = recover_u(s);
    const double h = s.h;
    std::array<double, 2> worst{0.0, 0.0};
    for (Eigen::Index j = 1; j + 1 < s.v.cols(); ++j) {
        for (Eigen::Index i = 1; i + 1 < s.v.rows(); ++i) {
            bool clear_gas = true, clear_fluid = true;
            for (Eigen::Index a = i - 1; a <= i + 1; ++a) {
                for (Eigen::Index b = j - 1; b <= j + 1; ++b) {
                    clear_gas = clear_gas && s.v(a, b) > eps;
                    clear_fluid = clear_fluid && s.v(a, b) < -eps;
                }
            }
            if (!clear_gas && !clear_fluid) continue;
            const auto w = [&](double x) { return clear_gas ? x : 1.0 / x; };
            const double xe = u.x1(i) + 0.5 * h, xw = u.x1(i) - 0.5 * h, x = u.x1(i);
            const double div = (w(xe) * (u.values(i + 1, j) - u.values(i, j)) - w(xw) * (u.values(i, j) - u.values(i - 1, j)) +
                                w(x) * (u.values(i, j + 1) - 2.0 * u.values(i, j) + u.values(i, j - 1))) /
                               (h * h);
            double& slot = worst[clear_gas ? 0 : 1];
            slot = std::max(slot, std::abs(div));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("recovered phases satisfy their equations away from the interface")
{
    SolverConfig c;
    c.h = 0.02;
    const auto coarse = phase_residuals(solve(c), c.epsilon);
    c.h = 0.01;
    const SolverState s = solve(c);
    const auto fine = phase_residuals(s, c.epsilon);
    MESSAGE("gas residual " << coarse[0] << " -> " << fine[0] << ", fluid " << coarse[1] << " -> " << fine[1]);
    // The v-scheme and the u-scheme differ at O(h^2) in the gas; the fluid schemes coincide.
    // The sampled node set {v > eps} moves with h, so the ratio is pre-asymptotic (about 3.4).
    CHECK(coarse[0] / fine[0] >= 3.0);
    CHECK(fine[1] <= 1e-9);

    const CartesianField u = recover_u(s);
    const double h = s.h;
    // The flux identity on boxes that stay inside one phase.
    const double upper = box_flux_residual(u, Box{0.4, 1.0, 0.3, 0.45});
    const double lower = box_flux_residual(u, Box{0.4, 1.0, -0.45, -0.3});
    MESSAGE("box flux residuals: " << upper << ", " << lower);
    CHECK(upper <= 100.0 * h * h);
    CHECK(lower <= 100.0 * h * h);
}

TEST_CASE("free boundary extraction")
{
    const SolverState straddle = sampled(0.2, -0.5, 0.01, 100, [](double x1, double x2) { return x1 * x2; });
    const FreeBoundaryCurve line = extract_free_boundary(straddle);
    REQUIRE(line.points.size() == 101);
    for (const auto& p : line.points) CHECK(std::abs(p[1]) <= 1e-15);
    CHECK(line.points.front()[0] == doctest::Approx(0.2));
    CHECK(line.points.back()[0] == doctest::Approx(1.2));

    const SolverState fluid = sampled(0.2, -0.5, 0.01, 100, [](double x1, double) { return -x1 * x1; });
    CHECK(extract_free_boundary(fluid).points.empty());
    CHECK(zero_contours(fluid).empty());

    SolverConfig c;
    c.h = 0.01;
    const SolverState s = solve(c);
    const FreeBoundaryCurve curve = extract_free_boundary(s);
    REQUIRE(curve.points.size() > 10);
    CHECK(curve.points.front()[0] == doctest::Approx(c.x1_min));
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        CHECK(std::hypot(curve.points[k][0] - curve.points[k - 1][0], curve.points[k][1] - curve.points[k - 1][1]) <=
              std::sqrt(2.0) * c.h + 1e-12);
    }
    // The free boundary leaves x2 = 0: the data there is not in balance.
    double drift = 0.0;
    for (const auto& p : curve.points) drift = std::max(drift, std::abs(p[1]));
    MESSAGE("mixed free boundary: " << curve.points.size() << " points, max |x2| " << drift);
    CHECK(drift > c.h);
}

TEST_CASE("singular set")
{
    const SolverState gas = sampled(0.2, 0.1, 0.01, 100, [](double x1, double x2) { return x1 * x2; });
    CHECK(detect_singular_set(gas, 0.1).empty());
    const SolverState fluid = sampled(0.2, -0.5, 0.01, 100, [](double x1, double) { return -x1 * x1; });
    CHECK(detect_singular_set(fluid, 0.1).empty());

    const auto coarse = detect_singular_set(critical_saddle(0.02), 0.05);
    const auto fine = detect_singular_set(critical_saddle(0.01), 0.05);
    REQUIRE(coarse.size() == 1);
    REQUIRE(fine.size() == 1);
    MESSAGE("saddle singular point " << coarse[0][0] << ", " << coarse[0][1] << " -> " << fine[0][0] << ", " << fine[0][1]);
    CHECK(std::hypot(coarse[0][0] - fine[0][0], coarse[0][1] - fine[0][1]) <= 2.0 * 0.02);
    CHECK_THROWS_AS(detect_singular_set(gas, 0.0), Error);
}

TEST_CASE("dependence on the regularization width")
{
    // v B_eps(v) increases as eps decreases, so by comparison the solutions increase as well.
    SolverConfig c;
    c.h = 0.02;
    std::vector<Eigen::MatrixXd> v;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
        c.epsilon = eps;
        v.push_back(solve(c).v);
    }
    double previous_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < v.size(); ++k) {
        CHECK((v[k] - v[k - 1]).minCoeff() >= -1e-12);
        const double gap = (v[k] - v[k - 1]).maxCoeff();
        CHECK(gap < previous_gap);
        previous_gap = gap;
    }
}

TEST_CASE("configuration files")
{
    SolverConfig c;
    c.epsilon = 0.03;
    c.h = 0.025;
    c.data = DirichletData::saddle;
    c.offset = -0.01;
    c.ramp = 3;
    c.init = Initialization::boundary_data;
    std::stringstream ss;
    write_solver_config(ss, c);
    const SolverConfig d = parse_solver_config(ss);
    CHECK(d.epsilon == c.epsilon);
    CHECK(d.h == c.h);
    CHECK(d.data == c.data);
    CHECK(d.offset == c.offset);
    CHECK(d.ramp == 3);
    CHECK(d.init == Initialization::boundary_data);

    std::stringstream comments("# comment\n  h = 0.02   # trailing\n\ndata = x1x2\n");
    CHECK(parse_solver_config(comments).data == DirichletData::x1x2);

    const auto code = [](const std::string& text) {
        std::stringstream in(text);
        try {
            parse_solver_config(in);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::io;
    };
    CHECK(code("colour = red\n") == Errc::config);
    CHECK(code("h = fast\n") == Errc::config);
    CHECK(code("h = 0.1\n") == Errc::config);   // x1_min = 0.2 < 4h
    CHECK(code("h = 0.03\n") == Errc::config);  // sides not multiples of h
    CHECK(code("epsilon = 0\n") == Errc::config);
    CHECK(code("data = cusp\n") == Errc::config);
    CHECK(code("no equals sign\n") == Errc::config);
}
