#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>

namespace ehd {

template <typename Scalar>
struct GaussRule {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;   // on [-1, 1]
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/// Gauss-Legendre rule with n points, nodes by Newton iteration on P_n.
template <typename Scalar = double>
GaussRule<Scalar> gauss_legendre(int n)
{
    GaussRule<Scalar> rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const Scalar pi_ = Scalar(3.14159265358979323846L);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Scalar x = std::cos(pi_ * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar dp = 0;
        for (int it = 0; it < 100; ++it) {
            Scalar p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            const Scalar dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < Scalar(1e-16)) {
                break;
            }
        }
        rule.nodes(i) = -x;
        rule.nodes(n - 1 - i) = x;
        rule.weights(i) = rule.weights(n - 1 - i) = 2 / ((1 - x * x) * dp * dp);
    }
    return rule;
}

/// Composite Gauss-Legendre quadrature of f over [a, b].
template <typename Scalar = double>
Scalar integrate(const std::function<Scalar(Scalar)>& f, Scalar a, Scalar b, int panels, int order = 8)
{
    static thread_local GaussRule<Scalar> rule;
    if (rule.nodes.size() != order) {
        rule = gauss_legendre<Scalar>(order);
    }
    const Scalar width = (b - a) / panels;
    Scalar sum = 0;
    for (int p = 0; p < panels; ++p) {
        const Scalar mid = a + (Scalar(p) + Scalar(0.5)) * width;
        for (int q = 0; q < order; ++q) {
            sum += rule.weights(q) * f(mid + Scalar(0.5) * width * rule.nodes(q));
        }
    }
    return Scalar(0.5) * width * sum;
}

} // namespace ehd
