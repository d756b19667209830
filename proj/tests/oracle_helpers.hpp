#ifndef SLOC_TESTS_ORACLE_HELPERS_HPP
#define SLOC_TESTS_ORACLE_HELPERS_HPP

// Reference-side utilities for the test suite.  Everything here is an
// independent implementation path: plain loops and textbook algorithms,
// no calls into the library's own numeric helpers, so that an agreement
// between the two sides actually checks something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace oracle {

// Composite Simpson rule with a fixed even panel count.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int panels = 4000)
{
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i)
        acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Variance of a standard Gaussian conditioned on [a, b] (symmetric
// intervals give mean zero, so the raw second moment is the variance).
inline double truncated_gaussian_variance(double a, double b)
{
    const double z = simpson([](double x) { return normal_pdf(x); }, a, b);
    const double m1 =
        simpson([](double x) { return x * normal_pdf(x); }, a, b) / z;
    const double m2 =
        simpson([](double x) { return x * x * normal_pdf(x); }, a, b) / z;
    return m2 - m1 * m1;
}

// E max_i |g_i| for n independent standard Gaussians, via the tail
// integral of the max-CDF.
inline double gaussian_maxabs_mean(int n)
{
    return simpson(
        [n](double x) {
            return 1.0 - std::pow(2.0 * normal_cdf(x) - 1.0, n);
        },
        0.0, 40.0, 20000);
}

// E |g| for a chi(n) variable, through lgamma.
inline double chi_mean(int n)
{
    return std::sqrt(2.0) *
           std::exp(std::lgamma(0.5 * (n + 1)) - std::lgamma(0.5 * n));
}

// Fourth-order Runge-Kutta for the scalar decay law y' = -y; returns y(t).
inline double rk4_exponential_decay(double y0, double t, int steps = 3000)
{
    double y = y0;
    const double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = -y;
        const double k2 = -(y + 0.5 * h * k1);
        const double k3 = -(y + 0.5 * h * k2);
        const double k4 = -(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

// Exact squared-cost transport between two small discrete measures whose
// weights are integer multiples of 1/denominator.  Each side is expanded
// into equal-mass units and all unit-to-unit assignments are enumerated;
// integrality of the transportation polytope makes this the LP optimum.
inline double brute_force_t2(const Eigen::MatrixXd& xa,
                             const Eigen::VectorXd& wa,
                             const Eigen::MatrixXd& xb,
                             const Eigen::VectorXd& wb, int denominator)
{
    auto expand = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
        std::vector<int> units;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            const double scaled = w[j] * denominator;
            const int count = static_cast<int>(std::lround(scaled));
            if (std::abs(scaled - count) > 1e-9)
                throw std::invalid_argument(
                    "brute_force_t2: weight not on the unit grid");
            for (int c = 0; c < count; ++c)
                units.push_back(static_cast<int>(j));
        }
        (void)x;
        return units;
    };
    std::vector<int> ua = expand(xa, wa);
    std::vector<int> ub = expand(xb, wb);
    if (ua.size() != ub.size())
        throw std::invalid_argument("brute_force_t2: unbalanced masses");
    if (ua.size() > 9)
        throw std::invalid_argument("brute_force_t2: too many units");
    std::sort(ub.begin(), ub.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < ua.size(); ++i)
            cost += (xa.col(ua[i]) - xb.col(ub[i])).squaredNorm();
        best = std::min(best, cost);
    } while (std::next_permutation(ub.begin(), ub.end()));
    return best / denominator;
}

// Largest Rayleigh quotient of a symmetric matrix over a dense grid of
// directions; exact enough at this resolution to pin a top eigenvalue in
// two or three dimensions to ~1e-6 relative.
inline double sphere_search_max_quadratic(const Eigen::MatrixXd& M,
                                          int resolution = 2000)
{
    const int n = static_cast<int>(M.rows());
    double best = -std::numeric_limits<double>::infinity();
    if (n == 2) {
        for (int i = 0; i < resolution; ++i) {
            const double th = M_PI * i / resolution;
            Eigen::Vector2d u(std::cos(th), std::sin(th));
            best = std::max(best, u.dot(M * u));
        }
    } else if (n == 3) {
        for (int i = 0; i <= resolution / 4; ++i) {
            const double ph = M_PI * i / (resolution / 4);
            for (int j = 0; j < resolution / 4; ++j) {
                const double th = 2.0 * M_PI * j / (resolution / 4);
                Eigen::Vector3d u(std::sin(ph) * std::cos(th),
                                  std::sin(ph) * std::sin(th), std::cos(ph));
                best = std::max(best, u.dot(M * u));
            }
        }
    } else {
        throw std::invalid_argument(
            "sphere_search_max_quadratic: n must be 2 or 3");
    }
    return best;
}

// Constants pinned from high-precision quadrature/series evaluated outside
// this codebase; the quadrature helpers above must reproduce them.
namespace ref {
inline constexpr double trunc_unit_interval_variance = 0.2911250947727932;
inline constexpr double half_space_variance = 0.3633802276324187;  // 1-2/pi
inline constexpr double sum_k_pow_minus_third_10 = 6.2198137797789729;
inline constexpr double sqrt_harmonic_4 = 1.4433756729740645;  // sqrt(25/12)
inline constexpr double abs_gaussian_mean = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double chi_mean_2 = 1.2533141373155003;
inline constexpr double chi_mean_5 = 2.1276921621409743;
inline constexpr double chi_mean_8 = 2.7416246753776568;
inline constexpr double chi_mean_10 = 3.0843277597998639;
inline constexpr double chi_mean_50 = 7.0358030581667728;
inline constexpr double maxabs_mean_10 = 1.8807156938211605;
inline constexpr double maxabs_mean_50 = 2.5095974349675542;
inline constexpr double exp_l1_over_gaussian_l1 = 0.9221370088957891;
inline constexpr double centered_exp_abs_variance = 0.4586588670535492;
}  // namespace ref

}  // namespace oracle

#endif  // SLOC_TESTS_ORACLE_HELPERS_HPP
