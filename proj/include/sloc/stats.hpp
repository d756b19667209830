#ifndef SLOC_STATS_HPP
#define SLOC_STATS_HPP

#include <cstdint>
#include <vector>

#include "sloc/rng.hpp"

namespace sloc {

// Scalar summary of a Monte Carlo sample: mean, unbiased variance, and the
// standard error of the mean.
struct SampleSummary {
    double mean = 0.0;
    double variance = 0.0;
    double se_mean = 0.0;
    std::size_t count = 0;
};

SampleSummary summarize(const std::vector<double>& values);

// Percentile bootstrap confidence interval for a statistic of a scalar
// sample.  Resampling indices come from the supplied stream, so results are
// reproducible.  `statistic` maps a resampled vector to a scalar.
struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;
    int resamples = 0;
};

BootstrapInterval bootstrap_interval(
    const std::vector<double >& values,
    double (*statistic)(const std::vector<double>&),
    int resamples, double coverage, RngStream& stream);

double unbiased_variance(const std::vector<double>& values);

// Standard normal density and distribution function.
double normal_pdf(double x);
double normal_cdf(double x);

// Regularized incomplete gamma functions P(a,x), Q(a,x) = 1 - P(a,x),
// by series / continued fraction.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with k degrees of
// freedom, i.e. P(X > x).
double chi_square_sf(double x, int k);

// Pearson goodness-of-fit: observed counts vs expected probabilities.
// Returns the p-value for the chi-square statistic with (bins-1) dof.
double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_probs);

// Mean of the Euclidean norm of a standard Gaussian vector in dimension n:
// sqrt(2) * Gamma((n+1)/2) / Gamma(n/2).
double chi_mean(int n);

// Mean of the max-abs coordinate of a standard Gaussian vector, computed by
// deterministic quadrature of the tail formula.
double gaussian_maxabs_mean(int n);

// Adaptive Simpson quadrature on [a, b].
double integrate(double (*f)(double, const void*), const void* ctx,
                 double a, double b, double tol);

} // namespace sloc

#endif
