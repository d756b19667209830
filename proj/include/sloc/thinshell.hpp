#ifndef SLOC_THINSHELL_HPP
#define SLOC_THINSHELL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sloc/errors.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"
#include "sloc/stats.hpp"

namespace sloc {

// Spread of the radius |X| for one isotropic family: unbiased variance
// with a percentile-bootstrap confidence interval.
struct SigmaEstimate {
    std::string family;
    int n = 0;
    long count = 0;
    double variance = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t seed = 0;
};

SigmaEstimate estimate_sigma(const DistributionFamily& family, long count,
                             std::uint64_t seed, std::uint64_t stream_base,
                             unsigned threads = 0, int resamples = 200);

// Top singular direction of the averaged third-moment tensor: tau^2 is the
// largest eigenvalue of M[k][l] = sum_ij T[i][j][k] T[i][j][l], found by
// power iteration from a deterministic start.
struct TauEstimate {
    std::string family;
    int n = 0;
    long count = 0;
    double tau = 0.0;
    double tau_squared = 0.0;
    Eigen::VectorXd direction;
    double se_proxy = 0.0;  // spread of per-block estimates
    int power_iterations = 0;
    std::uint64_t seed = 0;
};

TauEstimate estimate_tau(const DistributionFamily& family, long count,
                         std::uint64_t seed, std::uint64_t stream_base,
                         unsigned threads = 0,
                         const Eigen::MatrixXd* rotation = nullptr);

// Aggregation sqrt(sum sigma_k^2 / k) scaled by a caller-chosen constant;
// the constant is reporting-only and never asserted.
double tau_bound_from_sigma(const std::vector<double>& sigma_values,
                            double constant);

// Conditional-expectation diagnostic: the mean of the norm on an event,
// relative to sqrt(P(event)) times the full mean.
struct RestrictedEvent {
    enum class Kind { RadiusAbove, FirstCoordAbove };
    Kind kind = Kind::RadiusAbove;
    double r = 0.0;

    static RestrictedEvent radius_above(double r);
    static RestrictedEvent first_coord_above(double r);
    bool contains(const Eigen::VectorXd& x) const;
    std::string name() const;
};

struct RestrictedNormReport {
    double ratio = 0.0;
    double event_probability = 0.0;
    double restricted_mean = 0.0;  // E(norm; event)
    double full_mean = 0.0;
    long count = 0;
    long event_count = 0;
};

class NormSpec;  // geometry

RestrictedNormReport restricted_norm_expectation(
    const DistributionFamily& family, const NormSpec& norm,
    const RestrictedEvent& event, long count, std::uint64_t seed,
    std::uint64_t stream_base, unsigned threads = 0);

}  // namespace sloc

#endif  // SLOC_THINSHELL_HPP
