#ifndef SLOC_GEOMETRY_HPP
#define SLOC_GEOMETRY_HPP

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "sloc/errors.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"

namespace sloc {

// Gauge descriptor: lp and weighted-lp families evaluated in closed form,
// polytope gauges by facet maximum or a small vertex-hull linear program,
// and the Euclidean norm pulled back through a linear map.
class NormSpec {
public:
    enum class Kind { Lp, WeightedLp, PolytopeFacets, PolytopeVertices,
                      LinearMapL2 };

    static NormSpec lp(double p, int n);  // p in [1, inf]
    static NormSpec weighted_lp(double p, Eigen::VectorXd weights);
    // Facet form: gauge(x) = max_i <row_i, x>; rows must positively span,
    // which holds for the symmetric catalogs used here.
    static NormSpec facets(Eigen::MatrixXd rows);
    // Vertex form: gauge(x) = min sum(beta) with V beta = x, beta >= 0.
    static NormSpec vertices(Eigen::MatrixXd columns);
    static NormSpec linear_map(Eigen::MatrixXd map);

    Kind kind() const { return kind_; }
    int dimension() const { return n_; }
    double p() const { return p_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    std::string name() const;

private:
    NormSpec(Kind kind, int n) : kind_(kind), n_(n) {}
    Kind kind_;
    int n_;
    double p_ = 2.0;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd matrix_;
};

double gauge_eval(const NormSpec& spec, const Eigen::VectorXd& x);

// Dual descriptor: lp <-> lq with 1/p + 1/q = 1 (weights invert), facet
// polytope <-> vertex polytope.  Other kinds have no computable polar here.
NormSpec polar_gauge(const NormSpec& spec);

struct MonteCarloValue {
    double value = 0.0;
    double se = 0.0;  // zero for closed forms
    long count = 0;
};

// E gauge(standard Gaussian): closed forms for l1/l2 (weighted included),
// Monte Carlo otherwise.
MonteCarloValue gaussian_norm_expectation(const NormSpec& spec, long count,
                                          std::uint64_t seed,
                                          std::uint64_t stream_base,
                                          unsigned threads = 0);

// Sphere average of the gauge, sampled as gauge(g)/|g| over Gaussian g.
MonteCarloValue mean_width(const NormSpec& spec, long count,
                           std::uint64_t seed, std::uint64_t stream_base,
                           unsigned threads = 0);

// Catalog convex body: gauge, polar gauge, closed-form volume and the
// uniform isotropic sampler.
struct BodySpec {
    std::string name;
    int n = 0;
    NormSpec gauge;
    NormSpec polar;
    double volume = 0.0;  // <= 0 means unknown
    DistributionFamily sampler;
};

BodySpec make_isotropic_cube_body(int n);   // [-sqrt(3), sqrt(3)]^n
BodySpec make_isotropic_ball_body(int n);   // radius sqrt(n+2)

// |K|^(-1/n) for a body with closed-form volume.
double isotropic_constant(const BodySpec& body);

struct NormComparisonReport {
    std::string family;
    std::string norm;
    int n = 0;
    long count = 0;
    double mean_family = 0.0, se_family = 0.0;
    double mean_gaussian = 0.0, se_gaussian = 0.0;
    double ratio = 0.0, ratio_se = 0.0;
    double tau_hat = 0.0;
    double bound = 0.0;  // C sqrt(log n) tau_hat, reporting only
};

NormComparisonReport compare_norms_experiment(
    const DistributionFamily& family, const NormSpec& spec, long count,
    std::uint64_t seed, std::uint64_t stream_base, double big_constant = 10.0,
    double tau_hat = 0.0, unsigned threads = 0);

struct CorollaryReport {
    std::string body;
    int n = 0;
    long count = 0;
    double mean_gauge = 0.0, se_gauge = 0.0;    // E ||X||_K, X uniform in K
    double mean_polar = 0.0, se_polar = 0.0;    // E ||X||_polar
    double width_M = 0.0, width_M_se = 0.0;     // sphere average of gauge
    double width_Mstar = 0.0, width_Mstar_se = 0.0;
    double lower_i = 0.0;    // c / (sqrt(n log n) tau)
    double lower_ii = 0.0;   // c sqrt(n) / (sqrt(log n) tau)
    double small_constant = 0.0;
    double tau_hat = 0.0;
};

CorollaryReport corollary_checks(const BodySpec& body, long count,
                                 std::uint64_t seed,
                                 std::uint64_t stream_base,
                                 double small_constant = 0.01,
                                 double tau_hat = 0.0, unsigned threads = 0);

}  // namespace sloc

#endif  // SLOC_GEOMETRY_HPP
