#ifndef SLOC_COUPLING_HPP
#define SLOC_COUPLING_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sloc/errors.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"

namespace sloc {

// Terminal value of a vector martingale together with its accumulated
// quadratic variation.  Valid endpoints keep the QV spectrum inside
// [-tol, 1 + tol]: the Gaussian completion below fills exactly the
// variance the martingale left unused.
struct MartingaleEndpoint {
    Eigen::VectorXd M;
    Eigen::MatrixXd QV;
};

// Throws unless QV is symmetric with spectrum in [-1e-8, 1+1e-8].
void validate_endpoint(const MartingaleEndpoint& endpoint);

// Complete a stopped martingale to a pair of standard Gaussians:
// Y = M + S g and Z = M - S g with S = sqrt(id - QV), so Y + Z = 2M and
// (Y - Z)/2 carries the missing covariance id - QV.
std::pair<Eigen::VectorXd, Eigen::VectorXd> maurey_extend(
    const MartingaleEndpoint& endpoint, const Eigen::VectorXd& g);

// First/second-moment agreement with the standard Gaussian, plus the mean
// of each catalog norm against its exact value.  se fields are standard
// errors (closed-form references carry the sample-side error only).
struct ConformanceReport {
    int n = 0;
    long count = 0;
    double mean_linf = 0.0;      // largest |sample mean coordinate|
    double mean_se = 0.0;        // per-coordinate standard error bound
    double cov_dev_op = 0.0;     // ||sample covariance - id||_op
    double cov_se = 0.0;         // operator-norm error proxy sqrt(2n/count)
    double gap_l1 = 0.0, se_l1 = 0.0, ref_l1 = 0.0;
    double gap_l2 = 0.0, se_l2 = 0.0, ref_l2 = 0.0;
    double gap_linf = 0.0, se_linf = 0.0, ref_linf = 0.0;
    double worst_sigma = 0.0;    // max deviation measured in its own se
    bool pass = false;           // worst_sigma <= 4
};

// Columns of `samples` are the vectors under test.
ConformanceReport gaussian_conformance(const Eigen::MatrixXd& samples);

// Convex comparison functionals used throughout: the three norms plus a
// max of linear forms (rows of A).
struct ConvexFunctional {
    enum class Kind { L1, L2, Linf, MaxLinear };
    Kind kind = Kind::L2;
    Eigen::MatrixXd forms;  // MaxLinear only

    static ConvexFunctional l1();
    static ConvexFunctional l2();
    static ConvexFunctional linf();
    static ConvexFunctional max_linear(Eigen::MatrixXd forms);
    double operator()(const Eigen::VectorXd& x) const;
    std::string name() const;
};

struct DominanceReport {
    double mean_endpoint = 0.0, se_endpoint = 0.0;
    double mean_gaussian = 0.0, se_gaussian = 0.0;
    double gap = 0.0;      // mean_endpoint - mean_gaussian; expected <= 0
    double gap_se = 0.0;   // combined standard error
    long count = 0;
};

// E phi(M) against E phi(Gamma) for stopped-martingale endpoints whose QV
// stays below the identity.  The Gaussian side uses the closed form where
// one exists, otherwise Monte Carlo on `stream`.
DominanceReport convex_dominance_check(
    const std::vector<MartingaleEndpoint>& endpoints,
    const ConvexFunctional& phi, RngStream& stream,
    long gaussian_samples = 100000);

struct PsdOrderReport {
    int n = 0;
    long count = 0;
    double margin_min_eig = 0.0;  // smallest eigenvalue of id - cov(X)
    double se_proxy = 0.0;        // sqrt(2n/count)
    Eigen::VectorXd coordinate_variance;
};

// Covariance domination for a hard truncation of the standard Gaussian:
// the truncated vector is more log-concave than the Gaussian, so its
// covariance must stay below the identity up to sampling error.
PsdOrderReport brascamp_lieb_check(const ConvexRegion& region, long count,
                                   RngStream& stream);

struct GapReport {
    double lhs = 0.0, se_lhs = 0.0;
    double rhs = 0.0, se_rhs = 0.0;
    double gap = 0.0, gap_se = 0.0;
    long count = 0;
};

// E phi(X) vs E phi(Gamma) for a centered hard truncation: the truncated
// expectation should not exceed the Gaussian one.  The region must be
// symmetric so the truncated vector is centered by construction.
GapReport harge_check(const ConvexRegion& region, const ConvexFunctional& phi,
                      long count, RngStream& stream);

}  // namespace sloc

#endif  // SLOC_COUPLING_HPP
