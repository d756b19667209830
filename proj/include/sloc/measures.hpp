#ifndef SLOC_MEASURES_HPP
#define SLOC_MEASURES_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sloc/rng.hpp"

namespace sloc {

// Finitely supported probability measure on R^n.  Atom j is the j-th
// column of `atoms`.  Construction validates: weights nonnegative and
// summing to one within 1e-12, atoms pairwise distinct, everything finite.
class DiscreteMeasure {
public:
    DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights);

    // Convenience constructor that rescales nonnegative weights to total
    // mass one before validating.
    static DiscreteMeasure with_normalized_weights(Eigen::MatrixXd atoms,
                                                   Eigen::VectorXd weights);

    int dimension() const { return static_cast<int>(atoms_.rows()); }
    Eigen::Index atom_count() const { return atoms_.cols(); }
    const Eigen::MatrixXd& atoms() const { return atoms_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    Eigen::VectorXd atom(Eigen::Index j) const { return atoms_.col(j); }

private:
    Eigen::MatrixXd atoms_;   // n x m
    Eigen::VectorXd weights_; // m
};

// Two-point measure on {x_minus, x_plus} in R^1 with mass p at x_plus.
DiscreteMeasure two_point_measure(double p, double x_plus = 1.0,
                                  double x_minus = -1.0);

// Symmetric third-moment tensor T[i][j][k] = E X_i X_j X_k, stored dense.
// Raw moments about the origin; the consumers (the tensor contraction
// below) are defined on raw moments of centered families.
class ThirdMoment {
public:
    explicit ThirdMoment(int n);

    int dimension() const { return n_; }
    double at(int i, int j, int k) const
    {
        return data_[static_cast<std::size_t>((i * n_ + j) * n_ + k)];
    }
    double& at(int i, int j, int k)
    {
        return data_[static_cast<std::size_t>((i * n_ + j) * n_ + k)];
    }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    // M[k][l] = sum_{i,j} T[i][j][k] * T[i][j][l]; symmetric PSD.
    Eigen::MatrixXd contraction() const;

    // Largest deviation from index-permutation symmetry.
    double max_symmetry_defect() const;

private:
    int n_;
    std::vector<double> data_;
};

struct MomentSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;          // central, exact weights or unbiased
    std::optional<ThirdMoment> third;    // raw, populated when order >= 3
};

// Exact weighted moments of a discrete measure.
MomentSummary moments(const DiscreteMeasure& mu, int order = 2);

// Sample moments of a column-per-sample matrix: mean, unbiased covariance,
// and (order 3) the raw third-moment tensor averaged with 1/N.
MomentSummary moments(const Eigen::MatrixXd& samples, int order = 2);

// Affine change of variables taking the measure to mean zero and identity
// covariance.  Fails with a capability error when the covariance has an
// eigenvalue at or below the degeneracy floor 1e-10.
DiscreteMeasure isotropize(const DiscreteMeasure& mu);

// Membership catalog for truncating the standard Gaussian.
class ConvexRegion {
public:
    enum class Kind { All, Cube, Slab, HalfSpace, Ball };

    static ConvexRegion all(int n);
    static ConvexRegion cube(int n, double halfwidth);
    static ConvexRegion slab(int n, int axis, double halfwidth);
    // {x : <normal, x> >= offset}
    static ConvexRegion half_space(Eigen::VectorXd normal, double offset);
    static ConvexRegion ball(int n, double radius);

    bool contains(const Eigen::VectorXd& x) const;
    bool symmetric() const; // invariant under x -> -x
    int dimension() const { return n_; }
    Kind kind() const { return kind_; }
    double halfwidth() const { return halfwidth_; }
    double radius() const { return radius_; }
    int axis() const { return axis_; }
    double offset() const { return offset_; }
    const Eigen::VectorXd& normal() const { return normal_; }

private:
    ConvexRegion(Kind kind, int n);

    Kind kind_;
    int n_;
    double halfwidth_ = 0.0;
    double radius_ = 0.0;
    int axis_ = 0;
    double offset_ = 0.0;
    Eigen::VectorXd normal_;
};

// Sampling catalog.  All isotropic members have mean zero and identity
// covariance by construction; the truncated Gaussian keeps the ambient
// standard Gaussian and restricts it to a convex region by rejection.
class DistributionFamily {
public:
    enum class Kind {
        StandardGaussian,
        ProductExponentialCentered,
        UniformCubeIsotropic,
        UniformBallIsotropic,
        TruncatedGaussian,
        TwoPoint,
        CustomDiscrete,
    };

    static DistributionFamily standard_gaussian(int n);
    static DistributionFamily product_exponential_centered(int n);
    static DistributionFamily uniform_cube_isotropic(int n);
    static DistributionFamily uniform_ball_isotropic(int n);
    static DistributionFamily truncated_gaussian(ConvexRegion region);
    static DistributionFamily two_point(double p, double x_plus = 1.0,
                                        double x_minus = -1.0);
    static DistributionFamily custom_discrete(DiscreteMeasure mu);

    // Parse a catalog name ("gaussian", "exp", "cube", "ball", "twopoint").
    static DistributionFamily by_name(const std::string& name, int n);

    Kind kind() const { return kind_; }
    int dimension() const { return n_; }
    bool isotropic() const;
    bool symmetric() const; // law invariant under x -> -x
    std::string name() const;

    Eigen::VectorXd sample_one(RngStream& stream) const;
    Eigen::MatrixXd sample(Eigen::Index count, RngStream& stream) const;

    // Exact mean/covariance where the catalog knows them.
    Eigen::VectorXd exact_mean() const;
    Eigen::MatrixXd exact_covariance() const;

    const ConvexRegion& region() const;
    const DiscreteMeasure& discrete() const;
    double two_point_p() const { return p_; }

    // Rejection-rate guard for the truncated Gaussian: sampling aborts with
    // a capability error when acceptance falls below this.
    static constexpr double kMinAcceptance = 1e-4;

private:
    DistributionFamily(Kind kind, int n);

    Kind kind_;
    int n_;
    std::optional<ConvexRegion> region_;
    std::optional<DiscreteMeasure> discrete_;
    double p_ = 0.5;
    double x_plus_ = 1.0;
    double x_minus_ = -1.0;
};

// Regular lattice measure in one or two dimensions.  Cell weights are the
// supplied density values times the cell volume, normalized to mass one
// (within 1e-10 by construction).
struct GridAxis {
    double origin; // left edge of the first cell
    double step;
    int cells;
};

class GridMeasure {
public:
    GridMeasure(std::vector<GridAxis> axes, Eigen::VectorXd cell_probabilities);

    int dimension() const { return static_cast<int>(axes_.size()); }
    const std::vector<GridAxis>& axes() const { return axes_; }
    const Eigen::VectorXd& probabilities() const { return probs_; }
    Eigen::Index cell_count() const { return probs_.size(); }

    Eigen::VectorXd cell_center(Eigen::Index flat) const;
    double cell_volume() const;

    // Drops zero-mass cells.
    DiscreteMeasure to_discrete() const;

    // Log-concavity of the cell weights along every lattice line:
    // w_{i-1} * w_{i+1} <= w_i^2 * e^{tol}, with the support an interval.
    bool log_concave_along_axes(double tol) const;

    // Same check applied to log(w_i) + |x_i|^2 / 2: the density divided by
    // the standard Gaussian is still log-concave along lattice lines.
    bool dominates_gaussian_curvature(double tol) const;

private:
    double line_concavity_defect(bool add_gaussian) const;

    std::vector<GridAxis> axes_;
    Eigen::VectorXd probs_;
};

// Evaluate a log-density at cell centers over an axis-aligned box and
// normalize.  `resolution` needs at least 8 cells per axis; the log-density
// may be -inf (hard truncation) but never NaN or +inf.
GridMeasure discretize_density(
    const std::function<double(const Eigen::VectorXd&)>& log_density,
    const std::vector<std::pair<double, double>>& box,
    const std::vector<int>& resolution);

// Collapse a point cloud onto a lattice with at most `max_atoms` occupied
// cells, aggregating weights and placing each cell at the centroid of its
// members.  The pitch starts at `initial_pitch` and coarsens by 1.5x until
// the support fits.  Used to summarize large endpoint clouds for the exact
// transport solver.
DiscreteMeasure quantize_points(const Eigen::MatrixXd& points,
                                double initial_pitch,
                                Eigen::Index max_atoms,
                                double* used_pitch = nullptr);

} // namespace sloc

#endif
