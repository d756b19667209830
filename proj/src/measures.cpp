#include "sloc/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "sloc/errors.hpp"
#include "sloc/stats.hpp"

namespace sloc {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what)
{
    if (!m.allFinite())
        throw InputError(std::string(what) + ": non-finite entries");
}

} // namespace

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights))
{
    if (atoms_.rows() < 1 || atoms_.cols() < 1)
        throw InputError("DiscreteMeasure: need at least one atom in R^n, n >= 1");
    if (weights_.size() != atoms_.cols())
        throw InputError("DiscreteMeasure: weight count does not match atom count");
    require_finite(atoms_, "DiscreteMeasure atoms");
    require_finite(weights_, "DiscreteMeasure weights");
    if ((weights_.array() < 0.0).any())
        throw InputError("DiscreteMeasure: negative weight");
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
        throw InputError("DiscreteMeasure: weights must sum to 1 within 1e-12");

    // Pairwise distinctness via a lexicographic sort of column indices.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(atoms_.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto lex_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < atoms_.rows(); ++r) {
            if (atoms_(r, a) < atoms_(r, b)) return true;
            if (atoms_(r, a) > atoms_(r, b)) return false;
        }
        return false;
    };
    std::sort(order.begin(), order.end(), lex_less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (atoms_.col(order[i - 1]) == atoms_.col(order[i]))
            throw InputError("DiscreteMeasure: atoms must be pairwise distinct");
    }
}

DiscreteMeasure DiscreteMeasure::with_normalized_weights(Eigen::MatrixXd atoms,
                                                         Eigen::VectorXd weights)
{
    require_finite(weights, "DiscreteMeasure weights");
    const double total = weights.sum();
    if (!(total > 0.0))
        throw InputError("DiscreteMeasure: total weight must be positive");
    weights /= total;
    // A rescaled sum can still be one ulp off; nudge the largest weight.
    const double resid = 1.0 - weights.sum();
    Eigen::Index imax;
    weights.maxCoeff(&imax);
    weights[imax] += resid;
    return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure two_point_measure(double p, double x_plus, double x_minus)
{
    if (!(p > 0.0 && p < 1.0))
        throw InputError("two_point_measure: p must be in (0,1)");
    if (x_plus == x_minus)
        throw InputError("two_point_measure: atoms must differ");
    Eigen::MatrixXd atoms(1, 2);
    atoms << x_plus, x_minus;
    Eigen::VectorXd w(2);
    w << p, 1.0 - p;
    return DiscreteMeasure(std::move(atoms), std::move(w));
}

ThirdMoment::ThirdMoment(int n)
    : n_(n), data_(static_cast<std::size_t>(n) * n * n, 0.0)
{
    if (n < 1) throw PreconditionError("ThirdMoment: need n >= 1");
}

Eigen::MatrixXd ThirdMoment::contraction() const
{
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            const double* slab = &data_[static_cast<std::size_t>((i * n_ + j) * n_)];
            for (int k = 0; k < n_; ++k) {
                const double tk = slab[k];
                if (tk == 0.0) continue;
                for (int l = 0; l < n_; ++l) M(k, l) += tk * slab[l];
            }
        }
    }
    return 0.5 * (M + M.transpose());
}

double ThirdMoment::max_symmetry_defect() const
{
    double defect = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j)
            for (int k = j; k < n_; ++k) {
                const double v = at(i, j, k);
                const double perms[5] = {at(i, k, j), at(j, i, k), at(j, k, i),
                                         at(k, i, j), at(k, j, i)};
                for (double p : perms)
                    defect = std::max(defect, std::abs(v - p));
            }
    return defect;
}

namespace {

void accumulate_third(ThirdMoment& T, const Eigen::VectorXd& x, double w)
{
    const int n = T.dimension();
    for (int k = 0; k < n; ++k) {
        const double wk = w * x[k];
        if (wk == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            const double wki = wk * x[i];
            double* row = &T.data()[static_cast<std::size_t>((i * n + 0) * n + k)];
            for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j) * n] += wki * x[j];
        }
    }
}

} // namespace

MomentSummary moments(const DiscreteMeasure& mu, int order)
{
    if (order != 2 && order != 3)
        throw PreconditionError("moments: order must be 2 or 3");
    const Eigen::MatrixXd& X = mu.atoms();
    const Eigen::VectorXd& w = mu.weights();
    MomentSummary s;
    s.mean = X * w;
    const Eigen::MatrixXd centered = X.colwise() - s.mean;
    s.covariance = centered * w.asDiagonal() * centered.transpose();
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
    if (order >= 3) {
        ThirdMoment T(mu.dimension());
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            accumulate_third(T, X.col(j), w[j]);
        s.third = std::move(T);
    }
    return s;
}

MomentSummary moments(const Eigen::MatrixXd& samples, int order)
{
    if (order != 2 && order != 3)
        throw PreconditionError("moments: order must be 2 or 3");
    if (samples.cols() < 2)
        throw PreconditionError("moments: need at least two samples");
    require_finite(samples, "moments samples");
    const Eigen::Index N = samples.cols();
    MomentSummary s;
    s.mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - s.mean;
    s.covariance = centered * centered.transpose() / static_cast<double>(N - 1);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
    if (order >= 3) {
        ThirdMoment T(static_cast<int>(samples.rows()));
        const double w = 1.0 / static_cast<double>(N);
        for (Eigen::Index j = 0; j < N; ++j)
            accumulate_third(T, samples.col(j), w);
        s.third = std::move(T);
    }
    return s;
}

DiscreteMeasure isotropize(const DiscreteMeasure& mu)
{
    const MomentSummary s = moments(mu, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance);
    if (es.info() != Eigen::Success)
        throw NumericalError("isotropize: eigendecomposition failed");
    const Eigen::VectorXd lam = es.eigenvalues();
    if (lam.minCoeff() <= 1e-10)
        throw CapabilityError(
            "isotropize: covariance is degenerate (eigenvalue <= 1e-10)");
    const Eigen::MatrixXd map =
        lam.array().rsqrt().matrix().asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd atoms = map * (mu.atoms().colwise() - s.mean);
    return DiscreteMeasure(std::move(atoms), mu.weights());
}

// ---------------------------------------------------------------------------
// ConvexRegion

ConvexRegion::ConvexRegion(Kind kind, int n) : kind_(kind), n_(n)
{
    if (n < 1) throw InputError("ConvexRegion: dimension must be >= 1");
}

ConvexRegion ConvexRegion::all(int n)
{
    return ConvexRegion(Kind::All, n);
}

ConvexRegion ConvexRegion::cube(int n, double halfwidth)
{
    if (!(halfwidth > 0.0)) throw InputError("ConvexRegion::cube: halfwidth <= 0");
    ConvexRegion r(Kind::Cube, n);
    r.halfwidth_ = halfwidth;
    return r;
}

ConvexRegion ConvexRegion::slab(int n, int axis, double halfwidth)
{
    if (!(halfwidth > 0.0)) throw InputError("ConvexRegion::slab: halfwidth <= 0");
    if (axis < 0 || axis >= n) throw InputError("ConvexRegion::slab: axis out of range");
    ConvexRegion r(Kind::Slab, n);
    r.axis_ = axis;
    r.halfwidth_ = halfwidth;
    return r;
}

ConvexRegion ConvexRegion::half_space(Eigen::VectorXd normal, double offset)
{
    if (normal.size() < 1 || normal.norm() == 0.0)
        throw InputError("ConvexRegion::half_space: zero normal");
    ConvexRegion r(Kind::HalfSpace, static_cast<int>(normal.size()));
    r.normal_ = std::move(normal);
    r.offset_ = offset;
    return r;
}

ConvexRegion ConvexRegion::ball(int n, double radius)
{
    if (!(radius > 0.0)) throw InputError("ConvexRegion::ball: radius <= 0");
    ConvexRegion r(Kind::Ball, n);
    r.radius_ = radius;
    return r;
}

bool ConvexRegion::contains(const Eigen::VectorXd& x) const
{
    if (x.size() != n_) throw InputError("ConvexRegion::contains: wrong dimension");
    switch (kind_) {
    case Kind::All:
        return true;
    case Kind::Cube:
        return (x.array().abs() <= halfwidth_).all();
    case Kind::Slab:
        return std::abs(x[axis_]) <= halfwidth_;
    case Kind::HalfSpace:
        return normal_.dot(x) >= offset_;
    case Kind::Ball:
        return x.squaredNorm() <= radius_ * radius_;
    }
    return false;
}

bool ConvexRegion::symmetric() const
{
    switch (kind_) {
    case Kind::All:
    case Kind::Cube:
    case Kind::Slab:
    case Kind::Ball:
        return true;
    case Kind::HalfSpace:
        return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// DistributionFamily

DistributionFamily::DistributionFamily(Kind kind, int n) : kind_(kind), n_(n)
{
    if (n < 1) throw ConfigError("DistributionFamily: dimension must be >= 1");
}

DistributionFamily DistributionFamily::standard_gaussian(int n)
{
    return DistributionFamily(Kind::StandardGaussian, n);
}

DistributionFamily DistributionFamily::product_exponential_centered(int n)
{
    return DistributionFamily(Kind::ProductExponentialCentered, n);
}

DistributionFamily DistributionFamily::uniform_cube_isotropic(int n)
{
    return DistributionFamily(Kind::UniformCubeIsotropic, n);
}

DistributionFamily DistributionFamily::uniform_ball_isotropic(int n)
{
    return DistributionFamily(Kind::UniformBallIsotropic, n);
}

DistributionFamily DistributionFamily::truncated_gaussian(ConvexRegion region)
{
    DistributionFamily f(Kind::TruncatedGaussian, region.dimension());
    f.region_ = std::move(region);
    return f;
}

DistributionFamily DistributionFamily::two_point(double p, double x_plus,
                                                 double x_minus)
{
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("two_point family: p must be in (0,1)");
    DistributionFamily f(Kind::TwoPoint, 1);
    f.p_ = p;
    f.x_plus_ = x_plus;
    f.x_minus_ = x_minus;
    return f;
}

DistributionFamily DistributionFamily::custom_discrete(DiscreteMeasure mu)
{
    DistributionFamily f(Kind::CustomDiscrete, mu.dimension());
    f.discrete_ = std::move(mu);
    return f;
}

DistributionFamily DistributionFamily::by_name(const std::string& name, int n)
{
    if (name == "gaussian") return standard_gaussian(n);
    if (name == "exp") return product_exponential_centered(n);
    if (name == "cube") return uniform_cube_isotropic(n);
    if (name == "ball") return uniform_ball_isotropic(n);
    if (name == "twopoint") {
        if (n != 1)
            throw ConfigError("family twopoint: dimension must be 1");
        return two_point(0.5);
    }
    throw ConfigError("unknown family name: " + name);
}

bool DistributionFamily::isotropic() const
{
    switch (kind_) {
    case Kind::StandardGaussian:
    case Kind::ProductExponentialCentered:
    case Kind::UniformCubeIsotropic:
    case Kind::UniformBallIsotropic:
        return true;
    case Kind::TwoPoint:
        return p_ == 0.5 && x_plus_ == 1.0 && x_minus_ == -1.0;
    case Kind::TruncatedGaussian:
        return region_->kind() == ConvexRegion::Kind::All;
    case Kind::CustomDiscrete: {
        const MomentSummary s = moments(*discrete_, 2);
        const int n = discrete_->dimension();
        return s.mean.norm() <= 1e-9 &&
               (s.covariance - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-9;
    }
    }
    return false;
}

bool DistributionFamily::symmetric() const
{
    switch (kind_) {
    case Kind::StandardGaussian:
    case Kind::UniformCubeIsotropic:
    case Kind::UniformBallIsotropic:
        return true;
    case Kind::TwoPoint:
        return p_ == 0.5 && x_plus_ == -x_minus_;
    case Kind::TruncatedGaussian:
        return region_->symmetric();
    case Kind::ProductExponentialCentered:
    case Kind::CustomDiscrete:
        return false;
    }
    return false;
}

std::string DistributionFamily::name() const
{
    switch (kind_) {
    case Kind::StandardGaussian: return "gaussian";
    case Kind::ProductExponentialCentered: return "exp";
    case Kind::UniformCubeIsotropic: return "cube";
    case Kind::UniformBallIsotropic: return "ball";
    case Kind::TwoPoint: return "twopoint";
    case Kind::TruncatedGaussian: return "truncated-gaussian";
    case Kind::CustomDiscrete: return "custom-discrete";
    }
    return "?";
}

const ConvexRegion& DistributionFamily::region() const
{
    if (!region_)
        throw PreconditionError("family has no truncation region");
    return *region_;
}

const DiscreteMeasure& DistributionFamily::discrete() const
{
    if (!discrete_)
        throw PreconditionError("family has no discrete support");
    return *discrete_;
}

Eigen::VectorXd DistributionFamily::sample_one(RngStream& stream) const
{
    switch (kind_) {
    case Kind::StandardGaussian:
        return stream.gaussian_vector(n_);
    case Kind::ProductExponentialCentered: {
        Eigen::VectorXd x(n_);
        for (int i = 0; i < n_; ++i) x[i] = stream.next_exponential() - 1.0;
        return x;
    }
    case Kind::UniformCubeIsotropic: {
        // Side [-sqrt(3), sqrt(3)] gives unit variance per coordinate.
        Eigen::VectorXd x(n_);
        const double s = std::sqrt(3.0);
        for (int i = 0; i < n_; ++i)
            x[i] = s * (2.0 * stream.next_unit() - 1.0);
        return x;
    }
    case Kind::UniformBallIsotropic: {
        // Radius sqrt(n+2) gives identity covariance.
        const double radius = std::sqrt(static_cast<double>(n_) + 2.0);
        Eigen::VectorXd dir;
        double norm = 0.0;
        do {
            dir = stream.gaussian_vector(n_);
            norm = dir.norm();
        } while (norm == 0.0);
        const double u = stream.next_unit_positive();
        const double r = radius * std::pow(u, 1.0 / static_cast<double>(n_));
        return (r / norm) * dir;
    }
    case Kind::TwoPoint: {
        Eigen::VectorXd x(1);
        x[0] = stream.next_unit() < p_ ? x_plus_ : x_minus_;
        return x;
    }
    case Kind::TruncatedGaussian: {
        long attempts = 0;
        while (true) {
            const Eigen::VectorXd x = stream.gaussian_vector(n_);
            ++attempts;
            if (region_->contains(x)) return x;
            if (attempts >= 1000 &&
                1.0 / static_cast<double>(attempts) < kMinAcceptance)
                throw CapabilityError(
                    "truncated_gaussian: rejection acceptance below 1e-4");
        }
    }
    case Kind::CustomDiscrete: {
        const double u = stream.next_unit();
        const Eigen::VectorXd& w = discrete_->weights();
        double acc = 0.0;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            acc += w[j];
            if (u < acc) return discrete_->atom(j);
        }
        return discrete_->atom(w.size() - 1);
    }
    }
    throw ConfigError("sample_one: unhandled family kind");
}

Eigen::MatrixXd DistributionFamily::sample(Eigen::Index count,
                                           RngStream& stream) const
{
    if (count < 1) throw PreconditionError("sample: count must be >= 1");
    Eigen::MatrixXd out(n_, count);
    if (kind_ == Kind::TruncatedGaussian) {
        // Shared attempt accounting so a tiny region fails fast instead of
        // once per sample.
        long attempts = 0;
        long accepted = 0;
        for (Eigen::Index j = 0; j < count; ++j) {
            while (true) {
                const Eigen::VectorXd x = stream.gaussian_vector(n_);
                ++attempts;
                if (region_->contains(x)) {
                    out.col(j) = x;
                    ++accepted;
                    break;
                }
                if (attempts >= 10000 &&
                    static_cast<double>(accepted + 1) /
                            static_cast<double>(attempts) < kMinAcceptance)
                    throw CapabilityError(
                        "truncated_gaussian: rejection acceptance below 1e-4");
            }
        }
        return out;
    }
    for (Eigen::Index j = 0; j < count; ++j) out.col(j) = sample_one(stream);
    return out;
}

Eigen::VectorXd DistributionFamily::exact_mean() const
{
    switch (kind_) {
    case Kind::StandardGaussian:
    case Kind::ProductExponentialCentered:
    case Kind::UniformCubeIsotropic:
    case Kind::UniformBallIsotropic:
        return Eigen::VectorXd::Zero(n_);
    case Kind::TwoPoint: {
        Eigen::VectorXd m(1);
        m[0] = p_ * x_plus_ + (1.0 - p_) * x_minus_;
        return m;
    }
    case Kind::CustomDiscrete:
        return moments(*discrete_, 2).mean;
    case Kind::TruncatedGaussian: {
        const ConvexRegion& r = *region_;
        switch (r.kind()) {
        case ConvexRegion::Kind::All:
        case ConvexRegion::Kind::Cube:
        case ConvexRegion::Kind::Slab:
        case ConvexRegion::Kind::Ball:
            return Eigen::VectorXd::Zero(n_);
        case ConvexRegion::Kind::HalfSpace: {
            const Eigen::VectorXd u = r.normal() / r.normal().norm();
            const double c = r.offset() / r.normal().norm();
            const double lambda = normal_pdf(c) / (1.0 - normal_cdf(c));
            return lambda * u;
        }
        }
        break;
    }
    }
    throw PreconditionError("exact_mean: not available for this family");
}

Eigen::MatrixXd DistributionFamily::exact_covariance() const
{
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n_, n_);
    switch (kind_) {
    case Kind::StandardGaussian:
    case Kind::ProductExponentialCentered:
    case Kind::UniformCubeIsotropic:
    case Kind::UniformBallIsotropic:
        return id;
    case Kind::TwoPoint: {
        const double m = p_ * x_plus_ + (1.0 - p_) * x_minus_;
        Eigen::MatrixXd v(1, 1);
        v(0, 0) = p_ * x_plus_ * x_plus_ + (1.0 - p_) * x_minus_ * x_minus_ - m * m;
        return v;
    }
    case Kind::CustomDiscrete:
        return moments(*discrete_, 2).covariance;
    case Kind::TruncatedGaussian: {
        const ConvexRegion& r = *region_;
        switch (r.kind()) {
        case ConvexRegion::Kind::All:
            return id;
        case ConvexRegion::Kind::Cube: {
            const double a = r.halfwidth();
            const double s2 =
                1.0 - 2.0 * a * normal_pdf(a) / (2.0 * normal_cdf(a) - 1.0);
            return s2 * id;
        }
        case ConvexRegion::Kind::Slab: {
            const double a = r.halfwidth();
            const double s2 =
                1.0 - 2.0 * a * normal_pdf(a) / (2.0 * normal_cdf(a) - 1.0);
            Eigen::MatrixXd v = id;
            v(r.axis(), r.axis()) = s2;
            return v;
        }
        case ConvexRegion::Kind::HalfSpace: {
            const Eigen::VectorXd u = r.normal() / r.normal().norm();
            const double c = r.offset() / r.normal().norm();
            const double lambda = normal_pdf(c) / (1.0 - normal_cdf(c));
            const double var_u = 1.0 + c * lambda - lambda * lambda;
            return id + (var_u - 1.0) * (u * u.transpose());
        }
        case ConvexRegion::Kind::Ball: {
            const double a = 0.5 * static_cast<double>(n_);
            const double x = 0.5 * r.radius() * r.radius();
            const double s2 = gamma_p(a + 1.0, x) / gamma_p(a, x);
            return s2 * id;
        }
        }
        break;
    }
    }
    throw PreconditionError("exact_covariance: not available for this family");
}

// ---------------------------------------------------------------------------
// GridMeasure

GridMeasure::GridMeasure(std::vector<GridAxis> axes, Eigen::VectorXd cell_probabilities)
    : axes_(std::move(axes)), probs_(std::move(cell_probabilities))
{
    if (axes_.empty() || axes_.size() > 2)
        throw InputError("GridMeasure: only 1D and 2D lattices are supported");
    Eigen::Index expected = 1;
    for (const GridAxis& ax : axes_) {
        if (ax.cells < 1) throw InputError("GridMeasure: axis with no cells");
        if (!(ax.step > 0.0)) throw InputError("GridMeasure: nonpositive step");
        if (!std::isfinite(ax.origin)) throw InputError("GridMeasure: bad origin");
        expected *= ax.cells;
    }
    if (probs_.size() != expected)
        throw InputError("GridMeasure: probability count does not match lattice");
    require_finite(probs_, "GridMeasure probabilities");
    if ((probs_.array() < 0.0).any())
        throw InputError("GridMeasure: negative probability");
    if (std::abs(probs_.sum() - 1.0) > 1e-10)
        throw InputError("GridMeasure: probabilities must sum to 1 within 1e-10");
}

Eigen::VectorXd GridMeasure::cell_center(Eigen::Index flat) const
{
    Eigen::VectorXd x(dimension());
    if (axes_.size() == 1) {
        x[0] = axes_[0].origin + (static_cast<double>(flat) + 0.5) * axes_[0].step;
    } else {
        const Eigen::Index c1 = axes_[1].cells;
        const Eigen::Index i = flat / c1;
        const Eigen::Index j = flat % c1;
        x[0] = axes_[0].origin + (static_cast<double>(i) + 0.5) * axes_[0].step;
        x[1] = axes_[1].origin + (static_cast<double>(j) + 0.5) * axes_[1].step;
    }
    return x;
}

double GridMeasure::cell_volume() const
{
    double v = 1.0;
    for (const GridAxis& ax : axes_) v *= ax.step;
    return v;
}

DiscreteMeasure GridMeasure::to_discrete() const
{
    Eigen::Index support = 0;
    for (Eigen::Index i = 0; i < probs_.size(); ++i)
        if (probs_[i] > 0.0) ++support;
    if (support == 0)
        throw InputError("GridMeasure: empty support");
    Eigen::MatrixXd atoms(dimension(), support);
    Eigen::VectorXd w(support);
    Eigen::Index out = 0;
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        if (probs_[i] <= 0.0) continue;
        atoms.col(out) = cell_center(i);
        w[out] = probs_[i];
        ++out;
    }
    // Renormalize away the dust lost to dropped zero cells (none in exact
    // arithmetic, but keep the constructor's 1e-12 contract safe).
    return DiscreteMeasure::with_normalized_weights(std::move(atoms), std::move(w));
}

double GridMeasure::line_concavity_defect(bool add_gaussian) const
{
    const double inf = std::numeric_limits<double>::infinity();
    double defect = 0.0;

    auto scan_line = [&](auto&& value_at, int count) {
        // value_at(i) -> pair(weight, center coordinate along the line)
        int first = -1, last = -1;
        for (int i = 0; i < count; ++i) {
            if (value_at(i).first > 0.0) {
                if (first < 0) first = i;
                last = i;
            }
        }
        if (first < 0) return;
        for (int i = first; i <= last; ++i) {
            if (value_at(i).first <= 0.0) {
                defect = inf; // support has a hole along the line
                return;
            }
        }
        for (int i = first + 1; i < last; ++i) {
            const auto [wl, cl] = value_at(i - 1);
            const auto [wm, cm] = value_at(i);
            const auto [wr, cr] = value_at(i + 1);
            double d = std::log(wl) + std::log(wr) - 2.0 * std::log(wm);
            if (add_gaussian)
                d += 0.5 * (cl * cl + cr * cr - 2.0 * cm * cm);
            defect = std::max(defect, d);
        }
    };

    if (axes_.size() == 1) {
        const GridAxis& ax = axes_[0];
        scan_line(
            [&](int i) {
                return std::pair<double, double>(
                    probs_[i], ax.origin + (i + 0.5) * ax.step);
            },
            ax.cells);
    } else {
        const GridAxis& a0 = axes_[0];
        const GridAxis& a1 = axes_[1];
        for (int i = 0; i < a0.cells; ++i) {
            scan_line(
                [&](int j) {
                    return std::pair<double, double>(
                        probs_[static_cast<Eigen::Index>(i) * a1.cells + j],
                        a1.origin + (j + 0.5) * a1.step);
                },
                a1.cells);
        }
        for (int j = 0; j < a1.cells; ++j) {
            scan_line(
                [&](int i) {
                    return std::pair<double, double>(
                        probs_[static_cast<Eigen::Index>(i) * a1.cells + j],
                        a0.origin + (i + 0.5) * a0.step);
                },
                a0.cells);
        }
    }
    return defect;
}

bool GridMeasure::log_concave_along_axes(double tol) const
{
    return line_concavity_defect(false) <= tol;
}

bool GridMeasure::dominates_gaussian_curvature(double tol) const
{
    return line_concavity_defect(true) <= tol;
}

GridMeasure discretize_density(
    const std::function<double(const Eigen::VectorXd&)>& log_density,
    const std::vector<std::pair<double, double>>& box,
    const std::vector<int>& resolution)
{
    if (box.empty() || box.size() > 2)
        throw PreconditionError("discretize_density: box must be 1D or 2D");
    if (resolution.size() != box.size())
        throw PreconditionError("discretize_density: resolution/box mismatch");
    std::vector<GridAxis> axes;
    Eigen::Index cells = 1;
    for (std::size_t d = 0; d < box.size(); ++d) {
        const auto [lo, hi] = box[d];
        if (!(hi > lo))
            throw PreconditionError("discretize_density: empty box side");
        if (resolution[d] < 8)
            throw PreconditionError("discretize_density: resolution must be >= 8");
        axes.push_back(GridAxis{lo, (hi - lo) / resolution[d], resolution[d]});
        cells *= resolution[d];
    }

    Eigen::VectorXd logs(cells);
    // Temporary grid to reuse the flat-index geometry.
    GridMeasure geom(axes, Eigen::VectorXd::Constant(cells, 1.0 / static_cast<double>(cells)));
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cells; ++i) {
        const double v = log_density(geom.cell_center(i));
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw InputError("discretize_density: log-density must not be NaN or +inf");
        logs[i] = v;
        peak = std::max(peak, v);
    }
    if (peak == -std::numeric_limits<double>::infinity())
        throw InputError("discretize_density: density vanishes on the whole box");
    Eigen::VectorXd vals = (logs.array() - peak).exp();
    vals /= vals.sum();
    // One-ulp cleanup as in with_normalized_weights.
    Eigen::Index imax;
    vals.maxCoeff(&imax);
    vals[imax] += 1.0 - vals.sum();
    return GridMeasure(std::move(axes), std::move(vals));
}

DiscreteMeasure quantize_points(const Eigen::MatrixXd& points,
                                double initial_pitch,
                                Eigen::Index max_atoms,
                                double* used_pitch)
{
    if (points.cols() < 1)
        throw PreconditionError("quantize_points: empty cloud");
    if (!(initial_pitch > 0.0))
        throw PreconditionError("quantize_points: pitch must be positive");
    if (max_atoms < 1)
        throw PreconditionError("quantize_points: max_atoms must be >= 1");
    require_finite(points, "quantize_points");

    const Eigen::Index n = points.rows();
    const Eigen::Index N = points.cols();
    double pitch = initial_pitch;
    for (int round = 0; round < 200; ++round) {
        struct Cell {
            double mass = 0.0;
            Eigen::VectorXd sum;
        };
        std::map<std::vector<long long>, Cell> cells;
        std::vector<long long> key(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < N; ++j) {
            for (Eigen::Index d = 0; d < n; ++d)
                key[static_cast<std::size_t>(d)] =
                    static_cast<long long>(std::floor(points(d, j) / pitch));
            auto [it, fresh] = cells.try_emplace(key);
            if (fresh) it->second.sum = Eigen::VectorXd::Zero(n);
            it->second.mass += 1.0;
            it->second.sum += points.col(j);
        }
        if (static_cast<Eigen::Index>(cells.size()) <= max_atoms) {
            // Centroids of distinct cells can collide only on shared faces;
            // merge exact duplicates to keep the measure valid.
            std::map<std::vector<double>, double> merged;
            std::vector<double> c(static_cast<std::size_t>(n));
            for (const auto& [k, cell] : cells) {
                const Eigen::VectorXd centroid = cell.sum / cell.mass;
                for (Eigen::Index d = 0; d < n; ++d)
                    c[static_cast<std::size_t>(d)] = centroid[d];
                merged[c] += cell.mass;
            }
            Eigen::MatrixXd atoms(n, static_cast<Eigen::Index>(merged.size()));
            Eigen::VectorXd w(static_cast<Eigen::Index>(merged.size()));
            Eigen::Index out = 0;
            for (const auto& [c2, mass] : merged) {
                for (Eigen::Index d = 0; d < n; ++d)
                    atoms(d, out) = c2[static_cast<std::size_t>(d)];
                w[out] = mass;
                ++out;
            }
            if (used_pitch) *used_pitch = pitch;
            return DiscreteMeasure::with_normalized_weights(std::move(atoms),
                                                            std::move(w));
        }
        pitch *= 1.5;
    }
    throw NumericalError("quantize_points: pitch escalation failed to converge");
}

} // namespace sloc
