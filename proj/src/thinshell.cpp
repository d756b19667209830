#include "sloc/thinshell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sloc/geometry.hpp"
#include "sloc/parallel.hpp"

namespace sloc {

namespace {

constexpr long kBlock = 8192;

std::size_t block_count(long count)
{
    return static_cast<std::size_t>((count + kBlock - 1) / kBlock);
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
// largest-diagonal basis vector; convergence is judged on the eigenvalue.
struct PowerResult {
    double lambda = 0.0;
    Eigen::VectorXd v;
    int iterations = 0;
};

PowerResult power_top(const Eigen::MatrixXd& M)
{
    const Eigen::Index n = M.rows();
    PowerResult out;
    Eigen::Index start = 0;
    M.diagonal().maxCoeff(&start);
    out.v = Eigen::VectorXd::Unit(n, start);
    double lambda = out.v.dot(M * out.v);
    for (int it = 1; it <= 10000; ++it) {
        out.iterations = it;
        Eigen::VectorXd w = M * out.v;
        const double norm = w.norm();
        if (norm <= 1e-300) {
            out.lambda = 0.0;
            return out;  // zero matrix: direction stays the unit start
        }
        out.v = w / norm;
        const double next = out.v.dot(M * out.v);
        if (std::abs(next - lambda) <= 1e-12 * std::max(1.0, next)) {
            out.lambda = next;
            return out;
        }
        lambda = next;
    }
    throw NumericalError("estimate_tau: power iteration did not converge");
}

// The tensor is fully symmetric, so only entries with i <= j <= k are
// accumulated; this unfolds the compact form into the full n^3 layout
// T[(i*n + j)*n + k].
void unfold_tensor(const Eigen::VectorXd& compact, int n,
                   Eigen::VectorXd& full)
{
    full.resize(static_cast<Eigen::Index>(n) * n * n);
    Eigen::Index idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double v = compact[idx++];
                full[(i * n + j) * static_cast<Eigen::Index>(n) + k] = v;
                full[(i * n + k) * static_cast<Eigen::Index>(n) + j] = v;
                full[(j * n + i) * static_cast<Eigen::Index>(n) + k] = v;
                full[(j * n + k) * static_cast<Eigen::Index>(n) + i] = v;
                full[(k * n + i) * static_cast<Eigen::Index>(n) + j] = v;
                full[(k * n + j) * static_cast<Eigen::Index>(n) + i] = v;
            }
}

// M[k][l] = sum_ij T[i][j][k] T[i][j][l]: view the tensor as an n^2 x n
// matrix R with row (i, j) and column k, then M = R'R.
Eigen::MatrixXd tensor_gram(const Eigen::VectorXd& tensor, int n)
{
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                      Eigen::RowMajor>;
    Eigen::Map<const RowMajor> R(tensor.data(),
                                 static_cast<Eigen::Index>(n) * n, n);
    return R.transpose() * R;
}

}  // namespace

SigmaEstimate estimate_sigma(const DistributionFamily& family, long count,
                             std::uint64_t seed, std::uint64_t stream_base,
                             unsigned threads, int resamples)
{
    if (!family.isotropic())
        throw PreconditionError("estimate_sigma: family must be isotropic");
    if (count < 1000)
        throw PreconditionError("estimate_sigma: count must be >= 1e3");
    if (resamples < 10)
        throw ConfigError("estimate_sigma: resamples must be >= 10");

    const int n = family.dimension();
    const std::size_t nblocks = block_count(count);
    std::vector<double> radii(static_cast<std::size_t>(count), 0.0);
    parallel_blocks(nblocks, threads, [&](std::size_t bi) {
        RngStream stream(seed, stream_base + bi);
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        for (long i = lo; i < hi; ++i)
            radii[static_cast<std::size_t>(i)] =
                family.sample_one(stream).norm();
    });

    RngStream boot(seed, stream_base + nblocks);
    const BootstrapInterval ci =
        bootstrap_interval(radii, &unbiased_variance, resamples, 0.95, boot);

    SigmaEstimate out;
    out.family = family.name();
    out.n = n;
    out.count = count;
    out.variance = ci.point;
    out.ci_low = ci.lo;
    out.ci_high = ci.hi;
    out.seed = seed;
    return out;
}

TauEstimate estimate_tau(const DistributionFamily& family, long count,
                         std::uint64_t seed, std::uint64_t stream_base,
                         unsigned threads, const Eigen::MatrixXd* rotation)
{
    if (!family.isotropic())
        throw PreconditionError("estimate_tau: family must be isotropic");
    if (count < 10000)
        throw PreconditionError("estimate_tau: count must be >= 1e4");
    const int n = family.dimension();
    if (rotation != nullptr) {
        if (rotation->rows() != n || rotation->cols() != n)
            throw InputError("estimate_tau: rotation must be n x n");
        if ((rotation->transpose() * (*rotation) -
             Eigen::MatrixXd::Identity(n, n))
                .cwiseAbs()
                .maxCoeff() > 1e-8)
            throw InputError("estimate_tau: rotation must be orthogonal");
    }

    const std::size_t nblocks = block_count(count);
    const Eigen::Index csize =
        static_cast<Eigen::Index>(n) * (n + 1) * (n + 2) / 6;
    std::vector<Eigen::VectorXd> parts(nblocks, Eigen::VectorXd());
    parallel_blocks(nblocks, threads, [&](std::size_t bi) {
        RngStream stream(seed, stream_base + bi);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(csize);
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        for (long s = lo; s < hi; ++s) {
            Eigen::VectorXd x = family.sample_one(stream);
            if (rotation != nullptr) x = (*rotation) * x;
            double* slot = acc.data();
            for (int i = 0; i < n; ++i) {
                const double xi = x[i];
                for (int j = i; j < n; ++j) {
                    const double xij = xi * x[j];
                    for (int k = j; k < n; ++k) *slot++ += xij * x[k];
                }
            }
        }
        parts[bi] = std::move(acc);
    });

    // Reduce in block order; per-block top eigenvalues (a dispersion proxy
    // only) use the direct solver because a single block's spectrum can be
    // too degenerate for power iteration.
    Eigen::VectorXd compact = Eigen::VectorXd::Zero(csize);
    Eigen::VectorXd full;
    std::vector<double> block_taus;
    block_taus.reserve(nblocks);
    for (std::size_t bi = 0; bi < nblocks; ++bi) {
        compact += parts[bi];
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        if (hi - lo >= 100) {
            unfold_tensor(parts[bi] / static_cast<double>(hi - lo), n,
                          full);
            const Eigen::MatrixXd Mb = tensor_gram(full, n);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                Mb, Eigen::EigenvaluesOnly);
            block_taus.push_back(
                std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
        }
    }
    compact /= static_cast<double>(count);
    unfold_tensor(compact, n, full);

    const PowerResult top = power_top(tensor_gram(full, n));
    TauEstimate out;
    out.family = family.name();
    out.n = n;
    out.count = count;
    out.tau_squared = top.lambda;
    out.tau = std::sqrt(std::max(0.0, top.lambda));
    out.direction = top.v;
    out.power_iterations = top.iterations;
    out.seed = seed;
    if (block_taus.size() >= 2) {
        const SampleSummary s = summarize(block_taus);
        out.se_proxy = s.se_mean;
    }
    return out;
}

double tau_bound_from_sigma(const std::vector<double>& sigma_values,
                            double constant)
{
    if (sigma_values.empty())
        throw InputError("tau_bound_from_sigma: empty sigma list");
    if (!(constant > 0.0))
        throw InputError("tau_bound_from_sigma: constant must be positive");
    double s = 0.0;
    for (std::size_t k = 0; k < sigma_values.size(); ++k) {
        const double v = sigma_values[k];
        if (!(v >= 0.0))
            throw PreconditionError(
                "tau_bound_from_sigma: sigma values must be >= 0");
        s += v * v / static_cast<double>(k + 1);
    }
    return constant * std::sqrt(s);
}

RestrictedEvent RestrictedEvent::radius_above(double r)
{
    RestrictedEvent e;
    e.kind = Kind::RadiusAbove;
    e.r = r;
    return e;
}

RestrictedEvent RestrictedEvent::first_coord_above(double r)
{
    RestrictedEvent e;
    e.kind = Kind::FirstCoordAbove;
    e.r = r;
    return e;
}

bool RestrictedEvent::contains(const Eigen::VectorXd& x) const
{
    switch (kind) {
        case Kind::RadiusAbove:
            return x.norm() > r;
        case Kind::FirstCoordAbove:
            return x.size() > 0 && x[0] > r;
    }
    return false;
}

std::string RestrictedEvent::name() const
{
    return kind == Kind::RadiusAbove ? "radius_above" : "first_coord_above";
}

RestrictedNormReport restricted_norm_expectation(
    const DistributionFamily& family, const NormSpec& norm,
    const RestrictedEvent& event, long count, std::uint64_t seed,
    std::uint64_t stream_base, unsigned threads)
{
    if (count < 10000)
        throw PreconditionError(
            "restricted_norm_expectation: count must be >= 1e4");
    if (family.dimension() != norm.dimension())
        throw InputError("restricted_norm_expectation: dimension mismatch");

    const std::size_t nblocks = block_count(count);
    std::vector<double> full(nblocks, 0.0), restr(nblocks, 0.0);
    std::vector<long> hits(nblocks, 0);
    parallel_blocks(nblocks, threads, [&](std::size_t bi) {
        RngStream stream(seed, stream_base + bi);
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        for (long i = lo; i < hi; ++i) {
            const Eigen::VectorXd x = family.sample_one(stream);
            const double v = gauge_eval(norm, x);
            full[bi] += v;
            if (event.contains(x)) {
                restr[bi] += v;
                ++hits[bi];
            }
        }
    });
    double full_sum = 0.0, restr_sum = 0.0;
    long event_count = 0;
    for (std::size_t bi = 0; bi < nblocks; ++bi) {
        full_sum += full[bi];
        restr_sum += restr[bi];
        event_count += hits[bi];
    }

    RestrictedNormReport rep;
    rep.count = count;
    rep.event_count = event_count;
    const double N = static_cast<double>(count);
    rep.event_probability = static_cast<double>(event_count) / N;
    rep.full_mean = full_sum / N;
    rep.restricted_mean = restr_sum / N;
    if (event_count == 0) {
        // An a-priori empty event (threshold at +infinity) has exact
        // ratio zero; an unexpectedly rare one is a capability failure.
        if (event.r == std::numeric_limits<double>::infinity()) {
            rep.ratio = 0.0;
            return rep;
        }
        throw CapabilityError(
            "restricted_norm_expectation: event produced no samples");
    }
    if (event_count < 10)
        throw CapabilityError(
            "restricted_norm_expectation: event too rare to estimate");
    if (!(rep.full_mean > 0.0))
        throw NumericalError(
            "restricted_norm_expectation: vanishing norm mean");
    rep.ratio = (restr_sum / full_sum) /
                std::sqrt(rep.event_probability);
    return rep;
}

}  // namespace sloc
