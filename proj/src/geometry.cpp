#include "sloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sloc/parallel.hpp"
#include "sloc/stats.hpp"

namespace sloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// --- dense primal simplex -------------------------------------------------
// min c'z  s.t.  A z = b, z >= 0, with Bland's rule throughout so the
// pivot sequence is deterministic and cycling-free.  Sizes here are tiny
// (vertex gauges cap at 128 columns), so a full tableau is the simplest
// trustworthy choice.

struct Tableau {
    Eigen::MatrixXd A;   // n x m
    Eigen::VectorXd b;   // n, kept >= 0
    Eigen::VectorXd rc;  // reduced costs, m
    double value = 0.0;
    std::vector<int> basis;  // size n
};

constexpr double kPivTol = 1e-11;
constexpr double kCostTol = 1e-9;

void pivot(Tableau& t, int row, int col)
{
    const double piv = t.A(row, col);
    t.A.row(row) /= piv;
    t.b[row] /= piv;
    for (int r = 0; r < t.A.rows(); ++r) {
        if (r == row) continue;
        const double f = t.A(r, col);
        if (f == 0.0) continue;
        t.A.row(r) -= f * t.A.row(row);
        t.b[r] -= f * t.b[row];
    }
    const double fc = t.rc[col];
    if (fc != 0.0) {
        t.rc -= fc * t.A.row(row).transpose();
        t.value -= fc * t.b[row];
    }
    t.basis[static_cast<std::size_t>(row)] = col;
}

// Optimize over columns [0, limit).  Throws on unbounded descent or an
// implausible iteration count.
void simplex_iterate(Tableau& t, int limit)
{
    const int n = static_cast<int>(t.A.rows());
    for (int iter = 0; iter < 20000; ++iter) {
        int enter = -1;
        for (int j = 0; j < limit; ++j)
            if (t.rc[j] < -kCostTol) {
                enter = j;
                break;  // Bland: smallest eligible index
            }
        if (enter < 0) return;
        int leave = -1;
        double best = kInf;
        for (int r = 0; r < n; ++r) {
            if (t.A(r, enter) <= kPivTol) continue;
            const double ratio = t.b[r] / t.A(r, enter);
            if (ratio < best - 1e-12 ||
                (ratio < best + 1e-12 &&
                 (leave < 0 ||
                  t.basis[static_cast<std::size_t>(r)] <
                      t.basis[static_cast<std::size_t>(leave)]))) {
                best = ratio;
                leave = r;
            }
        }
        if (leave < 0)
            throw NumericalError("simplex: unbounded descent direction");
        pivot(t, leave, enter);
    }
    throw NumericalError("simplex: iteration limit reached");
}

// Feasible-basis bootstrap with artificial variables, then the real cost.
double simplex_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c)
{
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(A.cols());

    Tableau t;
    t.A.resize(n, m + n);
    t.b = b;
    for (int r = 0; r < n; ++r)
        if (t.b[r] < 0.0) {
            t.b[r] = -t.b[r];
            t.A.block(r, 0, 1, m) = -A.row(r);
        } else {
            t.A.block(r, 0, 1, m) = A.row(r);
        }
    t.A.block(0, m, n, n) = Eigen::MatrixXd::Identity(n, n);
    t.basis.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) t.basis[static_cast<std::size_t>(r)] = m + r;

    // Phase 1: drive the artificial mass to zero.
    t.rc = Eigen::VectorXd::Zero(m + n);
    t.value = 0.0;
    for (int r = 0; r < n; ++r) {
        t.rc.head(m) -= t.A.block(r, 0, 1, m).transpose();
        t.value -= t.b[r];
    }
    simplex_iterate(t, m + n);
    if (-t.value > 1e-7 * (1.0 + b.cwiseAbs().sum()))
        throw InputError("vertex gauge: point escapes the vertex cone");

    // Remove artificials from the basis; a row that cannot be pivoted onto
    // a real column is redundant and dropped.
    std::vector<int> keep;
    for (int r = 0; r < static_cast<int>(t.basis.size()); ++r) {
        if (t.basis[static_cast<std::size_t>(r)] < m) {
            keep.push_back(r);
            continue;
        }
        int col = -1;
        for (int j = 0; j < m; ++j)
            if (std::abs(t.A(r, j)) > kPivTol) {
                col = j;
                break;
            }
        if (col >= 0) {
            pivot(t, r, col);
            keep.push_back(r);
        }
    }
    if (static_cast<int>(keep.size()) < n) {
        Eigen::MatrixXd A2(static_cast<int>(keep.size()), m + n);
        Eigen::VectorXd b2(static_cast<int>(keep.size()));
        std::vector<int> basis2;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            A2.row(static_cast<int>(i)) = t.A.row(keep[i]);
            b2[static_cast<int>(i)] = t.b[keep[i]];
            basis2.push_back(t.basis[static_cast<std::size_t>(keep[i])]);
        }
        t.A = std::move(A2);
        t.b = std::move(b2);
        t.basis = std::move(basis2);
    }

    // Phase 2 over the real columns only.
    t.rc = Eigen::VectorXd::Zero(m + n);
    t.rc.head(m) = c;
    t.value = 0.0;
    for (int r = 0; r < static_cast<int>(t.basis.size()); ++r) {
        const int j = t.basis[static_cast<std::size_t>(r)];
        const double cj = j < m ? c[j] : 0.0;
        if (cj == 0.0) continue;
        t.rc -= cj * t.A.row(r).transpose();
        t.value -= cj * t.b[r];
    }
    simplex_iterate(t, m);
    return -t.value;
}

double lp_norm(const Eigen::VectorXd& y, double p)
{
    if (p == kInf) return y.lpNorm<Eigen::Infinity>();
    if (p == 1.0) return y.lpNorm<1>();
    if (p == 2.0) return y.norm();
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        s += std::pow(std::abs(y[i]), p);
    return std::pow(s, 1.0 / p);
}

// Shared deterministic Monte Carlo: fixed blocks on disjoint streams,
// reduced in block order, so the result is independent of thread count.
MonteCarloValue mc_expectation(
    long count, std::uint64_t seed, std::uint64_t stream_base,
    unsigned threads, const std::function<double(RngStream&)>& draw)
{
    constexpr long kBlock = 8192;
    const std::size_t nblocks =
        static_cast<std::size_t>((count + kBlock - 1) / kBlock);
    std::vector<double> sums(nblocks, 0.0), sqs(nblocks, 0.0);
    parallel_blocks(nblocks, threads, [&](std::size_t bi) {
        RngStream stream(seed, stream_base + bi);
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        double s = 0.0, q = 0.0;
        for (long i = lo; i < hi; ++i) {
            const double v = draw(stream);
            s += v;
            q += v * v;
        }
        sums[bi] = s;
        sqs[bi] = q;
    });
    double s = 0.0, q = 0.0;
    for (std::size_t bi = 0; bi < nblocks; ++bi) {
        s += sums[bi];
        q += sqs[bi];
    }
    MonteCarloValue out;
    out.count = count;
    out.value = s / static_cast<double>(count);
    const double var =
        std::max(0.0, (q - static_cast<double>(count) * out.value *
                               out.value) /
                          static_cast<double>(count - 1));
    out.se = std::sqrt(var / static_cast<double>(count));
    return out;
}

}  // namespace

NormSpec NormSpec::lp(double p, int n)
{
    if (n < 1) throw ConfigError("norm: dimension must be >= 1");
    if (!(p >= 1.0)) throw ConfigError("norm: p must be >= 1");
    NormSpec s(Kind::Lp, n);
    s.p_ = p;
    return s;
}

NormSpec NormSpec::weighted_lp(double p, Eigen::VectorXd weights)
{
    if (weights.size() < 1) throw ConfigError("norm: empty weights");
    if (!(p >= 1.0)) throw ConfigError("norm: p must be >= 1");
    if (!weights.allFinite() || (weights.array() <= 0.0).any())
        throw ConfigError("norm: weights must be positive finite");
    NormSpec s(Kind::WeightedLp, static_cast<int>(weights.size()));
    s.p_ = p;
    s.weights_ = std::move(weights);
    return s;
}

NormSpec NormSpec::facets(Eigen::MatrixXd rows)
{
    if (rows.rows() < 1 || rows.cols() < 1)
        throw ConfigError("norm: empty facet list");
    if (rows.rows() > 128)
        throw ConfigError("norm: facet list capped at 128");
    if (!rows.allFinite()) throw ConfigError("norm: non-finite facets");
    NormSpec s(Kind::PolytopeFacets, static_cast<int>(rows.cols()));
    s.matrix_ = std::move(rows);
    return s;
}

NormSpec NormSpec::vertices(Eigen::MatrixXd columns)
{
    if (columns.rows() < 1 || columns.cols() < 1)
        throw ConfigError("norm: empty vertex list");
    if (columns.cols() > 128)
        throw ConfigError("norm: vertex list capped at 128");
    if (!columns.allFinite()) throw ConfigError("norm: non-finite vertices");
    NormSpec s(Kind::PolytopeVertices, static_cast<int>(columns.rows()));
    s.matrix_ = std::move(columns);
    return s;
}

NormSpec NormSpec::linear_map(Eigen::MatrixXd map)
{
    if (map.rows() < 1 || map.cols() < 1)
        throw ConfigError("norm: empty matrix");
    if (!map.allFinite()) throw ConfigError("norm: non-finite matrix");
    NormSpec s(Kind::LinearMapL2, static_cast<int>(map.cols()));
    s.matrix_ = std::move(map);
    return s;
}

std::string NormSpec::name() const
{
    switch (kind_) {
        case Kind::Lp:
            if (p_ == 1.0) return "l1";
            if (p_ == 2.0) return "l2";
            if (p_ == kInf) return "linf";
            return "lp";
        case Kind::WeightedLp:
            return "weighted_lp";
        case Kind::PolytopeFacets:
            return "facets";
        case Kind::PolytopeVertices:
            return "vertices";
        case Kind::LinearMapL2:
            return "linear_map";
    }
    return "unknown";
}

double gauge_eval(const NormSpec& spec, const Eigen::VectorXd& x)
{
    if (x.size() != spec.dimension())
        throw InputError("gauge: dimension mismatch");
    if (!x.allFinite()) throw InputError("gauge: non-finite point");
    switch (spec.kind()) {
        case NormSpec::Kind::Lp:
            return lp_norm(x, spec.p());
        case NormSpec::Kind::WeightedLp:
            return lp_norm(spec.weights().cwiseProduct(x), spec.p());
        case NormSpec::Kind::PolytopeFacets:
            return std::max(0.0, (spec.matrix() * x).maxCoeff());
        case NormSpec::Kind::PolytopeVertices: {
            if (x.isZero(0.0)) return 0.0;
            const Eigen::Index m = spec.matrix().cols();
            return simplex_min(spec.matrix(), x,
                               Eigen::VectorXd::Ones(m));
        }
        case NormSpec::Kind::LinearMapL2:
            return (spec.matrix() * x).norm();
    }
    throw ConfigError("gauge: unknown kind");
}

NormSpec polar_gauge(const NormSpec& spec)
{
    switch (spec.kind()) {
        case NormSpec::Kind::Lp: {
            const double p = spec.p();
            const double q = p == 1.0 ? kInf
                             : p == kInf ? 1.0
                                         : p / (p - 1.0);
            return NormSpec::lp(q, spec.dimension());
        }
        case NormSpec::Kind::WeightedLp: {
            const double p = spec.p();
            const double q = p == 1.0 ? kInf
                             : p == kInf ? 1.0
                                         : p / (p - 1.0);
            return NormSpec::weighted_lp(q, spec.weights().cwiseInverse());
        }
        case NormSpec::Kind::PolytopeFacets:
            return NormSpec::vertices(spec.matrix().transpose());
        case NormSpec::Kind::PolytopeVertices:
            return NormSpec::facets(spec.matrix().transpose());
        case NormSpec::Kind::LinearMapL2:
            throw CapabilityError(
                "polar: no computable dual for a generic linear map");
    }
    throw ConfigError("polar: unknown kind");
}

MonteCarloValue gaussian_norm_expectation(const NormSpec& spec, long count,
                                          std::uint64_t seed,
                                          std::uint64_t stream_base,
                                          unsigned threads)
{
    const int n = spec.dimension();
    const double root_2_pi = std::sqrt(2.0 / std::numbers::pi);
    MonteCarloValue out;
    if (spec.kind() == NormSpec::Kind::Lp) {
        if (spec.p() == 1.0) {
            out.value = static_cast<double>(n) * root_2_pi;
            return out;
        }
        if (spec.p() == 2.0) {
            out.value = chi_mean(n);
            return out;
        }
    }
    if (spec.kind() == NormSpec::Kind::WeightedLp) {
        if (spec.p() == 1.0) {
            out.value = spec.weights().sum() * root_2_pi;
            return out;
        }
        if (spec.p() == 2.0 &&
            spec.weights().isConstant(spec.weights()[0])) {
            out.value = spec.weights()[0] * chi_mean(n);
            return out;
        }
    }
    if (count < 10000)
        throw PreconditionError(
            "gaussian_norm_expectation: Monte Carlo needs count >= 1e4");
    return mc_expectation(count, seed, stream_base, threads,
                          [&spec, n](RngStream& stream) {
                              return gauge_eval(spec,
                                                stream.gaussian_vector(n));
                          });
}

MonteCarloValue mean_width(const NormSpec& spec, long count,
                           std::uint64_t seed, std::uint64_t stream_base,
                           unsigned threads)
{
    if (count < 10000)
        throw PreconditionError("mean_width: needs count >= 1e4");
    const int n = spec.dimension();
    return mc_expectation(count, seed, stream_base, threads,
                          [&spec, n](RngStream& stream) {
                              const Eigen::VectorXd g =
                                  stream.gaussian_vector(n);
                              const double r = g.norm();
                              if (r == 0.0) return 0.0;
                              return gauge_eval(spec, g) / r;
                          });
}

BodySpec make_isotropic_cube_body(int n)
{
    if (n < 1) throw ConfigError("body: dimension must be >= 1");
    const double side = 2.0 * std::sqrt(3.0);
    const Eigen::VectorXd w =
        Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(3.0));
    BodySpec body{
        "cube",
        n,
        NormSpec::weighted_lp(kInf, w),
        NormSpec::weighted_lp(1.0, w.cwiseInverse()),
        std::pow(side, n),
        DistributionFamily::uniform_cube_isotropic(n)};
    return body;
}

BodySpec make_isotropic_ball_body(int n)
{
    if (n < 1) throw ConfigError("body: dimension must be >= 1");
    const double radius = std::sqrt(static_cast<double>(n) + 2.0);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / radius);
    const double log_volume =
        0.5 * n * std::log(std::numbers::pi) -
        std::lgamma(0.5 * n + 1.0) + n * std::log(radius);
    BodySpec body{"ball",
                  n,
                  NormSpec::weighted_lp(2.0, w),
                  NormSpec::weighted_lp(2.0, w.cwiseInverse()),
                  std::exp(log_volume),
                  DistributionFamily::uniform_ball_isotropic(n)};
    return body;
}

double isotropic_constant(const BodySpec& body)
{
    if (!(body.volume > 0.0))
        throw CapabilityError("isotropic_constant: volume unknown");
    if (body.name == "cube")
        return 1.0 / (2.0 * std::sqrt(3.0));
    if (body.name == "ball" && body.n == 2)
        return 1.0 / std::sqrt(4.0 * std::numbers::pi);
    return std::pow(body.volume, -1.0 / static_cast<double>(body.n));
}

NormComparisonReport compare_norms_experiment(
    const DistributionFamily& family, const NormSpec& spec, long count,
    std::uint64_t seed, std::uint64_t stream_base, double big_constant,
    double tau_hat, unsigned threads)
{
    if (!family.isotropic())
        throw PreconditionError(
            "compare_norms_experiment: family must be isotropic");
    if (family.dimension() != spec.dimension())
        throw InputError("compare_norms_experiment: dimension mismatch");
    if (count < 1000)
        throw PreconditionError("compare_norms_experiment: count >= 1000");
    const int n = spec.dimension();

    const MonteCarloValue mx = mc_expectation(
        count, seed, stream_base, threads, [&](RngStream& stream) {
            return gauge_eval(spec, family.sample_one(stream));
        });
    const MonteCarloValue mg = gaussian_norm_expectation(
        spec, count, seed, stream_base + 0x80000000ull, threads);
    if (!(mg.value > 0.0))
        throw NumericalError(
            "compare_norms_experiment: vanishing Gaussian norm mean");

    NormComparisonReport rep;
    rep.family = family.name();
    rep.norm = spec.name();
    rep.n = n;
    rep.count = count;
    rep.mean_family = mx.value;
    rep.se_family = mx.se;
    rep.mean_gaussian = mg.value;
    rep.se_gaussian = mg.se;
    rep.ratio = mx.value / mg.value;
    const double rel2 = mx.se / mx.value * (mx.value > 0.0 ? 1.0 : 0.0);
    const double relg = mg.se / mg.value;
    rep.ratio_se =
        rep.ratio > 0.0
            ? rep.ratio * std::sqrt(rel2 * rel2 + relg * relg)
            : mx.se / mg.value;
    rep.tau_hat = tau_hat;
    rep.bound = n > 1 ? big_constant *
                            std::sqrt(std::log(static_cast<double>(n))) *
                            tau_hat
                      : 0.0;
    return rep;
}

CorollaryReport corollary_checks(const BodySpec& body, long count,
                                 std::uint64_t seed,
                                 std::uint64_t stream_base,
                                 double small_constant, double tau_hat,
                                 unsigned threads)
{
    if (count < 1000)
        throw PreconditionError("corollary_checks: count >= 1000");
    const int n = body.n;

    // One pass over uniform samples feeds both gauge statistics.
    constexpr long kBlock = 8192;
    const std::size_t nblocks =
        static_cast<std::size_t>((count + kBlock - 1) / kBlock);
    std::vector<double> sg(nblocks, 0.0), qg(nblocks, 0.0), sp(nblocks, 0.0),
        qp(nblocks, 0.0);
    parallel_blocks(nblocks, threads, [&](std::size_t bi) {
        RngStream stream(seed, stream_base + bi);
        const long lo = static_cast<long>(bi) * kBlock;
        const long hi = std::min(count, lo + kBlock);
        for (long i = lo; i < hi; ++i) {
            const Eigen::VectorXd x = body.sampler.sample_one(stream);
            const double a = gauge_eval(body.gauge, x);
            const double b = gauge_eval(body.polar, x);
            sg[bi] += a;
            qg[bi] += a * a;
            sp[bi] += b;
            qp[bi] += b * b;
        }
    });
    double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
    for (std::size_t bi = 0; bi < nblocks; ++bi) {
        s1 += sg[bi];
        q1 += qg[bi];
        s2 += sp[bi];
        q2 += qp[bi];
    }
    const double N = static_cast<double>(count);

    CorollaryReport rep;
    rep.body = body.name;
    rep.n = n;
    rep.count = count;
    rep.mean_gauge = s1 / N;
    rep.se_gauge = std::sqrt(
        std::max(0.0, (q1 - N * rep.mean_gauge * rep.mean_gauge) / (N - 1)) /
        N);
    rep.mean_polar = s2 / N;
    rep.se_polar = std::sqrt(
        std::max(0.0, (q2 - N * rep.mean_polar * rep.mean_polar) / (N - 1)) /
        N);

    const MonteCarloValue wM =
        mean_width(body.gauge, std::max(count, 10000L), seed,
                   stream_base + 0x40000000ull, threads);
    const MonteCarloValue wS =
        mean_width(body.polar, std::max(count, 10000L), seed,
                   stream_base + 0x60000000ull, threads);
    rep.width_M = wM.value;
    rep.width_M_se = wM.se;
    rep.width_Mstar = wS.value;
    rep.width_Mstar_se = wS.se;

    rep.small_constant = small_constant;
    rep.tau_hat = tau_hat;
    if (n > 1 && tau_hat > 0.0) {
        const double ln = std::log(static_cast<double>(n));
        rep.lower_i =
            small_constant / (std::sqrt(static_cast<double>(n) * ln) *
                              tau_hat);
        rep.lower_ii = small_constant *
                       std::sqrt(static_cast<double>(n)) /
                       (std::sqrt(ln) * tau_hat);
    }
    return rep;
}

}  // namespace sloc
