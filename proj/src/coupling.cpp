#include "sloc/coupling.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sloc/linalg.hpp"
#include "sloc/stats.hpp"

namespace sloc {

namespace {

constexpr double kQvTol = 1e-8;

double ratio_or_inf(double num, double den)
{
    if (den > 0.0) return num / den;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

void validate_endpoint(const MartingaleEndpoint& endpoint)
{
    const Eigen::Index n = endpoint.M.size();
    if (endpoint.QV.rows() != n || endpoint.QV.cols() != n)
        throw PreconditionError("endpoint: QV dimension mismatch");
    if (!endpoint.M.allFinite() || !endpoint.QV.allFinite())
        throw PreconditionError("endpoint: non-finite entries");
    if ((endpoint.QV - endpoint.QV.transpose()).cwiseAbs().maxCoeff() >
        kQvTol)
        throw PreconditionError("endpoint: QV not symmetric");
    const double lo = min_eigenvalue_sym(endpoint.QV);
    const double hi = opnorm_sym(endpoint.QV);
    if (lo < -kQvTol || hi > 1.0 + kQvTol)
        throw PreconditionError(
            "endpoint: QV spectrum escapes [0, 1] beyond tolerance");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> maurey_extend(
    const MartingaleEndpoint& endpoint, const Eigen::VectorXd& g)
{
    validate_endpoint(endpoint);
    if (g.size() != endpoint.M.size())
        throw InputError("maurey_extend: draw dimension mismatch");
    if (!g.allFinite()) throw InputError("maurey_extend: non-finite draw");
    const Eigen::Index n = endpoint.M.size();
    const Eigen::MatrixXd S =
        sqrt_psd(Eigen::MatrixXd::Identity(n, n) - endpoint.QV);
    const Eigen::VectorXd u = S * g;  // one shared draw keeps Y + Z centered
    return {endpoint.M + u, endpoint.M - u};
}

ConformanceReport gaussian_conformance(const Eigen::MatrixXd& samples)
{
    const Eigen::Index n = samples.rows();
    const Eigen::Index N = samples.cols();
    if (N < 1000)
        throw InputError("gaussian_conformance: need at least 1000 samples");
    if (n < 1) throw InputError("gaussian_conformance: empty vectors");

    ConformanceReport rep;
    rep.n = static_cast<int>(n);
    rep.count = N;

    const Eigen::VectorXd mean = samples.rowwise().mean();
    const Eigen::MatrixXd centered = samples.colwise() - mean;
    const Eigen::MatrixXd cov =
        (centered * centered.transpose()) / static_cast<double>(N - 1);

    rep.mean_linf = mean.cwiseAbs().maxCoeff();
    rep.mean_se =
        std::sqrt(cov.diagonal().maxCoeff() / static_cast<double>(N));
    rep.cov_dev_op =
        opnorm_sym(cov - Eigen::MatrixXd::Identity(n, n));
    rep.cov_se = std::sqrt(2.0 * static_cast<double>(n) /
                           static_cast<double>(N));

    std::vector<double> v1(static_cast<std::size_t>(N)),
        v2(static_cast<std::size_t>(N)), vi(static_cast<std::size_t>(N));
    for (Eigen::Index j = 0; j < N; ++j) {
        v1[static_cast<std::size_t>(j)] = samples.col(j).lpNorm<1>();
        v2[static_cast<std::size_t>(j)] = samples.col(j).norm();
        vi[static_cast<std::size_t>(j)] =
            samples.col(j).lpNorm<Eigen::Infinity>();
    }
    const SampleSummary s1 = summarize(v1);
    const SampleSummary s2 = summarize(v2);
    const SampleSummary si = summarize(vi);
    rep.ref_l1 =
        static_cast<double>(n) * std::sqrt(2.0 / std::numbers::pi);
    rep.ref_l2 = chi_mean(static_cast<int>(n));
    rep.ref_linf = gaussian_maxabs_mean(static_cast<int>(n));
    rep.gap_l1 = s1.mean - rep.ref_l1;
    rep.se_l1 = s1.se_mean;
    rep.gap_l2 = s2.mean - rep.ref_l2;
    rep.se_l2 = s2.se_mean;
    rep.gap_linf = si.mean - rep.ref_linf;
    rep.se_linf = si.se_mean;

    rep.worst_sigma = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        rep.worst_sigma = std::max(
            rep.worst_sigma,
            ratio_or_inf(std::abs(mean[i]),
                         std::sqrt(cov(i, i) / static_cast<double>(N))));
    rep.worst_sigma = std::max(
        rep.worst_sigma, ratio_or_inf(rep.cov_dev_op, rep.cov_se));
    rep.worst_sigma =
        std::max(rep.worst_sigma, ratio_or_inf(std::abs(rep.gap_l1), rep.se_l1));
    rep.worst_sigma =
        std::max(rep.worst_sigma, ratio_or_inf(std::abs(rep.gap_l2), rep.se_l2));
    rep.worst_sigma = std::max(rep.worst_sigma,
                               ratio_or_inf(std::abs(rep.gap_linf), rep.se_linf));
    rep.pass = rep.worst_sigma <= 4.0;
    return rep;
}

ConvexFunctional ConvexFunctional::l1()
{
    ConvexFunctional f;
    f.kind = Kind::L1;
    return f;
}

ConvexFunctional ConvexFunctional::l2()
{
    ConvexFunctional f;
    f.kind = Kind::L2;
    return f;
}

ConvexFunctional ConvexFunctional::linf()
{
    ConvexFunctional f;
    f.kind = Kind::Linf;
    return f;
}

ConvexFunctional ConvexFunctional::max_linear(Eigen::MatrixXd forms)
{
    if (forms.rows() < 1)
        throw ConfigError("max_linear: need at least one form");
    if (!forms.allFinite())
        throw ConfigError("max_linear: non-finite coefficients");
    ConvexFunctional f;
    f.kind = Kind::MaxLinear;
    f.forms = std::move(forms);
    return f;
}

double ConvexFunctional::operator()(const Eigen::VectorXd& x) const
{
    switch (kind) {
        case Kind::L1:
            return x.lpNorm<1>();
        case Kind::L2:
            return x.norm();
        case Kind::Linf:
            return x.lpNorm<Eigen::Infinity>();
        case Kind::MaxLinear:
            if (forms.cols() != x.size())
                throw InputError("max_linear: dimension mismatch");
            return (forms * x).maxCoeff();
    }
    throw ConfigError("convex functional: unknown kind");
}

std::string ConvexFunctional::name() const
{
    switch (kind) {
        case Kind::L1:
            return "l1";
        case Kind::L2:
            return "l2";
        case Kind::Linf:
            return "linf";
        case Kind::MaxLinear:
            return "max_linear";
    }
    return "unknown";
}

DominanceReport convex_dominance_check(
    const std::vector<MartingaleEndpoint>& endpoints,
    const ConvexFunctional& phi, RngStream& stream, long gaussian_samples)
{
    if (endpoints.size() < 1000)
        throw PreconditionError(
            "convex_dominance_check: need at least 1000 endpoints");
    const Eigen::Index n = endpoints.front().M.size();
    std::vector<double> vals;
    vals.reserve(endpoints.size());
    for (const auto& e : endpoints) {
        validate_endpoint(e);
        if (e.M.size() != n)
            throw InputError("convex_dominance_check: mixed dimensions");
        vals.push_back(phi(e.M));
    }
    const SampleSummary se = summarize(vals);

    DominanceReport rep;
    rep.count = static_cast<long>(endpoints.size());
    rep.mean_endpoint = se.mean;
    rep.se_endpoint = se.se_mean;

    switch (phi.kind) {
        case ConvexFunctional::Kind::L1:
            rep.mean_gaussian =
                static_cast<double>(n) * std::sqrt(2.0 / std::numbers::pi);
            break;
        case ConvexFunctional::Kind::L2:
            rep.mean_gaussian = chi_mean(static_cast<int>(n));
            break;
        case ConvexFunctional::Kind::Linf:
            rep.mean_gaussian = gaussian_maxabs_mean(static_cast<int>(n));
            break;
        case ConvexFunctional::Kind::MaxLinear: {
            if (gaussian_samples < 1000)
                throw PreconditionError(
                    "convex_dominance_check: too few reference samples");
            std::vector<double> g(static_cast<std::size_t>(gaussian_samples));
            for (long i = 0; i < gaussian_samples; ++i)
                g[static_cast<std::size_t>(i)] =
                    phi(stream.gaussian_vector(n));
            const SampleSummary sg = summarize(g);
            rep.mean_gaussian = sg.mean;
            rep.se_gaussian = sg.se_mean;
            break;
        }
    }
    rep.gap = rep.mean_endpoint - rep.mean_gaussian;
    rep.gap_se = std::sqrt(rep.se_endpoint * rep.se_endpoint +
                           rep.se_gaussian * rep.se_gaussian);
    return rep;
}

PsdOrderReport brascamp_lieb_check(const ConvexRegion& region, long count,
                                   RngStream& stream)
{
    if (count < 1000)
        throw PreconditionError("brascamp_lieb_check: need >= 1000 samples");
    const DistributionFamily family =
        DistributionFamily::truncated_gaussian(region);
    const Eigen::MatrixXd X = family.sample(count, stream);
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd mean = X.rowwise().mean();
    const Eigen::MatrixXd centered = X.colwise() - mean;
    const Eigen::MatrixXd cov =
        (centered * centered.transpose()) / static_cast<double>(count - 1);

    PsdOrderReport rep;
    rep.n = static_cast<int>(n);
    rep.count = count;
    rep.coordinate_variance = cov.diagonal();
    rep.margin_min_eig =
        min_eigenvalue_sym(Eigen::MatrixXd::Identity(n, n) - cov);
    rep.se_proxy = std::sqrt(2.0 * static_cast<double>(n) /
                             static_cast<double>(count));
    return rep;
}

GapReport harge_check(const ConvexRegion& region, const ConvexFunctional& phi,
                      long count, RngStream& stream)
{
    if (count < 1000)
        throw PreconditionError("harge_check: need >= 1000 samples");
    if (!region.symmetric())
        throw PreconditionError(
            "harge_check: region must be symmetric so the truncated vector "
            "is centered");
    const DistributionFamily family =
        DistributionFamily::truncated_gaussian(region);
    const Eigen::Index n = region.dimension();

    std::vector<double> vx(static_cast<std::size_t>(count)),
        vg(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i)
        vx[static_cast<std::size_t>(i)] = phi(family.sample_one(stream));
    for (long i = 0; i < count; ++i)
        vg[static_cast<std::size_t>(i)] = phi(stream.gaussian_vector(n));
    const SampleSummary sx = summarize(vx);
    const SampleSummary sg = summarize(vg);

    GapReport rep;
    rep.count = count;
    rep.lhs = sx.mean;
    rep.se_lhs = sx.se_mean;
    rep.rhs = sg.mean;
    rep.se_rhs = sg.se_mean;
    rep.gap = sx.mean - sg.mean;
    rep.gap_se =
        std::sqrt(sx.se_mean * sx.se_mean + sg.se_mean * sg.se_mean);
    return rep;
}

}  // namespace sloc
