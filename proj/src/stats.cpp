#include "sloc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sloc/errors.hpp"

namespace sloc {

SampleSummary summarize(const std::vector<double>& values)
{
    if (values.size() < 2)
        throw PreconditionError("summarize: need at least two values");
    SampleSummary s;
    s.count = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(s.count);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.variance = ss / static_cast<double>(s.count - 1);
    s.se_mean = std::sqrt(s.variance / static_cast<double>(s.count));
    return s;
}

double unbiased_variance(const std::vector<double>& values)
{
    return summarize(values).variance;
}

BootstrapInterval bootstrap_interval(
    const std::vector<double>& values,
    double (*statistic)(const std::vector<double>&),
    int resamples, double coverage, RngStream& stream)
{
    if (values.empty())
        throw PreconditionError("bootstrap_interval: empty sample");
    if (resamples < 2)
        throw PreconditionError("bootstrap_interval: need at least 2 resamples");
    if (!(coverage > 0.0 && coverage < 1.0))
        throw ConfigError("bootstrap_interval: coverage must be in (0,1)");

    const std::size_t n = values.size();
    std::vector<double> resample(n);
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i)
            resample[i] = values[stream.next_u64() % n];
        stats[static_cast<std::size_t>(r)] = statistic(resample);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = (1.0 - coverage) / 2.0;
    auto order_stat = [&](double q) {
        const double pos = q * static_cast<double>(resamples - 1);
        const std::size_t i0 = static_cast<std::size_t>(std::floor(pos));
        const std::size_t i1 = std::min<std::size_t>(
            i0 + 1, static_cast<std::size_t>(resamples - 1));
        const double frac = pos - static_cast<double>(i0);
        return stats[i0] * (1.0 - frac) + stats[i1] * frac;
    };
    BootstrapInterval ci;
    ci.lo = order_stat(alpha);
    ci.hi = order_stat(1.0 - alpha);
    ci.point = statistic(values);
    ci.resamples = resamples;
    return ci;
}

double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Series expansion of P(a,x), valid and fast for x < a + 1.
double gamma_p_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericalError("gamma_p: series did not converge");
}

// Continued fraction for Q(a,x) (modified Lentz), valid for x >= a + 1.
double gamma_q_cf(double a, double x)
{
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericalError("gamma_q: continued fraction did not converge");
}

} // namespace

double gamma_p(double a, double x)
{
    if (a <= 0.0 || x < 0.0)
        throw PreconditionError("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x)
{
    if (a <= 0.0 || x < 0.0)
        throw PreconditionError("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int k)
{
    if (k < 1) throw PreconditionError("chi_square_sf: need k >= 1");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * static_cast<double>(k), 0.5 * x);
}

double chi_square_gof_pvalue(const std::vector<std::int64_t>& observed,
                             const std::vector<double>& expected_probs)
{
    if (observed.size() != expected_probs.size() || observed.size() < 2)
        throw PreconditionError("chi_square_gof: need matching bins, >= 2");
    std::int64_t total = 0;
    for (std::int64_t o : observed) {
        if (o < 0) throw InputError("chi_square_gof: negative count");
        total += o;
    }
    if (total <= 0) throw InputError("chi_square_gof: empty sample");
    double psum = 0.0;
    for (double p : expected_probs) {
        if (p <= 0.0)
            throw InputError("chi_square_gof: expected probability <= 0");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9)
        throw InputError("chi_square_gof: expected probabilities must sum to 1");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_probs[i] * static_cast<double>(total);
        const double d = static_cast<double>(observed[i]) - e;
        stat += d * d / e;
    }
    return chi_square_sf(stat, static_cast<int>(observed.size()) - 1);
}

double chi_mean(int n)
{
    if (n < 1) throw PreconditionError("chi_mean: need n >= 1");
    const double a = 0.5 * (static_cast<double>(n) + 1.0);
    const double b = 0.5 * static_cast<double>(n);
    return std::sqrt(2.0) * std::exp(std::lgamma(a) - std::lgamma(b));
}

namespace {

struct MaxAbsCtx {
    int n;
};

double maxabs_tail(double t, const void* ctx)
{
    const int n = static_cast<const MaxAbsCtx*>(ctx)->n;
    // P(max_i |g_i| > t) = 1 - (2 Phi(t) - 1)^n
    const double inner = std::erf(t / std::sqrt(2.0));
    return 1.0 - std::pow(inner, static_cast<double>(n));
}

double simpson(double a, double fa, double fm, double b, double fb)
{
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double (*f)(double, const void*), const void* ctx,
                        double a, double fa, double b, double fb,
                        double m, double fm, double whole,
                        double tol, int depth)
{
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm, ctx);
    const double frm = f(rm, ctx);
    const double left = simpson(a, fa, flm, m, fm);
    const double right = simpson(m, fm, frm, b, fb);
    const double delta = left + right - whole;
    if (depth <= 0)
        throw NumericalError("integrate: adaptive depth exhausted");
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, ctx, a, fa, m, fm, lm, flm, left,
                            0.5 * tol, depth - 1)
         + adaptive_simpson(f, ctx, m, fm, b, fb, rm, frm, right,
                            0.5 * tol, depth - 1);
}

} // namespace

double integrate(double (*f)(double, const void*), const void* ctx,
                 double a, double b, double tol)
{
    if (!(b > a)) throw PreconditionError("integrate: need b > a");
    const double m = 0.5 * (a + b);
    const double fa = f(a, ctx);
    const double fb = f(b, ctx);
    const double fm = f(m, ctx);
    const double whole = simpson(a, fa, fm, b, fb);
    return adaptive_simpson(f, ctx, a, fa, b, fb, m, fm, whole, tol, 60);
}

double gaussian_maxabs_mean(int n)
{
    if (n < 1) throw PreconditionError("gaussian_maxabs_mean: need n >= 1");
    MaxAbsCtx ctx{n};
    // The tail integrand is below 1e-18 once t^2/2 > log(n) + 42.
    const double upper =
        std::sqrt(2.0 * (std::log(static_cast<double>(n)) + 45.0));
    return integrate(maxabs_tail, &ctx, 0.0, upper, 1e-12);
}

} // namespace sloc
