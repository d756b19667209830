#include "sloc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "sloc/linalg.hpp"
#include "sloc/parallel.hpp"
#include "sloc/stats.hpp"
#include "sloc/transport.hpp"

namespace sloc {

namespace {

void validate_control(const StepControl& ctl)
{
    if (!(ctl.dt > 0.0) || ctl.dt > 0.1)
        throw ConfigError("step control: dt must lie in (0, 0.1]");
    if (!(ctl.collapse_eps > 0.0) || !(ctl.collapse_eps < 1.0))
        throw ConfigError("step control: collapse_eps must lie in (0, 1)");
    if (!(ctl.trace_floor_ratio >= 0.0))
        throw ConfigError("step control: trace_floor_ratio must be >= 0");
    if (!(ctl.eig_floor >= 0.0))
        throw ConfigError("step control: eig_floor must be >= 0");
    if (!(ctl.halve_abs_log > 0.0))
        throw ConfigError("step control: halve_abs_log must be positive");
    if (ctl.max_halvings < 0)
        throw ConfigError("step control: max_halvings must be >= 0");
    if (ctl.max_leaf_steps < 1)
        throw ConfigError("step control: max_leaf_steps must be >= 1");
}

void validate_rule(const StoppingRule& rule)
{
    if (rule.kind == StoppingRule::Kind::FixedHorizon) {
        if (!(rule.t_max >= 0.0))
            throw ConfigError("stopping rule: horizon must be >= 0");
    } else if (!(rule.t_max > 0.0)) {
        throw ConfigError("stopping rule: safety horizon must be positive");
    }
    if (rule.kind == StoppingRule::Kind::OpNormIntegralThreshold &&
        !(rule.theta > 0.0))
        throw ConfigError("stopping rule: theta must be positive");
}

// Raised when the per-path step budget runs out; translated into a
// TruncationError (with the partial trace attached) by run().
struct BudgetSignal {};

// Per-path workspace.  Everything derived from the current log-weights is
// cached here and refreshed after each committed update, so a proposal
// (needed by the adaptive halving decision) costs only one pass over the
// atoms.
class Engine {
public:
    Engine(const Eigen::MatrixXd& atoms, LocalizationState& state,
           const StepControl& ctl)
        : X_(atoms), s_(state), ctl_(ctl)
    {
    }

    // Recompute weights, moments, the eigensystem of A and the derived
    // noise/penalty operators from the current log-weights; update the
    // collapse flag.
    void refresh()
    {
        const Eigen::Index n = X_.rows();
        w_ = s_.log_weights.array().exp();
        s_.a.noalias() = X_ * w_;
        C_ = X_.colwise() - s_.a;
        s_.A.noalias() = C_ * w_.asDiagonal() * C_.transpose();
        s_.A = 0.5 * (s_.A + s_.A.transpose()).eval();
        eig_sym(s_.A);
        clamped_ = vals_.cwiseMax(0.0);
        s_.opnorm_A = clamped_.maxCoeff();
        // Noise map inv-sqrt(A) and penalty form pinv(A), both flooring
        // small eigenvalues to zero: collapsed directions carry no noise
        // and no penalty.
        Eigen::VectorXd isq(n), inv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (vals_[i] > ctl_.eig_floor) {
                isq[i] = 1.0 / std::sqrt(vals_[i]);
                inv[i] = 1.0 / vals_[i];
            } else {
                isq[i] = 0.0;
                inv[i] = 0.0;
            }
        }
        Rs_.noalias() = vecs_ * isq.asDiagonal() * vecs_.transpose();
        Ainv_.noalias() = vecs_ * inv.asDiagonal() * vecs_.transpose();
        zs_.noalias() = Rs_ * C_;
        sq_ = zs_.colwise().squaredNorm().transpose();
        const bool tiny_mass =
            clamped_.sum() < ctl_.trace_floor_ratio * s_.trace_A0;
        if (w_.maxCoeff() > 1.0 - ctl_.collapse_eps || tiny_mass)
            s_.collapsed = true;
    }

    // Log-weight increments for a candidate update; returns the largest
    // magnitude among atoms heavy enough to matter for step halving.
    double propose(double dt, const Eigen::VectorXd& dW)
    {
        dl_.noalias() = zs_.transpose() * dW;
        dl_ -= (0.5 * dt) * sq_;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < dl_.size(); ++j)
            if (w_[j] > ctl_.halve_weight_floor)
                worst = std::max(worst, std::abs(dl_[j]));
        return worst;
    }

    // Commit the most recent proposal: accumulate the path integrals with
    // the pre-update operators (left rectangle), apply the increments,
    // renormalize and refresh.
    void commit(double dt)
    {
        if (s_.leaf_steps >= ctl_.max_leaf_steps) throw BudgetSignal{};
        s_.opnorm_integral += s_.opnorm_A * dt;
        s_.qv_accum += dt * s_.A;
        s_.B_accum += dt * Ainv_;
        s_.log_weights += dl_;
        const double peak = s_.log_weights.maxCoeff();
        const double lse =
            peak + std::log((s_.log_weights.array() - peak).exp().sum());
        s_.log_weights.array() -= lse;
        ++s_.leaf_steps;
        refresh();
    }

    double clamped_trace() const { return clamped_.sum(); }
    double trace_qv() const { return s_.qv_accum.trace(); }
    const Eigen::VectorXd& weights() const { return w_; }

private:
    void eig_sym(const Eigen::MatrixXd& A)
    {
        const Eigen::Index n = A.rows();
        if (n == 1) {
            vals_.resize(1);
            vals_[0] = A(0, 0);
            vecs_ = Eigen::MatrixXd::Ones(1, 1);
            return;
        }
        if (n == 2) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
            es.computeDirect(Eigen::Matrix2d(A));
            vals_ = es.eigenvalues();
            vecs_ = es.eigenvectors();
            return;
        }
        if (n == 3) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
            es.computeDirect(Eigen::Matrix3d(A));
            vals_ = es.eigenvalues();
            vecs_ = es.eigenvectors();
            return;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success)
            throw NumericalError("localization: eigendecomposition failed");
        vals_ = es.eigenvalues();
        vecs_ = es.eigenvectors();
    }

    const Eigen::MatrixXd& X_;
    LocalizationState& s_;
    const StepControl& ctl_;
    Eigen::VectorXd w_, sq_, dl_, vals_, clamped_;
    Eigen::MatrixXd C_, Rs_, Ainv_, zs_, vecs_;
};

// Apply one update of size dt, splitting it in two through a Brownian
// bridge whenever the proposal moves some heavy atom's log-weight too far.
// The bridge keeps the refined path consistent with the coarse increment.
void apply_adaptive(Engine& eng, LocalizationState& s, const StepControl& ctl,
                    double dt, const Eigen::VectorXd& dW, int depth,
                    RngStream& stream)
{
    if (s.collapsed) return;
    const double worst = eng.propose(dt, dW);
    if (worst <= ctl.halve_abs_log || depth >= ctl.max_halvings) {
        if (worst > ctl.halve_abs_log) ++s.forced_substeps;
        eng.commit(dt);
        return;
    }
    const Eigen::VectorXd mid =
        0.5 * dW +
        (0.5 * std::sqrt(dt)) * stream.gaussian_vector(dW.size());
    apply_adaptive(eng, s, ctl, 0.5 * dt, mid, depth + 1, stream);
    apply_adaptive(eng, s, ctl, 0.5 * dt, dW - mid, depth + 1, stream);
}

}  // namespace

StoppingRule StoppingRule::fixed_horizon(double t_max)
{
    StoppingRule r;
    r.kind = Kind::FixedHorizon;
    r.t_max = t_max;
    validate_rule(r);
    return r;
}

StoppingRule StoppingRule::opnorm_threshold(double theta, double horizon)
{
    StoppingRule r;
    r.kind = Kind::OpNormIntegralThreshold;
    r.theta = theta;
    r.t_max = horizon;
    validate_rule(r);
    return r;
}

StoppingRule StoppingRule::until_collapse(double horizon)
{
    StoppingRule r;
    r.kind = Kind::Collapse;
    r.t_max = horizon;
    validate_rule(r);
    return r;
}

TruncationError::TruncationError(const std::string& what, PathTrace partial)
    : NumericalError(what), partial_(std::move(partial))
{
}

LocalizationState init(const DiscreteMeasure& mu, const StepControl& ctl)
{
    validate_control(ctl);
    const Eigen::Index n = mu.dimension();
    LocalizationState s;
    s.log_weights = mu.weights().array().log();  // zero weights go to -inf
    s.a.resize(n);
    s.A.resize(n, n);
    s.B_accum = Eigen::MatrixXd::Zero(n, n);
    s.qv_accum = Eigen::MatrixXd::Zero(n, n);
    Engine eng(mu.atoms(), s, ctl);
    eng.refresh();
    s.trace_A0 = eng.clamped_trace();
    // Re-run the collapse test now that the reference trace is known.
    s.collapsed = false;
    eng.refresh();
    return s;
}

LocalizationState init(const GridMeasure& grid, const StepControl& ctl)
{
    return init(grid.to_discrete(), ctl);
}

void step(const DiscreteMeasure& mu, LocalizationState& state, double dt,
          const Eigen::VectorXd& dW, const StepControl& ctl)
{
    validate_control(ctl);
    if (!(dt > 0.0) || dt > 0.1)
        throw PreconditionError("step: dt must lie in (0, 0.1]");
    if (dW.size() != mu.dimension())
        throw InputError("step: increment dimension mismatch");
    if (!dW.allFinite())
        throw InputError("step: non-finite increment");
    if (state.collapsed) return;
    Engine eng(mu.atoms(), state, ctl);
    eng.refresh();
    if (state.collapsed) return;
    eng.propose(dt, dW);
    eng.commit(dt);
    state.t += dt;
}

PathTrace run(const DiscreteMeasure& mu, LocalizationState state,
              const StoppingRule& rule, const StepControl& ctl,
              RngStream& stream, int record_stride,
              const std::vector<double>* record_times)
{
    validate_control(ctl);
    validate_rule(rule);
    const double dt = ctl.dt;
    const double t0 = state.t;

    PathTrace trace;
    trace.seed = stream.seed();
    trace.stream = stream.stream();

    Engine eng(mu.atoms(), state, ctl);
    eng.refresh();

    std::set<long> marks;
    if (record_times)
        for (double T : *record_times) {
            if (!std::isfinite(T))
                throw InputError("run: non-finite record time");
            const long k = std::lround((T - t0) / dt);
            if (k >= 0) marks.insert(k);
        }

    auto record = [&]() {
        TraceRecord r;
        r.t = state.t;
        r.a = state.a;
        r.trace_A = eng.clamped_trace();
        r.opnorm_A = state.opnorm_A;
        r.trace_qv = eng.trace_qv();
        if (!trace.records.empty() &&
            r.t <= trace.records.back().t + 1e-15)
            trace.records.back() = std::move(r);
        else
            trace.records.push_back(std::move(r));
    };
    record();

    const long k_max =
        std::max<long>(0, std::lround((rule.t_max - t0) / dt));
    long k = 0;
    try {
        for (;;) {
            if (state.collapsed) {
                trace.cause = StopCause::Collapse;
                break;
            }
            if (rule.kind == StoppingRule::Kind::OpNormIntegralThreshold) {
                const double remaining = rule.theta - state.opnorm_integral;
                if (state.opnorm_A * dt >= remaining) {
                    // Shortened last step: land the op-norm integral on
                    // theta exactly instead of overshooting.  The step size
                    // depends only on the state before the noise is drawn,
                    // so the endpoint statistics stay unbiased.
                    const double dtp = remaining / state.opnorm_A;
                    if (dtp > 1e-15) {
                        eng.propose(dtp, std::sqrt(dtp) *
                                             stream.gaussian_vector(
                                                 mu.dimension()));
                        eng.commit(dtp);
                        state.t += dtp;
                    }
                    state.opnorm_integral = rule.theta;
                    trace.cause = StopCause::Threshold;
                    break;
                }
            }
            if (k >= k_max) {
                trace.cause = StopCause::Horizon;
                break;
            }
            const Eigen::VectorXd dW =
                std::sqrt(dt) * stream.gaussian_vector(mu.dimension());
            apply_adaptive(eng, state, ctl, dt, dW, 0, stream);
            ++k;
            state.t = t0 + static_cast<double>(k) * dt;
            const bool want = record_times
                                  ? marks.count(k) > 0
                                  : (record_stride > 0 &&
                                     k % record_stride == 0);
            if (want) record();
        }
    } catch (const BudgetSignal&) {
        record();
        Eigen::Index best = 0;
        state.log_weights.maxCoeff(&best);
        trace.terminal_atom = best;
        trace.final_state = std::move(state);
        throw TruncationError("run: step budget exhausted", std::move(trace));
    }
    record();
    Eigen::Index best = 0;
    state.log_weights.maxCoeff(&best);
    trace.terminal_atom = best;
    trace.final_state = std::move(state);
    return trace;
}

PathTrace run(const DiscreteMeasure& mu, const StoppingRule& rule,
              const StepControl& ctl, RngStream& stream, int record_stride,
              const std::vector<double>* record_times)
{
    return run(mu, init(mu, ctl), rule, ctl, stream, record_stride,
               record_times);
}

BatchReport batch_run(const DiscreteMeasure& mu, const StoppingRule& rule,
                      const StepControl& ctl, long paths, std::uint64_t seed,
                      std::uint64_t stream_base, const BatchOptions& options)
{
    validate_control(ctl);
    validate_rule(rule);
    if (paths < 1) throw PreconditionError("batch_run: need at least one path");
    std::vector<double> obs = options.observe_times;
    std::sort(obs.begin(), obs.end());
    for (double T : obs)
        if (!std::isfinite(T) || T < 0.0)
            throw InputError("batch_run: observation times must be >= 0");

    const Eigen::Index n = mu.dimension();
    const std::size_t nobs = obs.size();
    const std::size_t npaths = static_cast<std::size_t>(paths);

    std::vector<Eigen::MatrixXd> endpoint(nobs);
    for (auto& M : endpoint) M.resize(n, paths);
    std::vector<std::vector<double>> tr_at(nobs,
                                           std::vector<double>(npaths));
    std::vector<Eigen::Index> terminal(npaths, -1);
    std::vector<StopCause> causes(npaths, StopCause::None);
    std::vector<PathTrace> kept(options.keep_traces ? npaths : 0);

    parallel_blocks(npaths, options.threads, [&](std::size_t pb) {
        RngStream stream(seed, stream_base + pb);
        PathTrace tr = run(mu, rule, ctl, stream, 0, &obs);
        for (std::size_t i = 0; i < nobs; ++i) {
            // Last record at or before the observation time; paths that
            // ended earlier stay frozen at their final record.
            const double target = obs[i] + 0.5 * ctl.dt;
            const TraceRecord* best = &tr.records.front();
            for (const auto& r : tr.records)
                if (r.t <= target) best = &r;
            endpoint[i].col(static_cast<Eigen::Index>(pb)) = best->a;
            tr_at[i][pb] = best->trace_A;
        }
        terminal[pb] = tr.terminal_atom;
        causes[pb] = tr.cause;
        if (options.keep_traces) kept[pb] = std::move(tr);
    });

    BatchReport report;
    report.paths = paths;
    report.seed = seed;
    report.stream_base = stream_base;
    report.observations.resize(nobs);
    for (std::size_t i = 0; i < nobs; ++i) {
        BatchObservation& o = report.observations[i];
        o.t = obs[i];
        const SampleSummary sum = summarize(tr_at[i]);
        o.mean_trace_A = sum.mean;
        o.se_trace_A = sum.se_mean;
        if (options.compute_t2) {
            const Eigen::Index budget = 256 - mu.atom_count();
            if (budget < 1)
                throw CapabilityError(
                    "batch_run: initial measure too large for the exact "
                    "transport comparison");
            double spread = 0.0;
            for (Eigen::Index d = 0; d < n; ++d)
                spread = std::max(spread, endpoint[i].row(d).maxCoeff() -
                                              endpoint[i].row(d).minCoeff());
            double pitch = 0.0;
            const DiscreteMeasure cloud =
                quantize_points(endpoint[i],
                                spread > 0.0 ? spread / 512.0 : 1.0,
                                budget, &pitch);
            o.t2_to_initial = t2_distance(cloud, mu);
            o.quantize_pitch = pitch;
        }
    }

    report.terminal_frequency.assign(static_cast<std::size_t>(mu.atom_count()),
                                     0.0);
    std::vector<std::int64_t> counts(
        static_cast<std::size_t>(mu.atom_count()), 0);
    for (Eigen::Index idx : terminal)
        if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
    for (std::size_t j = 0; j < counts.size(); ++j)
        report.terminal_frequency[j] =
            static_cast<double>(counts[j]) / static_cast<double>(paths);
    std::vector<double> probs(mu.weights().data(),
                              mu.weights().data() + mu.atom_count());
    report.chi_square_pvalue = chi_square_gof_pvalue(counts, probs);

    report.cause_fraction.assign(4, 0.0);
    for (StopCause c : causes)
        report.cause_fraction[static_cast<std::size_t>(c)] +=
            1.0 / static_cast<double>(paths);
    if (options.keep_traces) report.traces = std::move(kept);
    return report;
}

double tilt_residual(const DiscreteMeasure& mu, const LocalizationState& state)
{
    const Eigen::Index n = mu.dimension();
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < mu.atom_count(); ++j)
        if (mu.weights()[j] > 0.0) support.push_back(j);
    const Eigen::Index m = static_cast<Eigen::Index>(support.size());
    if (m < n + 2)
        throw CapabilityError(
            "tilt_residual: support too small to determine the affine part");

    Eigen::MatrixXd G(m, n + 1);
    Eigen::VectorXd y(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index j = support[static_cast<std::size_t>(r)];
        const Eigen::VectorXd x = mu.atom(j);
        G(r, 0) = 1.0;
        G.row(r).tail(n) = x.transpose();
        y[r] = state.log_weights[j] - std::log(mu.weights()[j]) +
               0.5 * x.dot(state.B_accum * x);
    }
    const Eigen::VectorXd beta = G.colPivHouseholderQr().solve(y);
    const double rss = (y - G * beta).squaredNorm();
    return std::sqrt(rss / static_cast<double>(m));
}

DecayDiagnostic decay_diagnostic(const std::vector<PathTrace>& traces)
{
    if (traces.size() < 100)
        throw PreconditionError(
            "decay_diagnostic: need at least 100 traces");
    const std::size_t npts = traces.front().records.size();
    if (npts < 2)
        throw InputError("decay_diagnostic: degenerate time grid");
    for (const auto& tr : traces) {
        if (tr.records.size() != npts)
            throw InputError("decay_diagnostic: traces disagree on the grid");
        for (std::size_t i = 0; i < npts; ++i)
            if (std::abs(tr.records[i].t - traces.front().records[i].t) >
                1e-9)
                throw InputError(
                    "decay_diagnostic: traces disagree on the grid");
    }

    std::vector<double> ts(npts), mean_op(npts, 0.0);
    for (std::size_t i = 0; i < npts; ++i) {
        ts[i] = traces.front().records[i].t;
        for (const auto& tr : traces) mean_op[i] += tr.records[i].opnorm_A;
        mean_op[i] /= static_cast<double>(traces.size());
    }
    if (!(mean_op.front() > 0.0))
        throw InputError("decay_diagnostic: vanishing initial operator norm");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long used = 0;
    DecayDiagnostic d;
    for (std::size_t i = 0; i < npts; ++i) {
        d.sup_ratio = std::max(
            d.sup_ratio, std::exp(ts[i] - ts[0]) * mean_op[i] / mean_op[0]);
        if (!(mean_op[i] > 0.0)) continue;
        const double y = std::log(mean_op[i]);
        sx += ts[i];
        sy += y;
        sxx += ts[i] * ts[i];
        sxy += ts[i] * y;
        ++used;
    }
    const double denom = used * sxx - sx * sx;
    if (used < 2 || std::abs(denom) < 1e-30)
        throw InputError("decay_diagnostic: degenerate time grid");
    d.slope = (used * sxy - sx * sy) / denom;
    d.intercept = (sy - d.slope * sx) / used;
    return d;
}

StoppedReport stopped_run(const DiscreteMeasure& mu, double theta,
                          const StepControl& ctl, long paths,
                          std::uint64_t seed, std::uint64_t stream_base,
                          unsigned threads)
{
    if (!(theta > 0.0))
        throw PreconditionError("stopped_run: theta must be positive");
    if (paths < 1)
        throw PreconditionError("stopped_run: need at least one path");
    validate_control(ctl);
    const StoppingRule rule = StoppingRule::opnorm_threshold(theta);
    const Eigen::VectorXd a0 = init(mu, ctl).a;
    const std::size_t npaths = static_cast<std::size_t>(paths);

    StoppedReport rep;
    rep.theta = theta;
    rep.paths = paths;
    rep.seed = seed;
    rep.stream_base = stream_base;
    rep.displacement.resize(npaths);
    rep.qv.resize(npaths);
    std::vector<StopCause> causes(npaths, StopCause::None);

    parallel_blocks(npaths, threads, [&](std::size_t pb) {
        RngStream stream(seed, stream_base + pb);
        PathTrace tr = run(mu, rule, ctl, stream, 0, nullptr);
        rep.displacement[pb] = tr.final_state.a - a0;
        rep.qv[pb] = tr.final_state.qv_accum;
        causes[pb] = tr.cause;
    });

    std::vector<double> l1(npaths), l2(npaths), linf(npaths);
    for (std::size_t p = 0; p < npaths; ++p) {
        l1[p] = rep.displacement[p].lpNorm<1>();
        l2[p] = rep.displacement[p].norm();
        linf[p] = rep.displacement[p].lpNorm<Eigen::Infinity>();
        rep.max_qv_eigenvalue =
            std::max(rep.max_qv_eigenvalue, opnorm_sym(rep.qv[p]));
        if (causes[p] == StopCause::Threshold)
            rep.threshold_fraction += 1.0;
        else if (causes[p] == StopCause::Collapse)
            rep.collapse_fraction += 1.0;
        else
            rep.horizon_fraction += 1.0;
    }
    rep.threshold_fraction /= static_cast<double>(paths);
    rep.collapse_fraction /= static_cast<double>(paths);
    rep.horizon_fraction /= static_cast<double>(paths);
    const SampleSummary s1 = summarize(l1);
    const SampleSummary s2 = summarize(l2);
    const SampleSummary si = summarize(linf);
    rep.mean_l1 = s1.mean;
    rep.se_l1 = s1.se_mean;
    rep.mean_l2 = s2.mean;
    rep.se_l2 = s2.se_mean;
    rep.mean_linf = si.mean;
    rep.se_linf = si.se_mean;
    return rep;
}

}  // namespace sloc
