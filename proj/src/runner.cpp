#include "sloc/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sloc/coupling.hpp"
#include "sloc/linalg.hpp"
#include "sloc/localization.hpp"
#include "sloc/report.hpp"
#include "sloc/stats.hpp"
#include "sloc/thinshell.hpp"
#include "sloc/transport.hpp"

namespace sloc {

namespace {

using nlohmann::json;

std::string fmt6(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt17(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Experiment configuration echoed into every report.  Execution details
// (thread count, output destination) are deliberately absent so reruns
// with different parallelism or redirection emit identical bytes.
json config_echo(const RunConfig& cfg)
{
    json j;
    j["subcommand"] = cfg.subcommand;
    j["seed"] = cfg.seed;
    j["family"] = cfg.family;
    j["body"] = cfg.body;
    j["norm"] = cfg.norm;
    j["measure"] = cfg.measure;
    j["n"] = cfg.n;
    j["samples"] = cfg.samples;
    j["paths"] = cfg.paths;
    j["dt"] = cfg.dt;
    j["theta"] = cfg.theta;
    j["t_max"] = cfg.t_max;
    j["observe_times"] = cfg.observe_times;
    j["big_constant"] = cfg.big_constant;
    j["small_constant"] = cfg.small_constant;
    j["tau_hat"] = cfg.tau_hat;
    j["resamples"] = cfg.resamples;
    j["profile"] = cfg.profile;
    j["format"] = cfg.format;
    return j;
}

std::string wrap_json(const RunConfig& cfg, json report)
{
    json top;
    top["subcommand"] = cfg.subcommand;
    top["version"] = kVersion;
    top["seed"] = cfg.seed;
    top["config"] = config_echo(cfg);
    top["report"] = std::move(report);
    return top.dump(2) + "\n";
}

// CSV outputs carry the same echo as a single comment line so a file on
// disk still identifies the run that produced it.
std::string csv_prefix(const RunConfig& cfg)
{
    std::string line = "# subcommand=" + cfg.subcommand;
    line += " version=" + std::string(kVersion);
    line += " seed=" + std::to_string(cfg.seed);
    line += " family=" + cfg.family;
    line += " body=" + cfg.body;
    line += " norm=" + cfg.norm;
    line += " measure=" + cfg.measure;
    line += " n=" + std::to_string(cfg.n);
    line += " samples=" + std::to_string(cfg.samples);
    line += " paths=" + std::to_string(cfg.paths);
    line += " dt=" + fmt17(cfg.dt);
    line += " theta=" + fmt17(cfg.theta);
    line += " t_max=" + fmt17(cfg.t_max);
    line += " observe_times=";
    for (std::size_t i = 0; i < cfg.observe_times.size(); ++i) {
        if (i) line += ';';
        line += fmt17(cfg.observe_times[i]);
    }
    line += " profile=" + cfg.profile;
    return line + "\n";
}

void require(bool ok, const std::string& message)
{
    if (!ok) throw ConfigError(message);
}

// Latest record at or before t on a dt-spaced grid.
const TraceRecord* record_at(const PathTrace& tr, double t, double dt)
{
    const TraceRecord* best = nullptr;
    for (const TraceRecord& rec : tr.records)
        if (rec.t <= t + 0.5 * dt) best = &rec;
    return best;
}

// Resample traces onto the shared grid {0} + marks.  A collapsed path is
// constant from its collapse time on, so carrying its last record forward
// reproduces its true later states; this keeps every path in the decay
// fit instead of conditioning on survival, which would bias the mean up.
std::vector<PathTrace> align_traces(const std::vector<PathTrace>& traces,
                                    const std::vector<double>& marks,
                                    double dt)
{
    std::vector<PathTrace> aligned;
    aligned.reserve(traces.size());
    for (const PathTrace& tr : traces) {
        PathTrace at;
        at.cause = tr.cause;
        at.seed = tr.seed;
        at.stream = tr.stream;
        at.terminal_atom = tr.terminal_atom;
        bool complete = true;
        for (double t : marks) {
            const TraceRecord* rec = record_at(tr, t, dt);
            if (!rec) {
                complete = false;
                break;
            }
            TraceRecord synth = *rec;
            synth.t = t;
            at.records.push_back(synth);
        }
        if (complete) aligned.push_back(std::move(at));
    }
    return aligned;
}

std::vector<double> effective_observe_times(const RunConfig& cfg)
{
    std::vector<double> times = cfg.observe_times;
    if (times.empty()) times.push_back(1.0);
    std::sort(times.begin(), times.end());
    for (double t : times)
        require(std::isfinite(t) && t > 0.0,
                "observe times must be positive and finite");
    return times;
}

// ---------------------------------------------------------------- localize

RunOutcome do_localize(const RunConfig& cfg)
{
    const std::vector<double> observe = effective_observe_times(cfg);
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : observe.back();
    require(t_max >= observe.back(),
            "t_max must cover the largest observe time");

    StepControl ctl;
    ctl.dt = cfg.dt;
    const StoppingRule rule = StoppingRule::fixed_horizon(t_max);
    const DiscreteMeasure mu = is_grid_measure_name(cfg.measure)
                                   ? catalog_grid(cfg.measure).to_discrete()
                                   : catalog_measure(cfg.measure);

    BatchOptions options;
    options.observe_times = observe;
    options.compute_t2 = mu.atom_count() <= 128;
    options.keep_traces = cfg.paths >= 100;
    options.threads = cfg.threads;

    const BatchReport rep =
        batch_run(mu, rule, ctl, cfg.paths, cfg.seed, 0, options);

    if (cfg.format == "csv") {
        // Dense trace of the first path, for plotting.
        RngStream stream(cfg.seed, 0);
        const PathTrace tr = run(mu, rule, ctl, stream, 10);
        return {0, csv_prefix(cfg) + trace_csv(tr)};
    }

    json jr = report_json(rep);
    jr["decay"] = nullptr;
    if (options.keep_traces) {
        std::vector<double> marks;
        marks.push_back(0.0);
        marks.insert(marks.end(), observe.begin(), observe.end());
        const std::vector<PathTrace> aligned =
            align_traces(rep.traces, marks, ctl.dt);
        if (aligned.size() >= 100)
            jr["decay"] = report_json(decay_diagnostic(aligned));
    }
    return {0, wrap_json(cfg, std::move(jr))};
}

// ----------------------------------------------------------------- stopped

RunOutcome do_stopped(const RunConfig& cfg)
{
    require(std::isfinite(cfg.theta) && cfg.theta > 0.0,
            "theta must be positive");
    StepControl ctl;
    ctl.dt = cfg.dt;
    const DiscreteMeasure mu = is_grid_measure_name(cfg.measure)
                                   ? catalog_grid(cfg.measure).to_discrete()
                                   : catalog_measure(cfg.measure);

    const StoppedReport rep = stopped_run(mu, cfg.theta, ctl, cfg.paths,
                                          cfg.seed, 0, cfg.threads);
    const int n = mu.dimension();

    if (cfg.format == "csv") {
        std::string out = csv_prefix(cfg);
        out += "path,l1,l2,linf,qv_opnorm\n";
        for (long i = 0; i < rep.paths; ++i) {
            const Eigen::VectorXd& d = rep.displacement[i];
            out += std::to_string(i);
            out += ',' + fmt17(d.lpNorm<1>());
            out += ',' + fmt17(d.norm());
            out += ',' + fmt17(d.lpNorm<Eigen::Infinity>());
            out += ',' + fmt17(opnorm_sym(rep.qv[i]));
            out += '\n';
        }
        return {0, out};
    }

    // Gaussian completion of every stopped endpoint, then a conformance
    // report for the completed population and dominance checks for the
    // three catalog norms.
    std::vector<MartingaleEndpoint> endpoints;
    endpoints.reserve(rep.displacement.size());
    for (long i = 0; i < rep.paths; ++i)
        endpoints.push_back({rep.displacement[i], rep.qv[i]});

    RngStream gstream(cfg.seed, 1ull << 30);
    Eigen::MatrixXd completed(n, rep.paths);
    for (long i = 0; i < rep.paths; ++i) {
        const Eigen::VectorXd g = gstream.gaussian_vector(n);
        completed.col(i) = maurey_extend(endpoints[i], g).first;
    }

    json jr = report_json(rep);
    jr["conformance"] = rep.paths >= 1000
                            ? report_json(gaussian_conformance(completed))
                            : json(nullptr);
    json dom;
    const ConvexFunctional phis[] = {ConvexFunctional::l1(),
                                     ConvexFunctional::l2(),
                                     ConvexFunctional::linf()};
    for (std::size_t k = 0; k < 3; ++k) {
        RngStream dstream(cfg.seed, (1ull << 30) + 1 + k);
        dom[phis[k].name()] =
            rep.paths >= 1000
                ? report_json(
                      convex_dominance_check(endpoints, phis[k], dstream))
                : json(nullptr);
    }
    jr["dominance"] = std::move(dom);
    return {0, wrap_json(cfg, std::move(jr))};
}

// --------------------------------------------------------- tau and sigma

RunOutcome do_tau(const RunConfig& cfg)
{
    const DistributionFamily family =
        DistributionFamily::by_name(cfg.family, cfg.n);
    const TauEstimate est =
        estimate_tau(family, cfg.samples, cfg.seed, 0, cfg.threads);
    if (cfg.format == "csv") return {0, csv_prefix(cfg) + tau_csv({est})};
    return {0, wrap_json(cfg, report_json(est))};
}

RunOutcome do_sigma(const RunConfig& cfg)
{
    require(cfg.resamples >= 10, "resamples must be at least 10");
    const DistributionFamily family =
        DistributionFamily::by_name(cfg.family, cfg.n);
    const SigmaEstimate est = estimate_sigma(family, cfg.samples, cfg.seed, 0,
                                             cfg.threads, cfg.resamples);
    if (cfg.format == "csv") return {0, csv_prefix(cfg) + sigma_csv({est})};
    return {0, wrap_json(cfg, report_json(est))};
}

// ------------------------------------------------------------------ widths

RunOutcome do_widths(const RunConfig& cfg)
{
    const BodySpec body = body_by_name(cfg.body, cfg.n);
    const MonteCarloValue width =
        mean_width(body.gauge, cfg.samples, cfg.seed, 0, cfg.threads);
    const MonteCarloValue width_polar =
        mean_width(body.polar, cfg.samples, cfg.seed, 1ull << 30, cfg.threads);
    const double c_n = chi_mean(cfg.n);
    const double iso = isotropic_constant(body);

    if (cfg.format == "csv") {
        std::string out = csv_prefix(cfg);
        out += "body,n,count,width_M,width_M_se,width_Mstar,width_Mstar_se,"
               "c_n,isotropic_constant\n";
        out += body.name + ',' + std::to_string(cfg.n) + ',' +
               std::to_string(cfg.samples) + ',' + fmt17(width.value) + ',' +
               fmt17(width.se) + ',' + fmt17(width_polar.value) + ',' +
               fmt17(width_polar.se) + ',' + fmt17(c_n) + ',' + fmt17(iso) +
               '\n';
        return {0, out};
    }

    json jr;
    jr["body"] = body.name;
    jr["n"] = cfg.n;
    jr["count"] = cfg.samples;
    jr["width_M"] = report_json(width);
    jr["width_Mstar"] = report_json(width_polar);
    jr["c_n"] = c_n;
    jr["gaussian_equivalent"] = c_n * width.value;
    jr["isotropic_constant"] = iso;
    return {0, wrap_json(cfg, std::move(jr))};
}

// ----------------------------------------------------------------- compare

RunOutcome do_compare(const RunConfig& cfg)
{
    const DistributionFamily family =
        DistributionFamily::by_name(cfg.family, cfg.n);
    const NormSpec spec = norm_by_name(cfg.norm, cfg.n);
    const NormComparisonReport rep =
        compare_norms_experiment(family, spec, cfg.samples, cfg.seed, 0,
                                 cfg.big_constant, cfg.tau_hat, cfg.threads);
    if (cfg.format == "csv") return {0, csv_prefix(cfg) + compare_csv({rep})};
    return {0, wrap_json(cfg, report_json(rep))};
}

// ------------------------------------------------------------------ verify

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

class Suite {
public:
    Suite(const RunConfig& cfg, bool quick) : cfg_(cfg), quick_(quick) {}

    const RunConfig& cfg() const { return cfg_; }
    bool quick() const { return quick_; }
    std::uint64_t seed() const { return cfg_.seed; }
    unsigned threads() const { return cfg_.threads; }
    long scaled(long full, long floor_value) const
    {
        return quick_ ? std::max(full / 10, floor_value) : full;
    }

    // Stream namespace for check `index`, far above the bases used by the
    // plain subcommands.
    std::uint64_t stream(int index, std::uint64_t offset = 0) const
    {
        return (1ull << 32) + static_cast<std::uint64_t>(index) * (1ull << 20) +
               offset;
    }

    template <typename Fn>
    void run_check(const std::string& name, Fn&& fn)
    {
        Check c;
        c.name = name;
        try {
            std::forward<Fn>(fn)(c);
        } catch (const Error& e) {
            c.pass = false;
            c.detail = std::string("error: ") + e.what();
        }
        checks.push_back(std::move(c));
    }

    std::vector<Check> checks;

private:
    RunConfig cfg_;
    bool quick_;
};

double logsumexp_of(const Eigen::VectorXd& v)
{
    const double m = v.maxCoeff();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

void check_isotropize_fixed_point(Suite& s)
{
    s.run_check("measures.isotropize_fixed_point", [&](Check& c) {
        RngStream stream(s.seed(), s.stream(1));
        Eigen::MatrixXd atoms(2, 5);
        for (int j = 0; j < 5; ++j)
            atoms.col(j) = 2.0 * stream.gaussian_vector(2) +
                           Eigen::Vector2d::Constant(0.5);
        Eigen::VectorXd weights(5);
        for (int j = 0; j < 5; ++j)
            weights[j] = std::abs(stream.next_gaussian()) + 0.2;
        const DiscreteMeasure mu =
            DiscreteMeasure::with_normalized_weights(atoms, weights);

        const DiscreteMeasure iso = isotropize(mu);
        const DiscreteMeasure iso2 = isotropize(iso);
        const MomentSummary mm = moments(iso);

        const double drift =
            (iso2.atoms() - iso.atoms()).cwiseAbs().maxCoeff();
        const double mean_dev = mm.mean.cwiseAbs().maxCoeff();
        const double cov_dev =
            (mm.covariance - Eigen::MatrixXd::Identity(2, 2))
                .cwiseAbs()
                .maxCoeff();
        c.pass = drift <= 1e-8 && mean_dev <= 1e-8 && cov_dev <= 1e-8;
        c.detail = "second-pass drift " + fmt6(drift) + ", mean dev " +
                   fmt6(mean_dev) + ", cov dev " + fmt6(cov_dev) +
                   " (tol 1e-8)";
    });
}

void check_transport_triangle(Suite& s)
{
    s.run_check("measures.transport_triangle", [&](Check& c) {
        RngStream stream(s.seed(), s.stream(2));
        const int trials = s.quick() ? 5 : 20;
        double worst = -1e300;
        for (int trial = 0; trial < trials; ++trial) {
            DiscreteMeasure trio[] = {two_point_measure(0.5),
                                      two_point_measure(0.5),
                                      two_point_measure(0.5)};
            for (int m = 0; m < 3; ++m) {
                const int count = 2 + (trial + 3 * m) % 9;
                Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(1, count);
                Eigen::VectorXd w(count);
                for (int j = 0; j < count; ++j) {
                    atoms(0, j) = 3.0 * stream.next_gaussian() +
                                  0.01 * j;  // keep atoms distinct
                    w[j] = std::abs(stream.next_gaussian()) + 0.1;
                }
                trio[m] = DiscreteMeasure::with_normalized_weights(atoms, w);
            }
            const double d01 = std::sqrt(t2_distance(trio[0], trio[1]));
            const double d02 = std::sqrt(t2_distance(trio[0], trio[2]));
            const double d12 = std::sqrt(t2_distance(trio[2], trio[1]));
            worst = std::max(worst, d01 - d02 - d12);
        }
        c.pass = worst <= 1e-9;
        c.detail = "worst triangle slack " + fmt6(worst) + " over " +
                   std::to_string(trials) + " random triples (tol 1e-9)";
    });
}

void check_moment_convergence(Suite& s)
{
    s.run_check("measures.moment_convergence", [&](Check& c) {
        const char* names[] = {"gaussian", "exp", "cube", "ball", "twopoint"};
        std::vector<long> counts = {1000, 10000, 100000};
        if (s.quick()) counts.pop_back();
        double worst = 0.0;
        std::string worst_at = "none";
        for (int f = 0; f < 5; ++f) {
            const int n = std::string(names[f]) == "twopoint" ? 1 : 2;
            const DistributionFamily family =
                DistributionFamily::by_name(names[f], n);
            for (std::size_t k = 0; k < counts.size(); ++k) {
                RngStream stream(s.seed(), s.stream(3, 16 * f + k));
                const Eigen::MatrixXd X = family.sample(counts[k], stream);
                const MomentSummary mm = moments(X);
                const double root = std::sqrt(double(counts[k]));
                const double mean_err =
                    (mm.mean - family.exact_mean()).cwiseAbs().maxCoeff() *
                    root;
                const double cov_err = (mm.covariance -
                                        family.exact_covariance())
                                           .cwiseAbs()
                                           .maxCoeff() *
                                       root;
                // sqrt(N)-scaled errors stay bounded by moment constants:
                // 6 on the mean, 18 on covariance entries.
                const double score =
                    std::max(mean_err / 6.0, cov_err / 18.0);
                if (score > worst) {
                    worst = score;
                    worst_at = std::string(names[f]) + "@N=" +
                               std::to_string(counts[k]);
                }
            }
        }
        c.pass = worst <= 1.0;
        c.detail = "worst sqrt(N)-scaled moment error fraction " +
                   fmt6(worst) + " at " + worst_at;
    });
}

void check_symmetric_third_moments(Suite& s)
{
    s.run_check("measures.symmetric_third_moments", [&](Check& c) {
        const char* names[] = {"gaussian", "cube", "ball", "twopoint"};
        const long count = s.scaled(20000, 4000);
        double worst_sigma = 0.0;
        std::string worst_at = "none";
        for (int f = 0; f < 4; ++f) {
            const int n = std::string(names[f]) == "twopoint" ? 1 : 2;
            const DistributionFamily family =
                DistributionFamily::by_name(names[f], n);
            RngStream stream(s.seed(), s.stream(4, f));
            const Eigen::MatrixXd X = family.sample(count, stream);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    for (int k = j; k < n; ++k) {
                        double sum = 0.0, sumsq = 0.0;
                        for (long col = 0; col < count; ++col) {
                            const double v =
                                X(i, col) * X(j, col) * X(k, col);
                            sum += v;
                            sumsq += v * v;
                        }
                        const double mean = sum / double(count);
                        const double var = std::max(
                            sumsq / double(count) - mean * mean, 1e-300);
                        const double se =
                            std::sqrt(var / double(count));
                        const double sigma = std::abs(mean) / se;
                        if (sigma > worst_sigma) {
                            worst_sigma = sigma;
                            worst_at = std::string(names[f]) + "[" +
                                       std::to_string(i) +
                                       std::to_string(j) +
                                       std::to_string(k) + "]";
                        }
                    }
        }
        c.pass = worst_sigma <= 4.0;
        c.detail = "largest third-moment z-score " + fmt6(worst_sigma) +
                   " at " + worst_at + " (limit 4)";
    });
}

void check_step_invariants(Suite& s)
{
    s.run_check("localization.step_invariants", [&](Check& c) {
        const char* names[] = {"twopoint-skew", "fouratom"};
        const int paths = s.quick() ? 5 : 20;
        const double dt = 1e-3;
        double worst_mass = 0.0, worst_eig = 0.0, worst_moment = 0.0;
        for (int m = 0; m < 2; ++m) {
            const DiscreteMeasure mu = catalog_measure(names[m]);
            const int n = mu.dimension();
            for (int p = 0; p < paths; ++p) {
                RngStream stream(s.seed(), s.stream(5, 64 * m + p));
                LocalizationState st = init(mu);
                for (int k = 0; k < 500 && !st.collapsed; ++k) {
                    const Eigen::VectorXd dW =
                        std::sqrt(dt) * stream.gaussian_vector(n);
                    step(mu, st, dt, dW);
                    worst_mass = std::max(
                        worst_mass, std::abs(logsumexp_of(st.log_weights)));
                    worst_eig =
                        std::max(worst_eig, -min_eigenvalue_sym(st.A));
                    const Eigen::VectorXd w =
                        st.log_weights.array().exp().matrix();
                    const Eigen::VectorXd a2 = mu.atoms() * w;
                    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(n, n);
                    for (Eigen::Index j = 0; j < mu.atom_count(); ++j) {
                        const Eigen::VectorXd d = mu.atom(j) - a2;
                        A2.noalias() += w[j] * d * d.transpose();
                    }
                    worst_moment = std::max(
                        worst_moment,
                        std::max((st.a - a2).cwiseAbs().maxCoeff(),
                                 (st.A - A2).cwiseAbs().maxCoeff()));
                }
            }
        }
        c.pass = worst_mass <= 1e-10 && worst_eig <= 1e-10 &&
                 worst_moment <= 1e-8;
        c.detail = "mass defect " + fmt6(worst_mass) +
                   ", eigenvalue undershoot " + fmt6(worst_eig) +
                   ", moment recompute defect " + fmt6(worst_moment);
    });
}

// Shared two-point batch for the martingale and decay checks.
struct TwoPointBatch {
    BatchReport report;
    std::vector<double> observe{0.5, 1.0, 2.0};
    long paths = 0;
};

TwoPointBatch run_twopoint_batch(Suite& s)
{
    TwoPointBatch out;
    out.paths = s.scaled(2000, 400);
    StepControl ctl;
    BatchOptions options;
    options.observe_times = out.observe;
    options.compute_t2 = false;
    options.keep_traces = true;
    options.threads = s.threads();
    out.report = batch_run(two_point_measure(0.5),
                           StoppingRule::fixed_horizon(2.0), ctl, out.paths,
                           s.seed(), s.stream(6), options);
    return out;
}

void check_martingale_mean(Suite& s, const TwoPointBatch& batch)
{
    s.run_check("localization.barycenter_martingale", [&](Check& c) {
        double worst = 0.0;
        for (double t : batch.observe) {
            std::vector<double> values;
            values.reserve(batch.report.traces.size());
            for (const PathTrace& tr : batch.report.traces) {
                const TraceRecord* rec = record_at(tr, t, 1e-3);
                if (rec) values.push_back(rec->a[0]);
            }
            const SampleSummary sum = summarize(values);
            worst = std::max(worst,
                             std::abs(sum.mean) / std::max(sum.se_mean,
                                                           1e-300));
        }
        c.pass = worst <= 4.0;
        c.detail = "largest |mean barycenter| z-score " + fmt6(worst) +
                   " over t in {0.5,1,2} (limit 4)";
    });
}

void check_trace_decay(Suite& s, const TwoPointBatch& batch)
{
    s.run_check("localization.trace_decay", [&](Check& c) {
        double worst = 0.0;
        for (const BatchObservation& obs : batch.report.observations) {
            const double target = std::exp(-obs.t);  // initial trace is 1
            const double dev = std::abs(obs.mean_trace_A - target) /
                               std::max(obs.se_trace_A, 1e-300);
            worst = std::max(worst, dev);
        }
        c.pass = worst <= 3.0;
        c.detail = "largest trace-decay z-score " + fmt6(worst) +
                   " against exp(-t) (limit 3)";
    });
}

void check_grid_opnorm_bound(Suite& s)
{
    s.run_check("localization.grid_opnorm_bound", [&](Check& c) {
        struct Task {
            const char* name;
            long paths;
        };
        const Task tasks[] = {{"grid-interval", s.quick() ? 40 : 200},
                              {"grid-slab", s.quick() ? 10 : 50}};
        StepControl ctl;
        const StoppingRule rule = StoppingRule::fixed_horizon(2.0);
        double worst_ratio = 0.0;
        bool curvature_ok = true;
        for (int g = 0; g < 2; ++g) {
            const GridMeasure grid = catalog_grid(tasks[g].name);
            curvature_ok = curvature_ok &&
                           grid.log_concave_along_axes(1e-9) &&
                           grid.dominates_gaussian_curvature(1e-9);
            const DiscreteMeasure mu = grid.to_discrete();
            for (long p = 0; p < tasks[g].paths; ++p) {
                RngStream stream(s.seed(), s.stream(7, 1024 * g + p));
                const PathTrace tr = run(mu, rule, ctl, stream, 10);
                for (const TraceRecord& rec : tr.records) {
                    const double cap =
                        std::exp(-rec.t) * (1.0 + 5.0 * ctl.dt);
                    worst_ratio =
                        std::max(worst_ratio, rec.opnorm_A / cap);
                }
            }
        }
        c.pass = curvature_ok && worst_ratio <= 1.0;
        c.detail = std::string("curvature domination ") +
                   (curvature_ok ? "holds" : "fails") +
                   ", worst opnorm/cap ratio " + fmt6(worst_ratio) +
                   " (limit 1)";
    });
}

void check_threshold_stopping(Suite& s)
{
    s.run_check("localization.threshold_stopping", [&](Check& c) {
        const DiscreteMeasure mu = two_point_measure(0.5);
        const double theta = 0.25;
        StepControl ctl;
        const StoppedReport rep =
            stopped_run(mu, theta, ctl, s.scaled(200, 50), s.seed(),
                        s.stream(8), s.threads());
        const bool qv_ok = rep.max_qv_eigenvalue <= theta + 1e-9;

        double worst_drop = 0.0, worst_overshoot = 0.0;
        const StoppingRule rule = StoppingRule::opnorm_threshold(theta);
        for (int p = 0; p < 20; ++p) {
            RngStream stream(s.seed(), s.stream(8, 4096 + p));
            const PathTrace tr = run(mu, rule, ctl, stream, 5);
            for (std::size_t k = 1; k < tr.records.size(); ++k)
                worst_drop = std::max(worst_drop,
                                      tr.records[k - 1].trace_qv -
                                          tr.records[k].trace_qv);
            if (tr.cause == StopCause::Threshold)
                worst_overshoot = std::max(
                    worst_overshoot,
                    std::abs(tr.final_state.opnorm_integral - theta));
        }
        c.pass = qv_ok && worst_drop <= 1e-12 && worst_overshoot <= 1e-9;
        c.detail = "max qv eigenvalue " + fmt6(rep.max_qv_eigenvalue) +
                   " vs theta " + fmt6(theta) + ", worst qv drop " +
                   fmt6(worst_drop) + ", threshold landing error " +
                   fmt6(worst_overshoot);
    });
}

void check_terminal_law(Suite& s)
{
    s.run_check("localization.terminal_law", [&](Check& c) {
        StepControl ctl;
        BatchOptions options;
        options.observe_times = {1.0};
        options.compute_t2 = false;
        options.threads = s.threads();
        const StoppingRule rule = StoppingRule::until_collapse(12.0);

        const BatchReport skew =
            batch_run(catalog_measure("twopoint-skew"), rule, ctl,
                      s.scaled(5000, 500), s.seed(), s.stream(9), options);
        bool pass = skew.chi_square_pvalue > 0.001;
        std::string detail =
            "twopoint-skew p=" + fmt6(skew.chi_square_pvalue);

        if (!s.quick()) {
            const BatchReport four =
                batch_run(catalog_measure("fouratom"), rule, ctl, 2000,
                          s.seed(), s.stream(9, 65536), options);
            pass = pass && four.chi_square_pvalue > 0.001;
            detail += ", fouratom p=" + fmt6(four.chi_square_pvalue);
        }
        c.pass = pass;
        c.detail = detail + " (limit 0.001)";
    });
}

void check_completion_identity(Suite& s)
{
    s.run_check("coupling.completion_identity", [&](Check& c) {
        const int n = 3;
        RngStream stream(s.seed(), s.stream(10));

        // Exhausted variance: the Gaussian has nothing to add.
        MartingaleEndpoint full;
        full.M = Eigen::Vector3d(0.3, -0.2, 0.5);
        full.QV = Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd g0 = stream.gaussian_vector(n);
        const auto yz0 = maurey_extend(full, g0);
        const bool exhausted_exact =
            yz0.first == full.M && yz0.second == full.M;

        // Untouched variance: the completion is the Gaussian itself.
        MartingaleEndpoint empty;
        empty.M = Eigen::VectorXd::Zero(n);
        empty.QV = Eigen::MatrixXd::Zero(n, n);
        const Eigen::VectorXd g1 = stream.gaussian_vector(n);
        const auto yz1 = maurey_extend(empty, g1);
        const bool empty_exact = yz1.first == g1 && yz1.second == -g1;

        double worst_sum = 0.0, worst_var = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::MatrixXd B(n, n);
            for (int j = 0; j < n; ++j) B.col(j) = stream.gaussian_vector(n);
            const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
            const Eigen::MatrixXd Q = qr.householderQ();
            Eigen::VectorXd spectrum(n);
            for (int j = 0; j < n; ++j)
                spectrum[j] = normal_cdf(stream.next_gaussian());
            MartingaleEndpoint ep;
            ep.QV = Q * spectrum.asDiagonal() * Q.transpose();
            ep.QV = 0.5 * (ep.QV + ep.QV.transpose()).eval();
            ep.M = stream.gaussian_vector(n);
            const Eigen::VectorXd g = stream.gaussian_vector(n);
            const auto yz = maurey_extend(ep, g);
            worst_sum = std::max(
                worst_sum, (yz.first + yz.second - 2.0 * ep.M)
                               .cwiseAbs()
                               .maxCoeff());
            const Eigen::VectorXd half = 0.5 * (yz.first - yz.second);
            const double quad =
                (g.transpose() *
                 ((Eigen::MatrixXd::Identity(n, n) - ep.QV) * g))(0);
            worst_var =
                std::max(worst_var, std::abs(half.squaredNorm() - quad));
        }
        c.pass = exhausted_exact && empty_exact && worst_sum <= 1e-12 &&
                 worst_var <= 1e-10;
        c.detail = std::string("degenerate cases ") +
                   (exhausted_exact && empty_exact ? "exact" : "broken") +
                   ", worst pair-sum defect " + fmt6(worst_sum) +
                   ", worst residual-variance defect " + fmt6(worst_var);
    });
}

// Threshold-stopped two-point endpoints at theta = 1, shared by the
// conformance and dominance checks.
struct StoppedEndpoints {
    StoppedReport report;
    std::vector<MartingaleEndpoint> endpoints;
    Eigen::MatrixXd completed;
};

StoppedEndpoints run_stopped_endpoints(Suite& s)
{
    StoppedEndpoints out;
    StepControl ctl;
    const long paths = s.quick() ? 1000 : 2000;
    out.report = stopped_run(two_point_measure(0.5), 1.0, ctl, paths,
                             s.seed(), s.stream(11), s.threads());
    out.endpoints.reserve(paths);
    for (long i = 0; i < paths; ++i)
        out.endpoints.push_back(
            {out.report.displacement[i], out.report.qv[i]});
    RngStream gstream(s.seed(), s.stream(11, 65536));
    out.completed.resize(1, paths);
    for (long i = 0; i < paths; ++i)
        out.completed.col(i) =
            maurey_extend(out.endpoints[i], gstream.gaussian_vector(1)).first;
    return out;
}

void check_completion_conformance(Suite& s, const StoppedEndpoints& se)
{
    s.run_check("coupling.completion_conformance", [&](Check& c) {
        double worst_overshoot = 0.0;
        for (const MartingaleEndpoint& ep : se.endpoints)
            worst_overshoot =
                std::max(worst_overshoot, opnorm_sym(ep.QV) - 1.0);
        const ConformanceReport rep = gaussian_conformance(se.completed);
        const bool conf = rep.mean_linf <= 4.0 * rep.mean_se &&
                          rep.cov_dev_op <= 4.0 * rep.cov_se &&
                          std::abs(rep.gap_l1) <= 4.0 * rep.se_l1 &&
                          std::abs(rep.gap_l2) <= 4.0 * rep.se_l2 &&
                          std::abs(rep.gap_linf) <= 4.0 * rep.se_linf;
        c.pass = conf && worst_overshoot <= 1e-9;
        c.detail = "worst endpoint-variance overshoot " +
                   fmt6(worst_overshoot) + ", completed-sample worst sigma " +
                   fmt6(rep.worst_sigma) + " (limit 4)";
    });
}

void check_truncation_covariance(Suite& s)
{
    s.run_check("coupling.truncation_covariance", [&](Check& c) {
        struct Task {
            const char* label;
            ConvexRegion region;
        };
        const Task tasks[] = {
            {"interval", ConvexRegion::cube(1, 1.0)},
            {"cube3", ConvexRegion::cube(3, 1.0)},
            {"slab", ConvexRegion::slab(2, 0, 0.5)},
            {"halfspace",
             ConvexRegion::half_space(Eigen::VectorXd::Ones(1), 0.0)}};
        const long count = s.scaled(100000, 20000);
        double worst = 1e300;
        std::string worst_at = "none";
        for (int i = 0; i < 4; ++i) {
            RngStream stream(s.seed(), s.stream(12, i));
            const PsdOrderReport rep =
                brascamp_lieb_check(tasks[i].region, count, stream);
            const double slack =
                rep.margin_min_eig + 4.0 * rep.se_proxy;
            if (slack < worst) {
                worst = slack;
                worst_at = tasks[i].label;
            }
        }
        c.pass = worst >= 0.0;
        c.detail = "smallest covariance margin plus 4 se " + fmt6(worst) +
                   " at " + worst_at + " (must be >= 0)";
    });
}

void check_convex_dominance(Suite& s, const StoppedEndpoints& se)
{
    s.run_check("coupling.convex_dominance", [&](Check& c) {
        const long count = s.scaled(100000, 20000);
        RngStream h1(s.seed(), s.stream(13, 1));
        const GapReport cube_gap =
            harge_check(ConvexRegion::cube(3, 1.0), ConvexFunctional::l2(),
                        count, h1);
        RngStream h2(s.seed(), s.stream(13, 2));
        const GapReport slab_gap =
            harge_check(ConvexRegion::slab(2, 0, 0.5),
                        ConvexFunctional::linf(), count, h2);
        bool pass = cube_gap.gap <= 3.0 * cube_gap.gap_se &&
                    slab_gap.gap <= 3.0 * slab_gap.gap_se;

        Eigen::MatrixXd forms(2, 1);
        forms << 1.0, -0.5;
        const ConvexFunctional phis[] = {
            ConvexFunctional::l1(), ConvexFunctional::l2(),
            ConvexFunctional::linf(), ConvexFunctional::max_linear(forms)};
        double worst = -1e300;
        for (int k = 0; k < 4; ++k) {
            RngStream stream(s.seed(), s.stream(13, 8 + k));
            const DominanceReport rep =
                convex_dominance_check(se.endpoints, phis[k], stream);
            const double z = rep.gap / std::max(rep.gap_se, 1e-300);
            worst = std::max(worst, z);
            pass = pass && z <= 3.0;
        }
        c.pass = pass;
        c.detail = "truncation gaps z " +
                   fmt6(cube_gap.gap / std::max(cube_gap.gap_se, 1e-300)) +
                   "/" +
                   fmt6(slab_gap.gap / std::max(slab_gap.gap_se, 1e-300)) +
                   ", worst endpoint dominance z " + fmt6(worst) +
                   " (limit 3)";
    });
}

void check_contraction_psd(Suite& s)
{
    s.run_check("constants.contraction_psd", [&](Check& c) {
        RngStream stream(s.seed(), s.stream(14));
        const DistributionFamily family =
            DistributionFamily::product_exponential_centered(3);
        const Eigen::MatrixXd X =
            family.sample(s.scaled(20000, 4000), stream);
        const MomentSummary mm = moments(X, 3);
        const Eigen::MatrixXd M = mm.third->contraction();
        const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
        const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
        const double min_eig = min_eigenvalue_sym(M);
        const double tensor_defect = mm.third->max_symmetry_defect();
        c.pass = asym <= 1e-10 * scale && min_eig >= -1e-10 * scale &&
                 tensor_defect <= 1e-10 * scale;
        c.detail = "contraction asymmetry " + fmt6(asym) +
                   ", smallest eigenvalue " + fmt6(min_eig) +
                   ", tensor symmetry defect " + fmt6(tensor_defect);
    });
}

void check_tau_basis_invariance(Suite& s)
{
    s.run_check("constants.tau_basis_invariance", [&](Check& c) {
        const DistributionFamily family =
            DistributionFamily::product_exponential_centered(10);
        const long count = s.scaled(200000, 50000);
        const TauEstimate plain =
            estimate_tau(family, count, s.seed(), s.stream(15), s.threads());

        RngStream rstream(s.seed(), s.stream(15, 65536));
        Eigen::MatrixXd B(10, 10);
        for (int j = 0; j < 10; ++j) B.col(j) = rstream.gaussian_vector(10);
        const Eigen::MatrixXd Q =
            Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ();
        const TauEstimate rotated = estimate_tau(
            family, count, s.seed(), s.stream(15), s.threads(), &Q);

        const double tol = std::max(
            2.0 * std::hypot(plain.se_proxy, rotated.se_proxy), 1e-6);
        const double diff = std::abs(plain.tau - rotated.tau);
        c.pass = diff <= tol;
        c.detail = "rotation shift " + fmt6(diff) + " vs allowance " +
                   fmt6(tol);
    });
}

void check_sigma_gaussian(Suite& s)
{
    s.run_check("constants.sigma_gaussian", [&](Check& c) {
        const int dims[] = {1, 2, 8};
        const long count = s.scaled(100000, 20000);
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            const int n = dims[i];
            const SigmaEstimate est = estimate_sigma(
                DistributionFamily::standard_gaussian(n), count, s.seed(),
                s.stream(16, 16 * i), s.threads(), s.cfg().resamples);
            const double exact = double(n) - chi_mean(n) * chi_mean(n);
            const double halfwidth =
                std::max(0.5 * (est.ci_high - est.ci_low), 1e-300);
            worst = std::max(worst, std::abs(est.variance - exact) /
                                        halfwidth);
        }
        c.pass = worst <= 3.0;
        c.detail = "worst |sigma^2 error| in CI halfwidths " + fmt6(worst) +
                   " over n in {1,2,8} (limit 3)";
    });
}

void check_tau_rate(Suite& s)
{
    s.run_check("constants.tau_rate", [&](Check& c) {
        struct Task {
            const char* family;
            int n;
        };
        const Task tasks[] = {{"gaussian", 5}, {"cube", 3}};
        std::vector<long> counts = {10000, 100000, 1000000};
        if (s.quick()) counts.pop_back();
        const double final_cap = s.quick() ? 0.2 : 0.05;
        bool pass = true;
        std::string detail;
        for (int t = 0; t < 2; ++t) {
            const DistributionFamily family =
                DistributionFamily::by_name(tasks[t].family, tasks[t].n);
            std::vector<double> taus;
            for (std::size_t k = 0; k < counts.size(); ++k)
                taus.push_back(
                    estimate_tau(family, counts[k], s.seed(),
                                 s.stream(17, 262144 * (4 * t + k)),
                                 s.threads())
                        .tau);
            pass = pass && taus.front() <= 0.5 && taus.back() <= final_cap;
            for (std::size_t k = 0; k + 1 < taus.size(); ++k) {
                const double ratio = taus[k] / std::max(taus[k + 1], 1e-300);
                pass = pass && ratio >= 1.2 && ratio <= 8.0;
            }
            if (t) detail += ", ";
            detail += std::string(tasks[t].family) + " taus";
            for (double tau : taus) detail += " " + fmt6(tau);
        }
        c.pass = pass;
        c.detail = detail + " (decade ratios within [1.2,8], final <= " +
                   fmt6(final_cap) + ")";
    });
}

std::vector<NormSpec> gauge_catalog(std::uint64_t seed, std::uint64_t stream)
{
    RngStream rs(seed, stream);
    std::vector<NormSpec> specs;
    specs.push_back(NormSpec::lp(1.0, 5));
    specs.push_back(NormSpec::lp(2.0, 5));
    specs.push_back(NormSpec::lp(std::numeric_limits<double>::infinity(), 5));
    specs.push_back(NormSpec::lp(1.5, 5));
    Eigen::VectorXd w(5);
    for (int i = 0; i < 5; ++i) w[i] = std::abs(rs.next_gaussian()) + 0.5;
    specs.push_back(NormSpec::weighted_lp(2.0, w));
    Eigen::MatrixXd facet_rows(10, 5);
    facet_rows << Eigen::MatrixXd::Identity(5, 5),
        -Eigen::MatrixXd::Identity(5, 5);
    specs.push_back(NormSpec::facets(facet_rows));
    Eigen::MatrixXd vertex_cols(5, 10);
    vertex_cols << Eigen::MatrixXd::Identity(5, 5),
        -Eigen::MatrixXd::Identity(5, 5);
    specs.push_back(NormSpec::vertices(vertex_cols));
    Eigen::MatrixXd map = Eigen::MatrixXd::Identity(5, 5);
    for (int j = 0; j < 5; ++j)
        map.col(j) += 0.3 * rs.gaussian_vector(5);
    specs.push_back(NormSpec::linear_map(map));
    return specs;
}

void check_gauge_axioms(Suite& s)
{
    s.run_check("geometry.gauge_axioms", [&](Check& c) {
        const std::vector<NormSpec> specs =
            gauge_catalog(s.seed(), s.stream(18));
        const int pairs = s.quick() ? 200 : 1000;
        double worst_hom = 0.0, worst_tri = 0.0;
        RngStream stream(s.seed(), s.stream(18, 1));
        for (const NormSpec& spec : specs) {
            for (int trial = 0; trial < pairs; ++trial) {
                const Eigen::VectorXd x = stream.gaussian_vector(5);
                const Eigen::VectorXd y = stream.gaussian_vector(5);
                const double lambda = 2.0 * stream.next_gaussian();
                const double gx = gauge_eval(spec, x);
                const double gy = gauge_eval(spec, y);
                const double hom =
                    std::abs(gauge_eval(spec, lambda * x) -
                             std::abs(lambda) * gx) /
                    (1.0 + std::abs(lambda) * gx);
                const double tri =
                    (gauge_eval(spec, x + y) - gx - gy) / (1.0 + gx + gy);
                worst_hom = std::max(worst_hom, hom);
                worst_tri = std::max(worst_tri, tri);
            }
        }
        c.pass = worst_hom <= 1e-10 && worst_tri <= 1e-10;
        c.detail = "worst homogeneity defect " + fmt6(worst_hom) +
                   ", worst triangle excess " + fmt6(worst_tri) +
                   " over " + std::to_string(specs.size()) + " gauges";
    });
}

void check_polar_duality(Suite& s)
{
    s.run_check("geometry.polar_duality", [&](Check& c) {
        std::vector<NormSpec> specs = gauge_catalog(s.seed(), s.stream(18));
        specs.pop_back();  // the linear-map gauge has no computable polar
        const int pairs = s.quick() ? 100 : 500;
        double worst_holder = 0.0;
        RngStream stream(s.seed(), s.stream(19));
        for (const NormSpec& spec : specs) {
            const NormSpec dual = polar_gauge(spec);
            for (int trial = 0; trial < pairs; ++trial) {
                const Eigen::VectorXd x = stream.gaussian_vector(5);
                const Eigen::VectorXd y = stream.gaussian_vector(5);
                const double lhs = x.dot(y);
                const double rhs =
                    gauge_eval(spec, x) * gauge_eval(dual, y);
                worst_holder = std::max(
                    worst_holder, (lhs - rhs) / (1.0 + std::abs(rhs)));
            }
        }

        // Conjugate-exponent equality at the aligned dual point.
        double worst_eq = 0.0;
        for (double p : {1.5, 2.0}) {
            const NormSpec spec = NormSpec::lp(p, 5);
            const NormSpec dual = polar_gauge(spec);
            for (int trial = 0; trial < 50; ++trial) {
                const Eigen::VectorXd x = stream.gaussian_vector(5);
                Eigen::VectorXd y(5);
                for (int i = 0; i < 5; ++i)
                    y[i] = (x[i] < 0 ? -1.0 : 1.0) *
                           std::pow(std::abs(x[i]), p - 1.0);
                const double lhs = x.dot(y);
                const double rhs =
                    gauge_eval(spec, x) * gauge_eval(dual, y);
                worst_eq = std::max(worst_eq,
                                    std::abs(lhs - rhs) / (1.0 + lhs));
            }
        }
        c.pass = worst_holder <= 1e-10 && worst_eq <= 1e-9;
        c.detail = "worst pairing excess " + fmt6(worst_holder) +
                   ", worst aligned-equality defect " + fmt6(worst_eq);
    });
}

void check_width_identities(Suite& s)
{
    s.run_check("geometry.width_identities", [&](Check& c) {
        const MonteCarloValue unit =
            mean_width(NormSpec::lp(2.0, 7), 10000, s.seed(), s.stream(20),
                       s.threads());
        const bool exact_unit = unit.value == 1.0 && unit.se == 0.0;

        struct Task {
            std::string label;
            NormSpec spec;
        };
        std::vector<Task> tasks;
        tasks.push_back({"l1", NormSpec::lp(1.0, 5)});
        tasks.push_back(
            {"linf",
             NormSpec::lp(std::numeric_limits<double>::infinity(), 5)});
        Eigen::VectorXd w(5);
        w << 0.5, 1.0, 1.5, 2.0, 2.5;
        tasks.push_back({"weighted_l2", NormSpec::weighted_lp(2.0, w)});
        Eigen::MatrixXd cross(4, 8);
        cross << Eigen::MatrixXd::Identity(4, 4),
            -Eigen::MatrixXd::Identity(4, 4);
        tasks.push_back({"cross4", NormSpec::vertices(cross)});

        const long count = s.scaled(200000, 50000);
        double worst = 0.0;
        std::string worst_at = "none";
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const int n = tasks[i].spec.dimension();
            const MonteCarloValue width =
                mean_width(tasks[i].spec, count, s.seed(),
                           s.stream(20, 4096 * (i + 1)), s.threads());
            const MonteCarloValue gexp = gaussian_norm_expectation(
                tasks[i].spec, count, s.seed(),
                s.stream(20, 4096 * (i + 1) + 2048), s.threads());
            const double c_n = chi_mean(n);
            const double se =
                std::max(std::hypot(c_n * width.se, gexp.se), 1e-300);
            const double z = std::abs(c_n * width.value - gexp.value) / se;
            if (z > worst) {
                worst = z;
                worst_at = tasks[i].label;
            }
        }
        c.pass = exact_unit && worst <= 2.0;
        c.detail = std::string("unit-ball width ") +
                   (exact_unit ? "exact" : "off") +
                   ", worst width-vs-expectation z " + fmt6(worst) + " at " +
                   worst_at + " (limit 2)";
    });
}

void check_gaussian_ratio(Suite& s)
{
    s.run_check("geometry.gaussian_self_ratio", [&](Check& c) {
        std::vector<int> dims = {2, 10, 50};
        if (s.quick()) dims.pop_back();
        const char* norms[] = {"l1", "l2", "linf"};
        const long count = s.scaled(200000, 50000);
        double worst = 0.0;
        std::string worst_at = "none";
        for (std::size_t i = 0; i < dims.size(); ++i)
            for (int k = 0; k < 3; ++k) {
                const NormComparisonReport rep = compare_norms_experiment(
                    DistributionFamily::standard_gaussian(dims[i]),
                    norm_by_name(norms[k], dims[i]), count, s.seed(),
                    s.stream(21, 16384 * (3 * i + k)), s.cfg().big_constant,
                    0.0, s.threads());
                const double z = std::abs(rep.ratio - 1.0) /
                                 std::max(rep.ratio_se, 1e-300);
                if (z > worst) {
                    worst = z;
                    worst_at = std::string(norms[k]) + "@n=" +
                               std::to_string(dims[i]);
                }
            }
        c.pass = worst <= 2.0;
        c.detail = "worst |ratio-1| z-score " + fmt6(worst) + " at " +
                   worst_at + " (limit 2)";
    });
}

void check_body_lower_bounds(Suite& s)
{
    s.run_check("geometry.body_lower_bounds", [&](Check& c) {
        const char* bodies[] = {"cube", "ball"};
        const int dims[] = {3, 8};
        const long count = s.scaled(100000, 20000);
        double worst_gauge = 1e300, worst_polar = 1e300;
        for (int b = 0; b < 2; ++b)
            for (int d = 0; d < 2; ++d) {
                const CorollaryReport rep = corollary_checks(
                    body_by_name(bodies[b], dims[d]), count, s.seed(),
                    s.stream(22, 4096 * (2 * b + d)),
                    s.cfg().small_constant, 0.0, s.threads());
                worst_gauge = std::min(worst_gauge, rep.mean_gauge);
                worst_polar = std::min(
                    worst_polar, (rep.mean_polar + 2.0 * rep.se_polar) -
                                     double(dims[d]));
            }
        c.pass = worst_gauge >= 0.25 && worst_polar >= 0.0;
        c.detail = "smallest mean gauge " + fmt6(worst_gauge) +
                   " (limit 0.25), smallest polar slack vs n " +
                   fmt6(worst_polar) + " (must be >= 0)";
    });
}

void check_determinism(Suite& s)
{
    s.run_check("cli.determinism", [&](Check& c) {
        RunConfig tau_cfg;
        tau_cfg.subcommand = "tau";
        tau_cfg.seed = s.seed();
        tau_cfg.family = "exp";
        tau_cfg.n = 5;
        tau_cfg.samples = 20000;
        tau_cfg.threads = s.threads();
        const RunOutcome t1 = run_subcommand(tau_cfg);
        const RunOutcome t2 = run_subcommand(tau_cfg);

        RunConfig loc_cfg;
        loc_cfg.subcommand = "localize";
        loc_cfg.seed = s.seed();
        loc_cfg.measure = "twopoint";
        loc_cfg.paths = 200;
        loc_cfg.observe_times = {0.5};
        loc_cfg.threads = 1;
        const RunOutcome l1 = run_subcommand(loc_cfg);
        loc_cfg.threads = 8;
        const RunOutcome l8 = run_subcommand(loc_cfg);

        const bool rerun_ok = t1.text == t2.text;
        const bool thread_ok = l1.text == l8.text;
        c.pass = rerun_ok && thread_ok;
        c.detail = std::string("rerun bytes ") +
                   (rerun_ok ? "identical" : "differ") +
                   ", thread-count bytes " +
                   (thread_ok ? "identical" : "differ");
    });
}

RunOutcome do_verify(const RunConfig& cfg)
{
    require(cfg.profile == "quick" || cfg.profile == "full",
            "profile must be quick or full");
    Suite suite(cfg, cfg.profile == "quick");

    check_isotropize_fixed_point(suite);
    check_transport_triangle(suite);
    check_moment_convergence(suite);
    check_symmetric_third_moments(suite);

    check_step_invariants(suite);
    {
        const TwoPointBatch batch = run_twopoint_batch(suite);
        check_martingale_mean(suite, batch);
        check_trace_decay(suite, batch);
    }
    check_grid_opnorm_bound(suite);
    check_threshold_stopping(suite);
    check_terminal_law(suite);

    check_completion_identity(suite);
    {
        const StoppedEndpoints se = run_stopped_endpoints(suite);
        check_completion_conformance(suite, se);
        check_convex_dominance(suite, se);
    }
    check_truncation_covariance(suite);

    check_contraction_psd(suite);
    check_tau_basis_invariance(suite);
    check_sigma_gaussian(suite);
    check_tau_rate(suite);

    check_gauge_axioms(suite);
    check_polar_duality(suite);
    check_width_identities(suite);
    check_gaussian_ratio(suite);
    check_body_lower_bounds(suite);

    check_determinism(suite);

    long failed = 0;
    for (const Check& c : suite.checks)
        if (!c.pass) ++failed;

    if (cfg.format == "csv") {
        std::string out = csv_prefix(cfg);
        out += "name,pass,detail\n";
        for (const Check& c : suite.checks) {
            out += c.name;
            out += c.pass ? ",1," : ",0,";
            out += '"' + c.detail + "\"\n";
        }
        return {failed ? 3 : 0, out};
    }

    json checks = json::array();
    for (const Check& c : suite.checks)
        checks.push_back(
            {{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    json jr;
    jr["profile"] = cfg.profile;
    jr["checks"] = std::move(checks);
    jr["total"] = suite.checks.size();
    jr["failed"] = failed;
    jr["passed"] = suite.checks.size() - failed;
    return {failed ? 3 : 0, wrap_json(cfg, std::move(jr))};
}

}  // namespace

// ---------------------------------------------------------------- catalogs

bool is_grid_measure_name(const std::string& name)
{
    return name == "grid-gaussian" || name == "grid-interval" ||
           name == "grid-slab";
}

DiscreteMeasure catalog_measure(const std::string& name)
{
    if (name == "twopoint") return two_point_measure(0.5);
    if (name == "twopoint-skew") return two_point_measure(0.3);
    if (name == "threeatom") {
        Eigen::MatrixXd atoms(1, 3);
        atoms << -0.9, 0.1, 2.1;
        Eigen::VectorXd weights(3);
        weights << 0.5, 0.3, 0.2;
        return DiscreteMeasure(atoms, weights);
    }
    if (name == "fouratom") {
        Eigen::MatrixXd atoms(2, 4);
        atoms << 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0;
        Eigen::VectorXd weights(4);
        weights << 0.1, 0.2, 0.3, 0.4;
        return DiscreteMeasure(atoms, weights);
    }
    if (is_grid_measure_name(name))
        throw InputError("catalog_measure: " + name +
                         " is a lattice measure; use catalog_grid");
    throw InputError("unknown measure name: " + name);
}

GridMeasure catalog_grid(const std::string& name)
{
    if (name == "grid-gaussian")
        return discretize_density(
            [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); },
            {{-6.0, 6.0}}, {512});
    if (name == "grid-interval")
        return discretize_density(
            [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); },
            {{-1.0, 1.0}}, {256});
    if (name == "grid-slab")
        return discretize_density(
            [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); },
            {{-1.0, 1.0}, {-5.0, 5.0}}, {24, 96});
    throw InputError("unknown lattice measure name: " + name);
}

NormSpec norm_by_name(const std::string& name, int n)
{
    if (name == "l1") return NormSpec::lp(1.0, n);
    if (name == "l2") return NormSpec::lp(2.0, n);
    if (name == "linf")
        return NormSpec::lp(std::numeric_limits<double>::infinity(), n);
    throw InputError("unknown norm name: " + name +
                     " (expected l1, l2 or linf)");
}

BodySpec body_by_name(const std::string& name, int n)
{
    if (name == "cube") return make_isotropic_cube_body(n);
    if (name == "ball") return make_isotropic_ball_body(n);
    throw InputError("unknown body name: " + name +
                     " (expected cube or ball)");
}

RunOutcome run_subcommand(const RunConfig& cfg)
{
    require(cfg.n >= 1 && cfg.n <= 512, "n must be in [1, 512]");
    require(cfg.samples >= 1, "samples must be positive");
    require(cfg.paths >= 1, "paths must be positive");
    require(std::isfinite(cfg.dt) && cfg.dt > 0.0 && cfg.dt <= 0.5,
            "dt must lie in (0, 0.5]");
    require(cfg.format == "json" || cfg.format == "csv",
            "format must be json or csv");

    if (cfg.subcommand == "localize") return do_localize(cfg);
    if (cfg.subcommand == "stopped") return do_stopped(cfg);
    if (cfg.subcommand == "tau") return do_tau(cfg);
    if (cfg.subcommand == "sigma") return do_sigma(cfg);
    if (cfg.subcommand == "widths") return do_widths(cfg);
    if (cfg.subcommand == "compare") return do_compare(cfg);
    if (cfg.subcommand == "verify") return do_verify(cfg);
    throw InputError("unknown subcommand: " + cfg.subcommand);
}

}  // namespace sloc
