#ifndef SLOC_LOCALIZATION_HPP
#define SLOC_LOCALIZATION_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sloc/errors.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"

namespace sloc {

// Measure-valued diffusion on a fixed atom set.  The state tracks the
// log-weights of the atoms together with running moments and the three
// path integrals the analysis needs: B_accum = int inv(A_s) ds,
// qv_accum = int A_s ds (quadratic variation of the barycenter) and the
// scalar opnorm_integral = int ||A_s||_op ds used by threshold stopping.
struct LocalizationState {
    double t = 0.0;
    Eigen::VectorXd log_weights;  // normalized: logsumexp == 0
    Eigen::VectorXd a;            // barycenter
    Eigen::MatrixXd A;            // covariance
    Eigen::MatrixXd B_accum;
    Eigen::MatrixXd qv_accum;
    double opnorm_integral = 0.0;
    double opnorm_A = 0.0;        // largest eigenvalue of the current A
    double trace_A0 = 0.0;        // trace of the initial covariance
    bool collapsed = false;
    long leaf_steps = 0;          // committed updates, substeps included
    long forced_substeps = 0;     // substeps accepted at the halving depth cap
};

struct TraceRecord {
    double t = 0.0;
    Eigen::VectorXd a;
    double trace_A = 0.0;
    double opnorm_A = 0.0;
    double trace_qv = 0.0;
};

enum class StopCause { None, Horizon, Threshold, Collapse };

struct PathTrace {
    std::vector<TraceRecord> records;
    Eigen::Index terminal_atom = -1;  // argmax weight at termination
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    StopCause cause = StopCause::None;
    LocalizationState final_state;
};

// Why a run ended: a fixed horizon, the first time the op-norm integral
// reaches theta, or weight collapse onto a single atom.  Collapse and the
// safety horizon are always armed regardless of kind.
struct StoppingRule {
    enum class Kind { FixedHorizon, OpNormIntegralThreshold, Collapse };
    Kind kind = Kind::FixedHorizon;
    double t_max = 12.0;
    double theta = 1.0;

    static StoppingRule fixed_horizon(double t_max);
    static StoppingRule opnorm_threshold(double theta, double horizon = 12.0);
    static StoppingRule until_collapse(double horizon = 12.0);
};

// Numerical policy for the scheme.  dt is the outer step; a step whose
// largest log-weight change (among atoms heavier than halve_weight_floor)
// exceeds halve_abs_log is split in two via a Brownian bridge, recursively
// up to max_halvings.
struct StepControl {
    double dt = 1e-3;
    double collapse_eps = 1e-6;       // collapse when max weight > 1 - eps
    double trace_floor_ratio = 1e-8;  // ... or tr A < ratio * tr A0
    double eig_floor = 1e-10;         // eigenvalues below this inject no noise
    double halve_abs_log = 1.0;
    int max_halvings = 20;
    double halve_weight_floor = 1e-12;
    long max_leaf_steps = 8000000;    // per-path budget; exceeded -> error
};

LocalizationState init(const DiscreteMeasure& mu, const StepControl& ctl = {});
LocalizationState init(const GridMeasure& grid, const StepControl& ctl = {});

// One committed update with an explicit Brownian increment of variance dt
// per coordinate.  Log-weight update, renormalization, moment recomputation
// and left-rectangle accumulation of the three path integrals.  A collapsed
// state is returned unchanged.  No adaptive halving at this level.
void step(const DiscreteMeasure& mu, LocalizationState& state, double dt,
          const Eigen::VectorXd& dW, const StepControl& ctl = {});

// Step-budget exhaustion; carries whatever was recorded before the budget
// ran out so callers can diagnose the path.
class TruncationError : public NumericalError {
public:
    TruncationError(const std::string& what, PathTrace partial);
    const PathTrace& partial() const { return partial_; }

private:
    PathTrace partial_;
};

// Drive one path from `start` until the rule fires.  Records at every
// record_stride-th outer step, or exactly at `record_times` (grid-snapped)
// when provided; the initial and final states are always recorded.  The
// threshold rule takes a shortened, noise-rescaled final step so the
// op-norm integral lands on theta instead of overshooting it.
PathTrace run(const DiscreteMeasure& mu, LocalizationState start,
              const StoppingRule& rule, const StepControl& ctl,
              RngStream& stream, int record_stride = 1,
              const std::vector<double>* record_times = nullptr);
PathTrace run(const DiscreteMeasure& mu, const StoppingRule& rule,
              const StepControl& ctl, RngStream& stream,
              int record_stride = 1,
              const std::vector<double>* record_times = nullptr);

struct BatchObservation {
    double t = 0.0;
    double mean_trace_A = 0.0;
    double se_trace_A = 0.0;
    double t2_to_initial = 0.0;   // exact transport cost, quantized endpoints
    double quantize_pitch = 0.0;  // 0 when no quantization was needed
};

struct BatchReport {
    std::vector<BatchObservation> observations;
    std::vector<double> terminal_frequency;  // per atom, argmax at the end
    double chi_square_pvalue = 1.0;
    long paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;
    std::vector<double> cause_fraction;  // indexed by StopCause
    std::vector<PathTrace> traces;       // only when keep_traces
};

struct BatchOptions {
    std::vector<double> observe_times;
    bool compute_t2 = true;
    bool keep_traces = false;
    unsigned threads = 0;  // 0 = hardware default
};

// Independent paths on disjoint streams (stream_base + path index), reduced
// in path order: the report is identical for any thread count.
BatchReport batch_run(const DiscreteMeasure& mu, const StoppingRule& rule,
                      const StepControl& ctl, long paths, std::uint64_t seed,
                      std::uint64_t stream_base, const BatchOptions& options);

// Least-squares residual of representing the accumulated log-weight change
// as a quadratic form: log(w_t/w_0)(x) ~ c + <b,x> - x'Bx/2 with B fixed
// to B_accum and (c, b) fitted over the support atoms.  Returns the RMS
// residual over those atoms.
double tilt_residual(const DiscreteMeasure& mu, const LocalizationState& state);

struct DecayDiagnostic {
    double slope = 0.0;      // d/dt of log mean opnorm, least squares
    double intercept = 0.0;
    double sup_ratio = 0.0;  // sup_t e^t * mean opnorm(t) / opnorm(0)
};

// Fit of the operator-norm decay over >= 100 traces sharing a time grid.
DecayDiagnostic decay_diagnostic(const std::vector<PathTrace>& traces);

struct StoppedReport {
    double theta = 0.0;
    long paths = 0;
    double threshold_fraction = 0.0;
    double collapse_fraction = 0.0;
    double horizon_fraction = 0.0;
    // Norms of the barycenter displacement a_T - a_0.
    double mean_l1 = 0.0, se_l1 = 0.0;
    double mean_l2 = 0.0, se_l2 = 0.0;
    double mean_linf = 0.0, se_linf = 0.0;
    double max_qv_eigenvalue = 0.0;  // over paths, before any scaling
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;
    std::vector<Eigen::VectorXd> displacement;  // per path
    std::vector<Eigen::MatrixXd> qv;            // per path
};

// Threshold-stopped ensemble: each path stops when the op-norm integral
// reaches theta (or collapses / hits the safety horizon first).  The
// displacement/qv pairs feed the coupling construction downstream.
StoppedReport stopped_run(const DiscreteMeasure& mu, double theta,
                          const StepControl& ctl, long paths,
                          std::uint64_t seed, std::uint64_t stream_base,
                          unsigned threads = 0);

}  // namespace sloc

#endif  // SLOC_LOCALIZATION_HPP
