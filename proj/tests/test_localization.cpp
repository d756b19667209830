#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle_helpers.hpp"
#include "sloc/errors.hpp"
#include "sloc/localization.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"
#include "sloc/runner.hpp"
#include "sloc/stats.hpp"

using namespace sloc;

TEST_CASE("single committed update matches a scalar reimplementation")
{
    // Three atoms on the line, explicit increment, one public step.  The
    // reference side recomputes the exponential-martingale tilt with plain
    // scalar arithmetic.
    Eigen::MatrixXd atoms(1, 3);
    atoms << -1.0, 0.5, 2.0;
    Eigen::VectorXd w(3);
    w << 0.5, 0.3, 0.2;
    const DiscreteMeasure mu(atoms, w);
    const StepControl ctl;
    LocalizationState s = init(mu, ctl);

    const double a0 = -1.0 * 0.5 + 0.5 * 0.3 + 2.0 * 0.2;
    double A0 = 0.0;
    for (int j = 0; j < 3; ++j)
        A0 += w[j] * std::pow(atoms(0, j) - a0, 2);
    CHECK(s.a[0] == doctest::Approx(a0).epsilon(1e-14));
    CHECK(s.A(0, 0) == doctest::Approx(A0).epsilon(1e-14));
    CHECK(s.log_weights.array().exp().sum() ==
          doctest::Approx(1.0).epsilon(1e-12));

    const double dt = 1e-3;
    Eigen::VectorXd dW(1);
    dW << 0.0137;  // any fixed increment of the right variance scale
    step(mu, s, dt, dW, ctl);

    // Scalar reference: dlog w_j = z_j dW - (dt/2) z_j^2 with
    // z_j = (x_j - a) / sqrt(A), then renormalize.
    double lw[3], mx = -1e300;
    for (int j = 0; j < 3; ++j) {
        const double z = (atoms(0, j) - a0) / std::sqrt(A0);
        lw[j] = std::log(w[j]) + z * dW[0] - 0.5 * dt * z * z;
        mx = std::max(mx, lw[j]);
    }
    double Z = 0.0;
    for (double v : lw) Z += std::exp(v - mx);
    double wref[3], aref = 0.0;
    for (int j = 0; j < 3; ++j) {
        wref[j] = std::exp(lw[j] - mx) / Z;
        aref += wref[j] * atoms(0, j);
    }
    double Aref = 0.0;
    for (int j = 0; j < 3; ++j)
        Aref += wref[j] * std::pow(atoms(0, j) - aref, 2);

    for (int j = 0; j < 3; ++j)
        CHECK(std::exp(s.log_weights[j]) ==
              doctest::Approx(wref[j]).epsilon(1e-12));
    CHECK(s.a[0] == doctest::Approx(aref).epsilon(1e-12));
    CHECK(s.A(0, 0) == doctest::Approx(Aref).epsilon(1e-12));
    CHECK(s.t == doctest::Approx(dt));
    // Left-rectangle integrals use the pre-step operators.
    CHECK(s.qv_accum(0, 0) == doctest::Approx(dt * A0).epsilon(1e-14));
    CHECK(s.B_accum(0, 0) == doctest::Approx(dt / A0).epsilon(1e-14));
    CHECK(s.opnorm_integral == doctest::Approx(dt * A0).epsilon(1e-14));
    CHECK(s.leaf_steps == 1);
}

TEST_CASE("two-point runs keep the exact variance identity")
{
    // Mass w at +1 and 1-w at -1 forces A = 1 - a^2 at every instant; the
    // recorded pairs must satisfy it to round-off, whatever the path did.
    const DiscreteMeasure mu = two_point_measure(0.35);
    const StepControl ctl;
    RngStream stream(31, 5);
    const PathTrace tr =
        run(mu, StoppingRule::fixed_horizon(1.5), ctl, stream, 10);
    REQUIRE(tr.records.size() > 1);
    for (const auto& r : tr.records)
        CHECK(std::abs(r.trace_A - (1.0 - r.a[0] * r.a[0])) < 1e-9);
    CHECK(tr.records.front().t == 0.0);
    CHECK(tr.records.back().t <= 1.5 + 1e-12);
    for (std::size_t i = 1; i < tr.records.size(); ++i)
        CHECK(tr.records[i].t > tr.records[i - 1].t);
}

TEST_CASE("barycenter martingale and trace decay in a batch")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    BatchOptions opt;
    opt.observe_times = {0.5, 1.0};
    opt.compute_t2 = false;
    opt.threads = 1;
    const BatchReport rep =
        batch_run(mu, StoppingRule::until_collapse(4.0), StepControl{}, 600,
                  2026, 0, opt);
    REQUIRE(rep.observations.size() == 2);
    for (const auto& o : rep.observations) {
        const double want = std::exp(-o.t);
        CHECK(std::abs(o.mean_trace_A - want) < 4.0 * o.se_trace_A);
    }
    const double horizon = rep.cause_fraction[size_t(StopCause::Horizon)];
    const double collapse = rep.cause_fraction[size_t(StopCause::Collapse)];
    CHECK(horizon + collapse == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(collapse > 0.8);  // most symmetric two-point paths die by t=4
    CHECK(rep.chi_square_pvalue > 1e-3);
}

TEST_CASE("threshold stopping lands exactly and bounds the quadratic variation")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    const double theta = 0.3;
    StepControl ctl;
    RngStream stream(12, 2);
    const PathTrace tr =
        run(mu, StoppingRule::opnorm_threshold(theta, 10.0), ctl, stream, 0);
    if (tr.cause == StopCause::Threshold) {
        CHECK(tr.final_state.opnorm_integral == doctest::Approx(theta).epsilon(1e-12));
        CHECK(tr.final_state.qv_accum(0, 0) <= theta + 1e-9);
    }
    const StoppedReport rep =
        stopped_run(mu, theta, ctl, 300, 2026, 0, 1);
    CHECK(rep.paths == 300);
    CHECK(rep.threshold_fraction + rep.collapse_fraction +
              rep.horizon_fraction == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.max_qv_eigenvalue <= theta + 1e-9);
    CHECK(int(rep.displacement.size()) == 300);
    CHECK(int(rep.qv.size()) == 300);
    // Displacements of a bounded-support measure stay in its hull.
    for (const auto& d : rep.displacement) CHECK(std::abs(d[0]) <= 2.0 + 1e-9);
}

TEST_CASE("collapse freezes the path on one atom")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    StepControl ctl;
    RngStream stream(77, 0);
    const PathTrace tr =
        run(mu, StoppingRule::until_collapse(12.0), ctl, stream, 0);
    REQUIRE(tr.cause == StopCause::Collapse);
    REQUIRE(tr.terminal_atom >= 0);
    const double landed = tr.records.back().a[0];
    CHECK(std::abs(std::abs(landed) - 1.0) < 1e-3);
    CHECK(tr.records.back().trace_A < 1e-3);
    const double atom = mu.atom(tr.terminal_atom)[0];
    CHECK(std::abs(landed - atom) < 1e-3);
}

TEST_CASE("batch reports are identical across thread counts")
{
    const DiscreteMeasure mu = catalog_measure("fouratom");
    BatchOptions o1;
    o1.observe_times = {0.5};
    o1.compute_t2 = true;
    o1.threads = 1;
    BatchOptions o4 = o1;
    o4.threads = 4;
    const auto r1 = batch_run(mu, StoppingRule::until_collapse(2.0),
                              StepControl{}, 120, 9, 0, o1);
    const auto r4 = batch_run(mu, StoppingRule::until_collapse(2.0),
                              StepControl{}, 120, 9, 0, o4);
    REQUIRE(r1.observations.size() == r4.observations.size());
    for (std::size_t i = 0; i < r1.observations.size(); ++i) {
        CHECK(r1.observations[i].mean_trace_A == r4.observations[i].mean_trace_A);
        CHECK(r1.observations[i].se_trace_A == r4.observations[i].se_trace_A);
        CHECK(r1.observations[i].t2_to_initial == r4.observations[i].t2_to_initial);
    }
    CHECK(r1.terminal_frequency == r4.terminal_frequency);
    CHECK(r1.chi_square_pvalue == r4.chi_square_pvalue);
}

TEST_CASE("record times snap to the step grid")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    StepControl ctl;
    ctl.dt = 1e-2;
    RngStream stream(3, 3);
    const std::vector<double> marks = {0.25, 0.5, 0.75};
    const PathTrace tr = run(mu, StoppingRule::fixed_horizon(1.0), ctl,
                             stream, 0, &marks);
    for (double m : marks) {
        bool seen = false;
        for (const auto& r : tr.records)
            seen = seen || std::abs(r.t - m) < ctl.dt / 2.0;
        if (tr.cause == StopCause::Horizon) CHECK(seen);
    }
}

TEST_CASE("lattice gaussian start decays like the scalar law")
{
    // For a discretized standard Gaussian the covariance path is
    // deterministic; one path suffices, checked against a Runge-Kutta
    // integration of y' = -y and against the closed exponential.
    const GridMeasure grid = catalog_grid("grid-gaussian");
    const DiscreteMeasure mu = grid.to_discrete();
    StepControl ctl;
    RngStream stream(1, 0);
    const PathTrace tr =
        run(mu, StoppingRule::fixed_horizon(1.0), ctl, stream, 50);
    REQUIRE(tr.cause == StopCause::Horizon);
    const double A0 = tr.records.front().trace_A;
    CHECK(A0 == doctest::Approx(1.0).epsilon(2e-3));
    for (const auto& r : tr.records) {
        const double want = oracle::rk4_exponential_decay(A0, r.t);
        CHECK(std::abs(want - A0 * std::exp(-r.t)) < 1e-10);
        CHECK(r.trace_A == doctest::Approx(want).epsilon(0.01));
    }
}

TEST_CASE("tilt residual stays at round-off for a short run")
{
    const DiscreteMeasure mu = catalog_measure("threeatom");
    StepControl ctl;
    RngStream stream(5, 9);
    const PathTrace tr =
        run(mu, StoppingRule::fixed_horizon(0.2), ctl, stream, 0);
    CHECK(tilt_residual(mu, tr.final_state) < 1e-6);
}

TEST_CASE("step budget exhaustion reports the partial path")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    StepControl ctl;
    ctl.max_leaf_steps = 37;
    RngStream stream(8, 0);
    try {
        run(mu, StoppingRule::fixed_horizon(5.0), ctl, stream, 0);
        FAIL("expected the step budget to run out");
    } catch (const TruncationError& e) {
        CHECK(e.partial().final_state.leaf_steps == 37);
        CHECK(!e.partial().records.empty());
    }
}

TEST_CASE("invalid numerics are rejected")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    LocalizationState s = init(mu);
    Eigen::VectorXd bad(1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(mu, s, 1e-3, bad), sloc::Error);
    Eigen::VectorXd wrong(2);
    wrong << 0.0, 0.0;
    CHECK_THROWS_AS(step(mu, s, 1e-3, wrong), sloc::Error);
    StepControl ctl;
    ctl.dt = -1.0;
    RngStream stream(1, 0);
    CHECK_THROWS_AS(
        run(mu, StoppingRule::fixed_horizon(1.0), ctl, stream, 0), sloc::Error);
}

TEST_CASE("decay diagnostic on aligned traces")
{
    const DiscreteMeasure mu = two_point_measure(0.5);
    BatchOptions opt;
    opt.observe_times = {0.25, 0.5, 0.75, 1.0};
    opt.compute_t2 = false;
    opt.keep_traces = true;
    opt.threads = 1;
    const BatchReport rep = batch_run(
        mu, StoppingRule::fixed_horizon(1.0), StepControl{}, 150, 4, 0, opt);
    REQUIRE(int(rep.traces.size()) == 150);
    // Resample every trace onto the shared mark grid so collapsed paths
    // keep contributing their frozen values.
    std::vector<PathTrace> aligned = rep.traces;
    for (auto& tr : aligned) {
        std::vector<TraceRecord> out;
        for (double m : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const TraceRecord* best = &tr.records.front();
            for (const auto& r : tr.records)
                if (r.t <= m + 5e-4) best = &r;
            TraceRecord c = *best;
            c.t = m;
            out.push_back(std::move(c));
        }
        tr.records = std::move(out);
    }
    const DecayDiagnostic d = decay_diagnostic(aligned);
    CHECK(d.slope == doctest::Approx(-1.0).epsilon(0.25));
    CHECK(d.sup_ratio < 1.35);
}
