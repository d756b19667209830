#include "sloc/report.hpp"

#include <cmath>
#include <cstdio>

namespace sloc {

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json vec_json(const Eigen::VectorXd& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

const char* cause_name(std::size_t index)
{
    switch (index) {
        case 0: return "none";
        case 1: return "horizon";
        case 2: return "threshold";
        case 3: return "collapse";
    }
    return "unknown";
}

}  // namespace

nlohmann::json report_json(const BatchObservation& obs)
{
    return {{"t", obs.t},
            {"mean_trA", obs.mean_trace_A},
            {"se_trA", obs.se_trace_A},
            {"t2_to_mu", obs.t2_to_initial},
            {"quantize_pitch", obs.quantize_pitch}};
}

nlohmann::json report_json(const BatchReport& rep)
{
    nlohmann::json time_grid = nlohmann::json::array();
    nlohmann::json mean_trA = nlohmann::json::array();
    nlohmann::json t2_to_mu = nlohmann::json::array();
    nlohmann::json observations = nlohmann::json::array();
    for (const BatchObservation& obs : rep.observations) {
        time_grid.push_back(obs.t);
        mean_trA.push_back(obs.mean_trace_A);
        t2_to_mu.push_back(obs.t2_to_initial);
        observations.push_back(report_json(obs));
    }
    nlohmann::json causes;
    for (std::size_t i = 0; i < rep.cause_fraction.size(); ++i)
        causes[cause_name(i)] = rep.cause_fraction[i];
    return {{"time_grid", time_grid},
            {"mean_trA", mean_trA},
            {"t2_to_mu", t2_to_mu},
            {"observations", observations},
            {"terminal_frequencies", rep.terminal_frequency},
            {"chi_square_pvalue", rep.chi_square_pvalue},
            {"paths", rep.paths},
            {"stop_causes", causes},
            {"seeds", {{"seed", rep.seed}, {"stream_base", rep.stream_base}}}};
}

nlohmann::json report_json(const StoppedReport& rep)
{
    return {{"theta", rep.theta},
            {"paths", rep.paths},
            {"fractions",
             {{"threshold", rep.threshold_fraction},
              {"collapse", rep.collapse_fraction},
              {"horizon", rep.horizon_fraction}}},
            {"displacement_norms",
             {{"l1", {{"mean", rep.mean_l1}, {"se", rep.se_l1}}},
              {"l2", {{"mean", rep.mean_l2}, {"se", rep.se_l2}}},
              {"linf", {{"mean", rep.mean_linf}, {"se", rep.se_linf}}}}},
            {"max_qv_eigenvalue", rep.max_qv_eigenvalue},
            {"seeds",
             {{"seed", rep.seed}, {"stream_base", rep.stream_base}}}};
}

nlohmann::json report_json(const DecayDiagnostic& diag)
{
    return {{"slope", diag.slope},
            {"intercept", diag.intercept},
            {"sup_ratio", diag.sup_ratio}};
}

nlohmann::json report_json(const ConformanceReport& rep)
{
    const nlohmann::json deviations = {
        {"mean_linf", rep.mean_linf},
        {"cov_dev_op", rep.cov_dev_op},
        {"gap_l1", rep.gap_l1},
        {"gap_l2", rep.gap_l2},
        {"gap_linf", rep.gap_linf},
        {"worst_sigma", rep.worst_sigma}};
    const nlohmann::json thresholds = {
        {"mean_linf", 4.0 * rep.mean_se},
        {"cov_dev_op", 4.0 * rep.cov_se},
        {"gap_l1", 4.0 * rep.se_l1},
        {"gap_l2", 4.0 * rep.se_l2},
        {"gap_linf", 4.0 * rep.se_linf}};
    const bool pass = rep.mean_linf <= 4.0 * rep.mean_se &&
                      rep.cov_dev_op <= 4.0 * rep.cov_se &&
                      std::abs(rep.gap_l1) <= 4.0 * rep.se_l1 &&
                      std::abs(rep.gap_l2) <= 4.0 * rep.se_l2 &&
                      std::abs(rep.gap_linf) <= 4.0 * rep.se_linf;
    return {{"n", rep.n},
            {"count", rep.count},
            {"deviations", deviations},
            {"thresholds", thresholds},
            {"references",
             {{"l1", rep.ref_l1}, {"l2", rep.ref_l2}, {"linf", rep.ref_linf}}},
            {"pass", pass}};
}

nlohmann::json report_json(const DominanceReport& rep)
{
    return {{"mean_endpoint", rep.mean_endpoint},
            {"se_endpoint", rep.se_endpoint},
            {"mean_gaussian", rep.mean_gaussian},
            {"se_gaussian", rep.se_gaussian},
            {"gap", rep.gap},
            {"gap_se", rep.gap_se},
            {"count", rep.count}};
}

nlohmann::json report_json(const PsdOrderReport& rep)
{
    return {{"n", rep.n},
            {"count", rep.count},
            {"margin_min_eig", rep.margin_min_eig},
            {"se_proxy", rep.se_proxy},
            {"coordinate_variance", vec_json(rep.coordinate_variance)}};
}

nlohmann::json report_json(const GapReport& rep)
{
    return {{"lhs", rep.lhs},         {"se_lhs", rep.se_lhs},
            {"rhs", rep.rhs},         {"se_rhs", rep.se_rhs},
            {"gap", rep.gap},         {"gap_se", rep.gap_se},
            {"count", rep.count}};
}

nlohmann::json report_json(const SigmaEstimate& est)
{
    return {{"family", est.family},
            {"n", est.n},
            {"N", est.count},
            {"estimate", est.variance},
            {"ci", {est.ci_low, est.ci_high}},
            {"seed", est.seed}};
}

nlohmann::json report_json(const TauEstimate& est)
{
    return {{"family", est.family},
            {"n", est.n},
            {"N", est.count},
            {"estimate", est.tau},
            {"tau_squared", est.tau_squared},
            {"direction", vec_json(est.direction)},
            {"se_proxy", est.se_proxy},
            {"power_iterations", est.power_iterations},
            {"seed", est.seed}};
}

nlohmann::json report_json(const RestrictedNormReport& rep)
{
    return {{"ratio", rep.ratio},
            {"event_probability", rep.event_probability},
            {"restricted_mean", rep.restricted_mean},
            {"full_mean", rep.full_mean},
            {"count", rep.count},
            {"event_count", rep.event_count}};
}

nlohmann::json report_json(const MonteCarloValue& value)
{
    return {{"value", value.value}, {"se", value.se}, {"count", value.count}};
}

nlohmann::json report_json(const NormComparisonReport& rep)
{
    return {{"family", rep.family},
            {"norm", rep.norm},
            {"n", rep.n},
            {"count", rep.count},
            {"E_X", {{"mean", rep.mean_family}, {"se", rep.se_family}}},
            {"E_Gamma", {{"mean", rep.mean_gaussian}, {"se", rep.se_gaussian}}},
            {"ratio", {{"value", rep.ratio}, {"se", rep.ratio_se}}},
            {"tau_hat", rep.tau_hat},
            {"bound", rep.bound}};
}

nlohmann::json report_json(const CorollaryReport& rep)
{
    return {{"body", rep.body},
            {"n", rep.n},
            {"count", rep.count},
            {"mean_gauge", {{"mean", rep.mean_gauge}, {"se", rep.se_gauge}}},
            {"mean_polar", {{"mean", rep.mean_polar}, {"se", rep.se_polar}}},
            {"width_M", {{"mean", rep.width_M}, {"se", rep.width_M_se}}},
            {"width_Mstar",
             {{"mean", rep.width_Mstar}, {"se", rep.width_Mstar_se}}},
            {"lower_i", rep.lower_i},
            {"lower_ii", rep.lower_ii},
            {"small_constant", rep.small_constant},
            {"tau_hat", rep.tau_hat}};
}

nlohmann::json error_json(const std::string& kind, const std::string& message)
{
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

std::string trace_csv(const PathTrace& trace)
{
    std::string out = "t";
    const Eigen::Index n =
        trace.records.empty() ? 0 : trace.records.front().a.size();
    for (Eigen::Index i = 1; i <= n; ++i)
        out += ",a_" + std::to_string(i);
    out += ",trA,opA,trQV\n";
    for (const TraceRecord& rec : trace.records) {
        out += num(rec.t);
        for (Eigen::Index i = 0; i < n; ++i) out += "," + num(rec.a[i]);
        out += "," + num(rec.trace_A);
        out += "," + num(rec.opnorm_A);
        out += "," + num(rec.trace_qv);
        out += "\n";
    }
    return out;
}

std::string sigma_csv(const std::vector<SigmaEstimate>& rows)
{
    std::string out = "family,n,N,estimate,ci_low,ci_high,seed\n";
    for (const SigmaEstimate& r : rows) {
        out += r.family + "," + std::to_string(r.n) + "," +
               std::to_string(r.count) + "," + num(r.variance) + "," +
               num(r.ci_low) + "," + num(r.ci_high) + "," +
               std::to_string(r.seed) + "\n";
    }
    return out;
}

std::string tau_csv(const std::vector<TauEstimate>& rows)
{
    std::string out = "family,n,N,estimate,se_proxy,seed\n";
    for (const TauEstimate& r : rows) {
        out += r.family + "," + std::to_string(r.n) + "," +
               std::to_string(r.count) + "," + num(r.tau) + "," +
               num(r.se_proxy) + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

std::string compare_csv(const std::vector<NormComparisonReport>& rows)
{
    std::string out = "n,family,norm,E_X,E_Gamma,ratio,tau_hat,bound\n";
    for (const NormComparisonReport& r : rows) {
        out += std::to_string(r.n) + "," + r.family + "," + r.norm + "," +
               num(r.mean_family) + "," + num(r.mean_gaussian) + "," +
               num(r.ratio) + "," + num(r.tau_hat) + "," + num(r.bound) +
               "\n";
    }
    return out;
}

}  // namespace sloc
