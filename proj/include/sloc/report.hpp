#ifndef SLOC_REPORT_HPP
#define SLOC_REPORT_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "sloc/coupling.hpp"
#include "sloc/geometry.hpp"
#include "sloc/localization.hpp"
#include "sloc/thinshell.hpp"

namespace sloc {

// Version stamp embedded in every emitted report.
inline constexpr const char* kVersion = "1.0.0";

// JSON builders.  Objects serialize with alphabetically ordered keys and
// shortest-round-trip doubles, so identical inputs produce identical text.
nlohmann::json report_json(const BatchObservation& obs);
nlohmann::json report_json(const BatchReport& rep);
nlohmann::json report_json(const StoppedReport& rep);
nlohmann::json report_json(const DecayDiagnostic& diag);
nlohmann::json report_json(const ConformanceReport& rep);
nlohmann::json report_json(const DominanceReport& rep);
nlohmann::json report_json(const PsdOrderReport& rep);
nlohmann::json report_json(const GapReport& rep);
nlohmann::json report_json(const SigmaEstimate& est);
nlohmann::json report_json(const TauEstimate& est);
nlohmann::json report_json(const RestrictedNormReport& rep);
nlohmann::json report_json(const MonteCarloValue& value);
nlohmann::json report_json(const NormComparisonReport& rep);
nlohmann::json report_json(const CorollaryReport& rep);

// Structured failure payload for non-usage errors.
nlohmann::json error_json(const std::string& kind,
                          const std::string& message);

// CSV exports.  Numbers print with %.17g so the text is lossless and
// stable across runs.
std::string trace_csv(const PathTrace& trace);
std::string sigma_csv(const std::vector<SigmaEstimate>& rows);
std::string tau_csv(const std::vector<TauEstimate>& rows);
std::string compare_csv(const std::vector<NormComparisonReport>& rows);

}  // namespace sloc

#endif  // SLOC_REPORT_HPP
