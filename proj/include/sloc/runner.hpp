#ifndef SLOC_RUNNER_HPP
#define SLOC_RUNNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sloc/errors.hpp"
#include "sloc/geometry.hpp"
#include "sloc/measures.hpp"

namespace sloc {

// Effective configuration of one subcommand invocation.  `threads` and
// `output_path` steer execution and I/O only; they are excluded from the
// config echo so reports are identical across thread counts and
// destinations.
struct RunConfig {
    std::string subcommand;
    std::uint64_t seed = 1;
    std::string family = "gaussian";
    std::string body = "cube";
    std::string norm = "l2";
    std::string measure = "twopoint";
    int n = 2;
    long samples = 100000;       // Monte Carlo sample count
    long paths = 2000;           // localization path count
    double dt = 1e-3;
    double theta = 1.0;
    double t_max = 0.0;          // <= 0: derived from the observe times
    std::vector<double> observe_times;
    double big_constant = 10.0;
    double small_constant = 0.01;
    double tau_hat = 0.0;
    int resamples = 200;
    unsigned threads = 0;        // 0 = hardware default
    std::string profile = "full";  // verify: quick | full
    std::string format = "json";   // json | csv
    std::string output_path;       // empty: caller prints to stdout
};

struct RunOutcome {
    int exit_code = 0;   // 0 ok; 3 = verification suite found failures
    std::string text;    // complete report, newline-terminated
};

// Execute one subcommand and build its report.  Throws ConfigError /
// InputError / PreconditionError on bad configuration and CapabilityError /
// NumericalError on runtime failure; the caller maps these to exit codes
// and owns all file/stream I/O.
RunOutcome run_subcommand(const RunConfig& cfg);

// Initial-measure catalog for localize/stopped.  Atom-cloud names:
// twopoint, twopoint-skew, threeatom, fouratom.  Lattice names:
// grid-gaussian, grid-interval, grid-slab.
bool is_grid_measure_name(const std::string& name);
DiscreteMeasure catalog_measure(const std::string& name);
GridMeasure catalog_grid(const std::string& name);

// Norm catalog for compare: l1, l2, linf.
NormSpec norm_by_name(const std::string& name, int n);

// Body catalog for widths: cube, ball.
BodySpec body_by_name(const std::string& name, int n);

}  // namespace sloc

#endif  // SLOC_RUNNER_HPP
