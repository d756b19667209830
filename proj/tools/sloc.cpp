// Command-line front end: one subcommand per experiment, JSON or CSV
// reports on stdout or into --out, deterministic for a fixed seed.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sloc/errors.hpp"
#include "sloc/report.hpp"
#include "sloc/runner.hpp"

namespace {

std::string g_config_path;

void add_shared_options(CLI::App* cmd, sloc::RunConfig& cfg)
{
    cmd->add_option("--seed", cfg.seed, "base RNG seed");
    cmd->add_option("--threads", cfg.threads,
                    "worker threads, 0 = hardware default");
    cmd->add_option("--format", cfg.format, "report format: json or csv");
    cmd->add_option("--out", cfg.output_path,
                    "write the report to this file instead of stdout");
    cmd->add_option("--config", g_config_path,
                    "key=value defaults; command-line flags win");
}

// True when the flag exists on this subcommand and was given explicitly.
bool flag_given(const CLI::App* cmd, const std::string& flag)
{
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
}

double parse_number(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw sloc::ConfigError("config key " + key +
                                ": cannot parse number from '" + value + "'");
    }
}

// Apply key=value defaults from --config.  A value is used only when the
// matching flag was not given on the command line, so flags always win.
void apply_config_file(const CLI::App* cmd, sloc::RunConfig& cfg)
{
    if (g_config_path.empty()) return;
    std::ifstream in(g_config_path);
    if (!in)
        throw sloc::ConfigError("cannot read config file " + g_config_path);

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw sloc::ConfigError("config line " + std::to_string(lineno) +
                                    ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string()
                                          : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "seed") {
            if (!flag_given(cmd, "--seed"))
                cfg.seed = static_cast<std::uint64_t>(
                    parse_number(key, value));
        } else if (key == "threads") {
            if (!flag_given(cmd, "--threads"))
                cfg.threads =
                    static_cast<unsigned>(parse_number(key, value));
        } else if (key == "format") {
            if (!flag_given(cmd, "--format")) cfg.format = value;
        } else if (key == "out") {
            if (!flag_given(cmd, "--out")) cfg.output_path = value;
        } else if (key == "family") {
            if (!flag_given(cmd, "--family")) cfg.family = value;
        } else if (key == "body") {
            if (!flag_given(cmd, "--body")) cfg.body = value;
        } else if (key == "norm") {
            if (!flag_given(cmd, "--norm")) cfg.norm = value;
        } else if (key == "measure") {
            if (!flag_given(cmd, "--measure")) cfg.measure = value;
        } else if (key == "profile") {
            if (!flag_given(cmd, "--profile")) cfg.profile = value;
        } else if (key == "n") {
            if (!flag_given(cmd, "--n"))
                cfg.n = static_cast<int>(parse_number(key, value));
        } else if (key == "N" || key == "samples") {
            if (!flag_given(cmd, "--N"))
                cfg.samples = static_cast<long>(parse_number(key, value));
        } else if (key == "paths") {
            if (!flag_given(cmd, "--paths"))
                cfg.paths = static_cast<long>(parse_number(key, value));
        } else if (key == "resamples") {
            if (!flag_given(cmd, "--resamples"))
                cfg.resamples = static_cast<int>(parse_number(key, value));
        } else if (key == "dt") {
            if (!flag_given(cmd, "--dt")) cfg.dt = parse_number(key, value);
        } else if (key == "theta") {
            if (!flag_given(cmd, "--theta"))
                cfg.theta = parse_number(key, value);
        } else if (key == "t_max" || key == "t-max") {
            if (!flag_given(cmd, "--t-max"))
                cfg.t_max = parse_number(key, value);
        } else if (key == "C" || key == "big_constant") {
            if (!flag_given(cmd, "--C"))
                cfg.big_constant = parse_number(key, value);
        } else if (key == "small_constant") {
            cfg.small_constant = parse_number(key, value);
        } else if (key == "tau_hat" || key == "tau-hat") {
            if (!flag_given(cmd, "--tau-hat"))
                cfg.tau_hat = parse_number(key, value);
        } else if (key == "t") {
            if (!flag_given(cmd, "--t")) {
                cfg.observe_times.clear();
                std::string rest = value;
                while (!rest.empty()) {
                    const auto comma = rest.find(',');
                    const std::string piece = trim(rest.substr(0, comma));
                    if (!piece.empty())
                        cfg.observe_times.push_back(
                            parse_number(key, piece));
                    if (comma == std::string::npos) break;
                    rest = rest.substr(comma + 1);
                }
            }
        } else {
            throw sloc::ConfigError("config line " + std::to_string(lineno) +
                                    ": unknown key '" + key + "'");
        }
    }
}

void add_family_options(CLI::App* cmd, sloc::RunConfig& cfg)
{
    cmd->add_option("--family", cfg.family,
                    "sampling family: gaussian, exp, cube, ball, twopoint");
    cmd->add_option("--n", cfg.n, "dimension");
    cmd->add_option("--N,--samples", cfg.samples, "Monte Carlo sample count");
}

int emit(const sloc::RunOutcome& outcome, const std::string& path)
{
    if (path.empty()) {
        std::cout << outcome.text;
        return outcome.exit_code;
    }
    std::ofstream out(path, std::ios::binary);
    out << outcome.text;
    if (!out) {
        std::cerr << sloc::error_json("io", "cannot write " + path).dump(2)
                  << "\n";
        return 2;
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"numerical laboratory for measure-valued localization"};
    app.require_subcommand(1);
    sloc::RunConfig cfg;

    CLI::App* localize = app.add_subcommand(
        "localize", "ensemble decay and terminal statistics");
    add_shared_options(localize, cfg);
    localize->add_option("--measure", cfg.measure,
                         "initial measure from the catalog");
    localize->add_option("--paths", cfg.paths, "number of independent paths");
    localize->add_option("--dt", cfg.dt, "outer step size");
    localize->add_option("--t", cfg.observe_times,
                         "observation times (repeatable)");
    localize->add_option("--t-max", cfg.t_max,
                         "horizon; defaults to the last observation time");

    CLI::App* stopped = app.add_subcommand(
        "stopped", "threshold-stopped ensemble with Gaussian completion");
    add_shared_options(stopped, cfg);
    stopped->add_option("--measure", cfg.measure,
                        "initial measure from the catalog");
    stopped->add_option("--paths", cfg.paths, "number of independent paths");
    stopped->add_option("--dt", cfg.dt, "outer step size");
    stopped->add_option("--theta", cfg.theta, "op-norm integral threshold");

    CLI::App* tau = app.add_subcommand(
        "tau", "third-moment spectral estimate for one family");
    add_shared_options(tau, cfg);
    add_family_options(tau, cfg);

    CLI::App* sigma = app.add_subcommand(
        "sigma", "radial variance estimate for one family");
    add_shared_options(sigma, cfg);
    add_family_options(sigma, cfg);
    sigma->add_option("--resamples", cfg.resamples,
                      "bootstrap resample count");

    CLI::App* widths = app.add_subcommand(
        "widths", "mean width, polar width and isotropic constant of a body");
    add_shared_options(widths, cfg);
    widths->add_option("--body", cfg.body, "body: cube or ball");
    widths->add_option("--n", cfg.n, "dimension");
    widths->add_option("--N,--samples", cfg.samples,
                       "Monte Carlo sample count");

    CLI::App* compare = app.add_subcommand(
        "compare", "family norm expectation against the Gaussian");
    add_shared_options(compare, cfg);
    add_family_options(compare, cfg);
    compare->add_option("--norm", cfg.norm, "norm: l1, l2 or linf");
    compare->add_option("--C,--big-constant", cfg.big_constant,
                        "constant in the reported bound");
    compare->add_option("--tau-hat", cfg.tau_hat,
                        "third-moment estimate used by the reported bound");

    CLI::App* verify = app.add_subcommand(
        "verify", "run the full invariant suite; exit 3 on any failure");
    add_shared_options(verify, cfg);
    verify->add_option("--profile", cfg.profile,
                       "suite size: quick or full");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* active = app.get_subcommands().front();
    cfg.subcommand = active->get_name();

    try {
        apply_config_file(active, cfg);
        return emit(sloc::run_subcommand(cfg), cfg.output_path);
    } catch (const sloc::CapabilityError& e) {
        std::cerr << sloc::error_json("capability", e.what()).dump(2) << "\n";
        return 2;
    } catch (const sloc::NumericalError& e) {
        std::cerr << sloc::error_json("numerical", e.what()).dump(2) << "\n";
        return 2;
    } catch (const sloc::Error& e) {
        std::cerr << sloc::error_json("usage", e.what()).dump(2) << "\n";
        return 1;
    }
}
