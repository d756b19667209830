#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sloc/errors.hpp"
#include "sloc/runner.hpp"

using nlohmann::json;
using namespace sloc;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int run_cli(const std::string& args, const std::string& out_file)
{
    const std::string cmd = std::string(SLOC_CLI_PATH) + " " + args + " >" +
                            out_file + " 2>" + out_file + ".err";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("report shape and config echo")
{
    RunConfig cfg;
    cfg.subcommand = "tau";
    cfg.family = "exp";
    cfg.n = 3;
    cfg.samples = 20000;
    cfg.seed = 5;
    const RunOutcome out = run_subcommand(cfg);
    CHECK(out.exit_code == 0);
    const json j = json::parse(out.text);
    CHECK(j.at("subcommand") == "tau");
    CHECK(j.at("seed") == 5);
    CHECK(j.contains("version"));
    CHECK(j.contains("config"));
    CHECK(j.contains("report"));
    // Execution-only knobs never appear in the echo, so reports stay
    // byte-identical across thread counts and output destinations.
    CHECK(!j.at("config").contains("threads"));
    CHECK(!j.at("config").contains("output_path"));
    CHECK(j.at("config").at("family") == "exp");
    CHECK(j.at("report").at("estimate").get<double>() > 1.0);
}

TEST_CASE("csv output carries the echo comment and a header")
{
    RunConfig cfg;
    cfg.subcommand = "sigma";
    cfg.family = "gaussian";
    cfg.n = 2;
    cfg.samples = 20000;
    cfg.resamples = 50;
    cfg.format = "csv";
    const RunOutcome out = run_subcommand(cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.text.rfind("# subcommand=sigma", 0) == 0);
    CHECK(out.text.find("family=gaussian") != std::string::npos);
    CHECK(out.text.find("\nfamily,n,N,estimate,ci_low,ci_high,seed\n") !=
          std::string::npos);
    CHECK(out.text.back() == '\n');
}

TEST_CASE("in-process reruns and thread counts produce identical bytes")
{
    RunConfig cfg;
    cfg.subcommand = "localize";
    cfg.measure = "threeatom";
    cfg.paths = 120;
    cfg.observe_times = {0.25, 0.5};
    cfg.seed = 9;
    cfg.threads = 1;
    const RunOutcome a = run_subcommand(cfg);
    cfg.threads = 8;
    const RunOutcome b = run_subcommand(cfg);
    const RunOutcome c = run_subcommand(cfg);
    CHECK(a.exit_code == 0);
    CHECK(a.text == b.text);
    CHECK(b.text == c.text);
}

TEST_CASE("configuration validation")
{
    RunConfig cfg;
    cfg.subcommand = "nonesuch";
    CHECK_THROWS_AS(run_subcommand(cfg), sloc::Error);
    cfg.subcommand = "localize";
    cfg.measure = "not-a-measure";
    CHECK_THROWS_AS(run_subcommand(cfg), sloc::Error);
    cfg.measure = "twopoint";
    cfg.dt = 0.75;  // outside (0, 0.5]
    CHECK_THROWS_AS(run_subcommand(cfg), sloc::Error);
    cfg.dt = 1e-3;
    cfg.paths = 0;
    CHECK_THROWS_AS(run_subcommand(cfg), sloc::Error);
    cfg.paths = 50;
    cfg.format = "yaml";
    CHECK_THROWS_AS(run_subcommand(cfg), sloc::Error);

    RunConfig tau;
    tau.subcommand = "tau";
    tau.n = 4096;  // beyond the supported dimension range
    CHECK_THROWS_AS(run_subcommand(tau), sloc::Error);

    RunConfig widths;
    widths.subcommand = "widths";
    widths.body = "simplex";
    CHECK_THROWS_AS(run_subcommand(widths), sloc::Error);

    RunConfig cmp;
    cmp.subcommand = "compare";
    cmp.norm = "l7";
    CHECK_THROWS_AS(run_subcommand(cmp), sloc::Error);
}

TEST_CASE("stopped subcommand reports fractions and displacement stats")
{
    RunConfig cfg;
    cfg.subcommand = "stopped";
    cfg.measure = "twopoint";
    cfg.paths = 200;
    cfg.theta = 0.5;
    cfg.seed = 3;
    const RunOutcome out = run_subcommand(cfg);
    CHECK(out.exit_code == 0);
    const json j = json::parse(out.text);
    const auto& rep = j.at("report");
    const double thr = rep.at("fractions").at("threshold").get<double>();
    const double col = rep.at("fractions").at("collapse").get<double>();
    const double hor = rep.at("fractions").at("horizon").get<double>();
    CHECK(thr + col + hor == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.at("max_qv_eigenvalue").get<double>() <= 0.5 + 1e-9);
    CHECK(rep.at("displacement_norms").contains("l2"));
}

TEST_CASE("verify subcommand quick profile passes")
{
    RunConfig cfg;
    cfg.subcommand = "verify";
    cfg.profile = "quick";
    cfg.threads = 1;
    const RunOutcome out = run_subcommand(cfg);
    CHECK(out.exit_code == 0);
    const json j = json::parse(out.text);
    CHECK(j.at("report").at("failed") == 0);
    CHECK(j.at("report").at("passed").get<int>() >= 20);
    for (const auto& c : j.at("report").at("checks"))
        CHECK(c.at("pass").get<bool>());
}

#ifdef SLOC_CLI_PATH
TEST_CASE("binary exit codes and stream/file byte equality")
{
    const int ok = run_cli("tau --family exp --n 3 --N 20000 --seed 2",
                           "cli_ok.json");
    CHECK(ok == 0);
    const json j = json::parse(slurp("cli_ok.json"));
    CHECK(j.at("subcommand") == "tau");

    // The same invocation through --out must produce the same bytes.
    const int ok2 = run_cli(
        "tau --family exp --n 3 --N 20000 --seed 2 --out cli_ok2.json",
        "cli_ignored.json");
    CHECK(ok2 == 0);
    CHECK(slurp("cli_ok.json") == slurp("cli_ok2.json"));

    CHECK(run_cli("nonesuch", "cli_bad.txt") == 1);
    CHECK(run_cli("tau --family exp --n notanumber", "cli_bad2.txt") == 1);
    CHECK(run_cli("tau --family exp --n 3 --N 20000 --no-such-flag x",
                  "cli_bad3.txt") == 1);
    CHECK(run_cli("localize --measure unknown-measure", "cli_bad4.txt") == 1);
    CHECK(run_cli("", "cli_bad5.txt") == 1);  // a subcommand is required
}

TEST_CASE("config file fills unset values and flags override it")
{
    {
        std::ofstream f("cli_conf.cfg");
        f << "# experiment defaults\n";
        f << "family = exp\n";
        f << "n = 3\n";
        f << "N = 20000\n";
        f << "seed = 2\n";
    }
    const int rc = run_cli("tau --config cli_conf.cfg", "cli_cfg1.json");
    CHECK(rc == 0);
    CHECK(slurp("cli_cfg1.json") == slurp("cli_ok.json"));

    // A flag beats the file entry for the same key.
    const int rc2 =
        run_cli("tau --config cli_conf.cfg --seed 7", "cli_cfg2.json");
    CHECK(rc2 == 0);
    const json j2 = json::parse(slurp("cli_cfg2.json"));
    CHECK(j2.at("seed") == 7);

    {
        std::ofstream f("cli_conf_bad.cfg");
        f << "familly = exp\n";  // unknown key must be rejected
    }
    CHECK(run_cli("tau --config cli_conf_bad.cfg", "cli_cfg3.json") == 1);
    CHECK(run_cli("tau --config no/such/file.cfg", "cli_cfg4.json") == 1);
}
#endif
