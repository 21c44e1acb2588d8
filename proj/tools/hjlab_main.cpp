// Command-line front end: thin dispatch over the experiment runner.
//
// Subcommands:
//   certify <config>   audit certificate inequalities, write certificate.json
//   solve   <config>   certify + solve, write the trajectory
//   verify  <config>   full pipeline: certify, solve, audits, optional sweep
//   sweep   <config>   certify + the configured sweep, skipping audits
//   report  <dir>      render report.txt + SVG plots from an artifact dir
//
// Exit codes: 0 all enabled checks pass; 1 at least one check failed;
// 2 malformed input; 3 numerical failure (instability / step budget).
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include <hjlab/experiment.hpp>

namespace {

int run(const std::string& config_path, hjlab::RunMode mode,
        double slack_pct) {
  hjlab::ExperimentResult result;
  if (slack_pct >= 0.0) {
    hjlab::ExperimentConfig cfg;
    try {
      cfg = hjlab::parse_experiment_config(config_path);
    } catch (const hjlab::ConfigError& e) {
      std::fprintf(stderr, "%s\n", e.what());
      return 2;
    }
    cfg.audits.grad_slack = slack_pct / 100.0;
    cfg.audits.time_slack = slack_pct / 100.0;
    result = hjlab::run_experiment(cfg, mode);
  } else {
    result = hjlab::run_experiment(config_path, mode);
  }
  std::fprintf(result.exit_code >= 2 ? stderr : stdout, "%s\n",
               result.message.c_str());
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hjlab: decay-bound laboratory for Hamilton-Jacobi flows"};
  app.require_subcommand(1);

  std::string config_path;
  std::string report_dir;
  double slack_pct = -1.0;

  const auto add_run_command = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config_path, "experiment config file")
        ->required();
    sub->add_option("--slack", slack_pct,
                    "override gradient and time audit slack, in percent")
        ->check(CLI::NonNegativeNumber);
    return sub;
  };
  CLI::App* certify = add_run_command(
      "certify", "audit the certificate inequalities, write certificate.json");
  CLI::App* solve =
      add_run_command("solve", "certify and solve, writing the trajectory");
  CLI::App* verify = add_run_command(
      "verify", "full pipeline: certificate, solve, bound audits, sweep");
  CLI::App* sweep = add_run_command(
      "sweep", "certificate plus the configured sweep, skipping bound audits");
  CLI::App* report = app.add_subcommand(
      "report", "render report.txt and SVG plots from an artifact directory");
  report->add_option("dir", report_dir, "artifact directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (report->parsed()) {
    const int code = hjlab::emit_report(report_dir);
    if (code != 0)
      std::fprintf(stderr, "missing trajectory manifest in %s\n",
                   report_dir.c_str());
    else
      std::printf("report written to %s\n", report_dir.c_str());
    return code;
  }
  if (certify->parsed())
    return run(config_path, hjlab::RunMode::CertifyOnly, slack_pct);
  if (solve->parsed())
    return run(config_path, hjlab::RunMode::SolveOnly, slack_pct);
  if (sweep->parsed())
    return run(config_path, hjlab::RunMode::SweepOnly, slack_pct);
  // require_subcommand(1) leaves only `verify` here.
  (void)verify;
  return run(config_path, hjlab::RunMode::Full, slack_pct);
}
