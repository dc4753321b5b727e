#include <iostream>

#include "CLI11.hpp"
#include "wardlab/cli.hpp"

// Operator surface. Stages communicate only via files, so any stage can be
// re-run from its inputs: simulate -> measure -> analyze -> report.

int main(int argc, char** argv) {
  using namespace wardlab;

  CLI::App app{"closed-ward multi-agent experiment harness"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "execute an experiment spec");
  simulate->add_option("--spec", sim.spec_path, "experiment spec (JSON)")
      ->required();
  std::string sim_out;
  simulate->add_option("--out", sim_out, "output directory (overrides the spec)");
  simulate->add_option("--jobs", sim.jobs, "parallel runs")->default_val(1);
  simulate->add_flag("--resume", sim.resume, "skip already-complete runs");

  cli::MeasureOptions meas;
  auto* measure = app.add_subcommand("measure", "extract metrics and indices from logs");
  auto* runs_opt = measure->add_option("--runs", meas.runs_dir, "directory of run logs");
  measure->add_option("--lexicons", meas.lexicon_dir,
                      "lexicon asset directory (required with --runs)");
  measure->add_option("--metrics", meas.metrics_csv,
                      "index an existing metrics CSV instead of run logs")
      ->excludes(runs_opt);
  measure->add_option("--adapter", meas.adapter_path,
                      "schema adapter JSON for --metrics");
  measure->add_option("--scope", meas.scopes, "normalization scope: agent and/or run")
      ->default_val(std::vector<std::string>{"agent"});
  measure->add_option("--out", meas.out_dir, "output directory")->required();
  measure->add_option("--stratify", meas.strat_fields,
                      "stratification fields (default: per-series)");
  measure->add_flag("--post-delivery", meas.post_delivery,
                    "measure delivered text instead of produced text");

  cli::AnalyzeOptions ana;
  auto* analyze = app.add_subcommand("analyze", "run a statistical test plan");
  analyze->add_option("--index", ana.index_csv, "index csv from measure")->required();
  analyze->add_option("--plan", ana.plan_path, "test plan (JSON)")->required();
  analyze->add_option("--out", ana.out_dir, "output directory")->required();

  cli::ReportOptions rep;
  auto* report = app.add_subcommand("report", "emit quadrant / table1 / dissociation outputs");
  report->add_option("--kind", rep.kind, "quadrant | table1 | dissociation")
      ->required();
  report->add_option("--in", rep.inputs, "inputs (index csv or runs dir)")->required();
  report->add_option("--out", rep.out_dir, "output directory")->required();
  report->add_option("--lexicons", rep.lexicon_dir, "lexicons (dissociation only)");

  cli::KappaOptions kap;
  auto* kappa = app.add_subcommand("kappa", "inter-rater agreement from a two-column label csv");
  kappa->add_option("--labels", kap.labels_csv, "csv with rater-a and rater-b columns")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (*simulate) {
      if (!sim_out.empty()) sim.output_dir = sim_out;
      return cli::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*measure) return cli::cmd_measure(meas, std::cout, std::cerr);
    if (*analyze) return cli::cmd_analyze(ana, std::cout, std::cerr);
    if (*report) return cli::cmd_report(rep, std::cout, std::cerr);
    if (*kappa) return cli::cmd_kappa(kap, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitBackend;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitData;
  }
  return cli::kExitUsage;
}
