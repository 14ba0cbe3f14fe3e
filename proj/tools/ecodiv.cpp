#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ecodiv/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ecodiv: n-gram ecosystem diversity simulator"};
  app.require_subcommand(1);

  ecodiv::RunOverrides overrides;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--persist-shards", overrides.persist_shards, "write artificial shards to disk");
    sub->add_flag("--baseline", overrides.baseline, "record a t=-1 baseline trained on real data");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "run one ecosystem simulation");
  run->add_option("config", config_path, "run config (INI)")->required();
  add_common(run);

  std::string spec_path;
  auto* sweep = app.add_subcommand("sweep", "run a grid of ecosystem sizes and seeds");
  sweep->add_option("spec", spec_path, "sweep spec (INI)")->required();
  add_common(sweep);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize a run or sweep directory");
  report->add_option("dir", report_dir, "run or sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ecodiv::kExitOk : ecodiv::kExitConfig;
  }

  for (auto* sub : {run, sweep}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--out")) overrides.out = out;
    if (sub->count("--workers")) overrides.workers = workers;
  }

  try {
    if (run->parsed()) return ecodiv::cmd_run(config_path, overrides, std::cerr);
    if (sweep->parsed()) return ecodiv::cmd_sweep(spec_path, overrides, std::cerr);
    return ecodiv::cmd_report(report_dir, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return report->parsed() ? ecodiv::kExitReport : ecodiv::kExitRuntime;
  }
}
