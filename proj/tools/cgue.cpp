// cgue: sample, stats, critical, density, fp, report.
//
//   cgue sample --config run.json --seed 3 --samples 200 --threads 4
//
// Flags override fields of the --config document.

#include <iostream>

#include <CLI11.hpp>

#include "cgue/cli.hpp"
#include "cgue/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Constrained Gaussian unitary ensemble laboratory"};
  app.set_version_flag("--version", std::string(CGUE_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  cgue::Index samples = 0;
  std::string out;
  int threads = 0;
  bool svg = false;

  for (const char* name : {"sample", "stats", "critical", "density", "fp", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config document");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--samples", samples, "number of samples");
    sub->add_option("--out", out, "output directory (default $CGUE_OUTPUT_ROOT/<command>)");
    sub->add_option("--threads", threads, "worker threads; outputs do not depend on it");
    sub->add_flag("--svg", svg, "also write SVG plots");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cgue::kExitInvalid;
  }

  const auto* sub = app.get_subcommands().front();
  try {
    cgue::ExperimentConfig config;
    if (!config_path.empty()) config = cgue::config_from_json(cgue::read_json(config_path));
    config.command = sub->get_name();
    cgue::CliOverrides o;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--samples")) o.samples = samples;
    if (sub->count("--out")) o.out = out;
    if (sub->count("--threads")) o.threads = threads;
    o.svg = svg;
    cgue::apply_overrides(config, o);
    return cgue::run_command(config, std::cout, std::cerr);
  } catch (const cgue::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return cgue::kExitInvalid;
  }
}
