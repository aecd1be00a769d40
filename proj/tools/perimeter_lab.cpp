#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "perimeter_lab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"perimeter-lab: voxel domains, interior approximations and perimeter-gap audits"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int refine = 0;
  const std::map<std::string, std::string> about{
      {"gen", "build the configured domain and write it as JSON"},
      {"measure", "volume, perimeter, crack mass and density checks"},
      {"approx", "run the configured inner approximation sequence"},
      {"audit", "perimeter gap table with optional certificates"},
      {"exterior", "outer approximation through the complement in a box"},
      {"sweep", "measure and approximate over a grid of sizes and domains"}};
  for (const auto& name : perimeter_lab::command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory, overrides output.dir");
    sub->add_option("--seed", seed, "seed, overrides the config seed");
    sub->add_option("--refine", refine, "refinement factor for the covering construction")->check(CLI::Range(2, 64));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  perimeter_lab::ConfigOverrides ov;
  if (sub->count("--out")) ov.out = out;
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--refine")) ov.refine = refine;
  return perimeter_lab::run_command(sub->get_name(), config, ov, std::cout, std::cerr);
}
