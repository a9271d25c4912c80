#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "beliefplay/cli.h"

int main(int argc, char** argv) {
  CLI::App app{"Learning dynamics with misspecified payoff parameters"};
  app.require_subcommand(1, 1);

  std::string config;
  std::string out;
  std::size_t threads = 0;
  std::uint64_t seed = 0;

  for (const char* name : {"run", "fixed-points", "stability", "rate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads, 0 = all cores");
    sub->add_option("--seed-override", seed, "replace the seed list with one seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? beliefplay::kExitOk : beliefplay::kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  beliefplay::CliOverrides overrides;
  if (sub->count("--out")) overrides.out_dir = out;
  if (sub->count("--threads")) overrides.threads = threads;
  if (sub->count("--seed-override")) overrides.seed = seed;
  return beliefplay::run_command(sub->get_name(), config, overrides, std::cerr);
}
