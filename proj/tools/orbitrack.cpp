#include <CLI11.hpp>

#include "orbitrack/config.hpp"

// Experiment runner: pattern profiles, spectra, simulations, and the Monte
// Carlo studies, all driven by JSON configs with reproducible seeding.

int main(int argc, char** argv) {
  CLI::App app{"orbitrack: stochastically forced pattern dynamics"};
  app.require_subcommand(1);

  orbitrack::CliOptions opts;
  std::uint64_t seed = 0;
  int threads = 0;

  const std::vector<std::string> commands = {"profile", "spectrum", "simulate",
                                             "mc",      "tailcheck", "detstab"};
  std::string chosen;
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory");
    auto* seed_opt = sub->add_option("--seed", seed, "seed override");
    auto* thr_opt = sub->add_option("--threads", threads, "worker cap");
    sub->callback([&, name, seed_opt, thr_opt] {
      chosen = name;
      if (seed_opt->count() > 0) opts.seed_override = seed;
      if (thr_opt->count() > 0) opts.threads_override = threads;
    });
  }

  CLI11_PARSE(app, argc, argv);
  return orbitrack::run_command(chosen, opts);
}
