#include "saas/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "CLI11.hpp"
#include "saas/bench.hpp"
#include "saas/config.hpp"
#include "saas/errors.hpp"

namespace saas {

namespace {

const std::vector<std::string> kSubcommands{"saas", "baseline", "corruption-speed",
                                            "outer-epoch-speed", "sweep-unlabeled"};

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  std::size_t jobs = 0;
};

std::filesystem::path output_dir(const Flags& flags, const RunConfig& cfg) {
  if (!flags.out.empty()) return flags.out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("SAAS_OUT_DIR"); env && *env) return env;
  return "results";
}

bench::ExperimentResult run_experiment(const std::string& name, const RunConfig& cfg,
                                       const bench::RunOptions& opts) {
  if (name == "saas") return bench::run_ssl(cfg.saas, cfg.dataset, cfg.split, cfg.n_seeds, opts);
  if (name == "baseline")
    return bench::run_baseline_experiment(cfg.saas, cfg.dataset, cfg.split, cfg.n_seeds, opts);
  if (name == "corruption-speed")
    return bench::corruption_speed_experiment(cfg.saas, cfg.dataset, cfg.corruption, opts);
  if (name == "outer-epoch-speed")
    return bench::outer_epoch_speed_experiment(cfg.saas, cfg.dataset, cfg.split, cfg.outer_epoch, opts);
  return bench::unlabeled_sweep_experiment(cfg.saas, cfg.dataset, cfg.split, cfg.sweep, opts);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label posterior inference by training speed, with desk-scale experiments", "saas"};
  app.require_subcommand(1);
  Flags flags;
  bool seed_given = false;
  std::vector<CLI::App*> subs;
  for (const auto& name : kSubcommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", flags.config, "Run configuration (TOML)")->required();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { flags.seed = s; seed_given = true; }, "Override master_seed");
    sub->add_option("--out", flags.out, "Output directory (default: $SAAS_OUT_DIR)");
    sub->add_flag("--quiet", flags.quiet, "Suppress progress output");
    sub->add_option("--jobs", flags.jobs, "Parallel sweep points")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  app.get_subcommand("saas")->description("Baseline, Phase I inference and Phase II retraining");
  app.get_subcommand("baseline")->description("Supervised baseline on the labeled subset");
  app.get_subcommand("corruption-speed")->description("Training speed under label corruption");
  app.get_subcommand("outer-epoch-speed")->description("Training speed of pseudo-labels after M outer epochs");
  app.get_subcommand("sweep-unlabeled")->description("Test accuracy as the unlabeled pool grows");

  if (args.empty()) {
    err << app.help();
    return exit_usage;
  }
  const std::string& first = args.front();
  if (first.empty() || (first[0] != '-' && std::find(kSubcommands.begin(), kSubcommands.end(), first) ==
                                              kSubcommands.end())) {
    err << "error: unknown subcommand '" << first << "'\n\n" << app.help();
    return exit_usage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_usage;
  }
  std::string name;
  CLI::App* active = nullptr;
  for (auto* sub : subs)
    if (sub->parsed()) active = sub, name = sub->get_name();
  if (active && active->get_help_ptr() && active->get_help_ptr()->count()) return exit_ok;

  try {
    RunConfig cfg = parse_config(flags.config);
    if (seed_given) cfg.saas.master_seed = flags.seed;
    if (flags.jobs) cfg.jobs = flags.jobs;
    const auto dir = output_dir(flags, cfg);

    bench::RunOptions opts;
    opts.jobs = cfg.jobs;
    if (!flags.quiet) opts.progress = [&err](const std::string& line) { err << line << "\n" << std::flush; };

    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_experiment(name, cfg, opts);
    const auto files = bench::write_artifacts(result, dir, config_to_json(cfg));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& f : files) out << f.string() << "\n";
    if (!flags.quiet) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.1f", secs);
      err << name << ": done in " << buf << " s, seed " << cfg.saas.master_seed << "\n";
    }
    return exit_ok;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace saas
