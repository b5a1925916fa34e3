#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drl/commands.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "run";
  std::string pool_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration JSON");
  cmd->add_option("--out", opts.out_dir, "Run directory")->capture_default_str();
  cmd->add_option("--pool", opts.pool_path, "Expert pool JSON (overrides config)");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

drl::RunConfig resolve_config(const CliOptions& opts) {
  drl::RunConfig cfg =
      opts.config_path.empty() ? drl::RunConfig{} : drl::RunConfig::load(opts.config_path);
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (!opts.pool_path.empty()) cfg.pool = opts.pool_path;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-router-lab: simulated depth-expert routing experiments"};
  app.require_subcommand(1);

  CliOptions opts;
  std::function<void(const drl::RunConfig&, const std::filesystem::path&)> command;
  std::string command_name;

  const struct {
    const char* name;
    const char* help;
    void (*fn)(const drl::RunConfig&, const std::filesystem::path&);
  } commands[] = {
      {"gen-data", "Generate the train and eval datasets", drl::run_gen_data},
      {"analyze", "Fusion analysis over the train split", drl::run_analyze},
      {"train", "GRPO-train the routing policy", drl::run_train},
      {"eval", "Greedy evaluation of the trained policy", drl::run_eval},
      {"baselines", "Experts, fixed fusions, random and router baselines", drl::run_baselines},
      {"report", "Consolidated comparison tables", drl::run_report},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, opts);
    sub->callback([&command, &command_name, &c] {
      command = c.fn;
      command_name = c.name;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    const drl::RunConfig cfg = resolve_config(opts);
    command(cfg, opts.out_dir);
    std::cout << command_name << ": done (out: " << opts.out_dir << ")\n";
    return 0;
  } catch (const drl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
