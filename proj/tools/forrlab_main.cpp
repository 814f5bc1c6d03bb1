// forrlab command-line runner.
//
//   forrlab <concentration|tau-tail|rounding|dynkin|advantage|identity|suite>
//           [--config FILE] [--n N] [--k K] [--epsilon X|paper] [--delta D]
//           [--trials T] [--seed S] [--workers W] [--output PATH]
//           [--format csv|json]
//
// Flags override config-file keys. FORRLAB_WORKERS sets the default worker
// count. The suite subcommand exits nonzero when any verdict fails.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "forrlab/experiments.hpp"

namespace {

int default_workers_from_env() {
  const char* env = std::getenv("FORRLAB_WORKERS");
  if (env == nullptr) return 0;
  return std::atoi(env);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for the k-XOR forrelation distribution"};
  app.require_subcommand(1);

  std::string config_path;
  std::string epsilon_arg;
  std::string output_arg;
  std::string format_arg;
  std::string sampler_arg;
  long long n_arg = -1, k_arg = -1, trials_arg = -1, workers_arg = -1;
  long long seed_arg = -1;
  double delta_arg = -1.0;

  const std::vector<std::string> subcommands = {
      "concentration", "tau-tail", "rounding", "dynkin", "advantage", "identity",
      "suite"};
  for (const auto& name : subcommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--n", n_arg, "problem dimension N (twice a power of two)");
    sub->add_option("--k", k_arg, "number of blocks");
    sub->add_option("--epsilon", epsilon_arg, "time horizon, or 'paper' for 1/(28 k^2 ln N)");
    sub->add_option("--delta", delta_arg, "Euler step (default epsilon/64)");
    sub->add_option("--trials", trials_arg, "Monte Carlo trials");
    sub->add_option("--seed", seed_arg, "master seed");
    sub->add_option("--workers", workers_arg, "worker threads (0 = library default)");
    sub->add_option("--output", output_arg, "output path ('-' = stdout)");
    sub->add_option("--format", format_arg, "csv or json");
    sub->add_option("--sampler", sampler_arg, "auto, endpoint or path");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    forrlab::ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot open config file: " + config_path);
      nlohmann::json j;
      in >> j;
      config = forrlab::ExperimentConfig::from_json(j);
    }
    config.experiment = app.get_subcommands().front()->get_name();
    config.workers = default_workers_from_env();

    if (n_arg >= 0) config.N = static_cast<std::size_t>(n_arg);
    if (k_arg >= 0) config.k = static_cast<int>(k_arg);
    if (!epsilon_arg.empty()) {
      if (epsilon_arg == "paper") {
        config.epsilon_paper_default = true;
        config.epsilon = 0.0;
      } else {
        config.epsilon = std::stod(epsilon_arg);
        config.epsilon_paper_default = false;
      }
    }
    if (delta_arg >= 0.0) config.delta = delta_arg;
    if (trials_arg >= 0) config.trials = static_cast<std::size_t>(trials_arg);
    if (seed_arg >= 0) config.seed = static_cast<std::uint64_t>(seed_arg);
    if (workers_arg >= 0) config.workers = static_cast<int>(workers_arg);
    if (!output_arg.empty()) config.output = output_arg;
    if (!format_arg.empty()) config.format = format_arg;
    if (!sampler_arg.empty()) config.sampler = sampler_arg;

    const forrlab::ResultTable table = forrlab::run_experiment(config);
    const std::string rendered = table.render(config.format);
    if (config.output == "-" || config.output.empty()) {
      std::cout << rendered;
    } else {
      std::ofstream out(config.output, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open output file: " + config.output);
      out << rendered;
    }

    if (config.experiment == "suite") return table.all_pass() ? 0 : 1;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
