#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "qksd/bench.hpp"

namespace {

const char* describe(const std::string& name) {
  if (name == "curve") return "Accuracy-overhead curves for one instance across basis families";
  if (name == "distribution") return "Overhead distribution across the benchmark instance corpus";
  if (name == "cost") return "Measurement budget decomposition at a fixed accuracy target";
  if (name == "noise") return "Synthetic-noise trials: necessary and sufficient sample counts";
  if (name == "mc") return "Circuit-sampling validation of the matrix-entry estimators";
  if (name == "projector") return "Composed Chebyshev ground-space projector diagnostics";
  if (name == "scaling") return "Total sample count versus accuracy at the largest usable dimension";
  return "";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-state energy estimation laboratory for Krylov subspace methods"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;

  for (const std::string& name : qksd::command_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the config's random seed");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  qksd::RunConfig run;
  run.out_dir = out_dir;
  run.threads = threads;
  if (sub->count("--seed") > 0) run.seed_override = seed;

  try {
    run.config_text = read_file(config_path);
    const qksd::CommandResult result = qksd::run_command(sub->get_name(), run);
    std::cout << result.log;
    if (result.exit_code != 0)
      std::cerr << "identity checks failed; see the output tables" << std::endl;
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
