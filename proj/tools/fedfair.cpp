#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedfair/error.hpp"
#include "fedfair/pipeline.hpp"
#include "fedfair/version.hpp"

namespace {

enum class LogLevel { off = 0, warn = 1, info = 2 };

LogLevel log_level() {
  const char* env = std::getenv("FEDFAIR_LOG");
  if (!env) return LogLevel::warn;
  const std::string value = env;
  if (value == "off") return LogLevel::off;
  if (value == "info") return LogLevel::info;
  return LogLevel::warn;
}

void info(const std::string& message) {
  if (log_level() >= LogLevel::info) std::cerr << "[fedfair] " << message << "\n";
}

struct CommonArgs {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config file (JSON)")->required();
  cmd->add_option("--out", args.out, "output directory (overrides config output_dir)");
  cmd->add_option("--seed", args.seed, "master seed (overrides config seed)");
}

fedfair::PipelineConfig load(const CommonArgs& args) {
  fedfair::PipelineConfig config = fedfair::load_pipeline_config(args.config_path);
  if (!args.out.empty()) config.output_dir = args.out;
  if (args.seed) config.seed = *args.seed;
  return config;
}

std::filesystem::path require_data_dir(const fedfair::PipelineConfig& config) {
  if (config.data_dir.empty())
    throw fedfair::ConfigError("config: 'data_dir' is required for this command");
  return config.data_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("fedfair ") + fedfair::kVersion +
               " - bias-heterogeneous federated tabular datasets, fairness "
               "evaluation and FL simulation"};
  app.require_subcommand(1);

  CommonArgs generate_args, evaluate_args, simulate_args, datasheet_args;
  CLI::App* generate = app.add_subcommand("generate", "generate a federation and its datasheet");
  add_common(generate, generate_args);
  CLI::App* evaluate = app.add_subcommand("evaluate", "fairness tables and plots for a federation");
  add_common(evaluate, evaluate_args);
  CLI::App* simulate = app.add_subcommand("simulate", "FedAvg / fair-FedAvg runs and comparisons");
  add_common(simulate, simulate_args);
  CLI::App* datasheet = app.add_subcommand("datasheet", "regenerate datasheet.md from metadata");
  add_common(datasheet, datasheet_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) {
      fedfair::PipelineConfig config = load(generate_args);
      info("generate -> " + config.output_dir.string());
      fedfair::run_generate(config);
    } else if (evaluate->parsed()) {
      fedfair::PipelineConfig config = load(evaluate_args);
      info("evaluate <- " + config.data_dir.string());
      fedfair::run_evaluate(config, require_data_dir(config));
    } else if (simulate->parsed()) {
      fedfair::PipelineConfig config = load(simulate_args);
      info("simulate <- " + config.data_dir.string());
      fedfair::run_simulate(config, require_data_dir(config));
    } else if (datasheet->parsed()) {
      fedfair::PipelineConfig config = load(datasheet_args);
      const std::filesystem::path out =
          datasheet_args.out.empty() ? std::filesystem::path{}
                                     : std::filesystem::path(datasheet_args.out) / "datasheet.md";
      fedfair::run_datasheet(require_data_dir(config), out);
    }
  } catch (const fedfair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedfair::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
