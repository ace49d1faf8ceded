// qresp command-line front end.
//
//   qresp sweep --config cfg.json --out field.csv --workers 8
//   qresp defaults > cfg.json
//
// Exit codes: 0 success, 1 configuration error, 2 some grid points failed.

#include "qresp/sweep.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-state diagnostics and benchmarks for small quantum reservoirs"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid sweep and write a CSV or JSON field");
  std::string config_path, experiment, metrics, out;
  int workers = 0;
  std::uint64_t seed = 0;
  sweep->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  sweep->add_option("--experiment", experiment, "ns_esp_axis_grid | subset_gamma_p_grid | classical_reference");
  sweep->add_option("--metrics", metrics, "comma-separated metric groups");
  sweep->add_option("--out", out, "output path (.csv or .json)");
  auto* workers_opt = sweep->add_option("--workers", workers, "worker threads");
  auto* seed_opt = sweep->add_option("--seed", seed, "master seed");

  auto* defaults = app.add_subcommand("defaults", "Print the default config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (defaults->parsed()) {
    std::cout << qresp::config_to_json(qresp::SweepConfig{}) << '\n';
    return 0;
  }

  qresp::SweepConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = qresp::load_config(config_path);
    }
    if (!experiment.empty()) {
      const auto e = qresp::parse_experiment(experiment);
      if (!e) {
        throw qresp::ConfigError("unknown experiment '" + experiment + "'");
      }
      cfg.experiment = *e;
    }
    if (!metrics.empty()) {
      cfg.metrics = split_list(metrics);
    }
    if (!out.empty()) {
      cfg.out = out;
    }
    if (*workers_opt) {
      cfg.workers = workers;
    }
    if (*seed_opt) {
      cfg.seed = seed;
    }
    cfg.validate();
  } catch (const qresp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    const auto result = qresp::run_sweep(cfg);
    qresp::emit_field(result, cfg.out, qresp::format_for(cfg.out));
    const int failed = result.failures();
    std::cerr << "wrote " << result.points.size() << " points to " << cfg.out;
    if (failed > 0) {
      const bool csv = qresp::format_for(cfg.out) == qresp::FieldFormat::csv;
      std::cerr << " (" << failed << " failed, see " << (csv ? cfg.out + ".meta.json" : cfg.out + " metadata") << ")";
    }
    std::cerr << '\n';
    return failed > 0 ? 2 : 0;
  } catch (const qresp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
