#pragma once

// Grid sweeps over reservoir parameters with checkpointed, deterministic,
// multi-threaded evaluation and CSV/JSON field output.

#include "qresp/benchmarks.hpp"
#include "qresp/espmetrics.hpp"
#include "qresp/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qresp {

/// Invalid or inconsistent sweep configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { ns_esp_axis_grid, subset_gamma_p_grid, classical_reference };

std::optional<Experiment> parse_experiment(std::string_view name);
std::string_view experiment_name(Experiment e);

/// Metric groups; each expands to one or more output columns.
inline constexpr std::string_view metric_names[] = {"esp",  "ns_esp", "narma2", "narma10",
                                                    "mc",   "ipc",    "rank",   "subset_indicators"};

struct SweepConfig {
  Experiment experiment = Experiment::ns_esp_axis_grid;
  // Grid: azimuth x polar, p x gamma, or rate x kind.
  int grid_u = 60;
  int grid_v = 30;
  std::vector<std::string> metrics{"esp", "ns_esp"};

  // ns_esp_axis_grid
  HamiltonianPreset preset = HamiltonianPreset::H1;
  int n_qubits = 2;
  std::uint64_t coupling_seed = default_coupling_seed;
  // subset_gamma_p_grid
  std::uint64_t u0_seed = SubsetModelConfig{}.u0_seed;
  std::uint64_t u1_seed = SubsetModelConfig{}.u1_seed;
  // classical_reference: rates on [rate_min, rate_max]; kinds scaled (v = 0), biased (v = 1)
  double rate_min = 0.9;
  double rate_max = 1.1;
  int classical_size = 20;
  std::uint64_t classical_seed = 0;

  // Indicators
  int indicator_length = 200;
  int window = 10;
  int n_inputs = 4;
  int n_states = 3;
  bool tail_mean = false;

  // Tasks
  std::string readout_selection = "all"; // all | damping | nondamping | entangling
  int narma_length = 20000;
  int narma_sequences = 5;
  double ridge = 0.0;
  int capacity_length = 100000;
  int capacity_washout = 30000;
  int mc_max_delay = 100;
  std::vector<std::pair<int, int>> ipc_budget{{1, 100}, {2, 30}, {3, 10}, {4, 5}, {5, 5}};
  int surrogate_count = 20;
  double rank_threshold = 1e-6;

  std::uint64_t seed = 0;
  std::string out = "field.csv";
  int workers = 1;

  /// Throws ConfigError.
  void validate() const;
  /// Output column names after the u, v coordinates.
  std::vector<std::string> columns() const;
  int point_count() const { return grid_u * grid_v; }
};

/// JSON round trip of the resolved configuration; unknown keys are rejected.
std::string config_to_json(const SweepConfig& cfg, bool include_runtime = true);
SweepConfig config_from_json(std::string_view text);
SweepConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64-bit hash (hex) of the configuration without out/workers.
std::string config_hash(const SweepConfig& cfg);

/// Per-point seed from (master seed, point index, salt) via splitmix64.
std::uint64_t point_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt = 0);

struct GridPoint {
  int index = 0;
  double u = 0.0;
  double v = 0.0;
};

/// Row-major axis grid: polar rows 0 .. pi inclusive (top row is +Z),
/// azimuth columns 0 .. 2 pi exclusive. u = azimuth, v = polar.
std::vector<GridPoint> flatten_sphere(int azimuth_count, int polar_count);
/// Coordinates for any experiment, in point-index order.
std::vector<GridPoint> sweep_grid(const SweepConfig& cfg);

struct FieldPoint {
  int index = 0;
  double u = 0.0;
  double v = 0.0;
  std::vector<double> values; // NaN where the point failed
  std::string error;          // empty on success
};

struct FieldResult {
  SweepConfig config;
  std::string config_hash;
  std::vector<std::string> columns;
  std::vector<FieldPoint> points;

  int failures() const;
};

/// All metric columns for one grid point. Throws on failure.
std::vector<double> evaluate_point(const SweepConfig& cfg, const GridPoint& point);

/// Evaluates every point with cfg.workers threads, resuming from and
/// appending to `<out>.ckpt`. The checkpoint is removed by emit_field.
FieldResult run_sweep(const SweepConfig& cfg);

std::filesystem::path checkpoint_path(const SweepConfig& cfg);

enum class FieldFormat { csv, json };
FieldFormat format_for(const std::filesystem::path& path);

/// Writes the field; CSV output also writes `<path>.meta.json` with the
/// resolved config and per-point errors. Throws std::runtime_error naming the
/// path on I/O failure.
void emit_field(const FieldResult& result, const std::filesystem::path& path, FieldFormat format);

/// %.17g, with inf / -inf / nan spelled out.
std::string format_number(double x);
double parse_number(std::string_view text);

/// Reads a CSV written by emit_field (values and coordinates only).
FieldResult read_field_csv(const std::filesystem::path& path);

} // namespace qresp
