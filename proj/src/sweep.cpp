#include "qresp/sweep.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace qresp {

using json = nlohmann::ordered_json;

namespace {

// Per-metric salts for point_seed.
enum Salt : std::uint64_t { salt_indicators = 1, salt_subset = 2, salt_narma = 3, salt_capacity = 4 };

constexpr int narma_redraws = 10;

const std::vector<std::string> selection_names{"all", "damping", "nondamping", "entangling"};

bool has_metric(const SweepConfig& cfg, std::string_view m) {
  return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end();
}

std::string preset_string(HamiltonianPreset p) { return std::string(preset_name(p)); }

} // namespace

// --------------------------------------------------------------------------
// Configuration

std::optional<Experiment> parse_experiment(std::string_view name) {
  if (name == "ns_esp_axis_grid") {
    return Experiment::ns_esp_axis_grid;
  }
  if (name == "subset_gamma_p_grid") {
    return Experiment::subset_gamma_p_grid;
  }
  if (name == "classical_reference") {
    return Experiment::classical_reference;
  }
  return std::nullopt;
}

std::string_view experiment_name(Experiment e) {
  switch (e) {
  case Experiment::ns_esp_axis_grid:
    return "ns_esp_axis_grid";
  case Experiment::subset_gamma_p_grid:
    return "subset_gamma_p_grid";
  case Experiment::classical_reference:
    return "classical_reference";
  }
  return "unknown";
}

void SweepConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (grid_u < 2 || grid_v < 2) {
    fail("grid resolutions must be at least 2");
  }
  if (experiment == Experiment::classical_reference && grid_v != 2) {
    fail("classical_reference grid_v must be 2 (scaled, biased)");
  }
  if (metrics.empty()) {
    fail("metric set is empty");
  }
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (std::find(std::begin(metric_names), std::end(metric_names), m) == std::end(metric_names)) {
      fail("unknown metric '" + m + "'");
    }
    if (!seen.insert(m).second) {
      fail("metric '" + m + "' listed twice");
    }
    if (experiment == Experiment::classical_reference && m != "esp" && m != "ns_esp") {
      fail("classical_reference supports only esp and ns_esp");
    }
  }
  if (n_qubits < 2 || n_qubits > 4) {
    fail("n_qubits must lie in 2..4");
  }
  if (experiment != Experiment::ns_esp_axis_grid && n_qubits != 2) {
    fail("only the axis grid supports n_qubits != 2");
  }
  if (std::find(selection_names.begin(), selection_names.end(), readout_selection) == selection_names.end()) {
    fail("unknown readout_selection '" + readout_selection + "'");
  }
  if (indicator_length < 1 || indicator_length > 1000000 || window < 1 || window > indicator_length) {
    fail("indicator_length must lie in [window, 1e6] with window >= 1");
  }
  if (n_inputs < 1 || n_states < 2) {
    fail("indicators need n_inputs >= 1 and n_states >= 2");
  }
  if (narma_length < 20 || narma_length > 10000000 || narma_sequences < 1) {
    fail("narma_length must lie in [20, 1e7] and narma_sequences >= 1");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    fail("ridge must be finite and nonnegative");
  }
  if (capacity_length < 2 || capacity_length > 10000000 || capacity_washout < 0 ||
      capacity_washout >= capacity_length) {
    fail("capacity_length must lie in [2, 1e7] with 0 <= capacity_washout < capacity_length");
  }
  if (mc_max_delay < 1 || mc_max_delay > capacity_washout) {
    fail("mc_max_delay must lie in [1, capacity_washout]");
  }
  if (ipc_budget.empty()) {
    fail("ipc_budget is empty");
  }
  for (const auto& [d, k] : ipc_budget) {
    if (d < 1 || k < 0 || k > capacity_washout) {
      fail("ipc_budget entries need degree >= 1 and 0 <= max_delay <= capacity_washout");
    }
  }
  if (surrogate_count < 0) {
    fail("surrogate_count must be nonnegative");
  }
  if (!(rank_threshold > 0.0 && rank_threshold < 1.0)) {
    fail("rank_threshold must lie in (0, 1)");
  }
  if (!(rate_min <= rate_max) || !std::isfinite(rate_min) || !std::isfinite(rate_max)) {
    fail("rate range is invalid");
  }
  if (experiment == Experiment::classical_reference && !(rate_min > 0.0)) {
    fail("scaled reference rates must be positive");
  }
  if (classical_size < 1) {
    fail("classical_size must be positive");
  }
  if (workers < 1) {
    fail("workers must be at least 1");
  }
  if (out.empty()) {
    fail("output path is empty");
  }
}

std::vector<std::string> SweepConfig::columns() const {
  std::vector<std::string> cols;
  for (const auto& m : metric_names) {
    if (!has_metric(*this, m)) {
      continue;
    }
    if (m == "mc") {
      for (const char* c : {"mc_total", "mc_max_delay", "mc_even", "mc_odd", "mc_2plus"}) {
        cols.emplace_back(c);
      }
    } else if (m == "ipc") {
      cols.emplace_back("ipc_total");
      for (const auto& entry : ipc_budget) {
        cols.push_back("ipc_d" + std::to_string(entry.first));
      }
      cols.emplace_back("ipc_nonlinear");
    } else if (m == "rank") {
      cols.emplace_back("rank_raw");
      cols.emplace_back("rank_centered");
    } else if (m == "subset_indicators") {
      for (const char* c : {"ns_esp_damping", "ns_esp_nondamping", "ns_esp_entangling"}) {
        cols.emplace_back(c);
      }
    } else {
      cols.emplace_back(m);
    }
  }
  return cols;
}

namespace {

json to_json(const SweepConfig& c, bool runtime) {
  json j;
  j["experiment"] = experiment_name(c.experiment);
  j["grid_u"] = c.grid_u;
  j["grid_v"] = c.grid_v;
  j["metrics"] = c.metrics;
  j["preset"] = preset_string(c.preset);
  j["n_qubits"] = c.n_qubits;
  j["coupling_seed"] = c.coupling_seed;
  j["u0_seed"] = c.u0_seed;
  j["u1_seed"] = c.u1_seed;
  j["rate_min"] = c.rate_min;
  j["rate_max"] = c.rate_max;
  j["classical_size"] = c.classical_size;
  j["classical_seed"] = c.classical_seed;
  j["indicator_length"] = c.indicator_length;
  j["window"] = c.window;
  j["n_inputs"] = c.n_inputs;
  j["n_states"] = c.n_states;
  j["tail_mean"] = c.tail_mean;
  j["readout_selection"] = c.readout_selection;
  j["narma_length"] = c.narma_length;
  j["narma_sequences"] = c.narma_sequences;
  j["ridge"] = c.ridge;
  j["capacity_length"] = c.capacity_length;
  j["capacity_washout"] = c.capacity_washout;
  j["mc_max_delay"] = c.mc_max_delay;
  json budget = json::array();
  for (const auto& [d, k] : c.ipc_budget) {
    budget.push_back({d, k});
  }
  j["ipc_budget"] = budget;
  j["surrogate_count"] = c.surrogate_count;
  j["rank_threshold"] = c.rank_threshold;
  j["seed"] = c.seed;
  if (runtime) {
    j["out"] = c.out;
    j["workers"] = c.workers;
  }
  return j;
}

template <class T> void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) {
    try {
      dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

} // namespace

std::string config_to_json(const SweepConfig& cfg, bool include_runtime) {
  return to_json(cfg, include_runtime).dump(2);
}

SweepConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  const json known = to_json(SweepConfig{}, true);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  SweepConfig c;
  if (j.contains("experiment")) {
    std::string name;
    read(j, "experiment", name);
    const auto e = parse_experiment(name);
    if (!e) {
      throw ConfigError("unknown experiment '" + name + "'");
    }
    c.experiment = *e;
  }
  if (j.contains("preset")) {
    std::string name;
    read(j, "preset", name);
    const auto p = parse_preset(name);
    if (!p) {
      throw ConfigError("unknown preset '" + name + "'");
    }
    c.preset = *p;
  }
  read(j, "grid_u", c.grid_u);
  read(j, "grid_v", c.grid_v);
  read(j, "metrics", c.metrics);
  read(j, "n_qubits", c.n_qubits);
  read(j, "coupling_seed", c.coupling_seed);
  read(j, "u0_seed", c.u0_seed);
  read(j, "u1_seed", c.u1_seed);
  read(j, "rate_min", c.rate_min);
  read(j, "rate_max", c.rate_max);
  read(j, "classical_size", c.classical_size);
  read(j, "classical_seed", c.classical_seed);
  read(j, "indicator_length", c.indicator_length);
  read(j, "window", c.window);
  read(j, "n_inputs", c.n_inputs);
  read(j, "n_states", c.n_states);
  read(j, "tail_mean", c.tail_mean);
  read(j, "readout_selection", c.readout_selection);
  read(j, "narma_length", c.narma_length);
  read(j, "narma_sequences", c.narma_sequences);
  read(j, "ridge", c.ridge);
  read(j, "capacity_length", c.capacity_length);
  read(j, "capacity_washout", c.capacity_washout);
  read(j, "mc_max_delay", c.mc_max_delay);
  if (j.contains("ipc_budget")) {
    std::vector<std::vector<int>> raw;
    read(j, "ipc_budget", raw);
    c.ipc_budget.clear();
    for (const auto& e : raw) {
      if (e.size() != 2) {
        throw ConfigError("ipc_budget entries must be [degree, max_delay] pairs");
      }
      c.ipc_budget.emplace_back(e[0], e[1]);
    }
  }
  read(j, "surrogate_count", c.surrogate_count);
  read(j, "rank_threshold", c.rank_threshold);
  read(j, "seed", c.seed);
  read(j, "out", c.out);
  read(j, "workers", c.workers);
  return c;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const SweepConfig& cfg) {
  const std::string text = to_json(cfg, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t point_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ index) ^ salt);
}

// --------------------------------------------------------------------------
// Grids

std::vector<GridPoint> flatten_sphere(int azimuth_count, int polar_count) {
  if (azimuth_count < 2 || polar_count < 2) {
    throw std::invalid_argument("sphere grid counts must be at least 2");
  }
  std::vector<GridPoint> pts;
  pts.reserve(static_cast<std::size_t>(azimuth_count * polar_count));
  for (int iv = 0; iv < polar_count; ++iv) {
    const double polar = std::numbers::pi * iv / (polar_count - 1);
    for (int iu = 0; iu < azimuth_count; ++iu) {
      const double azimuth = 2.0 * std::numbers::pi * iu / azimuth_count;
      pts.push_back({static_cast<int>(pts.size()), azimuth, polar});
    }
  }
  return pts;
}

std::vector<GridPoint> sweep_grid(const SweepConfig& cfg) {
  if (cfg.experiment == Experiment::ns_esp_axis_grid) {
    return flatten_sphere(cfg.grid_u, cfg.grid_v);
  }
  std::vector<GridPoint> pts;
  for (int iv = 0; iv < cfg.grid_v; ++iv) {
    for (int iu = 0; iu < cfg.grid_u; ++iu) {
      const double fu = static_cast<double>(iu) / (cfg.grid_u - 1);
      double u = fu;
      double v = static_cast<double>(iv) / (cfg.grid_v - 1);
      if (cfg.experiment == Experiment::classical_reference) {
        u = cfg.rate_min + (cfg.rate_max - cfg.rate_min) * fu;
        v = iv;
      }
      pts.push_back({static_cast<int>(pts.size()), u, v});
    }
  }
  return pts;
}

// --------------------------------------------------------------------------
// Point evaluation

namespace {

SubsetSelection readout_selection(const SweepConfig& cfg, std::span<const PauliString> basis) {
  if (cfg.readout_selection == "damping") {
    return SubsetSelection::damping(basis);
  }
  if (cfg.readout_selection == "nondamping") {
    return SubsetSelection::nondamping(basis);
  }
  if (cfg.readout_selection == "entangling") {
    return SubsetSelection::entangling(basis);
  }
  return SubsetSelection::all(basis);
}

std::unique_ptr<QuantumReservoir> build_model(const SweepConfig& cfg, const GridPoint& p) {
  if (cfg.experiment == Experiment::ns_esp_axis_grid) {
    NsModelConfig m;
    m.hamiltonian = preset_config(cfg.preset, cfg.n_qubits, cfg.coupling_seed);
    m.axis = {p.u, p.v};
    return std::make_unique<NsModel>(m);
  }
  return std::make_unique<SubsetModel>(SubsetModelConfig{p.v, p.u, cfg.u0_seed, cfg.u1_seed});
}

EnsembleConfig ensemble_config(const SweepConfig& cfg) {
  return {cfg.n_inputs, cfg.n_states, cfg.indicator_length, cfg.window, cfg.tail_mean};
}

double narma_score(const SweepConfig& cfg, const QuantumReservoir& model, const SubsetSelection& sel,
                   std::span<const PauliString> basis, int order, std::uint64_t seed) {
  NarmaConfig nc;
  nc.order = order;
  const bool bias = cfg.readout_selection == "entangling";
  double total = 0.0;
  for (int s = 0; s < cfg.narma_sequences; ++s) {
    for (int attempt = 0;; ++attempt) {
      Rng rng(point_seed(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(attempt)));
      const auto u = narma_inputs(static_cast<std::size_t>(cfg.narma_length), nc, rng);
      std::vector<double> y;
      try {
        y = narma_aligned_target(u, nc);
      } catch (const DivergenceError&) {
        if (attempt + 1 >= narma_redraws) {
          throw;
        }
        continue;
      }
      const auto traj = run_reservoir(model, u, DensityMatrix::ground_state(model.n_qubits()), basis);
      total += train_linear_readout(sel.apply(traj.values), y, SplitSpec{}, cfg.ridge, bias).test_rnmse;
      break;
    }
  }
  return total / cfg.narma_sequences;
}

} // namespace

std::vector<double> evaluate_point(const SweepConfig& cfg, const GridPoint& p) {
  const auto idx = static_cast<std::uint64_t>(p.index);
  const EnsembleConfig ecfg = ensemble_config(cfg);
  std::vector<double> out;

  if (cfg.experiment == Experiment::classical_reference) {
    ClassicalRefConfig ref;
    ref.kind = p.v < 0.5 ? ClassicalRefConfig::Kind::scaled : ClassicalRefConfig::Kind::biased;
    ref.rate = p.u;
    ref.size = cfg.classical_size;
    ref.seed = cfg.classical_seed;
    Rng rng(point_seed(cfg.seed, idx, salt_indicators));
    const auto r = classical_indicator_ensemble(ref, ecfg, rng);
    if (has_metric(cfg, "esp")) {
      out.push_back(r.esp_final);
    }
    if (has_metric(cfg, "ns_esp")) {
      out.push_back(r.ns_final);
    }
    return out;
  }

  const auto model = build_model(cfg, p);
  const auto basis = all_pauli_strings(model->n_qubits());
  const SubsetSelection sel = readout_selection(cfg, basis);

  std::optional<EnsembleResult> ens;
  if (has_metric(cfg, "esp") || has_metric(cfg, "ns_esp")) {
    Rng rng(point_seed(cfg.seed, idx, salt_indicators));
    ens = indicator_ensemble(*model, ecfg, rng);
  }
  std::optional<McResult> mc;
  std::optional<IpcResult> ipc;
  std::optional<RankResult> rank;
  if (has_metric(cfg, "mc") || has_metric(cfg, "ipc") || has_metric(cfg, "rank")) {
    Rng rng(point_seed(cfg.seed, idx, salt_capacity));
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(cfg.capacity_length));
    for (auto& x : u) {
      x = uniform(rng);
    }
    const auto traj = run_reservoir(*model, u, DensityMatrix::ground_state(model->n_qubits()), basis);
    const RealMatrix features = sel.apply(traj.values);
    if (has_metric(cfg, "mc")) {
      McOptions opt;
      opt.max_delay = cfg.mc_max_delay;
      opt.washout = cfg.capacity_washout;
      opt.surrogate_count = cfg.surrogate_count;
      mc = mc_report(u, features, opt, rng);
    }
    if (has_metric(cfg, "ipc")) {
      IpcConfig ic;
      ic.budget = cfg.ipc_budget;
      ic.surrogate_count = cfg.surrogate_count;
      ic.washout = cfg.capacity_washout;
      ipc = ipc_report(u, features, ic, rng);
    }
    if (has_metric(cfg, "rank")) {
      rank = trajectory_rank(features, cfg.capacity_washout, cfg.rank_threshold);
    }
  }

  for (const auto& m : metric_names) {
    if (!has_metric(cfg, m)) {
      continue;
    }
    if (m == "esp") {
      out.push_back(ens->esp_final);
    } else if (m == "ns_esp") {
      out.push_back(ens->ns_final);
    } else if (m == "narma2" || m == "narma10") {
      const int order = m == "narma2" ? 2 : 10;
      out.push_back(narma_score(cfg, *model, sel, basis, order,
                                point_seed(cfg.seed, idx, salt_narma + 16 * static_cast<std::uint64_t>(order))));
    } else if (m == "mc") {
      out.insert(out.end(), {mc->total, static_cast<double>(mc->max_linear_delay), mc->even_sum, mc->odd_sum,
                             mc->tail_sum_2plus});
    } else if (m == "ipc") {
      out.push_back(ipc->total);
      double nonlinear = 0.0;
      for (const auto& d : ipc->degrees) {
        out.push_back(d.total);
        if (d.degree >= 2) {
          nonlinear += d.total;
        }
      }
      out.push_back(nonlinear);
    } else if (m == "rank") {
      out.push_back(rank->raw);
      out.push_back(rank->centered);
    } else if (m == "subset_indicators") {
      const std::vector<SubsetSelection> sels{SubsetSelection::damping(basis), SubsetSelection::nondamping(basis),
                                              SubsetSelection::entangling(basis)};
      Rng rng(point_seed(cfg.seed, idx, salt_subset));
      for (const auto& r : subset_indicator_ensembles(*model, sels, ecfg, rng)) {
        out.push_back(r.ns_final);
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Numbers

std::string format_number(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_number(std::string_view text) {
  if (text == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (text == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (text == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

json number_json(double x) {
  if (std::isfinite(x)) {
    return x;
  }
  return format_number(x);
}

double number_from_json(const json& j) {
  if (j.is_string()) {
    return parse_number(j.get<std::string>());
  }
  return j.get<double>();
}

} // namespace

// --------------------------------------------------------------------------
// Sweep driver

int FieldResult::failures() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.error.empty(); }));
}

std::filesystem::path checkpoint_path(const SweepConfig& cfg) { return cfg.out + ".ckpt"; }

namespace {

/// Completed points from a checkpoint with a matching header; a torn final
/// line is ignored.
std::map<int, FieldPoint> load_checkpoint(const std::filesystem::path& path, const std::string& hash, std::size_t width,
                                          int count) {
  std::map<int, FieldPoint> done;
  std::ifstream in(path);
  if (!in) {
    return done;
  }
  std::string line;
  if (!std::getline(in, line)) {
    return done;
  }
  try {
    const json head = json::parse(line);
    if (head.value("config_hash", "") != hash) {
      return done;
    }
  } catch (const json::exception&) {
    return done;
  }
  while (std::getline(in, line)) {
    try {
      const json j = json::parse(line);
      FieldPoint p;
      p.index = j.at("index").get<int>();
      for (const auto& v : j.at("values")) {
        p.values.push_back(number_from_json(v));
      }
      p.error = j.value("error", "");
      if (p.index >= 0 && p.index < count && p.values.size() == width) {
        done[p.index] = std::move(p);
      }
    } catch (const std::exception&) {
      break;
    }
  }
  return done;
}

std::string checkpoint_line(const FieldPoint& p) {
  json j;
  j["index"] = p.index;
  json vals = json::array();
  for (double v : p.values) {
    vals.push_back(number_json(v));
  }
  j["values"] = vals;
  if (!p.error.empty()) {
    j["error"] = p.error;
  }
  return j.dump();
}

} // namespace

FieldResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  FieldResult result;
  result.config = cfg;
  result.config_hash = config_hash(cfg);
  result.columns = cfg.columns();
  const auto grid = sweep_grid(cfg);
  const std::size_t width = result.columns.size();

  const auto ckpt = checkpoint_path(cfg);
  auto done = load_checkpoint(ckpt, result.config_hash, width, static_cast<int>(grid.size()));

  // Rewrite the checkpoint with the valid prefix so torn lines disappear.
  std::ofstream log(ckpt, std::ios::trunc);
  if (!log) {
    throw std::runtime_error("cannot write checkpoint " + ckpt.string());
  }
  log << json{{"config_hash", result.config_hash}, {"points", grid.size()}}.dump() << '\n';
  for (const auto& [i, p] : done) {
    log << checkpoint_line(p) << '\n';
  }
  log.flush();

  std::vector<int> pending;
  for (const auto& g : grid) {
    if (!done.count(g.index)) {
      pending.push_back(g.index);
    }
  }

  std::vector<FieldPoint> points(grid.size());
  for (auto& [i, p] : done) {
    points[static_cast<std::size_t>(i)] = std::move(p);
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      const GridPoint& g = grid[static_cast<std::size_t>(pending[k])];
      FieldPoint p;
      p.index = g.index;
      try {
        p.values = evaluate_point(cfg, g);
      } catch (const std::exception& e) {
        p.values.assign(width, std::numeric_limits<double>::quiet_NaN());
        p.error = e.what();
      }
      const std::string line = checkpoint_line(p);
      {
        std::lock_guard lock(log_mutex);
        log << line << '\n';
        log.flush();
      }
      points[static_cast<std::size_t>(g.index)] = std::move(p);
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(pending.size())));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < n_threads; ++i) {
      pool.emplace_back(worker);
    }
    worker();
  }

  for (const auto& g : grid) {
    auto& p = points[static_cast<std::size_t>(g.index)];
    p.index = g.index;
    p.u = g.u;
    p.v = g.v;
  }
  result.points = std::move(points);
  return result;
}

// --------------------------------------------------------------------------
// Output

FieldFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".json" ? FieldFormat::json : FieldFormat::csv;
}

namespace {

json metadata(const FieldResult& r) {
  json meta;
  meta["config"] = to_json(r.config, true);
  meta["config_hash"] = r.config_hash;
  meta["columns"] = r.columns;
  meta["point_count"] = r.points.size();
  json errors = json::array();
  for (const auto& p : r.points) {
    if (!p.error.empty()) {
      errors.push_back({{"index", p.index}, {"error", p.error}});
    }
  }
  meta["failures"] = errors;
  return meta;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw std::runtime_error("cannot write " + path.string());
    }
    f << text;
    if (!f.flush()) {
      throw std::runtime_error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw std::runtime_error("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

} // namespace

void emit_field(const FieldResult& result, const std::filesystem::path& path, FieldFormat format) {
  if (result.columns.empty()) {
    throw std::invalid_argument("field has no metric columns");
  }
  for (const auto& p : result.points) {
    if (p.values.size() != result.columns.size()) {
      throw std::invalid_argument("point " + std::to_string(p.index) + " has " + std::to_string(p.values.size()) +
                                  " values for " + std::to_string(result.columns.size()) + " columns");
    }
  }
  if (format == FieldFormat::csv) {
    std::string text = "u,v";
    for (const auto& c : result.columns) {
      text += ',' + c;
    }
    text += '\n';
    for (const auto& p : result.points) {
      text += format_number(p.u) + ',' + format_number(p.v);
      for (double v : p.values) {
        text += ',' + format_number(v);
      }
      text += '\n';
    }
    write_text(path, text);
    write_text(path.string() + ".meta.json", metadata(result).dump(2) + '\n');
  } else {
    json doc;
    doc["metadata"] = metadata(result);
    json pts = json::array();
    for (const auto& p : result.points) {
      json jp;
      jp["index"] = p.index;
      jp["u"] = p.u;
      jp["v"] = p.v;
      json vals;
      for (std::size_t k = 0; k < p.values.size(); ++k) {
        vals[result.columns[k]] = number_json(p.values[k]);
      }
      jp["values"] = vals;
      if (!p.error.empty()) {
        jp["error"] = p.error;
      }
      pts.push_back(jp);
    }
    doc["points"] = pts;
    write_text(path, doc.dump(2) + '\n');
  }
  std::error_code ec;
  std::filesystem::remove(checkpoint_path(result.config), ec);
}

FieldResult read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + " is empty");
  }
  const auto head = split(line);
  if (head.size() < 3 || head[0] != "u" || head[1] != "v") {
    throw std::runtime_error(path.string() + " lacks a u,v header");
  }
  FieldResult r;
  r.columns.assign(head.begin() + 2, head.end());
  while (std::getline(in, line)) {
    const auto cells = split(line);
    if (cells.size() != head.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(r.points.size() + 1) + " has " +
                               std::to_string(cells.size()) + " cells");
    }
    FieldPoint p;
    p.index = static_cast<int>(r.points.size());
    p.u = parse_number(cells[0]);
    p.v = parse_number(cells[1]);
    for (std::size_t k = 2; k < cells.size(); ++k) {
      p.values.push_back(parse_number(cells[k]));
    }
    r.points.push_back(std::move(p));
  }
  return r;
}

} // namespace qresp
