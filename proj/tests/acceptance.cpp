// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "qresp/benchmarks.hpp"
#include "qresp/espmetrics.hpp"
#include "qresp/reservoir.hpp"
#include "qresp/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace qresp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> uniform_inputs(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

RealVector ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  RealVector r(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r(static_cast<Eigen::Index>(order[k])) = avg;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  RealVector ra = ranks(a), rb = ranks(b);
  ra.array() -= ra.mean();
  rb.array() -= rb.mean();
  return ra.dot(rb) / (ra.norm() * rb.norm());
}

NsModelConfig h1_axis(double azimuth, double polar) {
  NsModelConfig cfg;
  cfg.hamiltonian = preset_config(HamiltonianPreset::H1);
  cfg.axis = {azimuth, polar};
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome pole_degeneracy() {
  const auto start = std::chrono::steady_clock::now();
  // Pole entries exactly as the default axis-grid sweep reports them.
  SweepConfig sweep;
  sweep.metrics = {"esp", "ns_esp"};
  const auto grid = sweep_grid(sweep);
  EnsembleConfig cfg; // 4 inputs, 3 states, 200 steps, w = 10
  const auto basis = all_pauli_strings(2);
  bool ok = true;
  std::string detail;
  for (const auto& point : {grid.front(), grid[grid.size() - static_cast<std::size_t>(sweep.grid_u)]}) {
    const auto values = evaluate_point(sweep, point);
    const double esp = values[0], ns = values[1];

    const NsModel model(h1_axis(point.u, point.v));
    Rng rng(0);
    const auto inputs = uniform_inputs(static_cast<std::size_t>(cfg.seq_len), rng);
    const auto traj = run_reservoir(model, inputs, qmat::haar_random_pure_state(2, rng), basis);
    const double var50 = windowed_stats(traj.values, 49, cfg.window).variance.maxCoeff();

    const bool var_ok = var50 < 1e-10;
    const bool esp_ok = esp < 1e-3;
    const bool ns_ok = std::isinf(ns) || ns >= 1.0;
    ok = ok && var_ok && esp_ok && ns_ok;
    detail += fmt("%s: var@50=%.2e%s esp@200=%.2e%s ns@200=%.3g%s; ", point.v == 0.0 ? "+Z" : "-Z", var50,
                  var_ok ? "" : "(>1e-10)", esp, esp_ok ? "" : "(>1e-3)", ns, ns_ok ? "" : "(<1)");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok = ok && secs < 10.0;
  return {ok, detail + fmt("%.2fs", secs)};
}

Outcome depolarization_law() {
  Rng rng(2);
  const double eps = 0.1;
  const DepolarizingModel model(2, eps, qmat::haar_random_unitary(4, rng));
  auto rho = qmat::haar_random_pure_state(2, rng);
  const auto mixed = DensityMatrix::maximally_mixed(2);
  const double d0 = qmat::trace_distance(rho, mixed);
  double worst = 0.0;
  for (int t = 1; t <= 100; ++t) {
    rho = model.step(rho, 0.0);
    worst = std::max(worst, std::abs(qmat::trace_distance(rho, mixed) - std::pow(1 - eps, t) * d0));
  }
  return {worst < 1e-12, fmt("max |D_t - 0.9^t D_0| = %.2e over t <= 100", worst)};
}

Outcome entangling_example() {
  ComplexVector plus0 = ComplexVector::Zero(4);
  plus0(0) = plus0(2) = 1.0 / std::sqrt(2.0);
  const auto out = qmat::conjugate(DensityMatrix::from_pure_state(plus0), qmat::cnot_power(1.0));
  ComplexMatrix expect = ComplexMatrix::Zero(4, 4);
  expect(0, 0) = expect(0, 3) = expect(3, 0) = expect(3, 3) = 0.5;
  const double bell = (out.matrix() - expect).cwiseAbs().maxCoeff();
  const double id = (qmat::cnot_power(0.0) - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff();
  Rng rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  double group = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double p = d(rng), q = d(rng);
    group = std::max(group,
                     (qmat::cnot_power(p) * qmat::cnot_power(q) - qmat::cnot_power(p + q)).cwiseAbs().maxCoeff());
  }
  const bool ok = bell < 1e-15 && id == 0.0 && group < 1e-12;
  return {ok, fmt("Bell matrix err %.1e, p=0 err %.1e, group law err %.2e", bell, id, group)};
}

Outcome rank_dichotomy() {
  const auto start = std::chrono::steady_clock::now();
  const auto basis = all_pauli_strings(2);
  const Eigen::Index washout = 3000, length = 10000;
  Rng rng(4);
  const auto inputs = uniform_inputs(static_cast<std::size_t>(washout + length), rng);
  // Raw rank at the default threshold, and at 1e-10 to expose the structural count.
  auto raw_rank = [&](const AxisConfig& axis) {
    const NsModel model(h1_axis(axis.azimuth, axis.polar));
    const auto traj = run_reservoir(model, inputs, DensityMatrix::ground_state(2), basis);
    return std::pair{trajectory_rank(traj.values, washout).raw, trajectory_rank(traj.values, washout, 1e-10).raw};
  };
  const auto north = raw_rank({0.0, 0.0});
  const auto south = raw_rank({0.0, std::numbers::pi});
  std::uniform_real_distribution<double> az(0.0, 2 * std::numbers::pi), po(0.05, std::numbers::pi - 0.05);
  int hits = 0;
  std::vector<int> seen, fine;
  for (int k = 0; k < 20; ++k) {
    const auto r = raw_rank({az(rng), po(rng)});
    seen.push_back(r.first);
    fine.push_back(r.second);
    hits += r.first == 13;
  }
  std::sort(seen.begin(), seen.end());
  std::sort(fine.begin(), fine.end());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = north.first == 2 && south.first == 2 && hits >= 18 && secs < 120.0;
  return {ok, fmt("pole ranks %d/%d (want 2), generic rank 13 at %d/20 axes (ranks %d..%d; at 1e-10: poles %d/%d, "
                  "generic %d..%d), %.1fs",
                  north.first, south.first, hits, seen.front(), seen.back(), north.second, south.second, fine.front(),
                  fine.back(), secs)};
}

Outcome narma_correspondence() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = fs::temp_directory_path() / "qresp_acceptance_narma.csv";
  SweepConfig cfg;
  cfg.grid_u = 12;
  cfg.grid_v = 6;
  cfg.metrics = {"ns_esp", "narma2"};
  cfg.narma_length = 20000;
  cfg.out = out.string();
  cfg.workers = worker_count();
  fs::remove(checkpoint_path(cfg));
  const auto field = run_sweep(cfg);
  fs::remove(checkpoint_path(cfg));

  std::vector<double> ns, err;
  double pole_min = std::numeric_limits<double>::infinity();
  double generic_best = std::numeric_limits<double>::infinity();
  for (const auto& p : field.points) {
    ns.push_back(p.values[0]);
    err.push_back(p.values[1]);
    if (p.v == 0.0 || p.v == std::numbers::pi) {
      pole_min = std::min(pole_min, p.values[1]);
    } else {
      generic_best = std::min(generic_best, p.values[1]);
    }
  }
  const double rho = spearman(ns, err);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = field.failures() == 0 && rho > 0.3 && pole_min >= 0.9 && generic_best <= 0.5 && secs < 1800.0;
  return {ok, fmt("Spearman(ns, NARMA2 RNMSE) = %.3f, min pole RNMSE %.3f, best generic RNMSE %.3f, %d failures, %.0fs",
                  rho, pole_min, generic_best, field.failures(), secs)};
}

Outcome subset_structure() {
  const auto basis = all_pauli_strings(2);
  const SubsetSelection sel[] = {SubsetSelection::damping(basis), SubsetSelection::nondamping(basis)};
  EnsembleConfig cfg;
  bool ok = true;
  std::string detail;
  int index = 0;
  for (double g : {0.0, 0.5, 0.9}) {
    for (double p : {0.0, 0.5, 1.0}) {
      Rng rng(point_seed(0, static_cast<std::uint64_t>(index++), 2));
      const auto r = subset_indicator_ensembles(SubsetModel(SubsetModelConfig{g, p}), sel, cfg, rng);
      const double damp = r[0].ns_final, nondamp = r[1].ns_final;
      if (g >= 0.5) ok = ok && damp < 1e-2;
      if (g == 0.0) ok = ok && damp > 0.1;
      if (p == 0.0) ok = ok && nondamp > 0.1;
      detail += fmt("(g%.1f,p%.1f) %.2g/%.2g ", g, p, damp, nondamp);
    }
  }
  return {ok, "damping/nondamping ns: " + detail};
}

Outcome even_odd_memory() {
  Rng rng(7);
  const auto u = uniform_inputs(100000, rng);
  const SubsetModel model(SubsetModelConfig{0.2, 1.0});
  const auto basis = all_pauli_strings(2);
  const auto traj = run_reservoir(model, u, DensityMatrix::ground_state(2), basis);
  const RealMatrix x = SubsetSelection::damping(basis).apply(traj.values);
  McOptions opt;
  opt.max_delay = 50;
  opt.washout = 30000;
  opt.surrogate_count = 50;
  const auto r = mc_report(u, x, opt, rng);
  const double c1 = r.memory_functions(1), c2 = r.memory_functions(2);
  const double even = r.even_sum - r.memory_functions(0);
  const bool ok = c1 > 2.0 * c2 && r.odd_sum > even;
  return {ok, fmt("C1 = %.4f, C2 = %.4f, odd sum %.4f, even sum (k >= 2) %.4f", c1, c2, r.odd_sum, even)};
}

Outcome capacity_oracles() {
  Rng rng(8);
  const auto u = uniform_inputs(100000, rng);
  const RealMatrix line = run_delay_line(u, 5);
  McOptions mo;
  mo.max_delay = 30;
  mo.washout = 10000;
  mo.surrogate_count = 50;
  Rng r1(81);
  const auto mc = mc_report(u, line, mo, r1);
  double worst_ck = 0.0;
  for (int k = 1; k <= 5; ++k) worst_ck = std::max(worst_ck, std::abs(mc.memory_functions(k) - 1.0));
  bool ok = worst_ck <= 0.02 && std::abs(mc.total - 5.0) <= 0.1 && mc.max_linear_delay == 5;

  IpcConfig ic;
  ic.budget = {{1, 30}, {2, 10}, {3, 5}};
  ic.washout = 10000;
  ic.surrogate_count = 50;
  Rng r2(81);
  const auto ipc_line = ipc_report(u, line, ic, r2);
  const double deg1 = (ipc_line.degrees[0].raw - mc.raw).cwiseAbs().maxCoeff();
  ok = ok && deg1 <= 1e-6;

  // Saturation bound on several reservoirs.
  const auto basis = all_pauli_strings(2);
  std::vector<std::pair<std::string, RealMatrix>> systems;
  systems.emplace_back("delay line", line);
  systems.emplace_back("subset model",
                       run_reservoir(SubsetModel(SubsetModelConfig{0.3, 0.6}), u, DensityMatrix::ground_state(2), basis)
                           .values);
  systems.emplace_back("NS model",
                       run_reservoir(NsModel(h1_axis(1.0, 1.2)), u, DensityMatrix::ground_state(2), basis).values);
  std::string bound;
  for (const auto& [name, x] : systems) {
    Rng r3(82);
    const auto r = ipc_report(u, x, ic, r3);
    const bool within = r.total <= static_cast<double>(r.feature_rank) + 0.1;
    ok = ok && within;
    bound += fmt("%s %.3f <= %d; ", name.c_str(), r.total, static_cast<int>(r.feature_rank));
  }
  return {ok, fmt("max |C_k - 1| = %.4f, MC = %.4f, max delay %d, |IPC_1 - MC| = %.1e; IPC: ", worst_ck, mc.total,
                  mc.max_linear_delay, deg1) +
                  bound};
}

Outcome classical_identities() {
  Rng rng(9);
  const auto u = uniform_inputs(500, rng);
  ClassicalRefConfig cfg;
  const EchoStateMap map(cfg.size, cfg.spectral_radius, cfg.input_scale, cfg.seed);
  RealVector y0(cfg.size);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& v : y0) v = d(rng);
  const RealMatrix plain = run_echo_state(map, u, y0);
  double worst = 0.0;
  for (double c : {0.9, 1.1}) {
    cfg.kind = ClassicalRefConfig::Kind::scaled;
    cfg.rate = c;
    const RealMatrix y = run_classical_reference(cfg, u, y0);
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      const double s = std::pow(c, static_cast<double>(t + 1));
      worst = std::max(worst, (y.row(t) / s - plain.row(t)).cwiseAbs().maxCoeff());
    }
  }
  cfg.kind = ClassicalRefConfig::Kind::biased;
  cfg.rate = 0.05;
  const RealMatrix yb = run_classical_reference(cfg, u, y0);
  for (Eigen::Index t = 0; t < yb.rows(); ++t) {
    worst = std::max(worst,
                     (yb.row(t).array() - 0.05 * static_cast<double>(t + 1) - plain.row(t).array()).abs().maxCoeff());
  }

  EnsembleConfig ec;
  ClassicalRefConfig base;
  Rng r0(10);
  const double ns_plain = classical_indicator_ensemble(base, ec, r0).ns_final;
  double ns_gap = 0.0;
  for (double c : {0.9, 1.1}) {
    ClassicalRefConfig scaled = base;
    scaled.rate = c;
    Rng r1(10);
    ns_gap = std::max(ns_gap, std::abs(classical_indicator_ensemble(scaled, ec, r1).ns_final - ns_plain));
  }
  const bool ok = worst < 1e-9 && ns_gap < 1e-6;
  return {ok, fmt("max trajectory identity error %.2e, final ns gap %.2e (plain ns %.2e)", worst, ns_gap, ns_plain)};
}

Outcome channel_properties() {
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0), az(0.0, 2 * std::numbers::pi), po(0.0, std::numbers::pi);
  double trace = 0.0, herm = 0.0, eig = 1.0;
  for (int run = 0; run < 10; ++run) {
    const SubsetModel subset(SubsetModelConfig{unit(rng), unit(rng), static_cast<std::uint64_t>(2 * run + 1),
                                               static_cast<std::uint64_t>(2 * run + 2)});
    const NsModel ns(h1_axis(az(rng), po(rng)));
    for (const QuantumReservoir* m : {static_cast<const QuantumReservoir*>(&subset),
                                      static_cast<const QuantumReservoir*>(&ns)}) {
      auto rho = qmat::haar_random_pure_state(2, rng);
      for (double x : uniform_inputs(500, rng)) {
        rho = m->step(rho, x);
        trace = std::max(trace, rho.trace_error());
        herm = std::max(herm, rho.hermiticity_error());
        eig = std::min(eig, rho.min_eigenvalue());
      }
    }
  }
  double kraus = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const auto ks = amplitude_damping_kraus(k / 1000.0);
    kraus = std::max(kraus, (ks[0].adjoint() * ks[0] + ks[1].adjoint() * ks[1] - ComplexMatrix::Identity(2, 2))
                                .cwiseAbs()
                                .maxCoeff());
  }

  const fs::path dir = fs::temp_directory_path();
  SweepConfig cfg;
  cfg.grid_u = 6;
  cfg.grid_v = 4;
  cfg.indicator_length = 100;
  std::string bytes[2];
  const int workers[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    cfg.out = (dir / ("qresp_acceptance_w" + std::to_string(workers[k]) + ".csv")).string();
    cfg.workers = workers[k];
    fs::remove(checkpoint_path(cfg));
    emit_field(run_sweep(cfg), cfg.out, FieldFormat::csv);
    std::ifstream in(cfg.out, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bytes[k] = ss.str();
  }
  const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
  const bool ok = trace < 1e-10 && herm < 1e-10 && eig > -1e-9 &&
                  kraus <= 4 * std::numeric_limits<double>::epsilon() && same;
  return {ok, fmt("10^4 steps: trace %.1e, hermiticity %.1e, min eig %.1e; Kraus %.1e; CSV 1 vs 8 workers %s", trace,
                  herm, eig, kraus, same ? "identical" : "DIFFER")};
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"pole degeneracy", pole_degeneracy},
      {"depolarization law", depolarization_law},
      {"entangling example", entangling_example},
      {"rank dichotomy", rank_dichotomy},
      {"NS-ESP vs NARMA2 correspondence", narma_correspondence},
      {"subset ESP structure", subset_structure},
      {"even/odd memory alternation", even_odd_memory},
      {"capacity oracles", capacity_oracles},
      {"classical reference identities", classical_identities},
      {"channel property suite", channel_properties},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
