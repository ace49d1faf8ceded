#include "qresp/espmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qresp {

namespace {

void check_pair(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("indicator trajectories differ in shape");
  }
}

void check_row(const RealMatrix& a, Eigen::Index t) {
  if (t < 0 || t >= a.rows()) {
    throw std::out_of_range("time index " + std::to_string(t) + " outside trajectory of length " +
                            std::to_string(a.rows()));
  }
}

double variance_norm(const RealMatrix& series, Eigen::Index t, int w) {
  return windowed_stats(series, t, w).variance.norm();
}

} // namespace

WindowStats windowed_stats(const RealMatrix& series, Eigen::Index t, int w) {
  if (w < 1) {
    throw std::invalid_argument("window must be positive");
  }
  check_row(series, t);
  if (t < w - 1) {
    throw std::out_of_range("window " + std::to_string(w) + " needs history up to row " + std::to_string(w - 1) +
                            ", got row " + std::to_string(t));
  }
  const auto block = series.middleRows(t - w + 1, w);
  WindowStats out;
  out.window = w;
  out.mean = block.colwise().mean().transpose();
  out.variance = (block.rowwise() - out.mean.transpose()).array().square().colwise().mean().transpose();
  return out;
}

double esp_indicator(const RealMatrix& a, const RealMatrix& b, double s0_dist, Eigen::Index t) {
  check_pair(a, b);
  check_row(a, t);
  if (!(s0_dist > 0.0) || !std::isfinite(s0_dist)) {
    throw std::invalid_argument("initial states must differ (s0_dist > 0)");
  }
  return (a.row(t) - b.row(t)).norm() / s0_dist;
}

NsValue ns_esp_indicator(const RealMatrix& a, const RealMatrix& b, double s0_dist, int w, Eigen::Index t) {
  const double esp = esp_indicator(a, b, s0_dist, t);
  const double ref = std::min(variance_norm(a, w - 1, w), variance_norm(b, w - 1, w));
  const double now = std::min(variance_norm(a, t, w), variance_norm(b, t, w));
  if (now < variance_underflow) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {esp * std::sqrt(ref) / std::sqrt(now), false};
}

IndicatorTrace pair_indicator_trace(const RealMatrix& a, const RealMatrix& b, double s0_dist, int w) {
  check_pair(a, b);
  if (w < 1) {
    throw std::invalid_argument("window must be positive");
  }
  const Eigen::Index n = a.rows();
  IndicatorTrace out;
  out.window = w;
  out.esp.resize(n);
  out.ns = RealVector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.ns_sentinel.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index t = 0; t < n; ++t) {
    out.esp(t) = esp_indicator(a, b, s0_dist, t);
  }
  if (n < w) {
    return out;
  }
  // Variance norms computed once per row for both trajectories.
  RealVector va(n), vb(n);
  for (Eigen::Index t = w - 1; t < n; ++t) {
    va(t) = variance_norm(a, t, w);
    vb(t) = variance_norm(b, t, w);
  }
  const double ref = std::min(va(w - 1), vb(w - 1));
  for (Eigen::Index t = w - 1; t < n; ++t) {
    const double now = std::min(va(t), vb(t));
    if (now < variance_underflow) {
      out.ns(t) = std::numeric_limits<double>::infinity();
      out.ns_sentinel[static_cast<std::size_t>(t)] = true;
    } else {
      out.ns(t) = out.esp(t) * std::sqrt(ref) / std::sqrt(now);
    }
  }
  return out;
}

IndicatorTrace average_traces(std::span<const IndicatorTrace> traces) {
  if (traces.empty()) {
    throw std::invalid_argument("no traces to average");
  }
  const Eigen::Index n = traces.front().length();
  IndicatorTrace out;
  out.window = traces.front().window;
  out.esp = RealVector::Zero(n);
  out.ns = RealVector::Zero(n);
  out.ns_sentinel.assign(static_cast<std::size_t>(n), false);
  for (const auto& tr : traces) {
    if (tr.length() != n || tr.window != out.window) {
      throw std::invalid_argument("traces differ in length or window");
    }
    out.esp += tr.esp;
    out.ns += tr.ns;
    for (std::size_t t = 0; t < out.ns_sentinel.size(); ++t) {
      out.ns_sentinel[t] = out.ns_sentinel[t] || tr.ns_sentinel[t];
    }
  }
  const double k = static_cast<double>(traces.size());
  out.esp /= k;
  out.ns /= k;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (out.ns_sentinel[static_cast<std::size_t>(t)]) {
      out.ns(t) = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

// --------------------------------------------------------------------------

SubsetSelection SubsetSelection::columns(std::vector<Eigen::Index> indices, Eigen::Index basis_size) {
  if (indices.empty()) {
    throw std::invalid_argument("subset selection is empty");
  }
  for (auto i : indices) {
    if (i < 0 || i >= basis_size) {
      throw std::invalid_argument("subset index " + std::to_string(i) + " outside basis of size " +
                                  std::to_string(basis_size));
    }
  }
  SubsetSelection s;
  s.indices_ = std::move(indices);
  s.basis_size_ = basis_size;
  return s;
}

SubsetSelection SubsetSelection::projection(RealMatrix p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw std::invalid_argument("projection must be a nonempty square matrix");
  }
  if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("projection matrix is not idempotent");
  }
  if (p.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("projection onto the zero subspace");
  }
  SubsetSelection s;
  s.basis_size_ = p.rows();
  s.projection_ = std::move(p);
  return s;
}

SubsetSelection SubsetSelection::all(std::span<const PauliString> basis) {
  std::vector<Eigen::Index> idx(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    idx[k] = static_cast<Eigen::Index>(k);
  }
  return columns(std::move(idx), static_cast<Eigen::Index>(basis.size()));
}

SubsetSelection SubsetSelection::supported_on(std::span<const PauliString> basis, std::span<const int> qubits) {
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& p = basis[k];
    bool inside = true;
    for (int q = 0; q < p.n_qubits(); ++q) {
      if (std::find(qubits.begin(), qubits.end(), q) == qubits.end() && !p.acts_trivially_on(q)) {
        inside = false;
        break;
      }
    }
    if (inside) {
      idx.push_back(static_cast<Eigen::Index>(k));
    }
  }
  return columns(std::move(idx), static_cast<Eigen::Index>(basis.size()));
}

SubsetSelection SubsetSelection::damping(std::span<const PauliString> basis) {
  const int q0[] = {0};
  return supported_on(basis, q0);
}

SubsetSelection SubsetSelection::nondamping(std::span<const PauliString> basis) {
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].acts_trivially_on(0)) {
      idx.push_back(static_cast<Eigen::Index>(k));
    }
  }
  return columns(std::move(idx), static_cast<Eigen::Index>(basis.size()));
}

SubsetSelection SubsetSelection::entangling(std::span<const PauliString> basis) {
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& p = basis[k];
    bool full = true;
    for (int q = 0; q < p.n_qubits(); ++q) {
      full = full && !p.acts_trivially_on(q);
    }
    if (full) {
      idx.push_back(static_cast<Eigen::Index>(k));
    }
  }
  return columns(std::move(idx), static_cast<Eigen::Index>(basis.size()));
}

RealMatrix SubsetSelection::apply(const RealMatrix& series) const {
  if (series.cols() != basis_size_) {
    throw std::invalid_argument("series width " + std::to_string(series.cols()) + " does not match selection basis " +
                                std::to_string(basis_size_));
  }
  if (projection_) {
    return series * projection_->transpose();
  }
  RealMatrix out(series.rows(), static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = series.col(indices_[k]);
  }
  return out;
}

// --------------------------------------------------------------------------

void EnsembleConfig::validate() const {
  if (n_inputs < 1) {
    throw std::invalid_argument("ensemble needs at least one input sequence");
  }
  if (n_states < 2) {
    throw std::invalid_argument("ensemble needs at least two initial states");
  }
  if (window < 1) {
    throw std::invalid_argument("window must be positive");
  }
  if (seq_len < window) {
    throw std::invalid_argument("sequence length shorter than the window");
  }
}

EnsembleResult summarize(IndicatorTrace mean, int pair_count, const EnsembleConfig& cfg) {
  EnsembleResult r;
  const Eigen::Index n = mean.length();
  if (cfg.tail_mean) {
    const Eigen::Index k = std::min<Eigen::Index>(cfg.window, n);
    r.esp_final = mean.esp.tail(k).mean();
    r.ns_final = mean.ns.tail(k).mean();
    for (Eigen::Index t = n - k; t < n; ++t) {
      r.ns_sentinel = r.ns_sentinel || mean.ns_sentinel[static_cast<std::size_t>(t)];
    }
  } else {
    r.esp_final = mean.esp(n - 1);
    r.ns_final = mean.ns(n - 1);
    r.ns_sentinel = mean.ns_sentinel.back();
  }
  r.mean = std::move(mean);
  r.pair_count = pair_count;
  return r;
}

namespace {

std::vector<std::vector<double>> draw_inputs(const EnsembleConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<std::vector<double>> inputs(static_cast<std::size_t>(cfg.n_inputs));
  for (auto& seq : inputs) {
    seq.resize(static_cast<std::size_t>(cfg.seq_len));
    for (auto& u : seq) {
      u = uniform(rng);
    }
  }
  return inputs;
}

} // namespace

EnsembleResult classical_indicator_ensemble(const ClassicalRefConfig& ref, const EnsembleConfig& cfg, Rng& rng) {
  cfg.validate();
  ref.validate();
  const auto inputs = draw_inputs(cfg, rng);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<RealVector> y0(static_cast<std::size_t>(cfg.n_states));
  for (auto& y : y0) {
    y.resize(ref.size);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y(i) = uniform(rng);
    }
  }
  std::vector<IndicatorTrace> traces;
  for (const auto& seq : inputs) {
    std::vector<RealMatrix> runs;
    for (const auto& y : y0) {
      runs.push_back(run_classical_reference(ref, seq, y));
    }
    for (int a = 0; a < cfg.n_states; ++a) {
      for (int b = a + 1; b < cfg.n_states; ++b) {
        const auto ia = static_cast<std::size_t>(a);
        const auto ib = static_cast<std::size_t>(b);
        traces.push_back(pair_indicator_trace(runs[ia], runs[ib], (y0[ia] - y0[ib]).norm(), cfg.window));
      }
    }
  }
  return summarize(average_traces(traces), static_cast<int>(traces.size()), cfg);
}

std::vector<EnsembleResult> subset_indicator_ensembles(const QuantumReservoir& model,
                                                       std::span<const SubsetSelection> selections,
                                                       const EnsembleConfig& cfg, Rng& rng) {
  cfg.validate();
  if (selections.empty()) {
    throw std::invalid_argument("no selections given");
  }
  const int n = model.n_qubits();
  const auto basis = all_pauli_strings(n);
  for (const auto& s : selections) {
    if (s.basis_size() != static_cast<Eigen::Index>(basis.size())) {
      throw std::invalid_argument("selection does not match the model's readout basis");
    }
  }

  const auto inputs = draw_inputs(cfg, rng);
  std::vector<DensityMatrix> states;
  std::vector<RealVector> s0;
  for (int k = 0; k < cfg.n_states; ++k) {
    states.push_back(qmat::haar_random_pure_state(n, rng));
    s0.push_back(pauli_expectations(states.back(), basis));
  }

  std::vector<std::vector<IndicatorTrace>> traces(selections.size());
  for (const auto& seq : inputs) {
    std::vector<RealMatrix> runs;
    for (const auto& rho0 : states) {
      runs.push_back(run_reservoir(model, seq, rho0, basis).values);
    }
    for (int a = 0; a < cfg.n_states; ++a) {
      for (int b = a + 1; b < cfg.n_states; ++b) {
        const double d0 = (s0[static_cast<std::size_t>(a)] - s0[static_cast<std::size_t>(b)]).norm();
        for (std::size_t s = 0; s < selections.size(); ++s) {
          traces[s].push_back(pair_indicator_trace(selections[s].apply(runs[static_cast<std::size_t>(a)]),
                                                   selections[s].apply(runs[static_cast<std::size_t>(b)]), d0,
                                                   cfg.window));
        }
      }
    }
  }

  std::vector<EnsembleResult> out;
  for (auto& tr : traces) {
    out.push_back(summarize(average_traces(tr), static_cast<int>(tr.size()), cfg));
  }
  return out;
}

EnsembleResult subset_indicator_ensemble(const QuantumReservoir& model, const SubsetSelection& selection,
                                         const EnsembleConfig& cfg, Rng& rng) {
  return subset_indicator_ensembles(model, std::span<const SubsetSelection>(&selection, 1), cfg, rng).front();
}

EnsembleResult indicator_ensemble(const QuantumReservoir& model, const EnsembleConfig& cfg, Rng& rng) {
  const auto basis = all_pauli_strings(model.n_qubits());
  return subset_indicator_ensemble(model, SubsetSelection::all(basis), cfg, rng);
}

} // namespace qresp
