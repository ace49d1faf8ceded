#pragma once

// Echo-state diagnostics on readout trajectories.
//
// All series are time-major real matrices (row t = readout after input t).
// Time indices are 0-based; a window of width w ending at row t covers rows
// t - w + 1 .. t, so the earliest full window ends at row w - 1.

#include "qresp/reservoir.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qresp {

struct WindowStats {
  int window = 0;
  RealVector mean;
  RealVector variance; // population convention
};

/// Mean and per-component variance of rows t - w + 1 .. t.
WindowStats windowed_stats(const RealMatrix& series, Eigen::Index t, int w);

/// ||a(t) - b(t)|| / s0_dist.
double esp_indicator(const RealMatrix& a, const RealMatrix& b, double s0_dist, Eigen::Index t);

/// Denominator variances below this are reported as an infinite indicator.
inline constexpr double variance_underflow = 1e-30;

struct NsValue {
  double value = 0.0;
  bool sentinel = false; // value is +inf because the variance at t underflowed
};

/// esp(t) * sqrt(min_ab ||Var_w(w - 1)||) / sqrt(min_ab ||Var_w(t)||).
NsValue ns_esp_indicator(const RealMatrix& a, const RealMatrix& b, double s0_dist, int w, Eigen::Index t);

struct IndicatorTrace {
  int window = 0;
  RealVector esp; // one entry per time step
  RealVector ns;  // NaN before row w - 1, +inf where flagged
  std::vector<bool> ns_sentinel;

  Eigen::Index length() const { return esp.size(); }
};

/// Both indicators for every row of one trajectory pair.
IndicatorTrace pair_indicator_trace(const RealMatrix& a, const RealMatrix& b, double s0_dist, int w);

/// Element-wise arithmetic mean in the given order. A sentinel in any member
/// makes the mean +inf at that time and sets the flag.
IndicatorTrace average_traces(std::span<const IndicatorTrace> traces);

// --------------------------------------------------------------------------
// Observable selections

class SubsetSelection {
public:
  /// Column subset of the readout basis.
  static SubsetSelection columns(std::vector<Eigen::Index> indices, Eigen::Index basis_size);
  /// Orthogonal-projection subspace; p must be square and idempotent to 1e-10.
  static SubsetSelection projection(RealMatrix p);

  static SubsetSelection all(std::span<const PauliString> basis);
  /// Strings acting as identity outside `qubits`, including the all-I string.
  static SubsetSelection supported_on(std::span<const PauliString> basis, std::span<const int> qubits);
  /// Subsystem of the damped qubit 0 (identity on every other qubit).
  static SubsetSelection damping(std::span<const PauliString> basis);
  /// Strings acting as identity on qubit 0.
  static SubsetSelection nondamping(std::span<const PauliString> basis);
  /// Strings that are non-identity on every qubit.
  static SubsetSelection entangling(std::span<const PauliString> basis);

  bool is_projection() const { return projection_.has_value(); }
  const std::vector<Eigen::Index>& indices() const { return indices_; }
  Eigen::Index basis_size() const { return basis_size_; }

  /// Selected components of a time-major series.
  RealMatrix apply(const RealMatrix& series) const;

private:
  std::vector<Eigen::Index> indices_;
  std::optional<RealMatrix> projection_;
  Eigen::Index basis_size_ = 0;
};

// --------------------------------------------------------------------------
// Ensembles

struct EnsembleConfig {
  int n_inputs = 4;
  int n_states = 3;
  int seq_len = 200;
  int window = 10;
  /// Field entry: final-time value, or the mean over the last `window` rows.
  bool tail_mean = false;

  void validate() const;
};

struct EnsembleResult {
  IndicatorTrace mean;
  int pair_count = 0;
  double esp_final = 0.0;
  double ns_final = 0.0;
  bool ns_sentinel = false;
};

/// Inputs are drawn first (n_inputs x seq_len from U[-1, 1]), then the
/// n_states Haar pure states. Every input is paired with each (a < b) state
/// pair; s0_dist is the Euclidean distance of the full-basis readouts of the
/// two initial states.
EnsembleResult indicator_ensemble(const QuantumReservoir& model, const EnsembleConfig& cfg, Rng& rng);

/// As indicator_ensemble, with distances and variances on the selected
/// components. s0_dist stays the full-basis distance.
EnsembleResult subset_indicator_ensemble(const QuantumReservoir& model, const SubsetSelection& selection,
                                         const EnsembleConfig& cfg, Rng& rng);

/// Several selections evaluated on one shared set of trajectories.
std::vector<EnsembleResult> subset_indicator_ensembles(const QuantumReservoir& model,
                                                       std::span<const SubsetSelection> selections,
                                                       const EnsembleConfig& cfg, Rng& rng);

/// Classical reference system with the same draw order: inputs, then
/// n_states initial vectors from U[-1, 1]^size. Features are the raw states.
EnsembleResult classical_indicator_ensemble(const ClassicalRefConfig& ref, const EnsembleConfig& cfg, Rng& rng);

/// Field entries of an averaged trace under cfg.tail_mean.
EnsembleResult summarize(IndicatorTrace mean, int pair_count, const EnsembleConfig& cfg);

} // namespace qresp
