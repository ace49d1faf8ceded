#pragma once

// Task benchmarks on time-major feature matrices: NARMA targets, linear
// readout training, memory capacity, information processing capacity and
// trajectory rank.

#include "qresp/qmat.hpp"

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qresp {

// --------------------------------------------------------------------------
// NARMA

struct NarmaConfig {
  int order = 2;
  double feedback = 0.3;
  double sum_gain = 0.05;
  double input_gain = 1.5;
  double bias = 0.1;
  double input_low = 0.0;
  double input_high = 0.5;

  void validate() const;
};

/// Raised when the NARMA recursion leaves |y| <= 1e3.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(Eigen::Index step, double value);
  Eigen::Index step() const { return step_; }

private:
  Eigen::Index step_;
};

/// y_t = a y_{t-1} + b y_{t-1} sum_{i=t-k}^{t-1} y_i + c u_{t-1} u_{t-k} + d,
/// with y and u zero at negative indices. Output has the input's length.
std::vector<double> narma_generate(std::span<const double> inputs, const NarmaConfig& cfg);
std::vector<double> narma_generate(std::span<const double> inputs, int order);

/// Uniform inputs on [input_low, input_high].
std::vector<double> narma_inputs(std::size_t length, const NarmaConfig& cfg, Rng& rng);

/// Target aligned with readout rows: entry t is y_{t+1}, the first output
/// that depends on u_t.
std::vector<double> narma_aligned_target(std::span<const double> inputs, const NarmaConfig& cfg);

// --------------------------------------------------------------------------
// Linear readout

struct SplitSpec {
  double washout_fraction = 0.5;
  double train_fraction = 0.8; // of the post-washout remainder

  struct Segments {
    Eigen::Index washout = 0;
    Eigen::Index train = 0;
    Eigen::Index test = 0;
  };

  void validate() const;
  /// washout = floor(f_w T), train = floor(f_t (T - washout)), test = rest.
  Segments segments(Eigen::Index length) const;
};

struct ReadoutFit {
  RealVector weights;
  RealVector test_prediction;
  RealVector test_target;
  RealVector train_prediction;
  RealVector train_target;
  bool degenerate = false; // rank-deficient design solved by minimum-norm pinv
  double test_rnmse = 0.0;
};

/// Minimizes ||X w - y||^2 + ridge ||w||^2 on the train segment. ridge = 0
/// solves ordinary least squares through the pseudo-inverse. With add_bias a
/// constant column is appended to the features.
ReadoutFit train_linear_readout(const RealMatrix& features, std::span<const double> target, const SplitSpec& split,
                                double ridge, bool add_bias = false);

/// sqrt(mean squared error / population variance of target).
double rnmse(std::span<const double> target, std::span<const double> prediction);

// --------------------------------------------------------------------------
// Capacities

/// Relative singular-value cutoff of the centered feature matrix. Equivalent
/// to pinv(cov) with a relative cutoff of its square on the covariance.
inline constexpr double capacity_rel_tol = 1e-8;

/// Capacity of linear reconstruction of targets from fixed features,
/// v^T X pinv(X^T X) X^T v / v^T v on centered post-washout rows.
class CapacityEstimator {
public:
  CapacityEstimator(const RealMatrix& features, Eigen::Index washout, double rel_tol = capacity_rel_tol);

  Eigen::Index washout() const { return washout_; }
  Eigen::Index samples() const { return basis_.rows(); }
  /// Number of retained feature directions.
  Eigen::Index rank() const { return basis_.cols(); }

  /// targets: full-length columns (rows aligned with features). Returns the
  /// unclamped capacities; constant targets give 0.
  RealVector capacities(const RealMatrix& targets) const;
  double capacity(std::span<const double> target) const;

  /// Capacities of the same targets against `count` time-shuffled copies of
  /// the features; result is count x targets.cols().
  RealMatrix surrogate_capacities(const RealMatrix& targets, int count, Rng& rng) const;

private:
  static RealMatrix centered_tail(const RealMatrix& targets, Eigen::Index washout);

  Eigen::Index washout_;
  RealMatrix basis_; // orthonormal columns spanning the centered features
};

/// Capacities reported in [0, 1].
double clamp_capacity(double c);

/// u_{t-k} aligned with rows; zero where t < k.
RealVector delayed_input(std::span<const double> inputs, int delay);

/// C_k of reconstructing u_{t-k} from row t. Requires washout >= delay.
double memory_function(std::span<const double> inputs, const RealMatrix& features, int delay, Eigen::Index washout);

struct McOptions {
  int max_delay = 300;
  Eigen::Index washout = 30000;
  int surrogate_count = 100;
  double delay_threshold = 1e-4;
};

struct McResult {
  RealVector raw;              // clamped capacities for k = 0..max_delay
  RealVector memory_functions; // raw with entries below the surrogate threshold set to 0
  double surrogate_threshold = 0.0;
  double total = 0.0;
  int max_linear_delay = 0;
  double even_sum = 0.0; // k = 0, 2, 4, ...
  double odd_sum = 0.0;
  double tail_sum_2plus = 0.0;
};

McResult mc_report(std::span<const double> inputs, const RealMatrix& features, const McOptions& opt, Rng& rng);

/// sqrt(2n + 1) P_n(x); orthonormal for x uniform on [-1, 1].
double normalized_legendre(int n, double x);

/// One factor Y_{degree}(u_{t - delay}) of an IPC target.
struct IpcFactor {
  int delay = 0;
  int degree = 1;
};

struct IpcConfig {
  /// (degree, max_delay): every target of exactly that degree with delays in
  /// 0..max_delay.
  std::vector<std::pair<int, int>> budget{{1, 300}, {2, 100}, {3, 30}, {4, 10}, {5, 10}};
  double input_low = -1.0;
  double input_high = 1.0;
  int surrogate_count = 100;
  Eigen::Index washout = 30000;

  void validate() const;
};

/// prod_i Y_{d_i}(u_{t-k_i}) with inputs mapped affinely from
/// [input_low, input_high] to [-1, 1]; rows with t < max k_i are zero.
RealVector ipc_target(std::span<const double> inputs, std::span<const IpcFactor> factors, double input_low = -1.0,
                      double input_high = 1.0);

/// Checks sum d_i == degree before building the target.
RealVector ipc_targets(std::span<const double> inputs, int degree, std::span<const IpcFactor> factors,
                       double input_low = -1.0, double input_high = 1.0);

/// All factor lists of total degree `degree` with delays in 0..max_delay, in
/// lexicographic order of the sorted delay multiset.
std::vector<std::vector<IpcFactor>> enumerate_ipc_terms(int degree, int max_delay);

struct IpcDegreeResult {
  int degree = 0;
  int max_delay = 0;
  std::vector<std::vector<IpcFactor>> terms;
  RealVector raw;         // clamped capacities per term
  RealVector thresholded; // raw below the surrogate threshold set to 0
  double surrogate_threshold = 0.0;
  double raw_total = 0.0;
  double total = 0.0;
};

struct IpcResult {
  std::vector<IpcDegreeResult> degrees;
  double raw_total = 0.0;
  double total = 0.0;
  Eigen::Index feature_rank = 0;
};

IpcResult ipc_report(std::span<const double> inputs, const RealMatrix& features, const IpcConfig& cfg, Rng& rng);

// --------------------------------------------------------------------------
// Rank

struct RankResult {
  int centered = 0;
  int raw = 0;
  RealVector centered_singular_values; // relative to the largest
  RealVector raw_singular_values;
};

/// Singular values of the post-washout rows above rel_threshold * sigma_max,
/// with and without column centering.
RankResult trajectory_rank(const RealMatrix& features, Eigen::Index washout = 0, double rel_threshold = 1e-6);

} // namespace qresp
