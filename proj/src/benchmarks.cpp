#include "qresp/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace qresp {

namespace {

constexpr double narma_blowup = 1e3;
constexpr Eigen::Index target_batch = 128;

} // namespace

// --------------------------------------------------------------------------
// NARMA

void NarmaConfig::validate() const {
  if (order < 2) {
    throw std::invalid_argument("NARMA order must be at least 2");
  }
  if (!(input_low < input_high)) {
    throw std::invalid_argument("NARMA input range is empty");
  }
  if (input_low < -1.0 || input_high > 1.0) {
    throw std::invalid_argument("NARMA input range must lie within the encoding domain [-1, 1]");
  }
}

DivergenceError::DivergenceError(Eigen::Index step, double value)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "NARMA diverged at step " << step << " (y = " << value << ")";
        return os.str();
      }()),
      step_(step) {}

std::vector<double> narma_generate(std::span<const double> inputs, const NarmaConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
  const int k = cfg.order;
  std::vector<double> y(inputs.size(), 0.0);
  auto y_at = [&](std::ptrdiff_t i) { return i >= 0 ? y[static_cast<std::size_t>(i)] : 0.0; };
  auto u_at = [&](std::ptrdiff_t i) { return i >= 0 ? inputs[static_cast<std::size_t>(i)] : 0.0; };
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double window = 0.0;
    for (std::ptrdiff_t i = t - k; i <= t - 1; ++i) {
      window += y_at(i);
    }
    const double prev = y_at(t - 1);
    const double v =
        cfg.feedback * prev + cfg.sum_gain * prev * window + cfg.input_gain * u_at(t - 1) * u_at(t - k) + cfg.bias;
    if (!std::isfinite(v) || std::abs(v) > narma_blowup) {
      throw DivergenceError(t, v);
    }
    y[static_cast<std::size_t>(t)] = v;
  }
  return y;
}

std::vector<double> narma_generate(std::span<const double> inputs, int order) {
  NarmaConfig cfg;
  cfg.order = order;
  return narma_generate(inputs, cfg);
}

std::vector<double> narma_inputs(std::size_t length, const NarmaConfig& cfg, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> dist(cfg.input_low, cfg.input_high);
  std::vector<double> u(length);
  for (auto& x : u) {
    x = dist(rng);
  }
  return u;
}

std::vector<double> narma_aligned_target(std::span<const double> inputs, const NarmaConfig& cfg) {
  std::vector<double> extended(inputs.begin(), inputs.end());
  extended.push_back(0.0); // u_T never enters y_T
  auto y = narma_generate(extended, cfg);
  y.erase(y.begin());
  return y;
}

// --------------------------------------------------------------------------
// Readout

void SplitSpec::validate() const {
  if (!(washout_fraction >= 0.0 && washout_fraction < 1.0)) {
    throw std::invalid_argument("washout fraction must lie in [0, 1)");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
}

SplitSpec::Segments SplitSpec::segments(Eigen::Index length) const {
  validate();
  Segments s;
  s.washout = static_cast<Eigen::Index>(std::floor(washout_fraction * static_cast<double>(length)));
  const Eigen::Index rest = length - s.washout;
  s.train = static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(rest)));
  s.test = rest - s.train;
  if (s.train < 1 || s.test < 1) {
    throw std::invalid_argument("sequence of length " + std::to_string(length) + " leaves an empty train or test segment");
  }
  return s;
}

double rnmse(std::span<const double> target, std::span<const double> prediction) {
  if (target.size() != prediction.size() || target.empty()) {
    throw std::invalid_argument("rnmse needs equal nonzero lengths");
  }
  const Eigen::Map<const RealVector> y(target.data(), static_cast<Eigen::Index>(target.size()));
  const Eigen::Map<const RealVector> p(prediction.data(), static_cast<Eigen::Index>(prediction.size()));
  const double var = (y.array() - y.mean()).square().mean();
  if (!(var > 0.0)) {
    throw std::invalid_argument("rnmse target is constant");
  }
  return std::sqrt((y - p).squaredNorm() / static_cast<double>(y.size()) / var);
}

ReadoutFit train_linear_readout(const RealMatrix& features, std::span<const double> target, const SplitSpec& split,
                                double ridge, bool add_bias) {
  if (features.rows() != static_cast<Eigen::Index>(target.size())) {
    throw std::invalid_argument("features and target lengths differ");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw std::invalid_argument("ridge must be finite and nonnegative");
  }
  const auto seg = split.segments(features.rows());
  RealMatrix x = features;
  if (add_bias) {
    x.conservativeResize(Eigen::NoChange, x.cols() + 1);
    x.col(x.cols() - 1).setOnes();
  }
  const Eigen::Map<const RealVector> y(target.data(), static_cast<Eigen::Index>(target.size()));
  const auto x_train = x.middleRows(seg.washout, seg.train);
  const auto x_test = x.bottomRows(seg.test);

  ReadoutFit fit;
  fit.train_target = y.segment(seg.washout, seg.train);
  fit.test_target = y.tail(seg.test);
  if (ridge > 0.0) {
    const RealMatrix gram = x_train.transpose() * x_train + ridge * RealMatrix::Identity(x.cols(), x.cols());
    fit.weights = gram.ldlt().solve(x_train.transpose() * fit.train_target);
  } else {
    const RealVector sv = qmat::singular_values(x_train);
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    fit.degenerate = sv.size() < x.cols() || (sv.array() <= 1e-12 * smax).any();
    fit.weights = qmat::pseudo_inverse(x_train, 1e-12) * fit.train_target;
  }
  fit.train_prediction = x_train * fit.weights;
  fit.test_prediction = x_test * fit.weights;
  fit.test_rnmse = rnmse({fit.test_target.data(), static_cast<std::size_t>(fit.test_target.size())},
                         {fit.test_prediction.data(), static_cast<std::size_t>(fit.test_prediction.size())});
  return fit;
}

// --------------------------------------------------------------------------
// Capacities

CapacityEstimator::CapacityEstimator(const RealMatrix& features, Eigen::Index washout, double rel_tol)
    : washout_(washout) {
  if (washout < 0 || washout >= features.rows()) {
    throw std::invalid_argument("washout must leave at least one sample");
  }
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw std::invalid_argument("capacity cutoff must lie in (0, 1)");
  }
  const RealMatrix x = centered_tail(features, washout);
  Eigen::BDCSVD<RealMatrix> svd(x, Eigen::ComputeThinU);
  const RealVector& s = svd.singularValues();
  // Centering a constant column leaves only rounding noise.
  const double scale = features.size() ? std::max(1.0, features.bottomRows(x.rows()).cwiseAbs().maxCoeff()) : 1.0;
  const double noise_floor = 1e-12 * std::sqrt(static_cast<double>(x.rows())) * scale;
  Eigen::Index keep = 0;
  if (s.size() > 0 && s(0) > noise_floor) {
    while (keep < s.size() && s(keep) > rel_tol * s(0)) {
      ++keep;
    }
  }
  basis_ = svd.matrixU().leftCols(keep);
}

RealMatrix CapacityEstimator::centered_tail(const RealMatrix& m, Eigen::Index washout) {
  RealMatrix out = m.bottomRows(m.rows() - washout);
  out.rowwise() -= out.colwise().mean();
  return out;
}

RealVector CapacityEstimator::capacities(const RealMatrix& targets) const {
  if (targets.rows() != washout_ + samples()) {
    throw std::invalid_argument("target length does not match the features");
  }
  const RealMatrix v = centered_tail(targets, washout_);
  const RealVector norms = v.colwise().squaredNorm().transpose();
  RealVector out = RealVector::Zero(v.cols());
  if (rank() == 0) {
    return out;
  }
  const RealMatrix proj = basis_.transpose() * v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    if (norms(j) > 0.0) {
      out(j) = proj.col(j).squaredNorm() / norms(j);
    }
  }
  return out;
}

double CapacityEstimator::capacity(std::span<const double> target) const {
  const Eigen::Map<const RealVector> v(target.data(), static_cast<Eigen::Index>(target.size()));
  return capacities(RealMatrix(v))(0);
}

RealMatrix CapacityEstimator::surrogate_capacities(const RealMatrix& targets, int count, Rng& rng) const {
  if (count < 0) {
    throw std::invalid_argument("surrogate count must be nonnegative");
  }
  if (targets.rows() != washout_ + samples()) {
    throw std::invalid_argument("target length does not match the features");
  }
  const RealMatrix v = centered_tail(targets, washout_);
  const RealVector norms = v.colwise().squaredNorm().transpose();
  RealMatrix out = RealMatrix::Zero(count, v.cols());
  if (rank() == 0) {
    return out;
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(samples()));
  RealMatrix shuffled(basis_.rows(), basis_.cols());
  for (int s = 0; s < count; ++s) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < samples(); ++i) {
      shuffled.row(i) = basis_.row(perm[static_cast<std::size_t>(i)]);
    }
    const RealMatrix proj = shuffled.transpose() * v;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (norms(j) > 0.0) {
        out(s, j) = proj.col(j).squaredNorm() / norms(j);
      }
    }
  }
  return out;
}

double clamp_capacity(double c) { return std::clamp(c, 0.0, 1.0); }

RealVector delayed_input(std::span<const double> inputs, int delay) {
  if (delay < 0) {
    throw std::invalid_argument("delay must be nonnegative");
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  RealVector v = RealVector::Zero(n);
  for (Eigen::Index t = delay; t < n; ++t) {
    v(t) = inputs[static_cast<std::size_t>(t - delay)];
  }
  return v;
}

namespace {

void check_history(Eigen::Index washout, int delay) {
  if (washout < delay) {
    throw std::invalid_argument("washout " + std::to_string(washout) + " is shorter than delay " +
                                std::to_string(delay));
  }
}

} // namespace

double memory_function(std::span<const double> inputs, const RealMatrix& features, int delay, Eigen::Index washout) {
  if (features.rows() != static_cast<Eigen::Index>(inputs.size())) {
    throw std::invalid_argument("features and inputs lengths differ");
  }
  check_history(washout, delay);
  const CapacityEstimator est(features, washout);
  return clamp_capacity(est.capacities(delayed_input(inputs, delay))(0));
}

McResult mc_report(std::span<const double> inputs, const RealMatrix& features, const McOptions& opt, Rng& rng) {
  if (opt.max_delay < 1) {
    throw std::invalid_argument("max_delay must be at least 1");
  }
  if (features.rows() != static_cast<Eigen::Index>(inputs.size())) {
    throw std::invalid_argument("features and inputs lengths differ");
  }
  check_history(opt.washout, opt.max_delay);
  const CapacityEstimator est(features, opt.washout);
  RealMatrix targets(features.rows(), opt.max_delay + 1);
  for (int k = 0; k <= opt.max_delay; ++k) {
    targets.col(k) = delayed_input(inputs, k);
  }
  McResult r;
  r.raw = est.capacities(targets).unaryExpr(&clamp_capacity);
  if (opt.surrogate_count > 0) {
    r.surrogate_threshold = est.surrogate_capacities(targets, opt.surrogate_count, rng).maxCoeff();
  }
  r.memory_functions = r.raw;
  for (Eigen::Index k = 0; k < r.raw.size(); ++k) {
    if (r.raw(k) <= r.surrogate_threshold) {
      r.memory_functions(k) = 0.0;
    }
  }
  for (int k = 0; k <= opt.max_delay; ++k) {
    const double c = r.memory_functions(k);
    r.total += c;
    (k % 2 == 0 ? r.even_sum : r.odd_sum) += c;
    if (k >= 2) {
      r.tail_sum_2plus += c;
    }
    if (c > opt.delay_threshold) {
      r.max_linear_delay = k;
    }
  }
  return r;
}

double normalized_legendre(int n, double x) {
  if (n < 0) {
    throw std::invalid_argument("Legendre degree must be nonnegative");
  }
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    return 1.0;
  }
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * n + 1.0) * p1;
}

void IpcConfig::validate() const {
  if (budget.empty()) {
    throw std::invalid_argument("IPC budget is empty");
  }
  for (const auto& [degree, delay] : budget) {
    if (degree < 1 || delay < 0) {
      throw std::invalid_argument("IPC budget entries need degree >= 1 and delay >= 0");
    }
    if (washout < delay) {
      throw std::invalid_argument("IPC washout is shorter than a budget delay");
    }
  }
  if (!(input_low < input_high)) {
    throw std::invalid_argument("IPC input range is empty");
  }
  if (surrogate_count < 0) {
    throw std::invalid_argument("surrogate count must be nonnegative");
  }
}

RealVector ipc_target(std::span<const double> inputs, std::span<const IpcFactor> factors, double input_low,
                      double input_high) {
  if (!(input_low < input_high)) {
    throw std::invalid_argument("IPC input range is empty");
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  int max_delay = 0;
  for (const auto& f : factors) {
    if (f.delay < 0 || f.degree < 1) {
      throw std::invalid_argument("IPC factor needs delay >= 0 and degree >= 1");
    }
    max_delay = std::max(max_delay, f.delay);
  }
  const double mid = 0.5 * (input_low + input_high);
  const double half = 0.5 * (input_high - input_low);
  RealVector v = RealVector::Zero(n);
  for (Eigen::Index t = max_delay; t < n; ++t) {
    double prod = 1.0;
    for (const auto& f : factors) {
      const double x = (inputs[static_cast<std::size_t>(t - f.delay)] - mid) / half;
      prod *= normalized_legendre(f.degree, x);
    }
    v(t) = prod;
  }
  return v;
}

RealVector ipc_targets(std::span<const double> inputs, int degree, std::span<const IpcFactor> factors,
                       double input_low, double input_high) {
  int sum = 0;
  for (const auto& f : factors) {
    sum += f.degree;
  }
  if (sum != degree) {
    throw std::invalid_argument("IPC factor degrees sum to " + std::to_string(sum) + ", expected " +
                                std::to_string(degree));
  }
  return ipc_target(inputs, factors, input_low, input_high);
}

std::vector<std::vector<IpcFactor>> enumerate_ipc_terms(int degree, int max_delay) {
  if (degree < 1 || max_delay < 0) {
    throw std::invalid_argument("enumerate_ipc_terms needs degree >= 1 and max_delay >= 0");
  }
  std::vector<std::vector<IpcFactor>> out;
  std::vector<int> delays(static_cast<std::size_t>(degree), 0); // nondecreasing multiset
  while (true) {
    std::vector<IpcFactor> term;
    for (int d : delays) {
      if (!term.empty() && term.back().delay == d) {
        ++term.back().degree;
      } else {
        term.push_back({d, 1});
      }
    }
    out.push_back(std::move(term));
    int i = degree - 1;
    while (i >= 0 && delays[static_cast<std::size_t>(i)] == max_delay) {
      --i;
    }
    if (i < 0) {
      break;
    }
    const int next = delays[static_cast<std::size_t>(i)] + 1;
    for (int j = i; j < degree; ++j) {
      delays[static_cast<std::size_t>(j)] = next;
    }
  }
  return out;
}

IpcResult ipc_report(std::span<const double> inputs, const RealMatrix& features, const IpcConfig& cfg, Rng& rng) {
  cfg.validate();
  if (features.rows() != static_cast<Eigen::Index>(inputs.size())) {
    throw std::invalid_argument("features and inputs lengths differ");
  }
  const CapacityEstimator est(features, cfg.washout);
  IpcResult result;
  result.feature_rank = est.rank();
  for (const auto& [degree, max_delay] : cfg.budget) {
    IpcDegreeResult d;
    d.degree = degree;
    d.max_delay = max_delay;
    d.terms = enumerate_ipc_terms(degree, max_delay);
    const auto m = static_cast<Eigen::Index>(d.terms.size());
    d.raw.resize(m);
    for (Eigen::Index start = 0; start < m; start += target_batch) {
      const Eigen::Index len = std::min(target_batch, m - start);
      RealMatrix targets(features.rows(), len);
      for (Eigen::Index j = 0; j < len; ++j) {
        targets.col(j) =
            ipc_target(inputs, d.terms[static_cast<std::size_t>(start + j)], cfg.input_low, cfg.input_high);
      }
      d.raw.segment(start, len) = est.capacities(targets).unaryExpr(&clamp_capacity);
      if (cfg.surrogate_count > 0) {
        d.surrogate_threshold =
            std::max(d.surrogate_threshold, est.surrogate_capacities(targets, cfg.surrogate_count, rng).maxCoeff());
      }
    }
    d.thresholded = d.raw;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (d.raw(j) <= d.surrogate_threshold) {
        d.thresholded(j) = 0.0;
      }
    }
    d.raw_total = d.raw.sum();
    d.total = d.thresholded.sum();
    result.raw_total += d.raw_total;
    result.total += d.total;
    result.degrees.push_back(std::move(d));
  }
  return result;
}

// --------------------------------------------------------------------------

RankResult trajectory_rank(const RealMatrix& features, Eigen::Index washout, double rel_threshold) {
  if (washout < 0 || washout >= features.rows() || features.cols() == 0) {
    throw std::invalid_argument("trajectory_rank needs a nonempty post-washout matrix");
  }
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw std::invalid_argument("rank threshold must lie in (0, 1)");
  }
  const RealMatrix raw = features.bottomRows(features.rows() - washout);
  RealMatrix centered = raw;
  centered.rowwise() -= centered.colwise().mean();

  RankResult r;
  auto count = [&](const RealMatrix& m, RealVector& rel) {
    const RealVector s = qmat::singular_values(m);
    const double smax = s.size() > 0 ? s(0) : 0.0;
    rel = smax > 0.0 ? RealVector(s / smax) : RealVector(RealVector::Zero(s.size()));
    // A centered constant trajectory is rounding noise; it carries no rank.
    if (!(smax > 1e-12 * std::sqrt(static_cast<double>(m.rows())) * std::max(1.0, raw.cwiseAbs().maxCoeff()))) {
      return 0;
    }
    return static_cast<int>((s.array() > rel_threshold * smax).count());
  };
  r.raw = count(raw, r.raw_singular_values);
  r.centered = count(centered, r.centered_singular_values);
  return r;
}

} // namespace qresp
