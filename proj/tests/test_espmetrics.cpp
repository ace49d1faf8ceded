#include "doctest.h"

#include "qresp/espmetrics.hpp"

#include <numbers>

using namespace qresp;

namespace {

RealMatrix random_series(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g;
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// Alternating +-v plus a decaying offset along an orthogonal direction.
std::pair<RealMatrix, RealMatrix> alternating_pair(Eigen::Index n, double rate) {
  RealMatrix a = RealMatrix::Zero(n, 3), b = RealMatrix::Zero(n, 3);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double s = (t % 2 == 0) ? 1.0 : -1.0;
    a(t, 0) = s;
    a(t, 1) = 0.5 * s;
    b.row(t) = a.row(t);
    b(t, 2) = std::pow(rate, static_cast<double>(t));
  }
  return {a, b};
}

} // namespace

TEST_SUITE("espmetrics") {

TEST_CASE("windowed statistics") {
  const RealMatrix constant = RealMatrix::Constant(20, 3, 0.7);
  const auto c = windowed_stats(constant, 19, 10);
  CHECK(c.variance.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.mean(1) == doctest::Approx(0.7));

  RealMatrix alt(6, 1);
  alt << 1, -1, 1, -1, 1, -1;
  const auto s = windowed_stats(alt, 3, 2);
  CHECK(std::abs(s.mean(0)) < 1e-15);
  CHECK(s.variance(0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(windowed_stats(alt, 0, 2), std::out_of_range);
  CHECK_THROWS_AS(windowed_stats(alt, 6, 2), std::out_of_range);
  CHECK_THROWS(windowed_stats(alt, 3, 0));
  CHECK_NOTHROW(windowed_stats(alt, 1, 2));
}

TEST_CASE("windowed statistics match a two-pass loop") {
  Rng rng(40);
  const RealMatrix x = random_series(50, 4, rng);
  for (int w : {1, 3, 10}) {
    for (Eigen::Index t = w - 1; t < 50; t += 7) {
      const auto got = windowed_stats(x, t, w);
      for (Eigen::Index j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (Eigen::Index k = t - w + 1; k <= t; ++k) mean += x(k, j);
        mean /= w;
        double var = 0.0;
        for (Eigen::Index k = t - w + 1; k <= t; ++k) var += (x(k, j) - mean) * (x(k, j) - mean);
        var /= w;
        CHECK(std::abs(got.mean(j) - mean) < 1e-13);
        CHECK(std::abs(got.variance(j) - var) < 1e-13);
      }
    }
  }
}

TEST_CASE("esp indicator guards and scaling") {
  Rng rng(41);
  const RealMatrix a = random_series(10, 3, rng);
  const RealMatrix b = random_series(10, 3, rng);
  CHECK_THROWS(esp_indicator(a, b, 0.0, 3));
  CHECK_THROWS(esp_indicator(a, b, -1.0, 3));
  CHECK_THROWS(esp_indicator(a, b.leftCols(2), 1.0, 3));
  CHECK_THROWS(esp_indicator(a, b, 1.0, 10));
  CHECK(esp_indicator(a, b, 2.0, 4) == doctest::Approx((a.row(4) - b.row(4)).norm() / 2.0));
  for (double alpha : {0.1, 10.0}) {
    CHECK(esp_indicator(alpha * a, alpha * b, 1.5, 7) == doctest::Approx(alpha * esp_indicator(a, b, 1.5, 7)));
  }
}

TEST_CASE("identity dynamics keep the indicator at one") {
  const DepolarizingModel frozen(2, 0.0, ComplexMatrix::Identity(4, 4));
  Rng rng(42);
  EnsembleConfig cfg;
  cfg.seq_len = 30;
  const auto r = indicator_ensemble(frozen, cfg, rng);
  CHECK((r.mean.esp.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("halving channel decays geometrically") {
  Rng rng(43);
  const DepolarizingModel half(2, 0.5, qmat::haar_random_unitary(4, rng));
  EnsembleConfig cfg;
  cfg.seq_len = 30;
  const auto r = indicator_ensemble(half, cfg, rng);
  for (Eigen::Index t = 0; t < 30; ++t) {
    CHECK(std::abs(r.mean.esp(t) - std::pow(0.5, static_cast<double>(t + 1))) < 1e-10);
  }
}

TEST_CASE("ns indicator with time-constant variance is a fixed multiple of esp") {
  const auto [a, b] = alternating_pair(60, 0.9);
  const auto tr = pair_indicator_trace(a, b, 1.0, 10);
  CHECK(std::isnan(tr.ns(8)));
  const double ratio = tr.ns(9) / tr.esp(9);
  for (Eigen::Index t = 9; t < 60; ++t) {
    CHECK(std::abs(tr.ns(t) / tr.esp(t) - ratio) < 1e-9);
    CHECK(tr.ns(t) == doctest::Approx(ns_esp_indicator(a, b, 1.0, 10, t).value));
    CHECK(tr.esp(t) == doctest::Approx(std::pow(0.9, static_cast<double>(t))));
  }
}

TEST_CASE("ns indicator under a common scale factor") {
  Rng rng(44);
  const RealMatrix a = random_series(40, 4, rng);
  const RealMatrix b = random_series(40, 4, rng);
  const double base = ns_esp_indicator(a, b, 2.0, 10, 30).value;
  for (double alpha : {0.1, 10.0}) {
    // Variance ratio cancels; the distance carries alpha unless s0 is scaled with it.
    CHECK(ns_esp_indicator(alpha * a, alpha * b, 2.0, 10, 30).value == doctest::Approx(alpha * base));
    CHECK(ns_esp_indicator(alpha * a, alpha * b, 2.0 * alpha, 10, 30).value == doctest::Approx(base));
  }
}

TEST_CASE("vanishing variance gives the sentinel") {
  RealMatrix a = RealMatrix::Zero(30, 2), b = RealMatrix::Zero(30, 2);
  for (Eigen::Index t = 0; t < 15; ++t) {
    a(t, 0) = (t % 2) ? 1.0 : -1.0;
    b(t, 0) = 0.5 * a(t, 0);
  }
  b.bottomRows(15).col(1).setConstant(0.3);
  const auto v = ns_esp_indicator(a, b, 1.0, 10, 29);
  CHECK(v.sentinel);
  CHECK(std::isinf(v.value));
  const auto tr = pair_indicator_trace(a, b, 1.0, 10);
  CHECK(tr.ns_sentinel[29]);
  CHECK_FALSE(tr.ns_sentinel[10]);

  const IndicatorTrace both[] = {tr, pair_indicator_trace(a, a + RealMatrix::Constant(30, 2, 0.1), 1.0, 10)};
  const auto mean = average_traces(both);
  CHECK(std::isinf(mean.ns(29)));
  CHECK(mean.ns_sentinel[29]);
}

TEST_CASE("average of traces is element-wise") {
  Rng rng(45);
  const RealMatrix a = random_series(20, 2, rng), b = random_series(20, 2, rng), c = random_series(20, 2, rng);
  const IndicatorTrace tr[] = {pair_indicator_trace(a, b, 1.0, 5), pair_indicator_trace(a, c, 2.0, 5)};
  const auto m = average_traces(tr);
  CHECK((m.esp - 0.5 * (tr[0].esp + tr[1].esp)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.ns(10) == doctest::Approx(0.5 * (tr[0].ns(10) + tr[1].ns(10))));
  CHECK_THROWS(average_traces(std::span<const IndicatorTrace>{}));
}

TEST_CASE("ensemble pair counts") {
  const SubsetModel model(SubsetModelConfig{0.5, 0.5});
  Rng rng(46);
  EnsembleConfig cfg;
  cfg.seq_len = 20;
  CHECK(indicator_ensemble(model, cfg, rng).pair_count == 12);

  cfg.n_inputs = 1;
  cfg.n_states = 2;
  Rng r1(47), r2(47);
  const auto single = indicator_ensemble(model, cfg, r1);
  CHECK(single.pair_count == 1);
  // Same draws by hand: inputs first, then states.
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> u(20);
  for (auto& x : u) x = uniform(r2);
  const auto s0 = qmat::haar_random_pure_state(2, r2);
  const auto s1 = qmat::haar_random_pure_state(2, r2);
  const auto basis = all_pauli_strings(2);
  const double d0 = (pauli_expectations(s0, basis) - pauli_expectations(s1, basis)).norm();
  const auto tr = pair_indicator_trace(run_reservoir(model, u, s0, basis).values,
                                       run_reservoir(model, u, s1, basis).values, d0, cfg.window);
  CHECK(single.mean.esp == tr.esp);
  CHECK(single.esp_final == tr.esp(19));
  CHECK(single.ns_final == tr.ns(19));

  cfg.n_states = 1;
  CHECK_THROWS(indicator_ensemble(model, cfg, r1));
}

TEST_CASE("s0 distance is the scaled Hilbert-Schmidt distance") {
  Rng rng(48);
  const auto basis = all_pauli_strings(2);
  const auto a = qmat::haar_random_pure_state(2, rng);
  const auto b = qmat::haar_random_pure_state(2, rng);
  const double readout = (pauli_expectations(a, basis) - pauli_expectations(b, basis)).norm();
  CHECK(readout == doctest::Approx(2.0 * qmat::hilbert_schmidt_distance(a, b)));
}

TEST_CASE("all-column selection reproduces the full ensemble bitwise") {
  const NsModel model(NsModelConfig{preset_config(HamiltonianPreset::H1), {0.7, 1.1}, {1}});
  const auto basis = all_pauli_strings(2);
  EnsembleConfig cfg;
  cfg.seq_len = 50;
  Rng r1(49), r2(49);
  const auto full = indicator_ensemble(model, cfg, r1);
  const auto sub = subset_indicator_ensemble(model, SubsetSelection::all(basis), cfg, r2);
  CHECK(full.mean.esp == sub.mean.esp);
  CHECK(full.mean.ns.tail(40) == sub.mean.ns.tail(40));
}

TEST_CASE("selection factories") {
  const auto basis = all_pauli_strings(2);
  const auto d = SubsetSelection::damping(basis);
  const auto nd = SubsetSelection::nondamping(basis);
  const auto e = SubsetSelection::entangling(basis);
  CHECK(d.indices() == std::vector<Eigen::Index>{0, 4, 8, 12});
  CHECK(nd.indices() == std::vector<Eigen::Index>{0, 1, 2, 3});
  CHECK(e.indices().size() == 9);
  for (auto i : e.indices()) CHECK(basis[static_cast<std::size_t>(i)].to_string().find('I') == std::string::npos);
  CHECK_THROWS(SubsetSelection::columns({}, 16));
  CHECK_THROWS(SubsetSelection::columns({16}, 16));

  RealMatrix p = RealMatrix::Zero(16, 16);
  p(1, 1) = p(2, 2) = 1.0;
  const auto proj = SubsetSelection::projection(p);
  CHECK(proj.is_projection());
  Rng rng(50);
  const RealMatrix x = random_series(5, 16, rng);
  const RealMatrix y = proj.apply(x);
  CHECK(y.col(1) == x.col(1));
  CHECK(y.col(3).cwiseAbs().maxCoeff() == 0.0);
  RealMatrix notproj = RealMatrix::Identity(16, 16) * 2.0;
  CHECK_THROWS(SubsetSelection::projection(notproj));
  CHECK_THROWS(d.apply(x.leftCols(4)));
}

TEST_CASE("partitioned selections decompose the distance") {
  const auto basis = all_pauli_strings(2);
  std::vector<Eigen::Index> first, second, third;
  for (Eigen::Index k = 0; k < 16; ++k) {
    const auto& s = basis[static_cast<std::size_t>(k)];
    if (s.acts_trivially_on(1)) first.push_back(k);
    else if (s.acts_trivially_on(0)) second.push_back(k);
    else third.push_back(k);
  }
  const SubsetSelection parts[] = {SubsetSelection::columns(first, 16), SubsetSelection::columns(second, 16),
                                   SubsetSelection::columns(third, 16)};
  const SubsetModel model(SubsetModelConfig{0.3, 0.4});
  Rng rng(51);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<double> u(40);
  for (auto& x : u) x = uniform(rng);
  const RealMatrix a = run_reservoir(model, u, qmat::haar_random_pure_state(2, rng), basis).values;
  const RealMatrix b = run_reservoir(model, u, qmat::haar_random_pure_state(2, rng), basis).values;
  for (Eigen::Index t = 0; t < 40; ++t) {
    const double full = esp_indicator(a, b, 1.0, t);
    double sum = 0.0;
    for (const auto& p : parts) {
      const double d = esp_indicator(p.apply(a), p.apply(b), 1.0, t);
      sum += d * d;
    }
    CHECK(std::abs(full * full - sum) < 1e-10);
  }
}

TEST_CASE("subset indicators of the damped model") {
  const auto basis = all_pauli_strings(2);
  const SubsetSelection sel[] = {SubsetSelection::damping(basis), SubsetSelection::nondamping(basis)};
  EnsembleConfig cfg;
  Rng rng(52);
  const auto r = subset_indicator_ensembles(SubsetModel(SubsetModelConfig{0.9, 0.0}), sel, cfg, rng);
  CHECK(r[0].ns_final < 1e-2);
  CHECK(r[1].ns_final > 0.1);
  CHECK(r[1].ns_final < 10.0);
}

TEST_CASE("unitary-only subset model keeps both indicators of order one") {
  EnsembleConfig cfg;
  Rng rng(53);
  const auto r = indicator_ensemble(SubsetModel(SubsetModelConfig{0.0, 0.0}), cfg, rng);
  CHECK(r.esp_final > 0.1);
  CHECK(r.esp_final < 10.0);
  CHECK(r.ns_final > 0.1);
  CHECK(r.ns_final < 10.0);
}

TEST_CASE("full decay implies subset decay") {
  const auto basis = all_pauli_strings(2);
  const SubsetSelection sel[] = {SubsetSelection::all(basis), SubsetSelection::damping(basis),
                                 SubsetSelection::nondamping(basis), SubsetSelection::entangling(basis)};
  EnsembleConfig cfg;
  int decayed = 0;
  for (double g : {0.3, 0.6, 0.9}) {
    for (double p : {0.25, 0.5, 1.0}) {
      Rng rng(54);
      const auto r = subset_indicator_ensembles(SubsetModel(SubsetModelConfig{g, p}), sel, cfg, rng);
      if (r[0].ns_final < 1e-2) {
        ++decayed;
        for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k].ns_final < 1e-2);
      }
    }
  }
  CHECK(decayed > 0);
}

TEST_CASE("longer sequences lower the final esp of a fading model") {
  const SubsetModel model(SubsetModelConfig{0.8, 0.5});
  EnsembleConfig cfg;
  cfg.seq_len = 20;
  Rng r1(55);
  const double shortrun = indicator_ensemble(model, cfg, r1).esp_final;
  cfg.seq_len = 40;
  Rng r2(55);
  const double longrun = indicator_ensemble(model, cfg, r2).esp_final;
  CHECK(longrun < shortrun);
}

TEST_CASE("tail mean summarizes the last window") {
  IndicatorTrace tr;
  tr.window = 3;
  tr.esp = RealVector::LinSpaced(6, 1.0, 6.0);
  tr.ns = RealVector::LinSpaced(6, 10.0, 60.0);
  tr.ns_sentinel.assign(6, false);
  EnsembleConfig cfg;
  cfg.window = 3;
  CHECK(summarize(tr, 1, cfg).esp_final == 6.0);
  cfg.tail_mean = true;
  const auto r = summarize(tr, 1, cfg);
  CHECK(r.esp_final == doctest::Approx(5.0));
  CHECK(r.ns_final == doctest::Approx(50.0));
}

TEST_CASE("classical ensemble: scaling drops out of the ns indicator up to the reference factor") {
  EnsembleConfig cfg;
  ClassicalRefConfig plain;
  plain.seed = 2;
  Rng r0(56);
  const auto base = classical_indicator_ensemble(plain, cfg, r0);
  for (double c : {0.9, 1.1}) {
    ClassicalRefConfig scaled = plain;
    scaled.rate = c;
    Rng r1(56);
    const auto s = classical_indicator_ensemble(scaled, cfg, r1);
    CHECK(s.pair_count == 12);
    CHECK(std::abs(s.ns_final - base.ns_final) < 1e-6);
    // s0 is unscaled while the reference variance carries about c^w.
    const double factor = std::pow(c, cfg.window);
    for (Eigen::Index t = cfg.window - 1; t <= 120; ++t) {
      const double r = s.mean.ns(t) / base.mean.ns(t) / factor;
      CHECK(r > 1.0 / 1.2);
      CHECK(r < 1.2);
    }
    const double esp_drift = (s.mean.esp(120) / base.mean.esp(120)) / (s.mean.esp(9) / base.mean.esp(9));
    CHECK(std::abs(std::log(esp_drift)) > 5.0);
  }
}

}
