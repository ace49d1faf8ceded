#include "qresp/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace qresp {

namespace {

/// Sparse form of a Pauli string: row i has its single nonzero at column
/// i ^ flip_mask with value phase[i].
struct CompiledPauli {
  Eigen::Index flip_mask = 0;
  std::vector<Complex> phase;
};

CompiledPauli compile(const PauliString& p) {
  const int n = p.n_qubits();
  const Eigen::Index dim = Eigen::Index{1} << n;
  CompiledPauli out;
  out.phase.assign(static_cast<std::size_t>(dim), Complex(1.0, 0.0));
  for (int q = 0; q < n; ++q) {
    const int shift = n - 1 - q;
    const PauliLetter letter = p[q];
    if (letter == PauliLetter::X || letter == PauliLetter::Y) {
      out.flip_mask |= Eigen::Index{1} << shift;
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      const bool bit = (i >> shift) & 1;
      switch (letter) {
      case PauliLetter::I:
      case PauliLetter::X:
        break;
      case PauliLetter::Y:
        out.phase[static_cast<std::size_t>(i)] *= bit ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
        break;
      case PauliLetter::Z:
        if (bit) {
          out.phase[static_cast<std::size_t>(i)] *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

class CompiledBasis {
public:
  explicit CompiledBasis(std::span<const PauliString> basis) {
    entries_.reserve(basis.size());
    for (const auto& p : basis) {
      entries_.push_back(compile(p));
    }
  }

  void evaluate(const ComplexMatrix& rho, Eigen::Ref<RealVector> out) const {
    const Eigen::Index dim = rho.rows();
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      double acc = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const Eigen::Index c = i ^ e.flip_mask;
        acc += (e.phase[static_cast<std::size_t>(i)] * rho(c, i)).real();
      }
      out(static_cast<Eigen::Index>(k)) = acc;
    }
  }

private:
  std::vector<CompiledPauli> entries_;
};

void check_basis(std::span<const PauliString> basis, int n_qubits) {
  for (const auto& p : basis) {
    if (p.n_qubits() != n_qubits) {
      throw std::invalid_argument("Pauli string " + p.to_string() + " does not match a " +
                                  std::to_string(n_qubits) + "-qubit system");
    }
  }
}

void check_input(double u) {
  if (!(u >= -1.0 && u <= 1.0)) {
    std::ostringstream os;
    os << "input " << u << " is outside the encoding domain [-1, 1]";
    throw std::domain_error(os.str());
  }
}

/// Embeds a single-qubit operator at `qubit` of an n-qubit register.
ComplexMatrix embed_single(const ComplexMatrix& op, int qubit, int n_qubits) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int q = 0; q < n_qubits; ++q) {
    out = qmat::tensor_product(out, q == qubit ? op : ComplexMatrix::Identity(2, 2));
  }
  return out;
}

std::vector<int> checked_subsystem(const std::vector<int>& subsystem, int n_qubits) {
  std::set<int> seen;
  for (int q : subsystem) {
    if (q < 0 || q >= n_qubits) {
      throw std::invalid_argument("reset subsystem qubit " + std::to_string(q) + " out of range");
    }
    if (!seen.insert(q).second) {
      throw std::invalid_argument("reset subsystem lists qubit " + std::to_string(q) + " twice");
    }
  }
  if (seen.empty() || static_cast<int>(seen.size()) >= n_qubits) {
    throw std::invalid_argument("reset subsystem must be a nonempty strict subset of the qubits");
  }
  return {seen.begin(), seen.end()};
}

/// tr_A(rho) (x) sigma_A with the A factors placed back at their own qubit
/// positions. `single` is the per-qubit reset state.
DensityMatrix replace_subsystem(const DensityMatrix& rho, const ComplexMatrix& single, std::span<const int> subsystem) {
  const int n = rho.n_qubits();
  const DensityMatrix reduced = qmat::partial_trace(rho, subsystem);

  std::vector<bool> in_a(static_cast<std::size_t>(n), false);
  for (int q : subsystem) {
    in_a[static_cast<std::size_t>(q)] = true;
  }
  const Eigen::Index dim = rho.dim();
  std::vector<Eigen::Index> kept_index(static_cast<std::size_t>(dim));
  std::vector<std::vector<int>> a_bits(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::Index k = 0;
    for (int q = 0; q < n; ++q) {
      const int bit = static_cast<int>((i >> (n - 1 - q)) & 1);
      if (in_a[static_cast<std::size_t>(q)]) {
        a_bits[static_cast<std::size_t>(i)].push_back(bit);
      } else {
        k = (k << 1) | bit;
      }
    }
    kept_index[static_cast<std::size_t>(i)] = k;
  }

  const ComplexMatrix& red = reduced.matrix();
  ComplexMatrix out(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      Complex s = red(kept_index[static_cast<std::size_t>(i)], kept_index[static_cast<std::size_t>(j)]);
      const auto& ai = a_bits[static_cast<std::size_t>(i)];
      const auto& aj = a_bits[static_cast<std::size_t>(j)];
      for (std::size_t b = 0; b < ai.size(); ++b) {
        s *= single(ai[b], aj[b]);
      }
      out(i, j) = s;
    }
  }
  return DensityMatrix::from_channel_output(std::move(out));
}

ComplexMatrix reset_state(double u, const ComplexMatrix& axis_frame) {
  check_input(u);
  const ComplexMatrix rot = axis_frame.adjoint() * rotation_z(std::acos(u)) * axis_frame;
  const ComplexVector psi = rot.col(0);
  return psi * psi.adjoint();
}

} // namespace

// --------------------------------------------------------------------------
// Pauli strings

PauliString::PauliString(std::vector<PauliLetter> letters) : letters_(std::move(letters)) {
  if (letters_.empty()) {
    throw std::invalid_argument("Pauli string must act on at least one qubit");
  }
}

PauliString PauliString::parse(std::string_view text) {
  std::vector<PauliLetter> letters;
  for (char c : text) {
    switch (c) {
    case 'I': letters.push_back(PauliLetter::I); break;
    case 'X': letters.push_back(PauliLetter::X); break;
    case 'Y': letters.push_back(PauliLetter::Y); break;
    case 'Z': letters.push_back(PauliLetter::Z); break;
    default:
      throw std::invalid_argument("invalid Pauli letter '" + std::string(1, c) + "'");
    }
  }
  return PauliString(std::move(letters));
}

std::string PauliString::to_string() const {
  static constexpr char names[] = {'I', 'X', 'Y', 'Z'};
  std::string s;
  for (auto l : letters_) {
    s.push_back(names[static_cast<int>(l)]);
  }
  return s;
}

ComplexMatrix PauliString::matrix() const {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (auto l : letters_) {
    ComplexMatrix factor;
    switch (l) {
    case PauliLetter::I: factor = ComplexMatrix::Identity(2, 2); break;
    case PauliLetter::X: factor = qmat::pauli_x(); break;
    case PauliLetter::Y: factor = qmat::pauli_y(); break;
    case PauliLetter::Z: factor = qmat::pauli_z(); break;
    }
    out = qmat::tensor_product(out, factor);
  }
  return out;
}

bool PauliString::is_identity() const {
  return std::all_of(letters_.begin(), letters_.end(), [](PauliLetter l) { return l == PauliLetter::I; });
}

std::vector<PauliString> all_pauli_strings(int n_qubits) {
  qmat::dimension(n_qubits);
  const std::size_t count = std::size_t{1} << (2 * n_qubits);
  std::vector<PauliString> out;
  out.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<PauliLetter> letters(static_cast<std::size_t>(n_qubits));
    for (int q = 0; q < n_qubits; ++q) {
      const auto digit = (code >> (2 * (n_qubits - 1 - q))) & 3u;
      letters[static_cast<std::size_t>(q)] = static_cast<PauliLetter>(digit);
    }
    out.emplace_back(std::move(letters));
  }
  return out;
}

RealVector pauli_expectations(const DensityMatrix& rho, std::span<const PauliString> basis) {
  check_basis(basis, rho.n_qubits());
  RealVector out(static_cast<Eigen::Index>(basis.size()));
  CompiledBasis(basis).evaluate(rho.matrix(), out);
  return out;
}

DensityMatrix state_from_pauli_expectations(std::span<const double> values, int n_qubits) {
  const auto basis = all_pauli_strings(n_qubits);
  if (values.size() != basis.size()) {
    throw std::invalid_argument("state reconstruction needs all 4^n expectation values");
  }
  const auto dim = static_cast<Eigen::Index>(qmat::dimension(n_qubits));
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    m += values[k] * basis[k].matrix();
  }
  m /= static_cast<double>(dim);
  return DensityMatrix::from_channel_output(std::move(m));
}

// --------------------------------------------------------------------------
// Hamiltonian

void SkHamiltonianConfig::validate() const {
  if (n_qubits < 2 || n_qubits > 4) {
    throw std::invalid_argument("SK Hamiltonian needs 2 to 4 qubits");
  }
  if (!(j_scale > 0.0) || !std::isfinite(j_scale)) {
    throw std::invalid_argument("j_scale must be positive and finite");
  }
  if (!(field_width >= 0.0) || !std::isfinite(field_width)) {
    throw std::invalid_argument("field_width must be nonnegative and finite");
  }
  if (!std::isfinite(global_field)) {
    throw std::invalid_argument("global_field must be finite");
  }
}

std::optional<HamiltonianPreset> parse_preset(std::string_view name) {
  if (name == "H1") return HamiltonianPreset::H1;
  if (name == "H2") return HamiltonianPreset::H2;
  if (name == "H3") return HamiltonianPreset::H3;
  if (name == "H4") return HamiltonianPreset::H4;
  if (name == "H5") return HamiltonianPreset::H5;
  return std::nullopt;
}

std::string_view preset_name(HamiltonianPreset preset) {
  switch (preset) {
  case HamiltonianPreset::H1: return "H1";
  case HamiltonianPreset::H2: return "H2";
  case HamiltonianPreset::H3: return "H3";
  case HamiltonianPreset::H4: return "H4";
  case HamiltonianPreset::H5: return "H5";
  }
  return "H1";
}

SkHamiltonianConfig preset_config(HamiltonianPreset preset, int n_qubits, std::uint64_t seed) {
  SkHamiltonianConfig cfg;
  cfg.n_qubits = n_qubits;
  cfg.j_scale = 1.0;
  cfg.seed = seed;
  switch (preset) {
  case HamiltonianPreset::H1: cfg.global_field = 0.013; cfg.field_width = 0.312; break;
  case HamiltonianPreset::H2: cfg.global_field = 0.013; cfg.field_width = 1.05; break;
  case HamiltonianPreset::H3: cfg.global_field = 0.377; cfg.field_width = 24.8; break;
  case HamiltonianPreset::H4: cfg.global_field = 57.2; cfg.field_width = 47.5; break;
  case HamiltonianPreset::H5: cfg.global_field = 48.3; cfg.field_width = 0.0305; break;
  }
  return cfg;
}

SkCouplings sample_sk_couplings(const SkHamiltonianConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int n = cfg.n_qubits;
  SkCouplings out{RealMatrix::Zero(n, n), RealVector::Zero(n)};
  const double half_j = 0.5 * cfg.j_scale;
  std::uniform_real_distribution<double> coupling(-half_j, half_j);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      out.couplings(i, j) = coupling(rng);
    }
  }
  const double half_w = 0.5 * cfg.field_width * cfg.j_scale;
  std::uniform_real_distribution<double> field(-half_w, half_w);
  for (int i = 0; i < n; ++i) {
    out.local_fields(i) = field(rng);
  }
  return out;
}

ComplexMatrix sk_hamiltonian(int n_qubits, const SkCouplings& couplings, double global_field) {
  const auto dim = static_cast<Eigen::Index>(qmat::dimension(n_qubits));
  if (couplings.couplings.rows() != n_qubits || couplings.couplings.cols() != n_qubits ||
      couplings.local_fields.size() != n_qubits) {
    throw std::invalid_argument("sk_hamiltonian: coupling shapes do not match qubit count");
  }
  const ComplexMatrix x = qmat::pauli_x();
  const ComplexMatrix z = qmat::pauli_z();
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < n_qubits; ++i) {
    for (int j = 0; j < i; ++j) {
      const double jij = couplings.couplings(i, j);
      if (jij != 0.0) {
        h += jij * (embed_single(x, i, n_qubits) * embed_single(x, j, n_qubits));
      }
    }
  }
  for (int i = 0; i < n_qubits; ++i) {
    h += 0.5 * (global_field + couplings.local_fields(i)) * embed_single(z, i, n_qubits);
  }
  return h;
}

ComplexMatrix build_sk_hamiltonian(const SkHamiltonianConfig& cfg) {
  return sk_hamiltonian(cfg.n_qubits, sample_sk_couplings(cfg), cfg.global_field);
}

// --------------------------------------------------------------------------
// Input encoding

Eigen::Vector3d AxisConfig::unit_vector() const {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
}

void AxisConfig::validate() const {
  if (!std::isfinite(azimuth)) {
    throw std::invalid_argument("axis azimuth must be finite");
  }
  if (!(polar >= 0.0 && polar <= std::numbers::pi)) {
    throw std::invalid_argument("axis polar angle must lie in [0, pi]");
  }
}

EulerAngles axis_to_euler(const AxisConfig& axis) {
  axis.validate();
  // With these angles U3^dagger |0> is the +axis eigenstate, so U3 carries
  // the axis onto Z.
  return {axis.polar, std::numbers::pi, std::numbers::pi - axis.azimuth};
}

ComplexMatrix u3(const EulerAngles& a) {
  const double c = std::cos(0.5 * a.theta);
  const double s = std::sin(0.5 * a.theta);
  ComplexMatrix m(2, 2);
  m(0, 0) = c;
  m(0, 1) = -std::polar(1.0, a.lambda) * s;
  m(1, 0) = std::polar(1.0, a.phi) * s;
  m(1, 1) = std::polar(1.0, a.phi + a.lambda) * c;
  return m;
}

ComplexMatrix rotation_z(double angle) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -0.5 * angle);
  m(1, 1) = std::polar(1.0, 0.5 * angle);
  return m;
}

ComplexMatrix rotation_y(double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  ComplexMatrix m(2, 2);
  m << c, -s, s, c;
  return m;
}

ComplexMatrix input_unitary(double u, const AxisConfig& axis) {
  check_input(u);
  const ComplexMatrix frame = u3(axis_to_euler(axis));
  return frame.adjoint() * rotation_z(std::acos(u)) * frame;
}

void NsModelConfig::validate() const {
  hamiltonian.validate();
  axis.validate();
  checked_subsystem(reset_subsystem, hamiltonian.n_qubits);
}

DensityMatrix reset_encode(const DensityMatrix& rho, double u, const NsModelConfig& cfg) {
  if (rho.n_qubits() != cfg.hamiltonian.n_qubits) {
    throw std::invalid_argument("reset_encode: state size does not match model");
  }
  const auto subsystem = checked_subsystem(cfg.reset_subsystem, rho.n_qubits());
  const ComplexMatrix single = reset_state(u, u3(axis_to_euler(cfg.axis)));
  return replace_subsystem(rho, single, subsystem);
}

// --------------------------------------------------------------------------
// NS model

NsModel::NsModel(NsModelConfig cfg) : NsModel(cfg, build_sk_hamiltonian(cfg.hamiltonian)) {}

NsModel::NsModel(NsModelConfig cfg, const ComplexMatrix& hamiltonian) : cfg_(std::move(cfg)), hamiltonian_(hamiltonian) {
  cfg_.validate();
  cfg_.reset_subsystem = checked_subsystem(cfg_.reset_subsystem, cfg_.hamiltonian.n_qubits);
  const auto dim = static_cast<Eigen::Index>(qmat::dimension(cfg_.hamiltonian.n_qubits));
  if (hamiltonian_.rows() != dim || hamiltonian_.cols() != dim) {
    throw std::invalid_argument("NsModel: Hamiltonian dimension does not match qubit count");
  }
  evolution_ = qmat::evolution_unitary(hamiltonian_);
  to_axis_frame_ = u3(axis_to_euler(cfg_.axis));
}

DensityMatrix NsModel::step(const DensityMatrix& rho, double u) const {
  if (rho.n_qubits() != n_qubits()) {
    throw std::invalid_argument("NsModel::step: state size does not match model");
  }
  const ComplexMatrix single = reset_state(u, to_axis_frame_);
  const DensityMatrix encoded = replace_subsystem(rho, single, cfg_.reset_subsystem);
  return qmat::conjugate(encoded, evolution_);
}

DensityMatrix step_ns_model(const DensityMatrix& rho, double u, const NsModel& model) {
  return model.step(rho, u);
}

// --------------------------------------------------------------------------
// Subset model

std::array<ComplexMatrix, 2> amplitude_damping_kraus(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("damping rate must lie in [0, 1]");
  }
  ComplexMatrix k0 = ComplexMatrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - gamma);
  ComplexMatrix k1 = ComplexMatrix::Zero(2, 2);
  k1(0, 1) = std::sqrt(gamma);
  return {k0, k1};
}

DensityMatrix amplitude_damping(const DensityMatrix& rho, int qubit, double gamma) {
  if (qubit < 0 || qubit >= rho.n_qubits()) {
    throw std::invalid_argument("amplitude_damping: qubit out of range");
  }
  const auto kraus = amplitude_damping_kraus(gamma);
  ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
  for (const auto& k : kraus) {
    const ComplexMatrix full = embed_single(k, qubit, rho.n_qubits());
    out += full * rho.matrix() * full.adjoint();
  }
  return DensityMatrix::from_channel_output(std::move(out));
}

DensityMatrix amplitude_damping_qubit0(const DensityMatrix& rho, double gamma) {
  return amplitude_damping(rho, 0, gamma);
}

void SubsetModelConfig::validate() const {
  if (!(damping_rate >= 0.0 && damping_rate <= 1.0)) {
    throw std::invalid_argument("damping_rate must lie in [0, 1]");
  }
  if (!std::isfinite(cnot_exponent)) {
    throw std::invalid_argument("cnot_exponent must be finite");
  }
}

namespace {
ComplexMatrix seeded_unitary(std::uint64_t seed) {
  Rng rng(seed);
  return qmat::haar_random_unitary(2, rng);
}
} // namespace

SubsetModel::SubsetModel(SubsetModelConfig cfg) : SubsetModel(cfg, seeded_unitary(cfg.u0_seed), seeded_unitary(cfg.u1_seed)) {}

SubsetModel::SubsetModel(SubsetModelConfig cfg, const ComplexMatrix& u0, const ComplexMatrix& u1) : cfg_(cfg) {
  cfg_.validate();
  if (u0.rows() != 2 || u0.cols() != 2 || u1.rows() != 2 || u1.cols() != 2) {
    throw std::invalid_argument("SubsetModel: local unitaries must be 2x2");
  }
  local_ = qmat::tensor_product(u0, u1);
  entangler_ = qmat::cnot_power(cfg_.cnot_exponent);
}

DensityMatrix SubsetModel::system_channel(const DensityMatrix& rho) const {
  if (rho.n_qubits() != 2) {
    throw std::invalid_argument("SubsetModel: state must be two qubits");
  }
  const DensityMatrix local = qmat::conjugate(rho, local_);
  const DensityMatrix damped = amplitude_damping(local, 0, cfg_.damping_rate);
  return qmat::conjugate(damped, entangler_);
}

DensityMatrix SubsetModel::step(const DensityMatrix& rho, double u) const {
  check_input(u);
  const ComplexMatrix ry = rotation_y(std::acos(u));
  return qmat::conjugate(system_channel(rho), qmat::tensor_product(ry, ry));
}

DensityMatrix step_subset_model(const DensityMatrix& rho, double u, const SubsetModel& model) {
  return model.step(rho, u);
}

// --------------------------------------------------------------------------
// Depolarizing toy

DepolarizingModel::DepolarizingModel(int n_qubits, double epsilon, ComplexMatrix unitary)
    : n_qubits_(n_qubits), epsilon_(epsilon), unitary_(std::move(unitary)) {
  const auto dim = static_cast<Eigen::Index>(qmat::dimension(n_qubits));
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("depolarizing rate must lie in [0, 1]");
  }
  if (unitary_.rows() != dim || unitary_.cols() != dim) {
    throw std::invalid_argument("DepolarizingModel: unitary dimension mismatch");
  }
}

DensityMatrix DepolarizingModel::step(const DensityMatrix& rho, double /*u*/) const {
  const Eigen::Index dim = rho.dim();
  ComplexMatrix out = (1.0 - epsilon_) * (unitary_ * rho.matrix() * unitary_.adjoint());
  out.diagonal().array() += epsilon_ / static_cast<double>(dim);
  return DensityMatrix::from_channel_output(std::move(out));
}

// --------------------------------------------------------------------------

StepError::StepError(Eigen::Index step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

ReadoutTrajectory run_reservoir(const QuantumReservoir& model, std::span<const double> inputs,
                                const DensityMatrix& rho0, std::span<const PauliString> basis) {
  if (rho0.n_qubits() != model.n_qubits()) {
    throw std::invalid_argument("run_reservoir: initial state size does not match model");
  }
  check_basis(basis, model.n_qubits());
  const CompiledBasis readout(basis);
  ReadoutTrajectory traj{{basis.begin(), basis.end()},
                         RealMatrix(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(basis.size()))};
  DensityMatrix rho = rho0;
  RealVector row(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    try {
      rho = model.step(rho, inputs[t]);
    } catch (const std::exception& e) {
      throw StepError(static_cast<Eigen::Index>(t), e.what());
    }
    readout.evaluate(rho.matrix(), row);
    traj.values.row(static_cast<Eigen::Index>(t)) = row.transpose();
  }
  return traj;
}

// --------------------------------------------------------------------------
// Classical references

NumericError::NumericError(Eigen::Index step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

EchoStateMap::EchoStateMap(int size, double spectral_radius, double input_scale, std::uint64_t seed) {
  if (size < 1) {
    throw std::invalid_argument("echo state map size must be positive");
  }
  if (!(spectral_radius > 0.0 && spectral_radius < 1.0)) {
    throw std::invalid_argument("echo state map spectral radius must lie in (0, 1)");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  weights_.resize(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      weights_(i, j) = normal(rng);
    }
  }
  input_weights_.resize(size);
  for (int i = 0; i < size; ++i) {
    input_weights_(i) = input_scale * uniform(rng);
  }
  const double radius = Eigen::EigenSolver<RealMatrix>(weights_, false).eigenvalues().cwiseAbs().maxCoeff();
  weights_ *= spectral_radius / radius;
}

double EchoStateMap::spectral_radius() const {
  return Eigen::EigenSolver<RealMatrix>(weights_, false).eigenvalues().cwiseAbs().maxCoeff();
}

RealVector EchoStateMap::operator()(const RealVector& x, double u) const {
  return (weights_ * x + input_weights_ * u).array().tanh().matrix();
}

void ClassicalRefConfig::validate() const {
  if (kind == Kind::scaled && !(rate > 0.0)) {
    throw std::invalid_argument("scaled reference needs a positive rate");
  }
  if (!std::isfinite(rate)) {
    throw std::invalid_argument("reference rate must be finite");
  }
  if (size < 1) {
    throw std::invalid_argument("reference size must be positive");
  }
}

RealMatrix run_echo_state(const EchoStateMap& map, std::span<const double> inputs, const RealVector& x0) {
  if (x0.size() != map.size()) {
    throw std::invalid_argument("initial state size does not match the echo state map");
  }
  RealMatrix out(static_cast<Eigen::Index>(inputs.size()), map.size());
  RealVector x = x0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    x = map(x, inputs[t]);
    out.row(static_cast<Eigen::Index>(t)) = x.transpose();
  }
  return out;
}

RealMatrix run_classical_reference(const ClassicalRefConfig& cfg, std::span<const double> inputs, const RealVector& y0) {
  cfg.validate();
  const EchoStateMap map(cfg.size, cfg.spectral_radius, cfg.input_scale, cfg.seed);
  if (y0.size() != map.size()) {
    throw std::invalid_argument("initial state size does not match the reference map");
  }
  RealMatrix out(static_cast<Eigen::Index>(inputs.size()), map.size());
  RealVector y = y0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto step = static_cast<Eigen::Index>(t);
    const double td = static_cast<double>(t);
    if (cfg.kind == ClassicalRefConfig::Kind::scaled) {
      const double now = std::pow(cfg.rate, td);
      const double next = std::pow(cfg.rate, td + 1.0);
      if (!std::isfinite(next) || !(next > 0.0) || !(now > 0.0)) {
        throw NumericError(step, "scale factor c^t left the representable range");
      }
      y = next * map(y / now, inputs[t]);
    } else {
      y = map(y.array() - cfg.rate * td, inputs[t]).array() + cfg.rate * (td + 1.0);
    }
    if (!y.allFinite()) {
      throw NumericError(step, "reference state is not finite");
    }
    out.row(step) = y.transpose();
  }
  return out;
}

RealMatrix run_delay_line(std::span<const double> inputs, int dim) {
  if (dim < 1) {
    throw std::invalid_argument("delay line dimension must be positive");
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  RealMatrix out = RealMatrix::Zero(n, dim);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (int j = 0; j < dim; ++j) {
      const Eigen::Index src = t - 1 - j;
      if (src >= 0) {
        out(t, j) = inputs[static_cast<std::size_t>(src)];
      }
    }
  }
  return out;
}

} // namespace qresp
