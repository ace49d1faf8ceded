#pragma once

// Reservoir models: the SK-Hamiltonian model with reset-input encoding, the
// amplitude-damping / fractional-CNOT model, a depolarizing toy channel and
// classical reference systems. Trajectories are time-major: row t holds the
// readout after the model has consumed input t.

#include "qresp/qmat.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qresp {

// --------------------------------------------------------------------------
// Pauli readout

enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

class PauliString {
public:
  PauliString() = default;
  explicit PauliString(std::vector<PauliLetter> letters);
  /// Parses e.g. "IXZ"; letter k acts on qubit k.
  static PauliString parse(std::string_view text);

  int n_qubits() const { return static_cast<int>(letters_.size()); }
  PauliLetter operator[](int qubit) const { return letters_[static_cast<std::size_t>(qubit)]; }
  const std::vector<PauliLetter>& letters() const { return letters_; }
  std::string to_string() const;
  ComplexMatrix matrix() const;

  bool is_identity() const;
  bool acts_trivially_on(int qubit) const { return (*this)[qubit] == PauliLetter::I; }

  friend bool operator==(const PauliString&, const PauliString&) = default;

private:
  std::vector<PauliLetter> letters_;
};

/// All 4^n strings in lexicographic order over (I, X, Y, Z), qubit 0 slowest.
/// The first entry is the all-identity string.
std::vector<PauliString> all_pauli_strings(int n_qubits);

/// tr(P rho) for each string. Values are real and lie in [-1, 1].
RealVector pauli_expectations(const DensityMatrix& rho, std::span<const PauliString> basis);

/// Inverse of the full-basis readout: rho = 2^-n sum_P <P> P.
DensityMatrix state_from_pauli_expectations(std::span<const double> values, int n_qubits);

struct ReadoutTrajectory {
  std::vector<PauliString> basis;
  RealMatrix values; // rows: time steps, columns: basis entries

  Eigen::Index length() const { return values.rows(); }
};

// --------------------------------------------------------------------------
// Hamiltonian and input encoding

struct SkHamiltonianConfig {
  int n_qubits = 2;
  double j_scale = 1.0;      // J_s
  double field_width = 0.312; // W
  double global_field = 0.013; // h
  std::uint64_t seed = 0;

  void validate() const;
};

/// Lower-triangular couplings J(i, j), i > j, and local fields D(i).
struct SkCouplings {
  RealMatrix couplings;
  RealVector local_fields;
};

enum class HamiltonianPreset { H1, H2, H3, H4, H5 };

std::optional<HamiltonianPreset> parse_preset(std::string_view name);
std::string_view preset_name(HamiltonianPreset preset);
/// Default coupling seed shared by the presets.
inline constexpr std::uint64_t default_coupling_seed = 1;
SkHamiltonianConfig preset_config(HamiltonianPreset preset, int n_qubits = 2,
                                  std::uint64_t seed = default_coupling_seed);

/// J_ij ~ U[-J_s/2, J_s/2] for i > j (row-major over i, then j), followed by
/// D_i ~ U[-W J_s/2, W J_s/2].
SkCouplings sample_sk_couplings(const SkHamiltonianConfig& cfg);

/// H = sum_{i>j} J_ij X_i X_j + 1/2 sum_i (h + D_i) Z_i.
ComplexMatrix sk_hamiltonian(int n_qubits, const SkCouplings& couplings, double global_field);
ComplexMatrix build_sk_hamiltonian(const SkHamiltonianConfig& cfg);

/// Rotation axis on the Bloch sphere in spherical coordinates.
struct AxisConfig {
  double azimuth = 0.0; // [0, 2 pi)
  double polar = 0.0;   // [0, pi]

  Eigen::Vector3d unit_vector() const;
  void validate() const;
};

struct EulerAngles {
  double theta = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
};

/// Angles for which U3 maps the axis onto +Z: U3 (n.sigma) U3^dagger = Z.
EulerAngles axis_to_euler(const AxisConfig& axis);

ComplexMatrix u3(const EulerAngles& angles);
/// Half-angle rotations exp(-i angle sigma / 2).
ComplexMatrix rotation_z(double angle);
ComplexMatrix rotation_y(double angle);

/// U3^dagger R_Z(arccos u) U3: rotation by arccos(u) about the axis.
ComplexMatrix input_unitary(double u, const AxisConfig& axis);

struct NsModelConfig {
  SkHamiltonianConfig hamiltonian;
  AxisConfig axis;
  std::vector<int> reset_subsystem{1};

  void validate() const;
};

/// Replaces the qubits of A with sigma_A(u) = (U |0><0| U^dagger)^{(x)|A|}.
DensityMatrix reset_encode(const DensityMatrix& rho, double u, const NsModelConfig& cfg);

// --------------------------------------------------------------------------
// Models

/// Input-driven quantum channel with inputs in [-1, 1].
class QuantumReservoir {
public:
  virtual ~QuantumReservoir() = default;
  virtual int n_qubits() const = 0;
  virtual DensityMatrix step(const DensityMatrix& rho, double u) const = 0;
};

/// rho -> e^{-iH} E(rho, u) e^{iH} with reset-input encoding E.
class NsModel final : public QuantumReservoir {
public:
  explicit NsModel(NsModelConfig cfg);
  /// Uses `hamiltonian` instead of sampling one from cfg.hamiltonian.
  NsModel(NsModelConfig cfg, const ComplexMatrix& hamiltonian);

  int n_qubits() const override { return cfg_.hamiltonian.n_qubits; }
  DensityMatrix step(const DensityMatrix& rho, double u) const override;

  const NsModelConfig& config() const { return cfg_; }
  const ComplexMatrix& hamiltonian() const { return hamiltonian_; }
  const ComplexMatrix& evolution() const { return evolution_; }

private:
  NsModelConfig cfg_;
  ComplexMatrix hamiltonian_;
  ComplexMatrix evolution_;
  ComplexMatrix to_axis_frame_; // U3
};

DensityMatrix step_ns_model(const DensityMatrix& rho, double u, const NsModel& model);

/// Kraus operators K0, K1 of single-qubit amplitude damping.
std::array<ComplexMatrix, 2> amplitude_damping_kraus(double gamma);
DensityMatrix amplitude_damping(const DensityMatrix& rho, int qubit, double gamma);
DensityMatrix amplitude_damping_qubit0(const DensityMatrix& rho, double gamma);

struct SubsetModelConfig {
  double damping_rate = 0.0;   // gamma
  double cnot_exponent = 0.0;  // p
  std::uint64_t u0_seed = 1;
  std::uint64_t u1_seed = 2;

  void validate() const;
};

/// Two-qubit model: local unitaries, damping on qubit 0, U_CX^p, then
/// R_Y(arccos u) on both qubits.
class SubsetModel final : public QuantumReservoir {
public:
  explicit SubsetModel(SubsetModelConfig cfg);
  SubsetModel(SubsetModelConfig cfg, const ComplexMatrix& u0, const ComplexMatrix& u1);

  int n_qubits() const override { return 2; }
  DensityMatrix step(const DensityMatrix& rho, double u) const override;
  /// Input-free part E_sys.
  DensityMatrix system_channel(const DensityMatrix& rho) const;

  const SubsetModelConfig& config() const { return cfg_; }

private:
  SubsetModelConfig cfg_;
  ComplexMatrix local_;   // U0 (x) U1
  ComplexMatrix entangler_; // U_CX^p
};

DensityMatrix step_subset_model(const DensityMatrix& rho, double u, const SubsetModel& model);

/// rho -> (1 - eps) V rho V^dagger + eps I/d; the input is ignored.
class DepolarizingModel final : public QuantumReservoir {
public:
  DepolarizingModel(int n_qubits, double epsilon, ComplexMatrix unitary);
  int n_qubits() const override { return n_qubits_; }
  DensityMatrix step(const DensityMatrix& rho, double u) const override;

private:
  int n_qubits_;
  double epsilon_;
  ComplexMatrix unitary_;
};

/// Raised by run_reservoir; carries the index of the failing input.
class StepError : public std::runtime_error {
public:
  StepError(Eigen::Index step, const std::string& what);
  Eigen::Index step() const { return step_; }

private:
  Eigen::Index step_;
};

ReadoutTrajectory run_reservoir(const QuantumReservoir& model, std::span<const double> inputs,
                                const DensityMatrix& rho0, std::span<const PauliString> basis);

// --------------------------------------------------------------------------
// Classical reference systems

/// Raised when a classical recursion leaves the representable range.
class NumericError : public std::runtime_error {
public:
  NumericError(Eigen::Index step, const std::string& what);
  Eigen::Index step() const { return step_; }

private:
  Eigen::Index step_;
};

/// Fixed random echo-state map x -> tanh(W x + w_in u).
class EchoStateMap {
public:
  EchoStateMap(int size, double spectral_radius, double input_scale, std::uint64_t seed);

  int size() const { return static_cast<int>(weights_.rows()); }
  double spectral_radius() const;
  RealVector operator()(const RealVector& x, double u) const;

private:
  RealMatrix weights_;
  RealVector input_weights_;
};

struct ClassicalRefConfig {
  enum class Kind { scaled, biased };
  Kind kind = Kind::scaled;
  double rate = 1.0; // c for scaled, b for biased
  int size = 20;
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Plain recursion x_{t+1} = f(x_t, u_t); row t holds x_{t+1}.
RealMatrix run_echo_state(const EchoStateMap& map, std::span<const double> inputs, const RealVector& x0);

/// scaled: y_{t+1} = c^{t+1} f(y_t / c^t, u_t); biased: y_{t+1} = f(y_t - b t, u_t) + b (t + 1).
RealMatrix run_classical_reference(const ClassicalRefConfig& cfg, std::span<const double> inputs,
                                   const RealVector& y0);

/// Shift register holding the previous `dim` inputs: row t = (u_{t-1}, ..., u_{t-dim}).
RealMatrix run_delay_line(std::span<const double> inputs, int dim);

} // namespace qresp
