#pragma once

// Dense complex linear algebra for small (<= 4 qubit) systems.
//
// Qubit 0 is the most significant tensor factor: for a two-qubit operator
// A (x) B, A acts on qubit 0 and B on qubit 1. The bit of qubit q inside a
// basis index of an n-qubit system is bit (n - 1 - q).

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qresp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Seeded generator used by every stochastic routine in the library.
using Rng = std::mt19937_64;

/// Raised when a quantum state or operator violates one of its invariants.
class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double min_eigenvalue = -1e-9;
inline constexpr double hermitian_input = 1e-8;
} // namespace tol

namespace qmat {

std::size_t dimension(int n_qubits);
int qubit_count(Eigen::Index dim);

ComplexMatrix identity(int n_qubits);
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

/// Kronecker product; (a (x) b)[i*rb + k, j*cb + l] = a[i,j] * b[k,l].
ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Largest absolute entry of m - m^dagger.
double hermiticity_error(const ComplexMatrix& m);

struct EigenDecomposition {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors; // orthonormal columns
};

/// Throws std::invalid_argument unless h is Hermitian to 1e-8.
EigenDecomposition hermitian_eig(const ComplexMatrix& h);

/// exp(-i h) for Hermitian h, unit time step.
ComplexMatrix evolution_unitary(const ComplexMatrix& h);

/// The 4x4 controlled-NOT with qubit 0 as control.
ComplexMatrix cnot();

/// Matrix power U_CX^p = (I + U_CX)/2 + exp(i pi p) (I - U_CX)/2.
ComplexMatrix cnot_power(double p);

/// Singular values in descending order, min(rows, cols) of them.
RealVector singular_values(const RealMatrix& m);

/// Moore-Penrose inverse; singular values below rel_tol * sigma_max are dropped.
RealMatrix pseudo_inverse(const RealMatrix& m, double rel_tol);

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phases of R's diagonal moved into Q.
ComplexMatrix haar_random_unitary(Eigen::Index dim, Rng& rng);

} // namespace qmat

/// Hermitian, unit-trace, positive semidefinite matrix on 2^n qubits.
///
/// Construction from an arbitrary matrix runs the full invariant check,
/// including an eigendecomposition for positivity. States produced by the
/// library's channels go through `from_channel_output`, which checks trace
/// and Hermiticity only; `validate()` runs the full check on demand.
class DensityMatrix {
public:
  explicit DensityMatrix(ComplexMatrix m);

  static DensityMatrix ground_state(int n_qubits);
  static DensityMatrix maximally_mixed(int n_qubits);
  static DensityMatrix from_pure_state(const ComplexVector& psi);
  static DensityMatrix from_channel_output(ComplexMatrix m);

  int n_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }

  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double purity() const;

  /// Full invariant check; throws StateError on violation.
  void validate() const;

private:
  struct Unchecked {};
  DensityMatrix(ComplexMatrix m, Unchecked);
  void check_cheap() const;

  ComplexMatrix matrix_;
  int n_qubits_;
};

namespace qmat {

/// Traces out `traced_qubits`; the kept qubits retain their relative order.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> traced_qubits);

/// Unitary conjugation u rho u^dagger.
DensityMatrix conjugate(const DensityMatrix& rho, const ComplexMatrix& u);

/// Tensor product of two states.
DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b);

/// |psi><psi| with psi a normalized vector of i.i.d. standard complex Gaussians.
DensityMatrix haar_random_pure_state(int n_qubits, Rng& rng);

/// Trace distance 0.5 * ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Frobenius norm of a - b.
double hilbert_schmidt_distance(const DensityMatrix& a, const DensityMatrix& b);

} // namespace qmat
} // namespace qresp
