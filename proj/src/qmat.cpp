#include "qresp/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qresp {

namespace qmat {

std::size_t dimension(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 8) {
    throw std::invalid_argument("qubit count must be in [1, 8], got " + std::to_string(n_qubits));
  }
  return std::size_t{1} << n_qubits;
}

int qubit_count(Eigen::Index dim) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++n;
  }
  if (d != dim || n < 1) {
    throw std::invalid_argument("matrix dimension " + std::to_string(dim) + " is not 2^n with n >= 1");
  }
  return n;
}

ComplexMatrix identity(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(dimension(n_qubits));
  return ComplexMatrix::Identity(d, d);
}

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

EigenDecomposition hermitian_eig(const ComplexMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw std::invalid_argument("hermitian_eig: matrix must be square and nonempty");
  }
  const double err = hermiticity_error(h);
  if (!(err <= tol::hermitian_input)) {
    std::ostringstream os;
    os << "hermitian_eig: input is not Hermitian (max |H - H^dagger| = " << err << ")";
    throw std::invalid_argument(os.str());
  }
  // Symmetrize away sub-tolerance skew parts before handing to the solver.
  const ComplexMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix evolution_unitary(const ComplexMatrix& h) {
  const auto eig = hermitian_eig(h);
  ComplexVector phases(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::polar(1.0, -eig.eigenvalues(k));
  }
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

ComplexMatrix cnot() {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  m(2, 3) = 1.0;
  m(3, 2) = 1.0;
  return m;
}

ComplexMatrix cnot_power(double p) {
  if (!std::isfinite(p)) {
    throw std::invalid_argument("cnot_power: exponent must be finite");
  }
  // U_CX is an involution, so its spectral projectors are (I +- U_CX)/2.
  const ComplexMatrix id = ComplexMatrix::Identity(4, 4);
  const ComplexMatrix u = cnot();
  return 0.5 * (id + u) + std::polar(1.0, std::numbers::pi * p) * 0.5 * (id - u);
}

RealVector singular_values(const RealMatrix& m) {
  if (m.size() == 0) {
    return RealVector(0);
  }
  Eigen::BDCSVD<RealMatrix> svd(m);
  return svd.singularValues();
}

RealMatrix pseudo_inverse(const RealMatrix& m, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw std::invalid_argument("pseudo_inverse: rel_tol must lie in (0, 1)");
  }
  if (m.size() == 0) {
    return RealMatrix::Zero(m.cols(), m.rows());
  }
  Eigen::BDCSVD<RealMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double cutoff = rel_tol * s(0);
  RealVector inv = RealVector::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cutoff && s(k) > 0.0) {
      inv(k) = 1.0 / s(k);
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

ComplexMatrix haar_random_unitary(Eigen::Index dim, Rng& rng) {
  if (dim < 1) {
    throw std::invalid_argument("haar_random_unitary: dimension must be positive");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix z(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double mag = std::abs(r(k, k));
    const Complex phase = mag > 0.0 ? r(k, k) / mag : Complex(1.0, 0.0);
    q.col(k) *= phase;
  }
  return q;
}

} // namespace qmat

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(ComplexMatrix m, Unchecked) : matrix_(std::move(m)), n_qubits_(qmat::qubit_count(matrix_.rows())) {}

DensityMatrix::DensityMatrix(ComplexMatrix m) : DensityMatrix(std::move(m), Unchecked{}) {
  validate();
}

DensityMatrix DensityMatrix::ground_state(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(qmat::dimension(n_qubits));
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  m(0, 0) = 1.0;
  return DensityMatrix(std::move(m), Unchecked{});
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(qmat::dimension(n_qubits));
  return DensityMatrix(ComplexMatrix::Identity(d, d) / static_cast<double>(d), Unchecked{});
}

DensityMatrix DensityMatrix::from_pure_state(const ComplexVector& psi) {
  const double norm = psi.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw StateError("pure state vector must have finite nonzero norm");
  }
  const ComplexVector v = psi / norm;
  return DensityMatrix(ComplexMatrix(v * v.adjoint()), Unchecked{});
}

DensityMatrix DensityMatrix::from_channel_output(ComplexMatrix m) {
  DensityMatrix out(std::move(m), Unchecked{});
  out.check_cheap();
  return out;
}

double DensityMatrix::trace_error() const {
  return std::abs(matrix_.trace() - Complex(1.0, 0.0));
}

double DensityMatrix::hermiticity_error() const {
  return qmat::hermiticity_error(matrix_);
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (matrix_ + matrix_.adjoint()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double DensityMatrix::purity() const {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return matrix_.squaredNorm();
}

void DensityMatrix::check_cheap() const {
  if (matrix_.rows() != matrix_.cols()) {
    throw StateError("density matrix must be square");
  }
  if (!matrix_.allFinite()) {
    throw StateError("density matrix has non-finite entries");
  }
  const double herm = hermiticity_error();
  if (herm > tol::hermitian) {
    std::ostringstream os;
    os << "density matrix is not Hermitian (max deviation " << herm << ")";
    throw StateError(os.str());
  }
  const double tr = trace_error();
  if (tr > tol::trace) {
    std::ostringstream os;
    os << "density matrix trace deviates from 1 by " << tr;
    throw StateError(os.str());
  }
}

void DensityMatrix::validate() const {
  check_cheap();
  const double lmin = min_eigenvalue();
  if (lmin < tol::min_eigenvalue) {
    std::ostringstream os;
    os << "density matrix is not positive semidefinite (min eigenvalue " << lmin << ")";
    throw StateError(os.str());
  }
}

// ---------------------------------------------------------------------------

namespace qmat {

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> traced_qubits) {
  const int n = rho.n_qubits();
  std::vector<bool> traced(static_cast<std::size_t>(n), false);
  for (int q : traced_qubits) {
    if (q < 0 || q >= n) {
      throw std::invalid_argument("partial_trace: qubit index " + std::to_string(q) + " out of range");
    }
    if (traced[static_cast<std::size_t>(q)]) {
      throw std::invalid_argument("partial_trace: duplicate qubit index " + std::to_string(q));
    }
    traced[static_cast<std::size_t>(q)] = true;
  }
  const int n_traced = static_cast<int>(traced_qubits.size());
  if (n_traced == n) {
    throw std::invalid_argument("partial_trace: cannot trace out every qubit");
  }
  if (n_traced == 0) {
    return rho;
  }

  std::vector<int> kept_pos;   // bit positions (from LSB) of kept qubits, output order MSB first
  std::vector<int> traced_pos;
  for (int q = 0; q < n; ++q) {
    (traced[static_cast<std::size_t>(q)] ? traced_pos : kept_pos).push_back(n - 1 - q);
  }
  const int n_kept = static_cast<int>(kept_pos.size());
  const Eigen::Index d_kept = Eigen::Index{1} << n_kept;
  const Eigen::Index d_traced = Eigen::Index{1} << n_traced;

  auto compose = [&](Eigen::Index kept_idx, Eigen::Index traced_idx) {
    Eigen::Index full = 0;
    for (int b = 0; b < n_kept; ++b) {
      if ((kept_idx >> (n_kept - 1 - b)) & 1) {
        full |= Eigen::Index{1} << kept_pos[static_cast<std::size_t>(b)];
      }
    }
    for (int b = 0; b < n_traced; ++b) {
      if ((traced_idx >> (n_traced - 1 - b)) & 1) {
        full |= Eigen::Index{1} << traced_pos[static_cast<std::size_t>(b)];
      }
    }
    return full;
  };

  const ComplexMatrix& m = rho.matrix();
  ComplexMatrix out = ComplexMatrix::Zero(d_kept, d_kept);
  for (Eigen::Index i = 0; i < d_kept; ++i) {
    for (Eigen::Index j = 0; j < d_kept; ++j) {
      Complex acc(0.0, 0.0);
      for (Eigen::Index t = 0; t < d_traced; ++t) {
        acc += m(compose(i, t), compose(j, t));
      }
      out(i, j) = acc;
    }
  }
  return DensityMatrix::from_channel_output(std::move(out));
}

DensityMatrix conjugate(const DensityMatrix& rho, const ComplexMatrix& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim()) {
    throw std::invalid_argument("conjugate: operator dimension mismatch");
  }
  ComplexMatrix out = u * rho.matrix() * u.adjoint();
  return DensityMatrix::from_channel_output(std::move(out));
}

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix::from_channel_output(tensor_product(a.matrix(), b.matrix()));
}

DensityMatrix haar_random_pure_state(int n_qubits, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dimension(n_qubits));
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector psi(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    psi(k) = Complex(re, im);
  }
  return DensityMatrix::from_pure_state(psi);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  const ComplexMatrix diff = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double hilbert_schmidt_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("hilbert_schmidt_distance: dimension mismatch");
  }
  return (a.matrix() - b.matrix()).norm();
}

} // namespace qmat
} // namespace qresp
