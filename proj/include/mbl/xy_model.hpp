#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "mbl/core.hpp"

namespace mbl {

// Coefficients of a finite open XY chain in a transversal field: couplings
// mu_j and anisotropies gamma_j on the n-1 bonds, field strengths nu_j on the
// n sites.
struct XYParams {
  int n = 0;
  Vector mu;
  Vector gamma;
  Vector nu;
};

inline XYParams make_xy_params(Vector mu, Vector gamma, Vector nu) {
  const int n = static_cast<int>(nu.size());
  if (n < 1) throw std::invalid_argument("chain length must be at least 1");
  if (mu.size() != n - 1 || gamma.size() != n - 1) {
    throw std::invalid_argument(
        "coupling and anisotropy sequences must have length n-1");
  }
  for (int j = 0; j < n - 1; ++j) {
    if (mu(j) == 0.0) {
      throw std::invalid_argument("mu_" + std::to_string(j + 1) +
                                  " is zero; the chain decomposes");
    }
  }
  return XYParams{n, std::move(mu), std::move(gamma), std::move(nu)};
}

inline bool is_isotropic(const XYParams& p) {
  for (int j = 0; j < p.n - 1; ++j) {
    if (p.gamma(j) != 0.0) return false;
  }
  return true;
}

// 2x2 blocks of the block Jacobi matrix: J = diag(1,-1) and
// S(gamma) = [[1, gamma], [-gamma, -1]].
inline Eigen::Matrix2d block_J() {
  Eigen::Matrix2d j;
  j << 1.0, 0.0, 0.0, -1.0;
  return j;
}

inline Eigen::Matrix2d block_S(double gamma) {
  Eigen::Matrix2d s;
  s << 1.0, gamma, -gamma, -1.0;
  return s;
}

// Effective single-particle operator h_n: 2n x 2n block Jacobi matrix with
// diagonal blocks nu_j J and off-diagonal blocks -mu_j S(gamma_j) (upper) /
// -mu_j S(gamma_j)^T (lower), in the interleaved basis e_1, e_{n+1}, e_2,
// e_{n+2}, ...
inline EffectiveOperator build_effective(const XYParams& p) {
  Matrix h = Matrix::Zero(2 * p.n, 2 * p.n);
  for (int j = 0; j < p.n; ++j) {
    h.block<2, 2>(2 * j, 2 * j) = p.nu(j) * block_J();
  }
  for (int j = 0; j + 1 < p.n; ++j) {
    const Eigen::Matrix2d s = p.mu(j) * block_S(p.gamma(j));
    h.block<2, 2>(2 * j, 2 * (j + 1)) = -s;
    h.block<2, 2>(2 * (j + 1), 2 * j) = -s.transpose();
  }
  return make_effective_operator(std::move(h), 2);
}

// Same operator in the unpermuted (c_1..c_n, c_1*..c_n*) basis:
// [[A, B], [-B, -A]] with A = tridiag(-mu; nu; -mu) and B antisymmetric with
// B_{j,j+1} = -gamma_j mu_j. Used as a permutation cross-check of
// build_effective.
inline Matrix tilde_effective(const XYParams& p) {
  Matrix a = Matrix::Zero(p.n, p.n);
  Matrix b = Matrix::Zero(p.n, p.n);
  for (int j = 0; j < p.n; ++j) a(j, j) = p.nu(j);
  for (int j = 0; j + 1 < p.n; ++j) {
    a(j, j + 1) = -p.mu(j);
    a(j + 1, j) = -p.mu(j);
    b(j, j + 1) = -p.gamma(j) * p.mu(j);
    b(j + 1, j) = p.gamma(j) * p.mu(j);
  }
  Matrix h(2 * p.n, 2 * p.n);
  h.topLeftCorner(p.n, p.n) = a;
  h.topRightCorner(p.n, p.n) = b;
  h.bottomLeftCorner(p.n, p.n) = -b;
  h.bottomRightCorner(p.n, p.n) = -a;
  return h;
}

// Tridiagonal Anderson-type matrix A_n with diagonal nu_j and hopping -mu_j;
// for the isotropic chain, h_n is unitarily equivalent to A_n + (-A_n) and
// the many-body ground state gap equals 2 dist(0, spectrum(A_n)).
inline Matrix anderson_matrix(const XYParams& p) {
  Matrix a = Matrix::Zero(p.n, p.n);
  for (int j = 0; j < p.n; ++j) a(j, j) = p.nu(j);
  for (int j = 0; j + 1 < p.n; ++j) {
    a(j, j + 1) = -p.mu(j);
    a(j + 1, j) = -p.mu(j);
  }
  return a;
}

namespace pauli {

inline Matrix sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << std::complex<double>(0, 0), std::complex<double>(0, -1),
      std::complex<double>(0, 1), std::complex<double>(0, 0);
  return m;
}

inline Matrix sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Lowering operator a = (sigma_x - i sigma_y)/2 = [[0,0],[1,0]].
inline Matrix lowering() {
  Matrix m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

}  // namespace pauli

inline constexpr int kOracleCapDefault = 8;
inline constexpr int kOracleCapHardLimit = 14;

// Dense 2^n-dimensional many-body Hamiltonian together with the Jordan-Wigner
// fermion operators c_j = sigma_1^Z ... sigma_{j-1}^Z a_j. Both are real in
// the standard product basis. Eigendecomposition is cached for evolution.
struct DenseManyBody {
  int n = 0;
  Matrix hamiltonian;
  std::vector<Matrix> c_ops;
  std::vector<Matrix> c_dag_ops;
  Vector energies;
  Matrix modes;
};

namespace detail {

// Tensor product over the chain with site 0 as the leftmost factor.
inline Matrix embed_chain(const std::vector<Matrix>& site_ops) {
  Matrix out = Matrix::Identity(1, 1);
  for (const Matrix& op : site_ops) {
    out = Eigen::kroneckerProduct(out, op).eval();
  }
  return out;
}

inline void check_oracle_cap(int n, int cap) {
  if (cap > kOracleCapHardLimit) {
    throw std::invalid_argument("oracle cap above hard limit " +
                                std::to_string(kOracleCapHardLimit));
  }
  if (n > cap) {
    throw std::invalid_argument("chain length " + std::to_string(n) +
                                " exceeds oracle cap " + std::to_string(cap));
  }
}

}  // namespace detail

inline DenseManyBody build_dense_oracle(const XYParams& p,
                                        int cap = kOracleCapDefault) {
  detail::check_oracle_cap(p.n, cap);
  const Matrix id2 = Matrix::Identity(2, 2);
  const int dim = 1 << p.n;

  DenseManyBody mb;
  mb.n = p.n;
  mb.hamiltonian = Matrix::Zero(dim, dim);

  std::vector<Matrix> ops(p.n, id2);
  for (int j = 0; j + 1 < p.n; ++j) {
    ops.assign(p.n, id2);
    ops[j] = pauli::sigma_x();
    ops[j + 1] = pauli::sigma_x();
    mb.hamiltonian += p.mu(j) * (1.0 + p.gamma(j)) * detail::embed_chain(ops);
    // sigma_y sigma_y is real: both factors are purely imaginary.
    ops[j] = Matrix::Zero(2, 2);
    ops[j](0, 1) = -1.0;
    ops[j](1, 0) = 1.0;
    ops[j + 1] = ops[j];
    mb.hamiltonian -= p.mu(j) * (1.0 - p.gamma(j)) * detail::embed_chain(ops);
  }
  for (int j = 0; j < p.n; ++j) {
    ops.assign(p.n, id2);
    ops[j] = pauli::sigma_z();
    mb.hamiltonian += p.nu(j) * detail::embed_chain(ops);
  }

  mb.c_ops.reserve(p.n);
  mb.c_dag_ops.reserve(p.n);
  for (int j = 0; j < p.n; ++j) {
    ops.assign(p.n, id2);
    for (int i = 0; i < j; ++i) ops[i] = pauli::sigma_z();
    ops[j] = pauli::lowering();
    Matrix c = detail::embed_chain(ops);
    mb.c_dag_ops.push_back(c.transpose());
    mb.c_ops.push_back(std::move(c));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(mb.hamiltonian);
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError("dense oracle eigendecomposition failed");
  }
  mb.energies = solver.eigenvalues();
  mb.modes = solver.eigenvectors();
  return mb;
}

// Heisenberg evolution e^{itH} A e^{-itH} through the cached
// eigendecomposition.
inline ComplexMatrix heisenberg_evolve(const DenseManyBody& mb,
                                       const ComplexMatrix& a, double t) {
  if (a.rows() != mb.hamiltonian.rows() || a.cols() != mb.hamiltonian.cols()) {
    throw std::invalid_argument("observable dimension mismatch");
  }
  ComplexMatrix w = mb.modes.transpose() * a * mb.modes;
  const std::complex<double> i_unit(0.0, 1.0);
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) *= std::exp(i_unit * t * (mb.energies(r) - mb.energies(c)));
    }
  }
  return mb.modes * w * mb.modes.transpose();
}

// Residual of the c-operator evolution identity: the Heisenberg image of
// (c_j, c_j*) must equal sum_k of the (j,k) 2x2 block of e^{-2it h_n} applied
// to (c_k, c_k*). Returns the worst operator-norm mismatch over all j.
inline double verify_c_evolution(const XYParams& p, double t,
                                 int cap = kOracleCapDefault) {
  const DenseManyBody mb = build_dense_oracle(p, cap);
  const EffectiveOperator h = build_effective(p);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.entries);
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError("effective operator eigendecomposition failed");
  }
  const std::complex<double> i_unit(0.0, 1.0);
  ComplexVector phases(h.dim);
  for (int k = 0; k < h.dim; ++k) {
    phases(k) = std::exp(-2.0 * i_unit * t * solver.eigenvalues()(k));
  }
  const ComplexMatrix u = solver.eigenvectors().cast<std::complex<double>>() *
                          phases.asDiagonal() *
                          solver.eigenvectors().transpose().cast<std::complex<double>>();

  const int dim = 1 << p.n;
  double worst = 0.0;
  for (int j = 0; j < p.n; ++j) {
    ComplexMatrix rhs_c = ComplexMatrix::Zero(dim, dim);
    ComplexMatrix rhs_cd = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < p.n; ++k) {
      rhs_c += u(2 * j, 2 * k) * mb.c_ops[k] + u(2 * j, 2 * k + 1) * mb.c_dag_ops[k];
      rhs_cd += u(2 * j + 1, 2 * k) * mb.c_ops[k] +
                u(2 * j + 1, 2 * k + 1) * mb.c_dag_ops[k];
    }
    const ComplexMatrix lhs_c = heisenberg_evolve(mb, mb.c_ops[j], t);
    const ComplexMatrix lhs_cd = heisenberg_evolve(mb, mb.c_dag_ops[j], t);
    worst = std::max(worst, operator_norm(ComplexMatrix(lhs_c - rhs_c)));
    worst = std::max(worst, operator_norm(ComplexMatrix(lhs_cd - rhs_cd)));
  }
  return worst;
}

struct IsotropicGap {
  double from_single_particle = 0.0;
  std::optional<double> from_oracle;
};

// Ground state gap of the isotropic chain: E_1 - E_0 = 2 dist(0, spec(A_n)).
// The dense oracle value is attached whenever n fits under the cap.
inline IsotropicGap ground_state_gap_isotropic(const XYParams& p,
                                               int cap = kOracleCapDefault) {
  if (!is_isotropic(p)) {
    throw std::invalid_argument(
        "ground state gap identity requires an isotropic chain (gamma = 0)");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(anderson_matrix(p));
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError("Anderson matrix eigendecomposition failed");
  }
  IsotropicGap gap;
  gap.from_single_particle = 2.0 * solver.eigenvalues().cwiseAbs().minCoeff();
  if (p.n <= cap && cap <= kOracleCapHardLimit) {
    const DenseManyBody mb = build_dense_oracle(p, cap);
    gap.from_oracle = mb.energies(1) - mb.energies(0);
  }
  return gap;
}

// Embeds a single-site observable at the given site (identity elsewhere).
inline ComplexMatrix embed_site_operator(const ComplexMatrix& op, int site,
                                         int n) {
  if (op.rows() != 2 || op.cols() != 2) {
    throw std::invalid_argument("site observable must be 2x2");
  }
  if (site < 0 || site >= n) throw std::invalid_argument("site out of range");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  const ComplexMatrix id2 = ComplexMatrix::Identity(2, 2);
  for (int i = 0; i < n; ++i) {
    out = Eigen::kroneckerProduct(out, i == site ? op : id2).eval();
  }
  return out;
}

// Exact operator norm of [tau_t(A), B] for single-site observables A at
// site_a and B at site_b. Locality is enforced by construction: the inputs
// are 2x2 blocks embedded here.
inline double commutator_norm_oracle(const DenseManyBody& mb,
                                     const ComplexMatrix& a, int site_a,
                                     const ComplexMatrix& b, int site_b,
                                     double t) {
  const ComplexMatrix a_full = embed_site_operator(a, site_a, mb.n);
  const ComplexMatrix b_full = embed_site_operator(b, site_b, mb.n);
  const ComplexMatrix tau_a = heisenberg_evolve(mb, a_full, t);
  return operator_norm(ComplexMatrix(tau_a * b_full - b_full * tau_a));
}

}  // namespace mbl
