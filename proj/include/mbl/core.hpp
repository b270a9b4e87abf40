#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mbl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Eigenvalues closer to zero than this are treated as singular whenever a
// negative power of the operator is requested.
inline constexpr double kZeroTol = 1e-12;

// Entrywise absolute tolerance for symmetry validation of operator matrices.
inline constexpr double kSymmetryTol = 1e-12;

// Numerical failure that should abort an experiment: a matrix function with a
// singularity at zero was requested on a spectrum that touches zero.
class SingularSpectrumError : public std::runtime_error {
 public:
  explicit SingularSpectrumError(const std::string& what)
      : std::runtime_error(what) {}
};

// Real symmetric matrix driving a model: the 2x2-block Jacobi matrix of the
// spin chain (block_size 2) or the oscillator lattice operator (block_size 1).
// Site j occupies rows [block_size*j, block_size*(j+1)).
struct EffectiveOperator {
  int dim = 0;
  int block_size = 1;
  Matrix entries;

  int num_sites() const { return dim / block_size; }
  int row_of(int site) const { return block_size * site; }
};

inline EffectiveOperator make_effective_operator(Matrix entries,
                                                 int block_size) {
  if (block_size != 1 && block_size != 2) {
    throw std::invalid_argument("block_size must be 1 or 2");
  }
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw std::invalid_argument("operator matrix must be square and nonempty");
  }
  if (entries.rows() % block_size != 0) {
    throw std::invalid_argument("dimension not divisible by block size");
  }
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw std::invalid_argument("operator matrix not symmetric (max deviation " +
                                std::to_string(asym) + ")");
  }
  if (block_size == 2) {
    const int n = static_cast<int>(entries.rows()) / 2;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (std::abs(j - k) <= 1) continue;
        if (entries.block(2 * j, 2 * k, 2, 2).cwiseAbs().maxCoeff() > 0.0) {
          throw std::invalid_argument(
              "block Jacobi matrix has entries off the block tridiagonal");
        }
      }
    }
  }
  EffectiveOperator op;
  op.dim = static_cast<int>(entries.rows());
  op.block_size = block_size;
  op.entries = std::move(entries);
  return op;
}

// Largest singular value. Dense SVD; fine for the desk-scale matrices here.
inline double operator_norm(const ComplexMatrix& m) {
  return m.jacobiSvd().singularValues()(0);
}

inline double operator_norm(const Matrix& m) {
  return m.jacobiSvd().singularValues()(0);
}

}  // namespace mbl
