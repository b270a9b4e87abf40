#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "mbl/core.hpp"

namespace mbl {

// Dense eigendecomposition of an EffectiveOperator; the engine behind every
// matrix function, propagator and correlator.
struct SpectralData {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, eigenvectors.col(k) <-> eigenvalues(k)
  int source_dim = 0;
  int block_size = 1;

  int num_sites() const { return source_dim / block_size; }
};

inline SpectralData decompose(const EffectiveOperator& op) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(op.entries);
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError("eigendecomposition failed");
  }
  SpectralData s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  s.source_dim = op.dim;
  s.block_size = op.block_size;

  const double residual =
      (op.entries * s.eigenvectors - s.eigenvectors * s.eigenvalues.asDiagonal())
          .norm();
  if (residual > 1e-9 * (1.0 + op.entries.norm())) {
    throw SingularSpectrumError("eigendecomposition residual too large: " +
                                std::to_string(residual));
  }
  const double ortho =
      (s.eigenvectors.transpose() * s.eigenvectors -
       Matrix::Identity(op.dim, op.dim))
          .norm();
  if (ortho > 1e-10) {
    throw SingularSpectrumError("eigenvectors not orthonormal: " +
                                std::to_string(ortho));
  }
  return s;
}

// Compact interval of energies used to restrict spectral sums.
struct EnergyWindow {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double e) const { return lo <= e && e <= hi; }
};

inline EnergyWindow make_energy_window(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("energy window requires lo <= hi");
  return EnergyWindow{lo, hi};
}

namespace detail {

inline void check_site_index(const SpectralData& s, int x) {
  if (x < 0 || x >= s.source_dim) {
    throw std::invalid_argument("matrix index out of range");
  }
}

inline void check_nonsingular(const SpectralData& s,
                              const std::optional<EnergyWindow>& window,
                              double zero_tol, const char* what) {
  for (int k = 0; k < s.source_dim; ++k) {
    const double lam = s.eigenvalues(k);
    if (window && !window->contains(lam)) continue;
    if (std::abs(lam) <= zero_tol) {
      throw SingularSpectrumError(std::string(what) +
                                  " undefined: eigenvalue " +
                                  std::to_string(lam) + " within zero_tol " +
                                  std::to_string(zero_tol) + " of 0");
    }
  }
}

inline void check_positive_semidefinite(const SpectralData& s,
                                        const char* what) {
  if (s.eigenvalues(0) < -kZeroTol) {
    throw std::invalid_argument(
        std::string(what) + " requires a positive semidefinite operator; " +
        "smallest eigenvalue " + std::to_string(s.eigenvalues(0)));
  }
}

}  // namespace detail

// <x| phi(h) |y> = sum_k phi(lambda_k) psi_k(x) psi_k(y). When phi has a
// singularity at zero, pass singular_at_zero to get the explicit
// near-zero-eigenvalue error instead of a silent overflow.
inline double matrix_function(const SpectralData& s,
                              const std::function<double(double)>& phi, int x,
                              int y, bool singular_at_zero = false,
                              double zero_tol = kZeroTol) {
  detail::check_site_index(s, x);
  detail::check_site_index(s, y);
  if (singular_at_zero) {
    detail::check_nonsingular(s, std::nullopt, zero_tol, "matrix function");
  }
  double out = 0.0;
  for (int k = 0; k < s.source_dim; ++k) {
    out += phi(s.eigenvalues(k)) * s.eigenvectors(x, k) * s.eigenvectors(y, k);
  }
  return out;
}

inline Matrix matrix_function_full(const SpectralData& s,
                                   const std::function<double(double)>& phi,
                                   bool singular_at_zero = false,
                                   double zero_tol = kZeroTol) {
  if (singular_at_zero) {
    detail::check_nonsingular(s, std::nullopt, zero_tol, "matrix function");
  }
  Vector values(s.source_dim);
  for (int k = 0; k < s.source_dim; ++k) values(k) = phi(s.eigenvalues(k));
  return s.eigenvectors * values.asDiagonal() * s.eigenvectors.transpose();
}

// <x| e^{-ith} chi_J(h) |y>; no window means the full propagator entry.
inline std::complex<double> propagator_entry(
    const SpectralData& s, double t, int x, int y,
    std::optional<EnergyWindow> window = std::nullopt) {
  detail::check_site_index(s, x);
  detail::check_site_index(s, y);
  const std::complex<double> i_unit(0.0, 1.0);
  std::complex<double> out(0.0, 0.0);
  for (int k = 0; k < s.source_dim; ++k) {
    const double lam = s.eigenvalues(k);
    if (window && !window->contains(lam)) continue;
    out += std::exp(-i_unit * t * lam) * s.eigenvectors(x, k) *
           s.eigenvectors(y, k);
  }
  return out;
}

// (j,k) 2x2 block of e^{-ith} chi_J(h) for block Jacobi operators.
inline Eigen::Matrix2cd propagator_block(
    const SpectralData& s, double t, int j, int k,
    std::optional<EnergyWindow> window = std::nullopt) {
  if (s.block_size != 2) {
    throw std::invalid_argument("propagator_block requires block size 2");
  }
  Eigen::Matrix2cd block;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      block(a, b) = propagator_entry(s, t, 2 * j + a, 2 * k + b, window);
    }
  }
  return block;
}

inline ComplexMatrix propagator_full(
    const SpectralData& s, double t,
    std::optional<EnergyWindow> window = std::nullopt) {
  const std::complex<double> i_unit(0.0, 1.0);
  ComplexVector values(s.source_dim);
  for (int k = 0; k < s.source_dim; ++k) {
    const double lam = s.eigenvalues(k);
    values(k) = (window && !window->contains(lam))
                    ? std::complex<double>(0.0, 0.0)
                    : std::exp(-i_unit * t * lam);
  }
  const ComplexMatrix v = s.eigenvectors.cast<std::complex<double>>();
  return v * values.asDiagonal() * v.transpose();
}

// Singular eigenfunction correlator Q_alpha(x,y) =
// sum_k |lambda_k|^alpha |psi_k(x)| |psi_k(y)|, defined for alpha > -1;
// majorizes |<x| h^alpha g(h) |y>| over all |g| <= 1.
inline double eigenfunction_correlator(
    const SpectralData& s, double alpha, int x, int y,
    std::optional<EnergyWindow> window = std::nullopt,
    double zero_tol = kZeroTol) {
  detail::check_site_index(s, x);
  detail::check_site_index(s, y);
  if (!(alpha > -1.0)) {
    throw std::invalid_argument("correlator order must satisfy alpha > -1");
  }
  if (alpha < 0.0) {
    detail::check_nonsingular(s, window, zero_tol, "singular correlator");
  }
  double out = 0.0;
  for (int k = 0; k < s.source_dim; ++k) {
    const double lam = s.eigenvalues(k);
    if (window && !window->contains(lam)) continue;
    out += std::pow(std::abs(lam), alpha) * std::abs(s.eigenvectors(x, k)) *
           std::abs(s.eigenvectors(y, k));
  }
  return out;
}

// Time-dependent quantities bounded by the correlators: the propagator entry
// and the three square-root functional-calculus kernels of the oscillator
// commutator bound.
enum class DynamicalKind { evolution, cos_sqrt, sqrt_sin, inv_sqrt_sin };

struct TimeGrid {
  double start = 0.0;
  double stop = 100.0;
  double step = 0.01;
};

struct SupEstimate {
  double upper_bound = 0.0;  // correlator majorant, valid for all t
  double sampled_sup = 0.0;  // max of the actual quantity over the grid
};

// Returns the provable sup_t upper bound (eigenfunction correlator with
// alpha = 0, 0, 1/2, -1/2 by kind) together with the sampled supremum over
// the time grid. The sup over all real t is not computable; ensemble
// statistics use the upper bound, the sampled value is diagnostic.
inline SupEstimate sup_t_dynamical(const SpectralData& s, int x, int y,
                                   DynamicalKind kind,
                                   std::optional<EnergyWindow> window = std::nullopt,
                                   TimeGrid grid = {}) {
  detail::check_site_index(s, x);
  detail::check_site_index(s, y);
  if (grid.step <= 0.0 || grid.stop < grid.start) {
    throw std::invalid_argument("invalid time grid");
  }
  if (kind != DynamicalKind::evolution) {
    detail::check_positive_semidefinite(s, "square-root evolution kind");
  }

  double alpha = 0.0;
  if (kind == DynamicalKind::sqrt_sin) alpha = 0.5;
  if (kind == DynamicalKind::inv_sqrt_sin) alpha = -0.5;

  SupEstimate est;
  est.upper_bound = eigenfunction_correlator(s, alpha, x, y, window);

  const long nt =
      static_cast<long>(std::floor((grid.stop - grid.start) / grid.step)) + 1;
  const std::complex<double> i_unit(0.0, 1.0);
  for (long it = 0; it < nt; ++it) {
    const double t = grid.start + static_cast<double>(it) * grid.step;
    double value = 0.0;
    if (kind == DynamicalKind::evolution) {
      value = std::abs(propagator_entry(s, t, x, y, window));
    } else {
      double acc = 0.0;
      for (int k = 0; k < s.source_dim; ++k) {
        const double lam = s.eigenvalues(k);
        if (window && !window->contains(lam)) continue;
        const double root = std::sqrt(std::max(lam, 0.0));
        double kernel = 0.0;
        switch (kind) {
          case DynamicalKind::cos_sqrt:
            kernel = std::cos(2.0 * t * root);
            break;
          case DynamicalKind::sqrt_sin:
            kernel = root * std::sin(2.0 * t * root);
            break;
          case DynamicalKind::inv_sqrt_sin:
            kernel = std::sin(2.0 * t * root) / root;
            break;
          default:
            break;
        }
        acc += kernel * s.eigenvectors(x, k) * s.eigenvectors(y, k);
      }
      value = std::abs(acc);
    }
    est.sampled_sup = std::max(est.sampled_sup, value);
  }
  return est;
}

// Spectral norm of the 2x2 matrix of correlators [Q_alpha(x_a, y_b)] over the
// row ranges of sites j and k; entrywise majorant of the corresponding block
// quantity, so its norm majorizes the block operator norm.
inline double correlator_block_norm(
    const SpectralData& s, double alpha, int j, int k,
    std::optional<EnergyWindow> window = std::nullopt) {
  if (s.block_size != 2) {
    throw std::invalid_argument("correlator_block_norm requires block size 2");
  }
  Eigen::Matrix2d block;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      block(a, b) =
          eigenfunction_correlator(s, alpha, 2 * j + a, 2 * k + b, window);
    }
  }
  return block.jacobiSvd().singularValues()(0);
}

// Block analogue of sup_t_dynamical for the propagator: upper bound is the
// norm of the correlator block, sampled value is max_t of the block norm.
inline SupEstimate sup_t_propagator_block(
    const SpectralData& s, int j, int k,
    std::optional<EnergyWindow> window = std::nullopt, TimeGrid grid = {}) {
  if (s.block_size != 2) {
    throw std::invalid_argument("sup_t_propagator_block requires block size 2");
  }
  if (grid.step <= 0.0 || grid.stop < grid.start) {
    throw std::invalid_argument("invalid time grid");
  }
  SupEstimate est;
  est.upper_bound = correlator_block_norm(s, 0.0, j, k, window);
  const long nt =
      static_cast<long>(std::floor((grid.stop - grid.start) / grid.step)) + 1;
  for (long it = 0; it < nt; ++it) {
    const double t = grid.start + static_cast<double>(it) * grid.step;
    const Eigen::Matrix2cd block = propagator_block(s, t, j, k, window);
    est.sampled_sup =
        std::max(est.sampled_sup, block.jacobiSvd().singularValues()(0));
  }
  return est;
}

}  // namespace mbl
