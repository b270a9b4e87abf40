#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mbl/core.hpp"
#include "mbl/distribution.hpp"
#include "mbl/rng.hpp"
#include "mbl/xy_model.hpp"

namespace mbl {

// Running product of transfer matrices with periodic QR re-orthogonalization;
// accumulates log |R_ii| per exponent.
class TransferProduct {
 public:
  explicit TransferProduct(int size, int reorth_interval = 10)
      : frame_(Matrix::Identity(size, size)),
        pending_(Matrix::Identity(size, size)),
        logs_(Vector::Zero(size)),
        reorth_interval_(reorth_interval) {
    if (size != 2 && size != 4) {
      throw std::invalid_argument("transfer product size must be 2 or 4");
    }
    if (reorth_interval < 1) {
      throw std::invalid_argument("re-orthogonalization interval must be >= 1");
    }
  }

  void apply(const Matrix& t) {
    if (t.rows() != frame_.rows() || t.cols() != frame_.cols()) {
      throw std::invalid_argument("transfer matrix size mismatch");
    }
    pending_ = t * pending_;
    ++steps_;
    if (++pending_count_ >= reorth_interval_) flush();
  }

  void flush() {
    if (pending_count_ == 0) return;
    const Matrix m = pending_ * frame_;
    Eigen::HouseholderQR<Matrix> qr(m);
    frame_ = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    const Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      logs_(i) += std::log(std::abs(r(i, i)));
    }
    pending_ = Matrix::Identity(frame_.rows(), frame_.cols());
    pending_count_ = 0;
  }

  // Accumulated log-stretches per exponent slot; call flush() first when an
  // exact step count must be attributed.
  const Vector& log_norms() const { return logs_; }
  long steps() const { return steps_; }

  Vector exponents() const {
    if (steps_ == 0) throw std::logic_error("no transfer steps applied");
    return logs_ / static_cast<double>(steps_);
  }

 private:
  Matrix frame_;
  Matrix pending_;
  Vector logs_;
  int reorth_interval_;
  int pending_count_ = 0;
  long steps_ = 0;
};

// The two elementary transfer matrices of one period of the transformed Ising
// Jacobi matrix (zero diagonal, hoppings alternating -2 and nu). The first
// advances across the nu bond, the second across the following -2 bond; the
// period product is second * first.
inline std::pair<Eigen::Matrix2d, Eigen::Matrix2d> ising_transfer_step(
    double energy, double nu) {
  if (nu == 0.0) {
    throw std::invalid_argument("ising transfer step requires nu != 0");
  }
  Eigen::Matrix2d over_nu_bond;
  over_nu_bond << energy / nu, 2.0 / nu, 1.0, 0.0;
  Eigen::Matrix2d over_minus2_bond;
  over_minus2_bond << -energy / 2.0, nu / 2.0, 1.0, 0.0;
  return {over_nu_bond, over_minus2_bond};
}

// 4x4 transfer matrix of the block three-term recurrence of h_n: maps
// (u_j, u_{j-1}) to (u_{j+1}, u_j) for any solution of h_n u = E u, where the
// off-diagonal blocks entering site j are mu_j S(gamma_j) (right) and
// mu_prev S(gamma_prev) (left).
inline Eigen::Matrix4d block_transfer_step(double energy, double mu,
                                           double gamma, double nu,
                                           double mu_prev, double gamma_prev) {
  if (mu == 0.0) {
    throw std::invalid_argument("block transfer step requires mu != 0");
  }
  if (std::abs(gamma) == 1.0) {
    throw std::invalid_argument(
        "S(gamma) is singular at |gamma| = 1; use the Ising transfer path");
  }
  const Eigen::Matrix2d m = mu * block_S(gamma);
  const Eigen::Matrix2d m_inv = m.inverse();
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  t.topLeftCorner<2, 2>() =
      m_inv * (nu * block_J() - energy * Eigen::Matrix2d::Identity());
  t.topRightCorner<2, 2>() = -m_inv * (mu_prev * block_S(gamma_prev)).transpose();
  t.bottomLeftCorner<2, 2>() = Eigen::Matrix2d::Identity();
  return t;
}

// Constant-coefficient shorthand: previous bond equals the current one.
inline Eigen::Matrix4d block_transfer_step(double energy, double mu,
                                           double gamma, double nu) {
  return block_transfer_step(energy, mu, gamma, nu, mu, gamma);
}

struct LyapunovEstimate {
  Vector exponents;        // per lattice site, sorted descending
  Vector stderrs;          // block-averaging standard errors, matched order
  long periods_used = 0;   // valid transfer periods consumed
  long invalid_draws = 0;  // skipped singular draws, never silently dropped
  bool zero_hopping_warning = false;

  double leading() const { return exponents(0); }
  double leading_stderr() const { return stderrs(0); }
};

namespace detail {

inline constexpr int kLyapunovBlocks = 25;

inline void sort_descending(Vector& values, Vector& errors) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values(a) > values(b); });
  Vector v(values.size()), e(values.size());
  for (int i = 0; i < values.size(); ++i) {
    v(i) = values(order[i]);
    e(i) = errors(order[i]);
  }
  values = v;
  errors = e;
}

// Shared block-averaging driver: consume is called once per valid period and
// must apply the period's transfer matrices; draw_period returns false for an
// invalid (skipped) draw.
template <typename DrawPeriod>
LyapunovEstimate run_blocked(int size, long n_steps, int reorth_interval,
                             double sites_per_period, DrawPeriod&& draw_period,
                             bool zero_warning) {
  if (n_steps < 10000) {
    throw std::invalid_argument("lyapunov estimation requires n_steps >= 10^4");
  }
  const long block_len = n_steps / kLyapunovBlocks;
  TransferProduct product(size, reorth_interval);
  Matrix block_means(kLyapunovBlocks, size);
  long invalid = 0;
  Vector prev_logs = Vector::Zero(size);
  for (int b = 0; b < kLyapunovBlocks; ++b) {
    for (long i = 0; i < block_len; ++i) {
      long attempts = 0;
      while (!draw_period(product)) {
        ++invalid;
        if (++attempts > 1000) {
          throw std::invalid_argument(
              "coefficient distribution produces singular transfer draws "
              "persistently");
        }
      }
    }
    product.flush();
    const Vector logs = product.log_norms();
    block_means.row(b) = (logs - prev_logs).transpose() /
                         (static_cast<double>(block_len) * sites_per_period);
    prev_logs = logs;
  }

  LyapunovEstimate est;
  est.exponents = block_means.colwise().mean();
  est.stderrs = Vector::Zero(size);
  for (int c = 0; c < size; ++c) {
    const double mean = est.exponents(c);
    double ss = 0.0;
    for (int b = 0; b < kLyapunovBlocks; ++b) {
      const double d = block_means(b, c) - mean;
      ss += d * d;
    }
    est.stderrs(c) = std::sqrt(ss / (kLyapunovBlocks - 1)) /
                     std::sqrt(static_cast<double>(kLyapunovBlocks));
  }
  sort_descending(est.exponents, est.stderrs);
  est.periods_used = static_cast<long>(block_len) * kLyapunovBlocks;
  est.invalid_draws = invalid;
  est.zero_hopping_warning = zero_warning;
  return est;
}

}  // namespace detail

// Per-site Lyapunov exponents of the transformed Ising Jacobi matrix at the
// given energy; n_steps counts transfer periods (one period covers 2 sites).
inline LyapunovEstimate lyapunov_ising(double energy,
                                       const Distribution& nu_dist,
                                       long n_steps, std::uint64_t seed,
                                       int reorth_interval = 10) {
  rng::Stream stream(rng::derive_seed(seed, 0, "ising-nu"));
  auto draw_period = [&](TransferProduct& product) {
    const double nu = nu_dist.sample(stream);
    if (nu == 0.0) return false;
    const auto [over_nu, over_minus2] = ising_transfer_step(energy, nu);
    product.apply(over_nu);
    product.apply(over_minus2);
    return true;
  };
  return detail::run_blocked(2, n_steps, reorth_interval,
                             /*sites_per_period=*/2.0, draw_period,
                             nu_dist.has_atom_at_zero());
}

// Per-site Lyapunov spectrum (4 exponents, descending) of the anisotropic
// block Jacobi operator; n_steps counts lattice sites.
inline LyapunovEstimate lyapunov_block(double energy,
                                       const Distribution& mu_dist,
                                       const Distribution& gamma_dist,
                                       const Distribution& nu_dist,
                                       long n_steps, std::uint64_t seed,
                                       int reorth_interval = 10) {
  rng::Stream mu_stream(rng::derive_seed(seed, 0, "block-mu"));
  rng::Stream gamma_stream(rng::derive_seed(seed, 0, "block-gamma"));
  rng::Stream nu_stream(rng::derive_seed(seed, 0, "block-nu"));

  double mu_prev = mu_dist.sample(mu_stream);
  double gamma_prev = gamma_dist.sample(gamma_stream);
  if (mu_prev == 0.0 || std::abs(gamma_prev) == 1.0) {
    mu_prev = 1.0;
    gamma_prev = 0.0;
  }

  auto draw_period = [&](TransferProduct& product) {
    const double mu = mu_dist.sample(mu_stream);
    const double gamma = gamma_dist.sample(gamma_stream);
    const double nu = nu_dist.sample(nu_stream);
    if (mu == 0.0 || std::abs(gamma) == 1.0) return false;
    product.apply(
        block_transfer_step(energy, mu, gamma, nu, mu_prev, gamma_prev));
    mu_prev = mu;
    gamma_prev = gamma;
    return true;
  };
  return detail::run_blocked(4, n_steps, reorth_interval,
                             /*sites_per_period=*/1.0, draw_period,
                             mu_dist.has_atom_at_zero());
}

}  // namespace mbl
