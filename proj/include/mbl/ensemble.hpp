#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "mbl/core.hpp"
#include "mbl/distribution.hpp"

namespace mbl {

// Floor applied to values before log-space fitting; the bounds being fitted
// are upper bounds, so flooring is conservative.
inline constexpr double kFitFloor = 1e-14;

// Runs one diagnostic per sample index across a worker pool. Samples are
// independent tasks; the result vector is indexed by sample, so any later
// reduction is a deterministic ordered fold independent of the thread count.
// A sample that raises SingularSpectrumError is recorded as invalid
// (nullopt); other exceptions propagate.
template <typename Fn>
std::vector<std::optional<Vector>> collect_samples(long n_samples,
                                                   int n_threads, Fn&& fn) {
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  if (n_threads < 1) n_threads = 1;
  std::vector<std::optional<Vector>> results(n_samples);
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const long idx = next.fetch_add(1);
      if (idx >= n_samples) return;
      try {
        results[idx] = fn(idx);
      } catch (const SingularSpectrumError&) {
        results[idx] = std::nullopt;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

struct ExpectationResult {
  Vector mean;
  Vector std_error;  // NaN marks "not available" (single valid sample)
  long n_valid = 0;
  long n_invalid = 0;
};

// Monte Carlo expectation of a vector-valued diagnostic: sample mean and
// standard error per slot. Invalid samples are counted, never silently
// dropped from the report.
template <typename Fn>
ExpectationResult expectation(long n_samples, int n_threads, Fn&& fn) {
  const auto samples = collect_samples(n_samples, n_threads, std::forward<Fn>(fn));

  ExpectationResult out;
  Eigen::Index slots = -1;
  for (const auto& s : samples) {
    if (!s) {
      ++out.n_invalid;
      continue;
    }
    if (slots < 0) {
      slots = s->size();
      out.mean = Vector::Zero(slots);
    } else if (s->size() != slots) {
      throw std::logic_error("diagnostic returned inconsistent slot counts");
    }
    out.mean += *s;
    ++out.n_valid;
  }
  if (out.n_valid == 0) {
    throw SingularSpectrumError("all samples invalid");
  }
  out.mean /= static_cast<double>(out.n_valid);

  out.std_error = Vector::Constant(slots, std::numeric_limits<double>::quiet_NaN());
  if (out.n_valid > 1) {
    Vector ss = Vector::Zero(slots);
    for (const auto& s : samples) {
      if (!s) continue;
      const Vector d = *s - out.mean;
      ss += d.cwiseProduct(d);
    }
    out.std_error =
        (ss / static_cast<double>(out.n_valid * (out.n_valid - 1))).cwiseSqrt();
  }
  return out;
}

// Exponential / stretched-exponential decay fit q(r) = C exp(-eta r^zeta).
struct DecayFit {
  double C = 0.0;
  double eta = 0.0;
  double zeta = 1.0;
  double residual = 0.0;    // RMS of log-space residuals
  double eta_stderr = 0.0;  // least-squares standard error of eta
  std::pair<double, double> r_range{0.0, 0.0};
  int n_points = 0;
  int n_floored = 0;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  const size_t n = xs.size();
  double x_mean = 0.0, y_mean = 0.0;
  for (size_t i = 0; i < n; ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit abscissas are degenerate");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
  fit.slope_stderr =
      std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  return fit;
}

}  // namespace detail

// Least squares on (r^zeta, log q). Values in (0, kFitFloor] are floored and
// counted; nonpositive values must be excluded by the caller. zeta absent
// scans {0.1, ..., 1.0} and keeps the residual-minimizing stretch.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& points,
                          std::optional<double> zeta = 1.0) {
  if (points.size() < 3) {
    throw std::invalid_argument("decay fit needs at least 3 points");
  }
  for (size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].second > 0.0)) {
      throw std::invalid_argument(
          "decay fit requires positive values; exclude nonpositive points");
    }
    for (size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].first == points[j].first) {
        throw std::invalid_argument("decay fit distances must be distinct");
      }
    }
  }

  int floored = 0;
  std::vector<double> rs(points.size()), logs(points.size());
  double r_min = points[0].first, r_max = points[0].first;
  for (size_t i = 0; i < points.size(); ++i) {
    rs[i] = points[i].first;
    double q = points[i].second;
    if (q < kFitFloor) {
      q = kFitFloor;
      ++floored;
    }
    logs[i] = std::log(q);
    r_min = std::min(r_min, points[i].first);
    r_max = std::max(r_max, points[i].first);
  }

  auto fit_at = [&](double z) {
    std::vector<double> xs(rs.size());
    for (size_t i = 0; i < rs.size(); ++i) xs[i] = std::pow(rs[i], z);
    return detail::least_squares_line(xs, logs);
  };

  double best_zeta = zeta.value_or(1.0);
  detail::LineFit best;
  if (zeta) {
    if (!(*zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
    best = fit_at(*zeta);
  } else {
    bool first = true;
    for (int i = 1; i <= 10; ++i) {
      const double z = 0.1 * i;
      const detail::LineFit candidate = fit_at(z);
      if (first || candidate.residual_rms < best.residual_rms) {
        best = candidate;
        best_zeta = z;
        first = false;
      }
    }
  }

  DecayFit fit;
  fit.C = std::exp(best.intercept);
  fit.eta = -best.slope;
  fit.zeta = best_zeta;
  fit.residual = best.residual_rms;
  fit.eta_stderr = best.slope_stderr;
  fit.r_range = {r_min, r_max};
  fit.n_points = static_cast<int>(points.size());
  fit.n_floored = floored;
  return fit;
}

// Plain linear trend fit, used for the area-law slope test.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
  int n_points = 0;
};

inline LinearFit fit_linear(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("mismatched fit input lengths");
  }
  if (xs.size() < 3) {
    throw std::invalid_argument("linear fit needs at least 3 points");
  }
  const detail::LineFit base = detail::least_squares_line(xs, ys);
  LinearFit fit;
  fit.slope = base.slope;
  fit.intercept = base.intercept;
  fit.slope_stderr = base.slope_stderr;
  fit.residual_rms = base.residual_rms;
  fit.n_points = static_cast<int>(xs.size());
  return fit;
}

// Default distance window for decay fits: contact distances (r < 2) and the
// boundary-affected tail (r > r_max/2) are excluded.
inline bool in_fit_window(double r, double r_max) {
  return r >= 2.0 && r <= r_max / 2.0;
}

}  // namespace mbl
