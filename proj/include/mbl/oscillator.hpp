#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbl/core.hpp"
#include "mbl/spectral.hpp"

namespace mbl {

// Harmonic lattice on Lambda_L = [-L, L]^d with site spring constants k_x,
// uniform nearest-neighbor coupling and the m_x = 1/2 mass convention (the
// momentum coefficient matrix is then the identity).
struct OscillatorLattice {
  int d = 1;
  int L = 0;
  double coupling = 1.0;
  double mass = 0.5;
  Vector springs;  // indexed row-major over coordinates, axis 0 slowest

  int side() const { return 2 * L + 1; }
  int num_sites() const {
    int n = 1;
    for (int i = 0; i < d; ++i) n *= side();
    return n;
  }
};

inline OscillatorLattice make_lattice(int d, int L, Vector springs,
                                      double coupling = 1.0,
                                      double mass = 0.5) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (L < 0) throw std::invalid_argument("half-width must be >= 0");
  if (mass != 0.5) {
    throw std::invalid_argument(
        "only the m_x = 1/2 mass convention is implemented");
  }
  OscillatorLattice lat;
  lat.d = d;
  lat.L = L;
  lat.coupling = coupling;
  lat.mass = mass;
  if (springs.size() != lat.num_sites()) {
    throw std::invalid_argument("expected " + std::to_string(lat.num_sites()) +
                                " spring constants");
  }
  for (int i = 0; i < springs.size(); ++i) {
    if (springs(i) < 0.0) {
      throw std::invalid_argument("spring constants must be >= 0");
    }
  }
  lat.springs = std::move(springs);
  return lat;
}

inline int site_index(const OscillatorLattice& lat,
                      const std::vector<int>& coords) {
  if (static_cast<int>(coords.size()) != lat.d) {
    throw std::invalid_argument("coordinate dimension mismatch");
  }
  int idx = 0;
  for (int i = 0; i < lat.d; ++i) {
    if (coords[i] < -lat.L || coords[i] > lat.L) {
      throw std::invalid_argument("coordinate outside the lattice");
    }
    idx = idx * lat.side() + (coords[i] + lat.L);
  }
  return idx;
}

inline std::vector<int> site_coords(const OscillatorLattice& lat, int index) {
  if (index < 0 || index >= lat.num_sites()) {
    throw std::invalid_argument("site index out of range");
  }
  std::vector<int> coords(lat.d);
  for (int i = lat.d - 1; i >= 0; --i) {
    coords[i] = index % lat.side() - lat.L;
    index /= lat.side();
  }
  return coords;
}

// 1-norm distance between two sites, the metric used throughout.
inline int lattice_distance(const OscillatorLattice& lat, int a, int b) {
  const std::vector<int> ca = site_coords(lat, a);
  const std::vector<int> cb = site_coords(lat, b);
  int dist = 0;
  for (int i = 0; i < lat.d; ++i) dist += std::abs(ca[i] - cb[i]);
  return dist;
}

inline std::vector<std::pair<int, int>> lattice_edges(
    const OscillatorLattice& lat) {
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < lat.num_sites(); ++a) {
    std::vector<int> coords = site_coords(lat, a);
    for (int i = 0; i < lat.d; ++i) {
      if (coords[i] + 1 > lat.L) continue;
      coords[i] += 1;
      edges.emplace_back(a, site_index(lat, coords));
      coords[i] -= 1;
    }
  }
  return edges;
}

// Effective single-particle operator h_L: weighted graph Laplacian with open
// boundary plus diag(k_x / 2).
inline EffectiveOperator build_lattice_operator(const OscillatorLattice& lat) {
  const int n = lat.num_sites();
  Matrix h = Matrix::Zero(n, n);
  for (const auto& [a, b] : lattice_edges(lat)) {
    h(a, a) += lat.coupling;
    h(b, b) += lat.coupling;
    h(a, b) -= lat.coupling;
    h(b, a) -= lat.coupling;
  }
  for (int a = 0; a < n; ++a) h(a, a) += lat.springs(a) / 2.0;
  return make_effective_operator(std::move(h), 1);
}

// Nonempty subset of lattice sites, stored sorted.
struct Region {
  std::vector<int> sites;
};

inline Region make_region(const OscillatorLattice& lat, std::vector<int> sites) {
  if (sites.empty()) throw std::invalid_argument("region must be nonempty");
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  if (sites.front() < 0 || sites.back() >= lat.num_sites()) {
    throw std::invalid_argument("region site outside the lattice");
  }
  return Region{std::move(sites)};
}

// Centered cube (interval for d=1) with the given odd or even side length.
inline Region centered_cube(const OscillatorLattice& lat, int side_len) {
  if (side_len < 1 || side_len > lat.side()) {
    throw std::invalid_argument("cube side must be within the lattice");
  }
  const int lo = -(side_len / 2);
  std::vector<int> sites;
  std::vector<int> coords(lat.d, lo);
  while (true) {
    sites.push_back(site_index(lat, coords));
    int i = lat.d - 1;
    while (i >= 0 && ++coords[i] == lo + side_len) coords[i--] = lo;
    if (i < 0) break;
  }
  return make_region(lat, std::move(sites));
}

// Number of sites of the region with a Z^d nearest neighbor outside it
// (neighbors beyond the finite lattice count as outside).
inline int boundary_size(const OscillatorLattice& lat, const Region& region) {
  std::vector<char> inside(lat.num_sites(), 0);
  for (const int s : region.sites) inside[s] = 1;
  int count = 0;
  for (const int s : region.sites) {
    std::vector<int> coords = site_coords(lat, s);
    bool on_boundary = false;
    for (int i = 0; i < lat.d && !on_boundary; ++i) {
      for (const int delta : {-1, 1}) {
        coords[i] += delta;
        if (coords[i] < -lat.L || coords[i] > lat.L ||
            !inside[site_index(lat, coords)]) {
          on_boundary = true;
        }
        coords[i] -= delta;
        if (on_boundary) break;
      }
    }
    if (on_boundary) ++count;
  }
  return count;
}

// Deterministic bound on the Weyl commutator norm at fixed time:
// |z||z'| { 2 |<x| cos(2t sqrt(h)) |y>| + |<x| sqrt(h) sin(2t sqrt(h)) |y>|
//           + |<x| h^{-1/2} sin(2t sqrt(h)) |y>| }.
inline double weyl_commutator_bound(const SpectralData& s, int x, int y,
                                    std::complex<double> z,
                                    std::complex<double> zp, double t) {
  detail::check_positive_semidefinite(s, "Weyl commutator bound");
  detail::check_nonsingular(s, std::nullopt, kZeroTol, "Weyl commutator bound");
  double cos_term = 0.0, sin_term = 0.0, inv_sin_term = 0.0;
  for (int k = 0; k < s.source_dim; ++k) {
    const double root = std::sqrt(std::max(s.eigenvalues(k), 0.0));
    const double overlap = s.eigenvectors(x, k) * s.eigenvectors(y, k);
    cos_term += std::cos(2.0 * t * root) * overlap;
    sin_term += root * std::sin(2.0 * t * root) * overlap;
    inv_sin_term += std::sin(2.0 * t * root) / root * overlap;
  }
  return std::abs(z) * std::abs(zp) *
         (2.0 * std::abs(cos_term) + std::abs(sin_term) +
          std::abs(inv_sin_term));
}

// Time-uniform majorant of the same bound via eigenfunction correlators:
// |z||z'| (2 Q_0 + Q_{1/2} + Q_{-1/2}).
inline double weyl_commutator_bound_sup(const SpectralData& s, int x, int y,
                                        std::complex<double> z,
                                        std::complex<double> zp) {
  detail::check_positive_semidefinite(s, "Weyl commutator bound");
  return std::abs(z) * std::abs(zp) *
         (2.0 * eigenfunction_correlator(s, 0.0, x, y) +
          eigenfunction_correlator(s, 0.5, x, y) +
          eigenfunction_correlator(s, -0.5, x, y));
}

// Ground state Weyl correlation bound:
// (1/2) |z||z'| (|<x| h^{-1/2} |y>| + |<x| h^{1/2} |y>|).
inline double ground_correlation_bound(const SpectralData& s, int x, int y,
                                       std::complex<double> z,
                                       std::complex<double> zp) {
  detail::check_positive_semidefinite(s, "ground correlation bound");
  detail::check_nonsingular(s, std::nullopt, kZeroTol,
                            "ground correlation bound");
  double inv_root = 0.0, root = 0.0;
  for (int k = 0; k < s.source_dim; ++k) {
    const double lam = s.eigenvalues(k);
    const double overlap = s.eigenvectors(x, k) * s.eigenvectors(y, k);
    inv_root += overlap / std::sqrt(lam);
    root += overlap * std::sqrt(lam);
  }
  return 0.5 * std::abs(z) * std::abs(zp) * (std::abs(inv_root) + std::abs(root));
}

// Thermal decay diagnostic |<x| phi(h) |y>| with
// phi(t) = t^{-1/2} tanh(beta t^{1/2}). phi extends continuously with
// phi(0+) = beta, but positive definiteness is kept as a precondition.
inline double thermal_phi_bound(const SpectralData& s, double beta, int x,
                                int y) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("inverse temperature must be positive");
  }
  detail::check_positive_semidefinite(s, "thermal bound");
  detail::check_nonsingular(s, std::nullopt, kZeroTol, "thermal bound");
  double acc = 0.0;
  for (int k = 0; k < s.source_dim; ++k) {
    const double root = std::sqrt(s.eigenvalues(k));
    acc += std::tanh(beta * root) / root * s.eigenvectors(x, k) *
           s.eigenvectors(y, k);
  }
  return std::abs(acc);
}

enum class SumConvention { interior, as_written };

// Area-law bound on the logarithmic negativity of a region:
// sum_x sum_{y not in Gamma} |<x| h^{-1/2} |y>|, reported with the C = 1
// convention. `interior` restricts x to Gamma; `as_written` lets x run over
// the whole lattice.
inline double log_negativity_bound(const SpectralData& s, const Region& region,
                                   SumConvention convention = SumConvention::interior) {
  detail::check_positive_semidefinite(s, "negativity bound");
  detail::check_nonsingular(s, std::nullopt, kZeroTol, "negativity bound");
  const Matrix inv_root = matrix_function_full(
      s, [](double lam) { return 1.0 / std::sqrt(lam); }, true);
  std::vector<char> inside(s.source_dim, 0);
  for (const int site : region.sites) {
    if (site < 0 || site >= s.source_dim) {
      throw std::invalid_argument("region site outside the operator");
    }
    inside[site] = 1;
  }
  double acc = 0.0;
  for (int x = 0; x < s.source_dim; ++x) {
    if (convention == SumConvention::interior && !inside[x]) continue;
    for (int y = 0; y < s.source_dim; ++y) {
      if (inside[y]) continue;
      acc += std::abs(inv_root(x, y));
    }
  }
  return acc;
}

// Gaussian state of the oscillator system in covariance form.
struct GaussianState {
  Matrix q_cov;
  Matrix p_cov;
  std::optional<double> beta;  // absent = ground state
};

// Ground state: q_cov = h^{-1/2}/2, p_cov = h^{1/2}/2. Thermal state:
// mode occupancies multiplied by coth(beta sqrt(lambda)) in the eigenbasis.
inline GaussianState gaussian_oracle(const SpectralData& s,
                                     std::optional<double> beta = std::nullopt) {
  detail::check_positive_semidefinite(s, "Gaussian state");
  detail::check_nonsingular(s, std::nullopt, kZeroTol, "Gaussian state");
  if (beta && !(*beta > 0.0)) {
    throw std::invalid_argument("inverse temperature must be positive");
  }
  Vector fq(s.source_dim), fp(s.source_dim);
  for (int k = 0; k < s.source_dim; ++k) {
    const double root = std::sqrt(s.eigenvalues(k));
    const double occupancy = beta ? 1.0 / std::tanh(*beta * root) : 1.0;
    fq(k) = 0.5 * occupancy / root;
    fp(k) = 0.5 * occupancy * root;
  }
  GaussianState state;
  state.q_cov = s.eigenvectors * fq.asDiagonal() * s.eigenvectors.transpose();
  state.p_cov = s.eigenvectors * fp.asDiagonal() * s.eigenvectors.transpose();
  state.beta = beta;
  return state;
}

namespace detail {

inline Matrix restrict_matrix(const Matrix& m, const std::vector<int>& sites) {
  Matrix out(sites.size(), sites.size());
  for (size_t r = 0; r < sites.size(); ++r) {
    for (size_t c = 0; c < sites.size(); ++c) {
      out(r, c) = m(sites[r], sites[c]);
    }
  }
  return out;
}

inline Matrix symmetric_sqrt(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError(std::string(what) + ": eigensolve failed");
  }
  if (solver.eigenvalues()(0) <= 0.0) {
    throw SingularSpectrumError(
        std::string(what) + ": covariance restriction not positive definite");
  }
  return solver.eigenvectors() *
         solver.eigenvalues().cwiseSqrt().asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace detail

// Symplectic spectrum of a (q_cov, p_cov) pair with no q-p cross covariance:
// eigenvalues of (q^{1/2} p q^{1/2})^{1/2}.
inline Vector symplectic_spectrum(const Matrix& q_cov, const Matrix& p_cov) {
  const Matrix root = detail::symmetric_sqrt(q_cov, "symplectic spectrum");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(root * p_cov * root);
  if (solver.info() != Eigen::Success) {
    throw SingularSpectrumError("symplectic spectrum eigensolve failed");
  }
  if (solver.eigenvalues()(0) <= 0.0) {
    throw SingularSpectrumError(
        "covariance restriction not positive definite");
  }
  return solver.eigenvalues().cwiseSqrt();
}

// Von Neumann entropy of the region's reduced state via its symplectic
// spectrum: sum of (nu+1/2)ln(nu+1/2) - (nu-1/2)ln(nu-1/2).
inline double entanglement_entropy(const GaussianState& state,
                                   const Region& region) {
  const Matrix q = detail::restrict_matrix(state.q_cov, region.sites);
  const Matrix p = detail::restrict_matrix(state.p_cov, region.sites);
  const Vector nus = symplectic_spectrum(q, p);
  double entropy = 0.0;
  for (int j = 0; j < nus.size(); ++j) {
    if (nus(j) < 0.5 - 1e-6) {
      throw SingularSpectrumError(
          "symplectic eigenvalue " + std::to_string(nus(j)) +
          " below 1/2: degenerate covariance restriction");
    }
    const double nu = std::max(nus(j), 0.5);
    const double plus = nu + 0.5;
    const double minus = nu - 0.5;
    entropy += plus * std::log(plus);
    if (minus > 0.0) entropy -= minus * std::log(minus);
  }
  return entropy;
}

// Exact logarithmic negativity of the bipartition (region, complement): the
// partial transpose of a Gaussian state flips momenta on the region, so the
// negativity is read off the symplectic spectrum of (q_cov, F p_cov F).
inline double log_negativity_exact(const GaussianState& state,
                                   const Region& region) {
  const int n = static_cast<int>(state.q_cov.rows());
  Vector flip = Vector::Ones(n);
  for (const int site : region.sites) {
    if (site < 0 || site >= n) {
      throw std::invalid_argument("region site outside the state");
    }
    flip(site) = -1.0;
  }
  const Matrix p_flipped =
      flip.asDiagonal() * state.p_cov * flip.asDiagonal();
  const Vector nus = symplectic_spectrum(state.q_cov, p_flipped);
  double negativity = 0.0;
  for (int j = 0; j < nus.size(); ++j) {
    if (2.0 * nus(j) < 1.0) negativity -= std::log(2.0 * nus(j));
  }
  return negativity;
}

}  // namespace mbl
