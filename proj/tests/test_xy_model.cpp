#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "mbl/rng.hpp"
#include "mbl/xy_model.hpp"

using Catch::Approx;
using namespace mbl;

namespace {

Vector constant_vector(int n, double v) { return Vector::Constant(n, v); }

XYParams random_params(int n, std::uint64_t seed, double gamma_span = 0.9) {
  rng::Stream stream(seed);
  Vector mu(n - 1), gamma(n - 1), nu(n);
  for (int j = 0; j < n - 1; ++j) {
    mu(j) = 0.2 + stream.next_unit();
    gamma(j) = gamma_span * (2.0 * stream.next_unit() - 1.0);
  }
  for (int j = 0; j < n; ++j) nu(j) = 4.0 * stream.next_unit();
  return make_xy_params(mu, gamma, nu);
}

}  // namespace

TEST_CASE("chain parameter validation") {
  SECTION("accepts a single-site chain") {
    const XYParams p = make_xy_params(Vector(0), Vector(0), constant_vector(1, 2.0));
    REQUIRE(p.n == 1);
  }
  SECTION("rejects mismatched bond counts") {
    REQUIRE_THROWS_AS(
        make_xy_params(constant_vector(2, 1.0), constant_vector(1, 0.0),
                       constant_vector(3, 1.0)),
        std::invalid_argument);
  }
  SECTION("rejects zero couplings") {
    Vector mu = constant_vector(2, 1.0);
    mu(1) = 0.0;
    REQUIRE_THROWS_AS(make_xy_params(mu, constant_vector(2, 0.0),
                                     constant_vector(3, 1.0)),
                      std::invalid_argument);
  }
  SECTION("isotropy detection") {
    REQUIRE(is_isotropic(make_xy_params(constant_vector(1, 1.0),
                                        constant_vector(1, 0.0),
                                        constant_vector(2, 1.0))));
    REQUIRE_FALSE(is_isotropic(make_xy_params(constant_vector(1, 1.0),
                                              constant_vector(1, 0.5),
                                              constant_vector(2, 1.0))));
  }
}

TEST_CASE("effective operator structure") {
  SECTION("single site is nu J") {
    const XYParams p = make_xy_params(Vector(0), Vector(0), constant_vector(1, 3.0));
    const EffectiveOperator h = build_effective(p);
    REQUIRE(h.dim == 2);
    REQUIRE(h.entries(0, 0) == Approx(3.0));
    REQUIRE(h.entries(1, 1) == Approx(-3.0));
    REQUIRE(h.entries(0, 1) == 0.0);
  }
  SECTION("two isotropic sites in zero field have eigenvalues -1,-1,1,1") {
    const XYParams p = make_xy_params(constant_vector(1, 1.0),
                                      constant_vector(1, 0.0),
                                      constant_vector(2, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(build_effective(p).entries);
    REQUIRE(solver.eigenvalues()(0) == Approx(-1.0));
    REQUIRE(solver.eigenvalues()(1) == Approx(-1.0));
    REQUIRE(solver.eigenvalues()(2) == Approx(1.0));
    REQUIRE(solver.eigenvalues()(3) == Approx(1.0));
  }
  SECTION("spectrum is symmetric about zero") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const XYParams p = random_params(20, seed);
      Eigen::SelfAdjointEigenSolver<Matrix> solver(build_effective(p).entries);
      const Vector ev = solver.eigenvalues();
      double worst = 0.0;
      for (int i = 0; i < ev.size(); ++i) {
        worst = std::max(worst, std::abs(ev(i) + ev(ev.size() - 1 - i)));
      }
      REQUIRE(worst <= 1e-10);
    }
  }
  SECTION("interleaved matrix is a perfect shuffle of the two-block form") {
    const XYParams p = random_params(6, 77);
    const Matrix h = build_effective(p).entries;
    const Matrix tilde = tilde_effective(p);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(2 * p.n);
    for (int j = 0; j < p.n; ++j) {
      perm.indices()(j) = 2 * j;          // row j of tilde -> row 2j of h
      perm.indices()(p.n + j) = 2 * j + 1;
    }
    const Matrix shuffled = perm * tilde * perm.transpose();
    REQUIRE((shuffled - h).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("dense many-body oracle") {
  SECTION("single site Hamiltonian is nu sigma_z") {
    const XYParams p = make_xy_params(Vector(0), Vector(0), constant_vector(1, 5.0));
    const DenseManyBody mb = build_dense_oracle(p);
    REQUIRE(mb.energies(0) == Approx(-5.0));
    REQUIRE(mb.energies(1) == Approx(5.0));
  }
  SECTION("two-site fully anisotropic chain in zero field") {
    const XYParams p = make_xy_params(constant_vector(1, 1.0),
                                      constant_vector(1, 1.0),
                                      constant_vector(2, 0.0));
    const DenseManyBody mb = build_dense_oracle(p);
    REQUIRE(mb.energies(0) == Approx(-2.0));
    REQUIRE(mb.energies(1) == Approx(-2.0));
    REQUIRE(mb.energies(2) == Approx(2.0));
    REQUIRE(mb.energies(3) == Approx(2.0));
  }
  SECTION("c operators satisfy canonical anticommutation relations") {
    const XYParams p = random_params(3, 5);
    const DenseManyBody mb = build_dense_oracle(p);
    const int dim = 1 << p.n;
    const Matrix id = Matrix::Identity(dim, dim);
    for (int j = 0; j < p.n; ++j) {
      for (int k = 0; k < p.n; ++k) {
        const Matrix anti_cd =
            mb.c_ops[j] * mb.c_dag_ops[k] + mb.c_dag_ops[k] * mb.c_ops[j];
        const Matrix anti_cc =
            mb.c_ops[j] * mb.c_ops[k] + mb.c_ops[k] * mb.c_ops[j];
        const Matrix expected = (j == k) ? id : Matrix::Zero(dim, dim);
        REQUIRE((anti_cd - expected).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE(anti_cc.cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
  SECTION("Heisenberg evolution at t=0 is the identity map") {
    const XYParams p = random_params(3, 9);
    const DenseManyBody mb = build_dense_oracle(p);
    const ComplexMatrix a = mb.c_ops[1].cast<std::complex<double>>();
    const ComplexMatrix evolved = heisenberg_evolve(mb, a, 0.0);
    REQUIRE((evolved - a).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("oracle cap is enforced") {
    const XYParams p = random_params(5, 11);
    REQUIRE_THROWS_AS(build_dense_oracle(p, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(build_dense_oracle(p, kOracleCapHardLimit + 1),
                      std::invalid_argument);
  }
}

TEST_CASE("c-operator evolution matches the effective propagator") {
  SECTION("generic anisotropic chain") {
    const XYParams p = random_params(4, 21);
    for (const double t : {0.5, 1.0, 10.0}) {
      REQUIRE(verify_c_evolution(p, t) <= 1e-8);
    }
  }
  SECTION("zero time is exact to round-off") {
    const XYParams p = random_params(4, 22);
    REQUIRE(verify_c_evolution(p, 0.0) <= 1e-12);
  }
  SECTION("single site reduces to a phase rotation") {
    const XYParams p = make_xy_params(Vector(0), Vector(0), constant_vector(1, 1.7));
    REQUIRE(verify_c_evolution(p, 2.3) <= 1e-12);
  }
  SECTION("propagator block rows have total weight 2") {
    // Unitarity of e^{-2ith_n} in the interleaved basis: each block row of
    // the evolution carries squared Frobenius weight 2.
    const XYParams p = random_params(4, 23);
    const EffectiveOperator h = build_effective(p);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.entries);
    const std::complex<double> i_unit(0.0, 1.0);
    ComplexVector phases(h.dim);
    for (int k = 0; k < h.dim; ++k) {
      phases(k) = std::exp(-2.0 * i_unit * 1.3 * solver.eigenvalues()(k));
    }
    const ComplexMatrix u =
        solver.eigenvectors().cast<std::complex<double>>() * phases.asDiagonal() *
        solver.eigenvectors().transpose().cast<std::complex<double>>();
    for (int j = 0; j < p.n; ++j) {
      double weight = 0.0;
      for (int k = 0; k < p.n; ++k) {
        weight += u.block<2, 2>(2 * j, 2 * k).squaredNorm();
      }
      REQUIRE(weight == Approx(2.0).margin(1e-10));
    }
  }
}

TEST_CASE("isotropic ground state gap") {
  SECTION("single site") {
    const XYParams p = make_xy_params(Vector(0), Vector(0), constant_vector(1, 3.0));
    const IsotropicGap gap = ground_state_gap_isotropic(p);
    REQUIRE(gap.from_single_particle == Approx(6.0));
    REQUIRE(gap.from_oracle);
    REQUIRE(*gap.from_oracle == Approx(6.0));
  }
  SECTION("two sites in zero field") {
    const XYParams p = make_xy_params(constant_vector(1, 1.0),
                                      constant_vector(1, 0.0),
                                      constant_vector(2, 0.0));
    const IsotropicGap gap = ground_state_gap_isotropic(p);
    REQUIRE(gap.from_single_particle == Approx(2.0));
    REQUIRE(*gap.from_oracle == Approx(2.0));
  }
  SECTION("two sites in a strong field") {
    const XYParams p = make_xy_params(constant_vector(1, 1.0),
                                      constant_vector(1, 0.0),
                                      constant_vector(2, 5.0));
    const IsotropicGap gap = ground_state_gap_isotropic(p);
    REQUIRE(gap.from_single_particle == Approx(8.0));
    REQUIRE(*gap.from_oracle == Approx(8.0));
  }
  SECTION("both methods agree on random isotropic chains") {
    for (std::uint64_t seed = 31; seed < 41; ++seed) {
      const XYParams base = random_params(5, seed, 0.0);
      const IsotropicGap gap = ground_state_gap_isotropic(base);
      REQUIRE(gap.from_oracle);
      REQUIRE(std::abs(*gap.from_oracle - gap.from_single_particle) <= 1e-8);
    }
  }
  SECTION("anisotropic input is rejected") {
    const XYParams p = make_xy_params(constant_vector(1, 1.0),
                                      constant_vector(1, 0.4),
                                      constant_vector(2, 1.0));
    REQUIRE_THROWS_AS(ground_state_gap_isotropic(p), std::invalid_argument);
  }
  SECTION("strong fields open a spectral gap around zero") {
    // With min nu - 2 max mu >= lambda, the Anderson matrix sits above
    // lambda, so the effective operator has no spectrum in (-lambda, lambda).
    rng::Stream stream(53);
    Vector mu(5), gamma(5), nu(6);
    for (int j = 0; j < 5; ++j) {
      mu(j) = 0.5 + 0.5 * stream.next_unit();
      gamma(j) = 0.0;
    }
    for (int j = 0; j < 6; ++j) nu(j) = 8.0 + 4.0 * stream.next_unit();
    const XYParams p = make_xy_params(mu, gamma, nu);
    const double lambda = nu.minCoeff() - 2.0 * mu.maxCoeff();
    REQUIRE(lambda > 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(build_effective(p).entries);
    REQUIRE(solver.eigenvalues().cwiseAbs().minCoeff() >= lambda);
    const IsotropicGap gap = ground_state_gap_isotropic(p, 6);
    REQUIRE(gap.from_single_particle >= 2.0 * lambda);
  }
}

TEST_CASE("commutator oracle") {
  const XYParams p = random_params(4, 61);
  const DenseManyBody mb = build_dense_oracle(p);
  const ComplexMatrix sz = pauli::sigma_z().cast<std::complex<double>>();
  const ComplexMatrix sx = pauli::sigma_x().cast<std::complex<double>>();

  SECTION("an observable commutes with itself at t=0") {
    REQUIRE(commutator_norm_oracle(mb, sz, 1, sz, 1, 0.0) <= 1e-12);
  }
  SECTION("disjoint sites commute at t=0") {
    REQUIRE(commutator_norm_oracle(mb, sx, 0, sz, 3, 0.0) <= 1e-12);
  }
  SECTION("norm never exceeds 2 |A| |B|") {
    for (const double t : {0.3, 1.0, 4.0}) {
      REQUIRE(commutator_norm_oracle(mb, sx, 0, sz, 3, t) <= 2.0 + 1e-10);
    }
  }
}
