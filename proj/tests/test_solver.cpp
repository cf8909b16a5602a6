#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>

#include "qksd/basis.hpp"
#include "qksd/cost.hpp"
#include "qksd/exact.hpp"
#include "qksd/models.hpp"
#include "qksd/rng.hpp"
#include "qksd/solver.hpp"
#include "support.hpp"

using namespace qksd;

namespace {

KrylovMatrices toy(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& s, double c_h = 1.0,
                   double c_s = 1.0) {
  KrylovMatrices km;
  km.h = h;
  km.s = s;
  km.c_h = c_h;
  km.c_s = c_s;
  km.structure = MatrixStructure::real_symmetric;
  return km;
}

struct ChainSetup {
  PauliSum h;
  Eigen::VectorXcd ref;
  SpectralDecomposition sd;
  KrylovMatrices km;
};

ChainSetup chain_gp(int n, int d) {
  const Lattice lat = build_lattice({LatticeKind::chain, n, 0});
  PauliSum h = normalise(build_heisenberg(lat, 1.0), spectral_norm(build_heisenberg(lat, 1.0)));
  ChainSetup out{h, reference_singlet_pairs(n), {}, {}};
  out.sd = diagonalise(out.h, out.ref);
  BasisSpec spec;
  spec.family = BasisFamily::gaussian_power;
  spec.d = d;
  spec.e0 = out.sd.ground_energy;
  spec.tau = std::sqrt(static_cast<double>(d)) + 0.7;
  spec.h_tot = h.h_tot();
  out.km = build_matrices(spec, out.sd);
  return out;
}

double spectral_norm_of(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  return std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(m.rows() - 1)));
}

Eigen::MatrixXcd random_hermitian(int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXcd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = std::complex<double>(rng.normal(), rng.normal());
  return (g + g.adjoint()) / 2.0;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("diagonal pair recovers the smallest ratio") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  h(0, 0) = -1.0;
  const Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(2, 2);

  const Solution at_zero = solve_regularised(toy(h, s), 0.0);
  CHECK(at_zero.e_min == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(at_zero.coefficients(0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(at_zero.coefficients(1)) <= 1e-12);
  CHECK(at_zero.method == SolveMethod::exact);
  CHECK(at_zero.retained == 2);

  // Shift by eta = 3: eigenvalues (2/4, 3/4), minimum 1/2.
  const Solution shifted = solve_regularised(toy(h, s), 3.0);
  CHECK(shifted.e_min == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(shifted.method == SolveMethod::regularised);

  // Large-eta limit tends to c_h / c_s.
  CHECK(solve_regularised(toy(h, s), 1e9).e_min == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(solve_regularised(toy(h, s, 5.0, 2.0), 1e9).e_min ==
        doctest::Approx(2.5).epsilon(1e-8));
}

TEST_CASE("method tags") {
  CHECK(std::string(solve_method_tag(SolveMethod::exact)) == "exact");
  CHECK(std::string(solve_method_tag(SolveMethod::regularised)) == "regularised");
  CHECK(std::string(solve_method_tag(SolveMethod::thresholded)) == "thresholded");
}

TEST_CASE("argument and degeneracy errors") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  const Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(2, 2);
  CHECK_THROWS_AS(solve_regularised(toy(h, s), -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(solve_thresholded(toy(h, s), -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(solve_thresholded(toy(h, s), 2.0), std::runtime_error);  // above max
  CHECK_THROWS_AS(solve_thresholded(toy(h, Eigen::MatrixXcd::Zero(2, 2)), 0.0),
                  std::runtime_error);  // nothing retained

  Eigen::MatrixXcd empty(0, 0);
  CHECK_THROWS_AS(pencil_min_eig(empty, empty), std::invalid_argument);
  Eigen::MatrixXcd h3 = Eigen::MatrixXcd::Zero(3, 3);
  CHECK_THROWS_AS(pencil_min_eig(h3, s), std::invalid_argument);
  CHECK_THROWS_AS(pencil_min_eig(h, Eigen::MatrixXcd(-s)), std::runtime_error);
}

TEST_CASE("near-null overlap directions are floored away") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  h(1, 1) = -1e6;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(2, 2);
  s(1, 1) = 1e-30;
  const auto r = pencil_min_eig(h, s);
  CHECK(r.floored);
  CHECK(r.retained == 1);
  CHECK(std::abs(r.min_value) <= 1e-12);
  // The kept vector is overlap-normalised.
  const std::complex<double> sq = r.coefficients.dot(s * r.coefficients);
  CHECK(sq.real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("solutions are unit norm and self-consistent") {
  const ChainSetup cs = chain_gp(6, 4);
  for (double eta : {0.0, 1e-3, 0.1}) {
    const Solution sol = solve_regularised(cs.km, eta);
    CHECK(sol.coefficients.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rayleigh_quotient(cs.km, sol.coefficients, eta) ==
          doctest::Approx(sol.e_min).epsilon(1e-9));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cs.km.s);
  const double thr = es.eigenvalues()(0) * 0.5;
  if (thr > 0.0) {
    const Solution sol = solve_thresholded(cs.km, thr);
    CHECK(sol.coefficients.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rayleigh_quotient(cs.km, sol.coefficients, 0.0) ==
          doctest::Approx(sol.e_min).epsilon(1e-9));
  }
  CHECK_THROWS_AS(rayleigh_quotient(cs.km, Eigen::VectorXcd::Ones(2), 0.0),
                  std::invalid_argument);
}

TEST_CASE("noiseless solve converges to the subspace optimum") {
  const Lattice lat = build_lattice({LatticeKind::chain, 6, 0});
  PauliSum h = normalise(build_heisenberg(lat, 1.0), spectral_norm(build_heisenberg(lat, 1.0)));
  const Eigen::VectorXcd ref = reference_singlet_pairs(6);
  const SpectralDecomposition sd = diagonalise(h, ref);
  BasisSpec spec;
  spec.family = BasisFamily::power;
  spec.d = 3;
  spec.e0 = sd.ground_energy + 1.0;
  spec.h_tot = h.h_tot();
  const KrylovMatrices km = build_matrices(spec, sd);
  const double target = sd.ground_energy + subspace_error(km, sd.ground_energy);
  CHECK(solve_regularised(km, 0.0).e_min == doctest::Approx(target).epsilon(1e-8));
  CHECK(solve_regularised(km, 1e-14).e_min == doctest::Approx(target).epsilon(1e-8));
}

TEST_CASE("thresholding below the overlap spectrum reproduces the exact solve") {
  const Lattice lat = build_lattice({LatticeKind::chain, 6, 0});
  PauliSum h = normalise(build_heisenberg(lat, 1.0), spectral_norm(build_heisenberg(lat, 1.0)));
  const Eigen::VectorXcd ref = reference_singlet_pairs(6);
  const SpectralDecomposition sd = diagonalise(h, ref);
  BasisSpec spec;
  spec.family = BasisFamily::real_time;
  spec.d = 3;
  spec.e0 = sd.ground_energy;
  spec.delta_t = 0.9;
  spec.h_tot = h.h_tot();
  const KrylovMatrices km = build_matrices(spec, sd);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(km.s);
  const double lam_min = es.eigenvalues()(0);
  REQUIRE(lam_min > 0.0);
  const double small = std::min(1e-13, lam_min / 2.0);

  const Solution exact = solve_regularised(km, 0.0);
  const Solution thr = solve_thresholded(km, small);
  const Solution reg = solve_regularised(km, small);
  CHECK(thr.retained == 3);
  CHECK(thr.e_min == doctest::Approx(exact.e_min).epsilon(1e-12));
  CHECK(std::abs(thr.e_min - reg.e_min) <= 1e-9);
}

TEST_CASE("bounded perturbations keep the estimate between ground truth and bound") {
  const ChainSetup cs = chain_gp(6, 4);
  const double e_g = cs.sd.ground_energy;

  for (double eta : {0.02, 0.1}) {
    CAPTURE(eta);
    const double bound = min_e_prime(cs.km, eta);
    REQUIRE(bound < 0.0);

    // Rank-one worst-case pushes: deflate the overlap along its softest
    // direction, inflate the shifted pencil minimiser inside h.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cs.km.s);
    const Eigen::VectorXcd soft = es.eigenvectors().col(0);
    const Solution base = solve_regularised(cs.km, eta);
    KrylovMatrices adv = cs.km;
    adv.s -= (cs.km.c_s * eta) * soft * soft.adjoint();
    adv.h += (cs.km.c_h * eta) * base.coefficients * base.coefficients.adjoint();
    const Solution hit = solve_regularised(adv, eta);
    CHECK(hit.e_min >= e_g - 1e-10);
    CHECK(hit.e_min <= bound + 1e-10);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CAPTURE(seed);
      Eigen::MatrixXcd dh = random_hermitian(4, seed);
      Eigen::MatrixXcd ds = random_hermitian(4, seed + 100);
      dh *= (cs.km.c_h * eta) / spectral_norm_of(dh);
      ds *= (cs.km.c_s * eta) / spectral_norm_of(ds);
      KrylovMatrices noisy = cs.km;
      noisy.h += dh;
      noisy.s += ds;
      const Solution sol = solve_regularised(noisy, eta);
      CHECK(sol.e_min >= e_g - 1e-10);
      CHECK(sol.e_min <= bound + 1e-10);
    }
  }
}

TEST_CASE("bound functional is monotone on the negative branch") {
  const ChainSetup cs = chain_gp(6, 4);
  const double eps_k = subspace_error(cs.km, cs.sd.ground_energy);
  CHECK(min_e_prime(cs.km, 0.0) ==
        doctest::Approx(cs.sd.ground_energy + eps_k).epsilon(1e-10));

  double prev = min_e_prime(cs.km, 0.0);
  for (int i = 1; i <= 50; ++i) {
    const double eta = std::pow(10.0, -6.0 + 6.0 * i / 50.0);  // 1e-6 .. 1
    const double cur = min_e_prime(cs.km, eta);
    if (prev < 0.0) CHECK(cur > prev);
    prev = cur;
  }
  CHECK(min_e_prime(cs.km, 1e10) ==
        doctest::Approx(cs.km.c_h / cs.km.c_s).epsilon(1e-4));
}

}  // TEST_SUITE("solver")
