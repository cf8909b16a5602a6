#include <doctest.h>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qksd/basis.hpp"
#include "qksd/exact.hpp"
#include "qksd/gp_cost.hpp"
#include "qksd/lattice.hpp"
#include "qksd/mc.hpp"
#include "qksd/models.hpp"
#include "qksd/pauli.hpp"
#include "qksd/rng.hpp"
#include "support.hpp"

using namespace qksd;
using test::dense_by_columns;
using test::ks_statistic;

namespace {

const double kPi = std::acos(-1.0);

// Three-term two-qubit operator with h_tot = 0.7.
PauliSum two_qubit_h() {
  PauliSum h(2);
  h.add(0.35, PauliString::from_label("XI"));
  h.add(0.20, PauliString::from_label("ZY"));
  h.add(0.15, PauliString::from_label("YZ"));
  return h;
}

PauliSum single_term_h() {
  PauliSum h(2);
  h.add(0.7, PauliString::from_label("XZ"));
  return h;
}

// A draw's contribution to the decomposed operator, divided by its
// probability: importance times the phase of the running coefficient.
std::complex<double> draw_weight(const LcuTerm& term) {
  const double mod = std::abs(term.coefficient);
  REQUIRE(mod > 0.0);
  return term.importance * (term.coefficient / mod);
}

Eigen::MatrixXcd dense_propagator(const PauliSum& h, double t) {
  const Eigen::MatrixXcd hd = dense_by_columns(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hd);
  const Eigen::VectorXd lam = es.eigenvalues();
  Eigen::VectorXcd ph(lam.size());
  for (int i = 0; i < lam.size(); ++i)
    ph(i) = std::exp(std::complex<double>(0.0, -lam(i) * t));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Sample mean of draw_weight * term_matrix with a per-entry standard-error
// envelope; checks every entry against `exact` within 5 standard errors.
template <typename DrawFn>
void check_mean_matrix(DrawFn&& draw, int n_qubits, int n_draws,
                       const Eigen::MatrixXcd& exact) {
  const int dim = 1 << n_qubits;
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n_draws; ++i) {
    const LcuTerm term = draw();
    const Eigen::MatrixXcd m = draw_weight(term) * term_matrix(term, n_qubits);
    sum += m;
    sumsq += m.cwiseAbs2();
  }
  const Eigen::MatrixXcd mean = sum / static_cast<double>(n_draws);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const double var =
          std::max(0.0, sumsq(r, c) / n_draws - std::norm(mean(r, c)));
      const double sem = std::sqrt(var / n_draws);
      CHECK(std::abs(mean(r, c) - exact(r, c)) <= 5.0 * sem + 1e-10);
    }
  }
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("hermite polynomials by recurrence") {
  for (double u : {-1.7, 0.0, 0.3, 2.4}) {
    CHECK(hermite(0, u) == 1.0);
    CHECK(hermite(1, u) == doctest::Approx(2.0 * u).epsilon(1e-15));
  }
  CHECK(hermite(2, 0.7) == doctest::Approx(4.0 * 0.49 - 2.0).epsilon(1e-14));
  CHECK(hermite(3, -0.4) ==
        doctest::Approx(8.0 * std::pow(-0.4, 3) + 12.0 * 0.4).epsilon(1e-14));

  // Generating function: sum_n H_n(u) s^n / n! = exp(2 u s - s^2).
  const double u = 0.3, s = 0.2;
  double acc = 0.0, fact = 1.0;
  for (int n = 0; n <= 30; ++n) {
    if (n > 0) fact *= n;
    acc += hermite(n, u) * std::pow(s, n) / fact;
  }
  CHECK(acc == doctest::Approx(std::exp(2.0 * u * s - s * s)).epsilon(1e-12));

  for (int n : {0, 1, 4, 9, 12})
    for (double v : {-2.0, 0.3, 1.7})
      CHECK(hermite(n, v) ==
            doctest::Approx(static_cast<double>(hermite_l(n, v))).epsilon(1e-13));

  CHECK_THROWS_AS(hermite(-1, 0.0), std::invalid_argument);
}

TEST_CASE("hermite roots are the gauss nodes") {
  CHECK(hermite_roots(0).empty());

  const auto r1 = hermite_roots(1);
  REQUIRE(r1.size() == 1);
  CHECK(std::abs(r1[0]) <= 1e-14);

  const auto r2 = hermite_roots(2);
  REQUIRE(r2.size() == 2);
  CHECK(r2[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r2[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  const auto r3 = hermite_roots(3);
  REQUIRE(r3.size() == 3);
  CHECK(r3[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-12));
  CHECK(std::abs(r3[1]) <= 1e-12);
  CHECK(r3[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));

  const auto r6 = hermite_roots(6);
  REQUIRE(r6.size() == 6);
  for (size_t i = 0; i + 1 < r6.size(); ++i) CHECK(r6[i] < r6[i + 1]);
  for (size_t i = 0; i < r6.size(); ++i) {
    CHECK(r6[i] == doctest::Approx(-r6[5 - i]).epsilon(1e-12));
    CHECK(std::abs(hermite(6, r6[i])) <= 1e-6);
  }
}

TEST_CASE("per-step decomposition cost") {
  CHECK(cost_c(0.0, 5.0) == 1.0);
  CHECK(cost_c(0.5, 0.0) == 1.0);

  // y = 1: sqrt(2) + e - 2, reached by any (dt, h) with |dt| h = 1.
  const double c1 = std::sqrt(2.0) + std::exp(1.0) - 2.0;
  CHECK(cost_c(0.5, 2.0) == doctest::Approx(c1).epsilon(1e-15));
  CHECK(cost_c(1.0, 1.0) == doctest::Approx(c1).epsilon(1e-15));
  CHECK(cost_c(0.25, 4.0) == doctest::Approx(c1).epsilon(1e-15));
  CHECK(cost_c(-1.0, 1.0) == doctest::Approx(c1).epsilon(1e-15));

  double prev = 1.0;
  for (int i = 1; i <= 60; ++i) {
    const double y = 0.05 * i;
    const double c = cost_c(y, 1.0);
    CHECK(c > prev);
    prev = c;
    CHECK(c >= 1.0 + y * y - 1e-12);
    CHECK(c <= std::exp(0.5 * std::exp(1.0) * y * y) + 1e-12);
  }

  CHECK_THROWS_AS(cost_c(0.1, -1.0), std::invalid_argument);
}

TEST_CASE("default step count keeps the broadening exponent at 1/8") {
  for (double h : {0.3, 1.0, 2.5}) {
    for (double tau : {0.2, 1.0, 3.0}) {
      const int n = default_lcu_steps(h, tau);
      CHECK(n == static_cast<int>(std::ceil(4.0 * std::exp(1.0) * h * h * tau * tau)));
      CHECK(n >= 1);
      CHECK(n == default_lcu_steps(tau, h));
      const double chi = chi_of(h, tau, n);
      CHECK(chi == doctest::Approx(std::exp(1.0) * h * h * tau * tau / (2.0 * n))
                       .epsilon(1e-15));
      CHECK(chi <= 0.125 + 1e-12);
    }
  }
  CHECK(default_lcu_steps(1e-3, 1e-3) == 1);
  CHECK(chi_of(1.0, 1.0, 4) ==
        doctest::Approx(std::exp(1.0) / 8.0).epsilon(1e-15));
  CHECK_THROWS_AS(chi_of(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("filter peak magnitude") {
  CHECK(gp_norm_bound(1, 0.5) == 1.0);
  CHECK(gp_norm_bound(1, 2.0) == 1.0);
  CHECK(gp_norm_bound(3, 2.0) ==
        doctest::Approx(1.0 / (2.0 * std::exp(1.0))).epsilon(1e-14));
  CHECK(gp_norm_bound(5, 1.0) ==
        doctest::Approx(std::pow(4.0 / std::exp(1.0), 2)).epsilon(1e-14));
  CHECK_THROWS_AS(gp_norm_bound(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gp_norm_bound(2, 0.0), std::invalid_argument);
}

TEST_CASE("circuit one-norm approaches the filter floor") {
  // k = 1: the one-norm tends to 1 from above as the step count grows.
  const double c11 = gp_cost_ck(1, 1.0, 1.0, 11);
  const double c110 = gp_cost_ck(1, 1.0, 1.0, 110);
  const double c1100 = gp_cost_ck(1, 1.0, 1.0, 1100);
  CHECK(c11 > c110);
  CHECK(c110 > c1100);
  CHECK(c1100 >= 1.0 - 1e-12);
  CHECK(gp_cost_ck(1, 1.0, 1.0, 11000) == doctest::Approx(1.0).epsilon(5e-4));

  // At the default step count the one-norm stays within a factor 2 of the
  // peak-magnitude floor.
  const double tau = 1.5, h = 1.0;
  const int n = default_lcu_steps(h, tau);
  for (int k : {1, 5, 10}) {
    const double ratio = gp_cost_ck(k, tau, h, n) / gp_norm_bound(k, tau);
    CHECK(ratio >= 1.0 - 1e-12);
    CHECK(ratio <= 2.0);
  }

  // Divergence guard: at or below e h^2 tau^2 steps the integral blows up.
  const int n_div = static_cast<int>(std::exp(1.0) * h * h * tau * tau);  // 6
  CHECK_THROWS_AS(gp_cost_ck(2, tau, h, n_div), std::domain_error);
  CHECK_NOTHROW(gp_cost_ck(2, tau, h, n_div + 1));
  CHECK_THROWS_AS(gp_cost_ck(0, 1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(gp_cost_ck(2, -1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(gp_cost_ck(2, 1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("time-domain synthesis of the damped power filter") {
  // Integrating the hermite-weighted gaussian against exp(-i x t) must give
  // back x^{k-1} exp(-x^2 tau^2 / 2) for every x.
  const double tau = 1.3;
  const double s2t = std::sqrt(2.0) * tau;
  BasisSpec spec;
  spec.family = BasisFamily::gaussian_power;
  spec.d = 6;
  spec.e0 = 0.0;
  spec.tau = tau;
  spec.h_tot = 1.0;

  using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (int k = 1; k <= 4; ++k) {
    const std::complex<double> ipow =
        std::pow(std::complex<double>(0.0, 1.0), k - 1);
    const std::complex<double> pref = ipow / std::pow(s2t, k - 1);
    for (double x : {0.0, 0.37, -0.37, 1.1, -1.1, 2.0 / tau}) {
      auto part = [&](bool imag_part) {
        return quad::integrate(
            [&](double t) {
              const double g = std::exp(-t * t / (2.0 * tau * tau)) /
                               (tau * std::sqrt(2.0 * kPi));
              const std::complex<double> val =
                  pref * hermite(k - 1, t / s2t) * g *
                  std::exp(std::complex<double>(0.0, -x * t));
              return imag_part ? val.imag() : val.real();
            },
            -12.0 * tau, 12.0 * tau, 10, 1e-13);
      };
      const std::complex<double> synth(part(false), part(true));
      const std::complex<double> direct = eval_f(spec, k, x);
      const double scale = std::max(std::abs(direct), 1e-9);
      CHECK(std::abs(synth - direct) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("time density bookkeeping matches the one-norm") {
  const double tau = 1.2, h = 0.9;
  const int n = default_lcu_steps(h, tau);
  const GpTimeDensity den(3, tau, h, n);
  CHECK(den.integral() ==
        doctest::Approx(gp_cost_ck(3, tau, h, n)).epsilon(1e-12));
  CHECK(den.k() == 3);
  CHECK(den.tau() == tau);
  CHECK(den.h_tot() == h);
  CHECK(den.n_steps() == n);
  CHECK(den.t_max() > 0.0);

  const auto& breaks = den.breakpoints();
  CHECK(!breaks.empty());
  for (size_t i = 0; i < breaks.size(); ++i) {
    CHECK(breaks[i] >= -den.t_max() - 1e-12);
    CHECK(breaks[i] <= den.t_max() + 1e-12);
    if (i > 0) CHECK(breaks[i] > breaks[i - 1]);
  }

  for (double t = -den.t_max(); t <= den.t_max(); t += den.t_max() / 17.0) {
    CHECK(den(t) >= 0.0);
    CHECK(den(t) == doctest::Approx(den(-t)).epsilon(1e-12));
  }

  const GpTimeDensity bell(1, tau, h, n);
  CHECK(bell(0.0) > 0.0);
  const GpTimeDensity lobes(2, tau, h, n);
  CHECK(lobes(0.0) == 0.0);
}

TEST_CASE("single-step decomposition draws") {
  Rng rng(41);

  SUBCASE("zero time step is the identity decomposition") {
    const PauliSum h = two_qubit_h();
    for (int i = 0; i < 20; ++i) {
      const LcuTerm term = lor_sample(h, 0.0, rng);
      CHECK(term.importance == 1.0);
      REQUIRE(term.factors.size() == 1);
      CHECK(term.factors[0].is_rotation);
      CHECK(term.factors[0].angle == 0.0);
      CHECK(term.coefficient.imag() == 0.0);
      // The coefficient is the draw weight |h_j| / h_tot of the chosen term.
      const double w = term.coefficient.real();
      const bool known = std::abs(w - 0.5) < 1e-15 ||
                         std::abs(w - 2.0 / 7.0) < 1e-15 ||
                         std::abs(w - 1.5 / 7.0) < 1e-15;
      CHECK(known);
    }
  }

  SUBCASE("rotation branch carries the arctangent angle") {
    const PauliSum h = single_term_h();
    const double dt = 1.0 / 0.7;  // y = h_tot |dt| = 1
    bool seen = false;
    for (int i = 0; i < 200 && !seen; ++i) {
      const LcuTerm term = lor_sample(h, dt, rng);
      if (!term.factors[0].is_rotation) continue;
      seen = true;
      CHECK(term.factors[0].angle == doctest::Approx(kPi / 4.0).epsilon(1e-14));
      CHECK(term.factors[0].sign == 1);
      CHECK(term.factors[0].op.to_label(2) == "XZ");
      CHECK(std::abs(term.coefficient) ==
            doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
      CHECK(term.importance ==
            doctest::Approx(cost_c(dt, 0.7)).epsilon(1e-15));
    }
    CHECK(seen);

    bool seen_neg = false;
    for (int i = 0; i < 200 && !seen_neg; ++i) {
      const LcuTerm term = lor_sample(h, -dt, rng);
      if (!term.factors[0].is_rotation) continue;
      seen_neg = true;
      CHECK(term.factors[0].sign == -1);
    }
    CHECK(seen_neg);
  }

  SUBCASE("remainder branch reproduces the taylor coefficients") {
    const PauliSum h = single_term_h();
    const double dt = 1.0 / 0.7;  // y = 1
    int seen = 0;
    for (int i = 0; i < 2000 && seen < 25; ++i) {
      const LcuTerm term = lor_sample(h, dt, rng);
      if (term.factors[0].is_rotation) continue;
      ++seen;
      const double mod = std::abs(term.coefficient);
      // Identify the drawn order from the modulus y^k / k!.
      int k_hat = 0;
      double fact = 1.0;
      for (int k = 2; k <= 60 && k_hat == 0; ++k) {
        fact = (k == 2) ? 2.0 : fact * k;
        if (std::abs(mod - 1.0 / fact) <= 1e-9 / fact) k_hat = k;
      }
      REQUIRE(k_hat >= 2);
      const std::complex<double> expect =
          std::pow(std::complex<double>(0.0, -1.0) * 0.7 * dt, k_hat) /
          std::tgamma(static_cast<double>(k_hat) + 1.0);
      CHECK(std::abs(term.coefficient - expect) <= 1e-10);
      CHECK(term.factors[0].op.phase_exp == 0);
      const std::string label = term.factors[0].op.to_label(2);
      CHECK(label == ((k_hat % 2 == 0) ? "II" : "XZ"));
    }
    CHECK(seen == 25);
  }

  SUBCASE("branch frequencies match the leading probability") {
    const PauliSum h = two_qubit_h();
    const double dt = 0.6;  // y = 0.42
    const double y = 0.7 * dt;
    const double p_lead = std::sqrt(1.0 + y * y) / cost_c(dt, 0.7);
    const int n = 100000;
    int rotations = 0;
    for (int i = 0; i < n; ++i)
      if (lor_sample(h, dt, rng).factors[0].is_rotation) ++rotations;
    const double freq = static_cast<double>(rotations) / n;
    const double sigma = std::sqrt(p_lead * (1.0 - p_lead) / n);
    CHECK(std::abs(freq - p_lead) <= 5.0 * sigma);
  }

  SUBCASE("degenerate operators are rejected") {
    PauliSum empty(2);
    CHECK_THROWS_AS(lor_sample(empty, 0.1, rng), std::invalid_argument);
  }
}

TEST_CASE("one-step average reproduces the propagator") {
  const PauliSum h = two_qubit_h();
  const double dt = 0.8;
  Rng rng(97);
  check_mean_matrix([&] { return lor_sample(h, dt, rng); }, 2, 40000,
                    dense_propagator(h, dt));
}

TEST_CASE("multi-step evolution draws") {
  Rng rng(53);

  SUBCASE("zero total time") {
    const PauliSum h = two_qubit_h();
    const LcuTerm term = rte_sample(h, 0.0, 3, rng);
    CHECK(term.importance == 1.0);
    CHECK(term.coefficient.real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(term.coefficient.imag()) <= 1e-15);
    REQUIRE(term.factors.size() == 3);
    for (const auto& f : term.factors) {
      CHECK(f.is_rotation);
      CHECK(f.angle == 0.0);
    }
    Eigen::VectorXcd state = Eigen::VectorXcd::Zero(4);
    state(0) = std::complex<double>(0.6, 0.0);
    state(3) = std::complex<double>(0.0, 0.8);
    CHECK(std::abs(term_overlap(term, state) - 1.0) <= 1e-12);
  }

  SUBCASE("importance and phase bookkeeping are deterministic") {
    const PauliSum h = two_qubit_h();
    for (int i = 0; i < 10; ++i) {
      const LcuTerm term = rte_sample(h, 0.9, 4, rng);
      CHECK(term.importance ==
            doctest::Approx(std::pow(cost_c(0.225, 0.7), 4)).epsilon(1e-13));
      CHECK(std::abs(term.coefficient) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(term.factors.size() == 4);
    }
  }

  SUBCASE("step count must be positive") {
    const PauliSum h = two_qubit_h();
    CHECK_THROWS_AS(rte_sample(h, 0.5, 0, rng), std::invalid_argument);
  }

  SUBCASE("single-term evolution matches the closed form") {
    const PauliSum h = single_term_h();
    const double t = 1.3, theta = 0.7 * t;
    Eigen::MatrixXcd exact =
        std::cos(theta) * Eigen::MatrixXcd::Identity(4, 4);
    Eigen::MatrixXcd xz = Eigen::MatrixXcd::Zero(4, 4);
    // X on qubit 0, Z on qubit 1 (qubit 0 is the least significant bit).
    xz(1, 0) = 1.0;
    xz(0, 1) = 1.0;
    xz(3, 2) = -1.0;
    xz(2, 3) = -1.0;
    exact += std::complex<double>(0.0, -std::sin(theta)) * xz;
    check_mean_matrix([&] { return rte_sample(h, t, 2, rng); }, 2, 40000,
                      exact);
  }

  SUBCASE("two-site heisenberg evolution matches the dense propagator") {
    const Lattice lat = build_lattice({LatticeKind::chain, 2, 0});
    const PauliSum h = build_heisenberg(lat, 1.0);
    const double t = 0.6;
    check_mean_matrix([&] { return rte_sample(h, t, 3, rng); }, 2, 40000,
                      dense_propagator(h, t));
  }
}

TEST_CASE("sampled basis states follow the tabulated density") {
  const PauliSum h = two_qubit_h();
  const double tau = 1.1, e0 = -0.3;
  const int n_steps = default_lcu_steps(0.7, tau);

  SUBCASE("time draws pass a kolmogorov-smirnov test") {
    for (int k : {1, 2}) {
      const GpBasisSampler sampler(h, k, e0, tau, n_steps);
      const GpTimeDensity den(k, tau, 0.7, n_steps);

      // Fine trapezoid CDF of the exact density.
      const int grid = 32768;
      std::vector<double> ts(grid + 1), cum(grid + 1, 0.0);
      for (int i = 0; i <= grid; ++i)
        ts[i] = -den.t_max() + 2.0 * den.t_max() * i / grid;
      for (int i = 1; i <= grid; ++i)
        cum[i] = cum[i - 1] +
                 0.5 * (den(ts[i - 1]) + den(ts[i])) * (ts[i] - ts[i - 1]);
      for (auto& c : cum) c /= cum[grid];
      auto cdf = [&](double t) {
        if (t <= ts.front()) return 0.0;
        if (t >= ts.back()) return 1.0;
        const size_t j =
            std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
        const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
        return cum[j - 1] + w * (cum[j] - cum[j - 1]);
      };

      Rng rng(131 + k);
      std::vector<double> draws;
      draws.reserve(100000);
      double imp_sum = 0.0;
      for (int i = 0; i < 100000; ++i) {
        const GpSample s = sampler.sample(rng);
        draws.push_back(s.t);
        imp_sum += s.term.importance;
        if (i < 200) {
          CHECK(std::abs(s.t) <= den.t_max() + 1e-12);
          CHECK(std::abs(std::abs(s.term.coefficient) - 1.0) <= 1e-12);
          CHECK(s.term.factors.size() == static_cast<size_t>(n_steps));
          CHECK(std::abs(s.term.importance - sampler.cost()) <=
                0.02 * sampler.cost());
        }
      }
      CHECK(ks_statistic(draws, cdf) < 0.01);
      CHECK(imp_sum / 100000.0 ==
            doctest::Approx(sampler.cost()).epsilon(5e-3));
    }
  }

  SUBCASE("sampler accessors and the tabulated density") {
    const GpBasisSampler sampler(h, 2, e0, tau, n_steps);
    CHECK(sampler.k() == 2);
    CHECK(sampler.tau() == tau);
    CHECK(sampler.e0() == e0);
    CHECK(sampler.n_steps() == n_steps);
    CHECK(sampler.cost() ==
          doctest::Approx(gp_cost_ck(2, tau, 0.7, n_steps)).epsilon(1e-12));
    for (double t : {-1.1, -0.4, 0.35, 0.9})
      CHECK(sampler.tabulated_density(t) ==
            doctest::Approx(sampler.density(t)).epsilon(0.05));
    CHECK_THROWS_AS(GpBasisSampler(h, 2, e0, tau, n_steps, 15),
                    std::invalid_argument);
  }

  SUBCASE("averaged circuits synthesise the operator filter") {
    const int k = 2;
    const GpBasisSampler sampler(h, k, e0, tau, n_steps);
    const Eigen::MatrixXcd hd = dense_by_columns(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hd);
    const Eigen::VectorXd lam = es.eigenvalues();
    Eigen::VectorXcd f(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
      const double x = lam(i) - e0;
      f(i) = std::pow(x, k - 1) * std::exp(-x * x * tau * tau / 2.0);
    }
    const Eigen::MatrixXcd exact =
        es.eigenvectors() * f.asDiagonal() * es.eigenvectors().adjoint();
    Rng rng(211);
    check_mean_matrix([&] { return sampler.sample(rng).term; }, 2, 30000,
                      exact);
  }
}

TEST_CASE("one-shot interference tests") {
  Rng rng(307);

  SUBCASE("identity circuit pins the x outcome") {
    Eigen::VectorXcd state(4);
    state << std::complex<double>(0.5, 0.1), std::complex<double>(-0.3, 0.2),
        std::complex<double>(0.4, -0.4), std::complex<double>(0.1, 0.3);
    state.normalize();
    const LcuTerm identity;  // no factors
    int n = 3000;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      const HadamardOutcome o = hadamard_test(identity, state, rng);
      CHECK(o.mu_x == 1);
      mx += o.mu_x;
      my += o.mu_y;
    }
    CHECK(mx / n == 1.0);
    CHECK(std::abs(my / n) <= 5.0 / std::sqrt(static_cast<double>(n)));
  }

  SUBCASE("orthogonal circuit gives fair coins") {
    Eigen::VectorXcd zero(2);
    zero << 1.0, 0.0;
    LcuTerm flip;
    LcuFactor f;
    f.op = PauliString::from_label("X");
    flip.factors.push_back(f);
    const int n = 10000;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      const HadamardOutcome o = hadamard_test(flip, zero, rng);
      mx += o.mu_x;
      my += o.mu_y;
    }
    const double bound = 5.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mx / n) <= bound);
    CHECK(std::abs(my / n) <= bound);
  }

  SUBCASE("rotation overlap reproduces the cosine") {
    Eigen::VectorXcd zero(2);
    zero << 1.0, 0.0;
    LcuTerm rot;
    LcuFactor f;
    f.op = PauliString::from_label("X");
    f.is_rotation = true;
    f.angle = 0.7;
    f.sign = 1;
    rot.factors.push_back(f);
    const double z = std::cos(0.7);
    const int n = 10000;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      const HadamardOutcome o = hadamard_test(rot, zero, rng);
      mx += o.mu_x;
      my += o.mu_y;
    }
    CHECK(std::abs(mx / n - z) <=
          5.0 * std::sqrt((1.0 - z * z) / n) + 1e-12);
    CHECK(std::abs(my / n) <= 5.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("dense factor products and guards") {
  Rng rng(17);
  const PauliSum h = two_qubit_h();
  const LcuTerm term = lor_sample(h, 0.4, rng);
  CHECK_THROWS_AS(term_matrix(term, 0), std::invalid_argument);
  CHECK_THROWS_AS(term_matrix(term, 13), std::invalid_argument);

  // A signed rotation: exp(+i theta X) for sign = -1.
  LcuTerm rot;
  LcuFactor f;
  f.op = PauliString::from_label("X");
  f.is_rotation = true;
  f.angle = 0.3;
  f.sign = -1;
  rot.factors.push_back(f);
  Eigen::MatrixXcd x(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  const Eigen::MatrixXcd expect =
      std::cos(0.3) * Eigen::MatrixXcd::Identity(2, 2) +
      std::complex<double>(0.0, std::sin(0.3)) * x;
  CHECK((term_matrix(rot, 1) - expect).cwiseAbs().maxCoeff() <= 1e-14);

  // factors[0] * factors[1] in matrix product order.
  LcuFactor bare;
  bare.op = PauliString::from_label("Z");
  LcuTerm pair;
  pair.factors.push_back(f);
  pair.factors.push_back(bare);
  LcuTerm only_z;
  only_z.factors.push_back(bare);
  const Eigen::MatrixXcd left = term_matrix(rot, 1) * term_matrix(only_z, 1);
  CHECK((term_matrix(pair, 1) - left).cwiseAbs().maxCoeff() <= 1e-14);

  // apply_factors agrees with the dense product.
  Eigen::VectorXcd state(2);
  state << std::complex<double>(0.8, 0.1), std::complex<double>(0.2, -0.55);
  state.normalize();
  const Eigen::VectorXcd applied = apply_factors(pair, state);
  CHECK((applied - left * state).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(std::abs(term_overlap(pair, state) -
                 std::complex<double>((state.adjoint() * left * state)(0))) <=
        1e-13);
}

TEST_CASE("subspace entry estimator is unbiased") {
  const Lattice lat = build_lattice({LatticeKind::chain, 4, 0});
  PauliSum h = build_heisenberg(lat, 1.0);
  h = normalise(h, spectral_norm(h));
  const double h_tot = h.h_tot();
  const Eigen::VectorXcd ref = reference_singlet_pairs(4);
  const SpectralDecomposition sd = diagonalise(h, ref);

  const double tau = 0.9;
  const double e0 = sd.ground_energy;
  const int n_steps = default_lcu_steps(h_tot, tau);

  BasisSpec spec;
  spec.family = BasisFamily::gaussian_power;
  spec.d = 4;
  spec.e0 = e0;
  spec.tau = tau;
  spec.h_tot = h_tot;

  auto exact_entry = [&](EntryKind kind, int k, int q) {
    double acc = 0.0;
    for (int m = 0; m < sd.energies.size(); ++m) {
      const double x = sd.energies(m) - e0;
      const double fk = eval_f(spec, k, x).real();
      const double fq = eval_f(spec, q, x).real();
      acc += sd.weights(m) * fk *
             ((kind == EntryKind::hamiltonian) ? sd.energies(m) : 1.0) * fq;
    }
    return acc;
  };

  struct Case {
    EntryKind kind;
    int k, q;
  };
  const Case cases[] = {{EntryKind::overlap, 1, 1},
                        {EntryKind::hamiltonian, 1, 1},
                        {EntryKind::hamiltonian, 1, 2},
                        {EntryKind::overlap, 2, 3}};

  Rng rng(409);
  for (const auto& c : cases) {
    CAPTURE(static_cast<int>(c.kind));
    CAPTURE(c.k);
    CAPTURE(c.q);
    const GpBasisSampler fk(h, c.k, e0, tau, n_steps);
    const GpBasisSampler fq(h, c.q, e0, tau, n_steps);

    const int n_est = 40;
    const long long shots = 250;
    std::complex<double> pooled = 0.0;
    double var_sum = 0.0;
    for (int i = 0; i < n_est; ++i) {
      Rng child = rng.child(1000 * c.k + 100 * c.q +
                            10 * static_cast<int>(c.kind) + i);
      const EntryEstimate est =
          estimate_entry(c.kind, h, fk, fq, ref, shots, child);
      pooled += est.value;
      var_sum += est.std_error * est.std_error;

      CHECK(est.shots == shots);
      const double expect_cost =
          ((c.kind == EntryKind::hamiltonian) ? h_tot : 1.0) * fk.cost() *
          fq.cost();
      CHECK(est.cost_factor == doctest::Approx(expect_cost).epsilon(1e-12));
      CHECK(est.per_shot_variance <=
            2.0 * est.cost_factor * est.cost_factor + 1e-9);
      CHECK(est.std_error ==
            doctest::Approx(std::sqrt(est.per_shot_variance / shots))
                .epsilon(1e-12));
      CHECK(std::abs(est.mean_importance_k - fk.cost()) <= 0.05 * fk.cost());
      CHECK(std::abs(est.mean_importance_q - fq.cost()) <= 0.05 * fq.cost());
    }
    pooled /= static_cast<double>(n_est);
    const double sem = std::sqrt(var_sum) / n_est;
    CHECK(std::abs(pooled - exact_entry(c.kind, c.k, c.q)) <=
          5.0 * sem + 1e-12);
  }

  const GpBasisSampler f1(h, 1, e0, tau, n_steps);
  Rng child = rng.child(99);
  CHECK_THROWS_AS(
      estimate_entry(EntryKind::overlap, h, f1, f1, ref, 0, child),
      std::invalid_argument);
}

TEST_CASE("draws are reproducible by seed") {
  const PauliSum h = two_qubit_h();
  const int n_steps = default_lcu_steps(0.7, 1.1);
  const GpBasisSampler sampler(h, 2, -0.3, 1.1, n_steps);

  Rng a(613), b(613), c(614);
  bool any_diff = false;
  for (int i = 0; i < 50; ++i) {
    const GpSample sa = sampler.sample(a);
    const GpSample sb = sampler.sample(b);
    const GpSample sc = sampler.sample(c);
    CHECK(sa.t == sb.t);
    CHECK(sa.term.coefficient == sb.term.coefficient);
    CHECK(sa.term.importance == sb.term.importance);
    REQUIRE(sa.term.factors.size() == sb.term.factors.size());
    for (size_t j = 0; j < sa.term.factors.size(); ++j) {
      CHECK(sa.term.factors[j].op.x_mask == sb.term.factors[j].op.x_mask);
      CHECK(sa.term.factors[j].op.z_mask == sb.term.factors[j].op.z_mask);
      CHECK(sa.term.factors[j].sign == sb.term.factors[j].sign);
    }
    if (sa.t != sc.t) any_diff = true;
  }
  CHECK(any_diff);

  const Eigen::VectorXcd ref = reference_singlet_pairs(2);
  Rng e1(811), e2(811);
  const EntryEstimate r1 =
      estimate_entry(EntryKind::overlap, h, sampler, sampler, ref, 60, e1);
  const EntryEstimate r2 =
      estimate_entry(EntryKind::overlap, h, sampler, sampler, ref, 60, e2);
  CHECK(r1.value == r2.value);
  CHECK(r1.std_error == r2.std_error);
  CHECK(r1.mean_importance_k == r2.mean_importance_k);
}

}  // TEST_SUITE
