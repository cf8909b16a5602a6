#include "qksd/projector.hpp"

#include <cmath>
#include <stdexcept>

#include "qksd/chebyshev.hpp"
#include "qksd/gp_cost.hpp"

namespace qksd {

namespace {

// Neumaier-compensated accumulation; the alternating factorial sums cancel
// heavily for larger degrees.
struct CompensatedSum {
  long double sum = 0.0L;
  long double comp = 0.0L;
  void add(long double v) {
    const long double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  long double total() const { return sum + comp; }
};

}  // namespace

ProjectorReport compose_projector(int n, const SpectralDecomposition& sd, double tau,
                                  double h_tot, int n_steps) {
  if (n < 0) throw std::invalid_argument("projector: degree must be non-negative");
  if (n > kMaxProjectorDegree)
    throw std::invalid_argument("projector: degree above the supported maximum");
  if (!(tau > 0.0)) throw std::invalid_argument("projector: width must be positive");
  if (!(sd.gap > 0.0)) throw std::domain_error("projector: spectral gap required");

  const long double e_g = static_cast<long double>(sd.ground_energy);
  const Eigen::Index levels = sd.energies.size();
  long double h_norm = 0.0L;
  for (Eigen::Index m = 0; m < levels; ++m)
    h_norm = std::max(h_norm, std::abs(static_cast<long double>(sd.energies(m))));
  if (!(h_norm > 0.0L)) throw std::domain_error("projector: zero operator norm");

  const long double nl = n;
  if (!(static_cast<long double>(tau) * tau >
        nl * nl * nl / (static_cast<long double>(M_E) * h_norm * h_norm)))
    throw std::domain_error("projector: width too small for the squared-coefficient bound");

  const long double delta = static_cast<long double>(sd.gap) / h_norm;
  const long double z1 = 1.0L + delta;
  const long double t_n_z1 = chebyshev_t<long double>(n, z1);

  // Factorials up to (2n)! fit comfortably in long double for n <= 30.
  std::vector<long double> fact(static_cast<size_t>(2 * n + 1), 1.0L);
  for (size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<long double>(i);

  // Coefficients of T_n(Z) as a polynomial in (H - E_g)/|H|, where
  // Z = 1 - (H - E_2)/|H| and E_2 = E_g + gap.
  std::vector<long double> b(static_cast<size_t>(n + 1), 0.0L);
  if (n == 0) {
    b[0] = 1.0L;
  } else {
    for (int l = 0; l <= n; ++l) {
      CompensatedSum acc;
      for (int m = l; m <= n; ++m) {
        long double term = nl * fact[static_cast<size_t>(n + m - 1)] /
                           (fact[static_cast<size_t>(n - m)] * fact[static_cast<size_t>(2 * m)]);
        term *= std::pow(-2.0L, m);
        term *= fact[static_cast<size_t>(m)] /
                (fact[static_cast<size_t>(m - l)] * fact[static_cast<size_t>(l)]);
        term *= std::pow(-delta, static_cast<long double>(m - l));
        acc.add(term);
      }
      b[static_cast<size_t>(l)] = acc.total();
    }
  }

  ProjectorReport rep;
  rep.n = n;
  rep.tau = tau;
  rep.z1 = static_cast<double>(z1);
  rep.t_n_z1 = static_cast<double>(t_n_z1);
  rep.h_norm = static_cast<double>(h_norm);
  rep.b.resize(b.size());
  for (size_t i = 0; i < b.size(); ++i) rep.b[i] = static_cast<double>(b[i]);

  rep.a.resize(static_cast<size_t>(n + 1));
  long double a_sq = 0.0L;
  for (int k = 1; k <= n + 1; ++k) {
    const long double ck = static_cast<long double>(gp_cost_ck(k, tau, h_tot, n_steps));
    const long double ak = ck * b[static_cast<size_t>(k - 1)] /
                           (t_n_z1 * std::pow(h_norm, static_cast<long double>(k - 1)));
    rep.a[static_cast<size_t>(k - 1)] = static_cast<double>(ak);
    a_sq += ak * ak;
  }
  rep.gamma = static_cast<double>(a_sq * a_sq);
  rep.gamma_bound = static_cast<double>(
      4.0L / (1.0L - nl * nl * nl /
                         (static_cast<long double>(M_E) * h_norm * h_norm *
                          static_cast<long double>(tau) * tau)));

  // Residual off-ground part and the filtered-state energy errors.
  const long double deg_tol =
      1e-9L * std::max(1.0L, h_norm);
  const long double e2 = e_g + static_cast<long double>(sd.gap);
  long double omega = 0.0L;
  long double num_c = 0.0L, den_c = 0.0L, num_g = 0.0L, den_g = 0.0L;
  for (Eigen::Index m = 0; m < levels; ++m) {
    const long double e = static_cast<long double>(sd.energies(m));
    const long double w = static_cast<long double>(sd.weights(m));
    const long double zm = 1.0L - (e - e2) / h_norm;
    const long double tm = chebyshev_t<long double>(n, zm) / t_n_z1;
    if (e - e_g > deg_tol) omega = std::max(omega, std::abs(tm));
    const long double gauss =
        std::exp(-(e - e_g) * (e - e_g) * static_cast<long double>(tau) * tau / 2.0L);
    const long double wc = w * tm * tm * gauss * gauss;
    const long double wg = w * gauss * gauss;
    num_c += wc * e;
    den_c += wc;
    num_g += wg * e;
    den_g += wg;
  }
  rep.omega_norm = static_cast<double>(omega);
  rep.omega_norm_bound = static_cast<double>(
      2.0L / (std::pow(z1, static_cast<long double>(n)) + std::pow(z1, static_cast<long double>(-n))));
  rep.energy_error_composed = (den_c > 0.0L) ? static_cast<double>(num_c / den_c - e_g) : 0.0;
  rep.energy_error_gaussian = (den_g > 0.0L) ? static_cast<double>(num_g / den_g - e_g) : 0.0;
  return rep;
}

}  // namespace qksd
