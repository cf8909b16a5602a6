#include "qksd/gp_cost.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <stdexcept>

namespace qksd {

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;
constexpr long double kSqrt2L = 1.41421356237309504880168872420969808L;

long double cost_c_l(long double dt, long double h_tot) {
  const long double y = h_tot * std::abs(dt);
  return std::sqrt(1.0L + y * y) + (std::expm1(y) - y);
}

}  // namespace

double hermite(int n, double u) { return static_cast<double>(hermite_l(n, u)); }

long double hermite_l(int n, long double u) {
  if (n < 0) throw std::invalid_argument("hermite: order must be non-negative");
  long double prev = 1.0L;
  if (n == 0) return prev;
  long double cur = 2.0L * u;
  for (int i = 1; i < n; ++i) {
    const long double next = 2.0L * u * cur - 2.0L * i * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> hermite_roots(int n) {
  if (n < 0) throw std::invalid_argument("hermite: order must be non-negative");
  if (n == 0) return {};
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1 > 0 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("hermite: root solve failed");
  std::vector<double> roots(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);
  std::sort(roots.begin(), roots.end());
  return roots;
}

double cost_c(double dt, double h_tot) {
  if (h_tot < 0.0) throw std::invalid_argument("cost_c: coefficient norm must be non-negative");
  return static_cast<double>(cost_c_l(static_cast<long double>(dt), static_cast<long double>(h_tot)));
}

int default_lcu_steps(double h_tot, double tau) {
  const double raw = 4.0 * M_E * h_tot * h_tot * tau * tau;
  return std::max(1, static_cast<int>(std::ceil(raw)));
}

double chi_of(double h_tot, double tau, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("chi_of: step count must be positive");
  return M_E * h_tot * h_tot * tau * tau / (2.0 * n_steps);
}

double gp_norm_bound(int k, double tau) {
  if (k < 1) throw std::invalid_argument("gp_norm_bound: state index must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("gp_norm_bound: width must be positive");
  if (k == 1) return 1.0;
  const long double n = k - 1;
  const long double arg = n / (static_cast<long double>(M_E) * tau * tau);
  return static_cast<double>(std::pow(arg, n / 2.0L));
}

GpTimeDensity::GpTimeDensity(int k, double tau, double h_tot, int n_steps)
    : k_(k), tau_(tau), h_tot_(h_tot), n_steps_(n_steps) {
  if (k < 1) throw std::invalid_argument("gp_cost: state index must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("gp_cost: width must be positive");
  if (h_tot < 0.0) throw std::invalid_argument("gp_cost: coefficient norm must be non-negative");
  if (n_steps < 1) throw std::invalid_argument("gp_cost: step count must be positive");
  const double chi = chi_of(h_tot, tau, n_steps);
  if (chi >= 0.5)
    throw std::domain_error("gp_cost: step count too small, decomposition cost diverges");

  const int n = k - 1;
  const long double tl = static_cast<long double>(tau);
  prefactor_ = std::pow(kSqrt2L * tl, static_cast<long double>(-n));

  // Initial truncation point: where the effective Gaussian envelope (width
  // reduced by chi) falls below 1e-16, padded for the polynomial factor,
  // then extended until the tail is demonstrably negligible.
  const double sigma_eff = 0.5 - chi;
  double t_cut = tau * std::sqrt(std::log(1e16) / sigma_eff) * 1.25;
  std::vector<double> roots = hermite_roots(n);
  const double u_max = roots.empty() ? 0.0 : roots.back();
  t_cut = std::max(t_cut, static_cast<double>(kSqrt2L) * tau * (u_max + 1.0));
  t_cut = std::max(t_cut, 4.0 * tau);

  auto density_at = [&](double t) {
    const long double u = static_cast<long double>(t) / (kSqrt2L * tl);
    const long double habs = std::abs(hermite_l(n, u));
    const long double g =
        std::exp(-static_cast<long double>(t) * t / (2.0L * tl * tl)) / (tl * std::sqrt(2.0L * kPiL));
    const long double lc = static_cast<long double>(n_steps) *
                           std::log(cost_c_l(static_cast<long double>(t) / n_steps,
                                             static_cast<long double>(h_tot)));
    return prefactor_ * habs * g * std::exp(lc);
  };

  long double scale = 0.0L;
  for (int i = 0; i <= 256; ++i) scale = std::max(scale, density_at(t_cut * i / 256.0));
  int guard = 0;
  while (density_at(t_cut) > 1e-19L * scale) {
    t_cut *= 1.25;
    for (int i = 192; i <= 256; ++i) scale = std::max(scale, density_at(t_cut * i / 256.0));
    if (++guard > 200) throw std::runtime_error("gp_cost: integrand tail failed to decay");
  }
  t_max_ = t_cut;

  breaks_.clear();
  breaks_.push_back(0.0);
  for (double u : roots) {
    const double t = static_cast<double>(kSqrt2L) * tau * u;
    if (t > 0.0 && t < t_max_) breaks_.push_back(t);
  }
  breaks_.push_back(t_max_);
  std::sort(breaks_.begin(), breaks_.end());

  using boost::math::quadrature::gauss_kronrod;
  long double total = 0.0L;
  for (size_t i = 0; i + 1 < breaks_.size(); ++i) {
    const long double a = breaks_[i];
    const long double b = breaks_[i + 1];
    total += gauss_kronrod<long double, 31>::integrate(
        [&](long double t) { return density_at(static_cast<double>(t)); }, a, b, 12, 1e-13L);
  }
  integral_ = static_cast<double>(2.0L * total);  // density is even in t

  // Mirror the positive breakpoints so callers see the full support.
  std::vector<double> full;
  for (auto it = breaks_.rbegin(); it != breaks_.rend(); ++it)
    if (*it > 0.0) full.push_back(-*it);
  full.insert(full.end(), breaks_.begin(), breaks_.end());
  breaks_ = std::move(full);
}

double GpTimeDensity::operator()(double t) const {
  if (std::abs(t) > t_max_) return 0.0;
  const long double tl = static_cast<long double>(tau_);
  const long double u = static_cast<long double>(t) / (kSqrt2L * tl);
  const long double habs = std::abs(hermite_l(k_ - 1, u));
  const long double g =
      std::exp(-static_cast<long double>(t) * t / (2.0L * tl * tl)) / (tl * std::sqrt(2.0L * kPiL));
  const long double lc =
      static_cast<long double>(n_steps_) *
      std::log(cost_c_l(static_cast<long double>(t) / n_steps_, static_cast<long double>(h_tot_)));
  return static_cast<double>(prefactor_ * habs * g * std::exp(lc));
}

double gp_cost_ck(int k, double tau, double h_tot, int n_steps) {
  return GpTimeDensity(k, tau, h_tot, n_steps).integral();
}

}  // namespace qksd
