#pragma once

#include <vector>

namespace qksd {

// Physicists' Hermite polynomial H_n(u) by the three-term recurrence.
double hermite(int n, double u);
long double hermite_l(int n, long double u);

// Roots of H_n, ascending (empty for n = 0); Golub-Welsch on the Jacobi matrix.
std::vector<double> hermite_roots(int n);

// Per-step cost of the first-order unitary decomposition of 1 - i H dt:
// c(dt) = sqrt(1 + h^2 dt^2) + exp(h|dt|) - 1 - h|dt|, with c(0) = 1.
double cost_c(double dt, double h_tot);

// Default number of product-formula steps, ceil(4 e h_tot^2 tau^2), >= 1.
// Keeps the Gaussian broadening exponent chi = e h_tot^2 tau^2 / (2N) at 1/8.
int default_lcu_steps(double h_tot, double tau);
double chi_of(double h_tot, double tau, int n_steps);

// Peak magnitude of the k-th Gaussian-damped power filter,
// ((k-1)/(e tau^2))^((k-1)/2); the floor for any unitary-decomposition cost.
double gp_norm_bound(int k, double tau);

// Total coefficient 1-norm c_k of the sampled circuit decomposition of f_k:
// (2^{(k-1)/2} tau^{k-1})^{-1} Int |H_{k-1}(t/(sqrt2 tau))| g_tau(t) c(t/N)^N dt.
// Throws when the step count is at or below the divergence threshold
// (N <= e h_tot^2 tau^2, i.e. chi >= 1/2).
double gp_cost_ck(int k, double tau, double h_tot, int n_steps);

// Positive integrand of gp_cost_ck (the unnormalised sampling density of the
// evolution-time draw) together with its support and smooth-piece boundaries.
class GpTimeDensity {
 public:
  GpTimeDensity(int k, double tau, double h_tot, int n_steps);

  double operator()(double t) const;  // unnormalised density value
  double t_max() const { return t_max_; }
  const std::vector<double>& breakpoints() const { return breaks_; }  // within [-t_max, t_max]
  double integral() const { return integral_; }                       // equals c_k

  int k() const { return k_; }
  double tau() const { return tau_; }
  double h_tot() const { return h_tot_; }
  int n_steps() const { return n_steps_; }

 private:
  int k_;
  double tau_;
  double h_tot_;
  int n_steps_;
  double t_max_;
  long double prefactor_;
  std::vector<double> breaks_;
  double integral_;
};

}  // namespace qksd
