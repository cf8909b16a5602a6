#pragma once

#include <vector>

#include "qksd/exact.hpp"

namespace qksd {

// Degree-n Chebyshev approximate ground-space projector assembled from the
// Gaussian-damped power basis: sum_k a_k f'_k(H) applied to the reference
// equals [T_n(Z)/T_n(z1)] exp(-(H-E_g)^2 tau^2/2) with Z = 1 - (H-E_2)/|H|.
struct ProjectorReport {
  int n = 0;
  double tau = 0.0;
  double z1 = 0.0;         // 1 + gap/|H|
  double t_n_z1 = 0.0;     // normalisation T_n(z1)
  std::vector<double> b;   // polynomial coefficients of T_n(Z) in (H - E_g)/|H|
  std::vector<double> a;   // combination weights on the unit-cost states f'_k
  double omega_norm = 0.0;        // spectral norm of the residual off-ground part
  double omega_norm_bound = 0.0;  // 2 / (z1^n + z1^-n)
  double gamma = 0.0;             // (sum_k a_k^2)^2
  double gamma_bound = 0.0;       // 4 / (1 - n^3/(e |H|^2 tau^2))
  double h_norm = 0.0;
  // Energy error of the composed state vs the plain Gaussian-filtered state.
  double energy_error_composed = 0.0;
  double energy_error_gaussian = 0.0;
};

// Maximum supported polynomial degree (factorials stay in range well beyond).
constexpr int kMaxProjectorDegree = 30;

// Requires a spectral gap, degree <= kMaxProjectorDegree and a width with
// tau^2 > n^3 / (e |H|^2); n_steps is the product-formula step count used to
// price the unit-cost rescaling of the basis states.
ProjectorReport compose_projector(int n, const SpectralDecomposition& sd, double tau,
                                  double h_tot, int n_steps);

}  // namespace qksd
