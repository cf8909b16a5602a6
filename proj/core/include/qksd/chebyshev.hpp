#pragma once

#include <cmath>

namespace qksd {

// Chebyshev polynomial of the first kind, stable for arguments inside and
// outside [-1, 1] (trigonometric / hyperbolic closed forms).
template <typename Real>
Real chebyshev_t(int n, Real z) {
  if (n < 0) n = -n;  // T_{-n} = T_n
  if (n == 0) return Real(1);
  const Real az = std::abs(z);
  if (az <= Real(1)) return std::cos(Real(n) * std::acos(z));
  const Real mag = std::cosh(Real(n) * std::acosh(az));
  return (z < Real(0) && (n & 1)) ? -mag : mag;
}

// Same values by the three-term recurrence T_{n+1} = 2 z T_n - T_{n-1};
// used to cross-check the closed forms.
template <typename Real>
Real chebyshev_t_recurrence(int n, Real z) {
  if (n < 0) n = -n;
  Real prev = Real(1);
  if (n == 0) return prev;
  Real cur = z;
  for (int i = 1; i < n; ++i) {
    Real next = Real(2) * z * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace qksd
