#pragma once

#include <optional>
#include <string>

#include "qksd/basis.hpp"
#include "qksd/solver.hpp"

namespace qksd {

// Measurement protocols: independent per-entry estimation with a Chebyshev or
// Hoeffding tail bound, or collective estimation of the repeated values of a
// structured matrix pair.
enum class ProtocolKind {
  im_chebyshev,
  im_hoeffding,
  cm_real_hankel,
  cm_real_symmetric,
  cm_complex_toeplitz,
};

const char* protocol_tag(ProtocolKind kind);
std::optional<ProtocolKind> protocol_from_tag(std::string_view tag);

struct Protocol {
  ProtocolKind kind = ProtocolKind::im_chebyshev;
  // Sharper constants available when the overlap spectrum is known to be
  // concentrated (collective real-hankel estimation only).
  bool reduced_constants = false;

  // Spectral-norm deviation bound eta(M): holds with probability >= 1 - kappa
  // when each matrix part is estimated with M samples.
  double eta_for(int d, double m, double kappa) const;
  // Inverse of eta_for: per-part samples needed for a target deviation.
  double m_for(int d, double eta, double kappa) const;
  // Budget constants: total samples = alpha * beta / (16 eta^2).
  double alpha(double kappa) const;
  double beta(int d) const;
  // Total samples = entries_factor * per-part M.
  double entries_factor(int d) const;

  // Default collective protocol for a structure class.
  static Protocol for_structure(MatrixStructure s);
};

// Total measurement budget alpha * beta / (16 eta^2).
double m_tot(const Protocol& p, int d, double kappa, double eta);

// Problem-conditioning factor gamma = p_g^2 eps^2 / (16 |H|^2 eta^2), the
// third factor in M_tot = [alpha |H|^2 / (p_g^2 eps^2)] * beta * gamma.
double gamma_factor(double p_g, double epsilon, double h_norm, double eta);

// Regularised upper bound E'(eta) = min_a a^dag(H + 2 c_h eta)a / a^dag(S + 2 c_s eta)a.
double min_e_prime(const KrylovMatrices& km, double eta);

// Largest regulariser keeping the bound at the target accuracy:
// min E'(eta) = E_g + epsilon.  Requires epsilon > eps_K and E_g + epsilon < 0.
double solve_eta(const KrylovMatrices& km, double e_g, double epsilon);

// Extended-precision bound function with the overlap eigendecomposition
// cached; shift_factor 2 gives E' (the bound), 1 the solver's own pencil.
class BoundFunction {
 public:
  explicit BoundFunction(const KrylovMatricesHp& km);

  long double value(long double eta, int shift_factor = 2) const;
  long double value_with_vector(long double eta, int shift_factor, VectorXcld& a_out) const;
  long double eps_k(long double e_g) const { return value(0.0L) - e_g; }

  double c_h() const { return c_h_; }
  double c_s() const { return c_s_; }
  int d() const { return static_cast<int>(s_eigs_.size()); }

  // Bisection for value(eta) = e_g + epsilon on the increasing branch.
  long double solve(long double e_g, long double epsilon) const;

 private:
  VectorXld s_eigs_;   // eigenvalues of S, clamped at zero, ascending
  MatrixXcld u_;       // the S eigenbasis
  MatrixXcld h_rot_;   // H rotated into the S eigenbasis
  double c_h_ = 1.0;
  double c_s_ = 1.0;
};

// Small-eta closed form: gamma ~= u^2 (p_g a^dag a / a^dag S a)^2 evaluated at
// the unregularised minimiser, with u the bound-inversion factor
// eps |c_h - c_s E_min| / (2 |H| (eps - eps_K)) and its a-independent bound.
struct SmallEtaEstimate {
  double gamma = 0.0;
  double u = 0.0;
  double u_bound = 0.0;
  double norm_ratio = 0.0;  // p_g a^dag a / a^dag S a
};

SmallEtaEstimate gamma_small_eta(const KrylovMatricesHp& km, double e_g, double p_g,
                                 double h_norm, double epsilon);

// Full budget decomposition for one (protocol, accuracy) point.
struct CostReport {
  double epsilon = 0.0;
  double kappa = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double factor1 = 0.0;  // alpha |H|^2 / (p_g^2 eps^2)
  double m_tot = 0.0;
  double m_per_part = 0.0;  // from m_for at the solved eta
  double p_g = 0.0;
  double h_norm = 0.0;
};

CostReport make_cost_report(const Protocol& p, int d, double kappa, double eta, double epsilon,
                            double p_g, double h_norm);

}  // namespace qksd
