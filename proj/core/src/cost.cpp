#include "qksd/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace qksd {

namespace {

KrylovMatricesHp lift(const KrylovMatrices& km) {
  KrylovMatricesHp hp;
  hp.h = km.h.cast<ComplexL>();
  hp.s = km.s.cast<ComplexL>();
  hp.structure = km.structure;
  hp.c_h = km.c_h;
  hp.c_s = km.c_s;
  return hp;
}

void check_protocol_args(int d, double kappa) {
  if (d < 1) throw std::invalid_argument("cost: subspace dimension must be >= 1");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("cost: failure probability must lie in (0, 1)");
}

}  // namespace

const char* protocol_tag(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::im_chebyshev: return "im_chebyshev";
    case ProtocolKind::im_hoeffding: return "im_hoeffding";
    case ProtocolKind::cm_real_hankel: return "cm_real_hankel";
    case ProtocolKind::cm_real_symmetric: return "cm_real_symmetric";
    case ProtocolKind::cm_complex_toeplitz: return "cm_complex_toeplitz";
  }
  return "?";
}

std::optional<ProtocolKind> protocol_from_tag(std::string_view tag) {
  for (ProtocolKind k :
       {ProtocolKind::im_chebyshev, ProtocolKind::im_hoeffding, ProtocolKind::cm_real_hankel,
        ProtocolKind::cm_real_symmetric, ProtocolKind::cm_complex_toeplitz})
    if (tag == protocol_tag(k)) return k;
  return std::nullopt;
}

double Protocol::eta_for(int d, double m, double kappa) const {
  check_protocol_args(d, kappa);
  if (!(m > 0.0)) throw std::invalid_argument("cost: sample count must be positive");
  const double dd = d;
  switch (kind) {
    case ProtocolKind::im_chebyshev:
      return 2.0 * dd * dd / std::sqrt(m * kappa);
    case ProtocolKind::im_hoeffding:
      return std::sqrt(2.0 * dd * dd / m * std::log(8.0 * dd * dd / kappa));
    case ProtocolKind::cm_real_hankel:
    case ProtocolKind::cm_real_symmetric:
      return std::sqrt(2.0 * dd / m * std::log(4.0 * dd / kappa));
    case ProtocolKind::cm_complex_toeplitz:
      return std::sqrt(2.0 * (2.0 * dd - 1.0) / m * std::log(4.0 * dd / kappa));
  }
  throw std::logic_error("cost: unknown protocol");
}

double Protocol::m_for(int d, double eta, double kappa) const {
  check_protocol_args(d, kappa);
  if (!(eta > 0.0)) throw std::invalid_argument("cost: deviation target must be positive");
  const double dd = d;
  switch (kind) {
    case ProtocolKind::im_chebyshev:
      return 4.0 * dd * dd * dd * dd / (kappa * eta * eta);
    case ProtocolKind::im_hoeffding:
      return 2.0 * dd * dd / (eta * eta) * std::log(8.0 * dd * dd / kappa);
    case ProtocolKind::cm_real_hankel:
    case ProtocolKind::cm_real_symmetric:
      return 2.0 * dd / (eta * eta) * std::log(4.0 * dd / kappa);
    case ProtocolKind::cm_complex_toeplitz:
      return 2.0 * (2.0 * dd - 1.0) / (eta * eta) * std::log(4.0 * dd / kappa);
  }
  throw std::logic_error("cost: unknown protocol");
}

double Protocol::alpha(double kappa) const {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("cost: failure probability must lie in (0, 1)");
  switch (kind) {
    case ProtocolKind::im_chebyshev: return 256.0 / kappa;
    case ProtocolKind::im_hoeffding: return 128.0 * std::log(1.0 / kappa);
    case ProtocolKind::cm_real_hankel:
      return (reduced_constants ? 16.0 : 64.0) * std::log(1.0 / kappa);
    case ProtocolKind::cm_real_symmetric: return 32.0 * std::log(1.0 / kappa);
    case ProtocolKind::cm_complex_toeplitz: return 64.0 * std::log(1.0 / kappa);
  }
  throw std::logic_error("cost: unknown protocol");
}

double Protocol::beta(int d) const {
  if (d < 1) throw std::invalid_argument("cost: subspace dimension must be >= 1");
  const double dd = d;
  switch (kind) {
    case ProtocolKind::im_chebyshev: return std::pow(dd, 6);
    case ProtocolKind::im_hoeffding: return std::pow(dd, 4);
    case ProtocolKind::cm_real_hankel: return dd * (2.0 * dd - 1.0);
    case ProtocolKind::cm_real_symmetric: return dd * dd * (dd + 1.0);
    case ProtocolKind::cm_complex_toeplitz: return (2.0 * dd - 1.0) * (2.0 * dd - 1.0);
  }
  throw std::logic_error("cost: unknown protocol");
}

double Protocol::entries_factor(int d) const {
  if (d < 1) throw std::invalid_argument("cost: subspace dimension must be >= 1");
  const double dd = d;
  switch (kind) {
    case ProtocolKind::im_chebyshev:
    case ProtocolKind::im_hoeffding:
      return 4.0 * dd * dd;  // two matrices, d^2 entries, two quadratures
    case ProtocolKind::cm_real_hankel:
    case ProtocolKind::cm_complex_toeplitz:
      return 2.0 * (2.0 * dd - 1.0);
    case ProtocolKind::cm_real_symmetric:
      return dd * (dd + 1.0);
  }
  throw std::logic_error("cost: unknown protocol");
}

Protocol Protocol::for_structure(MatrixStructure s) {
  Protocol p;
  switch (s) {
    case MatrixStructure::real_hankel: p.kind = ProtocolKind::cm_real_hankel; break;
    case MatrixStructure::real_symmetric: p.kind = ProtocolKind::cm_real_symmetric; break;
    case MatrixStructure::hermitian_toeplitz: p.kind = ProtocolKind::cm_complex_toeplitz; break;
    case MatrixStructure::dense: p.kind = ProtocolKind::im_hoeffding; break;
  }
  return p;
}

double m_tot(const Protocol& p, int d, double kappa, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("cost: deviation must be positive");
  return p.alpha(kappa) * p.beta(d) / (16.0 * eta * eta);
}

double gamma_factor(double p_g, double epsilon, double h_norm, double eta) {
  if (!(p_g > 0.0) || !(epsilon > 0.0) || !(h_norm > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("cost: gamma factor requires positive arguments");
  const double r = p_g * epsilon / (4.0 * h_norm * eta);
  return r * r;
}

BoundFunction::BoundFunction(const KrylovMatricesHp& km) : c_h_(km.c_h), c_s_(km.c_s) {
  const Eigen::Index d = km.s.rows();
  if (d == 0 || km.h.rows() != d || km.h.cols() != d || km.s.cols() != d)
    throw std::invalid_argument("cost: matrix pair must be square and same size");
  Eigen::SelfAdjointEigenSolver<MatrixXcld> es(km.s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("cost: overlap eigendecomposition failed");
  s_eigs_ = es.eigenvalues().cwiseMax(VectorXld::Zero(d));
  u_ = es.eigenvectors();
  h_rot_ = u_.adjoint() * km.h * u_;
  h_rot_ = ((h_rot_ + h_rot_.adjoint()) / 2.0L).eval();
}

long double BoundFunction::value(long double eta, int shift_factor) const {
  VectorXcld a;
  return value_with_vector(eta, shift_factor, a);
}

long double BoundFunction::value_with_vector(long double eta, int shift_factor,
                                             VectorXcld& a_out) const {
  if (eta < 0.0L) throw std::invalid_argument("cost: regulariser must be non-negative");
  const Eigen::Index d = s_eigs_.size();
  const long double shift_s = shift_factor * static_cast<long double>(c_s_) * eta;
  const long double shift_h = shift_factor * static_cast<long double>(c_h_) * eta;
  const long double s_max = s_eigs_(d - 1) + shift_s;
  const long double drop = (eta == 0.0L) ? 1e-18L * s_max : 0.0L;

  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i)
    if (s_eigs_(i) + shift_s > drop) keep.push_back(i);
  if (keep.empty()) throw std::runtime_error("cost: overlap matrix has no usable direction");

  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  MatrixXcld reduced(n, n);
  VectorXld dinv(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dinv(i) = 1.0L / std::sqrt(s_eigs_(keep[static_cast<size_t>(i)]) + shift_s);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      ComplexL v = h_rot_(keep[static_cast<size_t>(i)], keep[static_cast<size_t>(j)]);
      if (i == j) v += shift_h;
      reduced(i, j) = v * dinv(i) * dinv(j);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcld> es(reduced);
  if (es.info() != Eigen::Success) throw std::runtime_error("cost: reduced eigensolve failed");

  VectorXcld y = es.eigenvectors().col(0);
  a_out = VectorXcld::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i)
    a_out += u_.col(keep[static_cast<size_t>(i)]) * (dinv(i) * y(i));
  return es.eigenvalues()(0);
}

long double BoundFunction::solve(long double e_g, long double epsilon) const {
  const long double eps_k_val = eps_k(e_g);
  if (!(epsilon > eps_k_val))
    throw std::domain_error("cost: accuracy target does not exceed the subspace error");
  if (!(e_g + epsilon < 0.0L))
    throw std::domain_error("cost: regulariser solve requires a negative target energy");
  const long double target = e_g + epsilon;

  long double lo = 0.0L;
  long double hi = 1e-18L;
  int guard = 0;
  while (value(hi) < target) {
    lo = hi;
    hi *= 4.0L;
    if (++guard > 400) throw std::runtime_error("cost: regulariser bracket failed to close");
  }
  for (int it = 0; it < 300 && (hi - lo) > 1e-15L * hi; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (value(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5L * (lo + hi);
}

double min_e_prime(const KrylovMatrices& km, double eta) {
  return static_cast<double>(BoundFunction(lift(km)).value(static_cast<long double>(eta)));
}

double solve_eta(const KrylovMatrices& km, double e_g, double epsilon) {
  return static_cast<double>(BoundFunction(lift(km)).solve(static_cast<long double>(e_g),
                                                           static_cast<long double>(epsilon)));
}

SmallEtaEstimate gamma_small_eta(const KrylovMatricesHp& km, double e_g, double p_g,
                                 double h_norm, double epsilon) {
  if (!(p_g > 0.0) || !(h_norm > 0.0))
    throw std::invalid_argument("cost: small-eta estimate requires positive overlap and norm");
  BoundFunction bf(km);
  const long double eps_k_val = bf.eps_k(static_cast<long double>(e_g));
  const long double eps = static_cast<long double>(epsilon);
  if (!(eps > eps_k_val))
    throw std::domain_error("cost: accuracy target does not exceed the subspace error");

  VectorXcld a;
  const long double e_min = bf.value_with_vector(0.0L, 2, a);
  const long double norm_sq = a.squaredNorm();  // a^dag S a = 1 by construction
  const long double ratio = static_cast<long double>(p_g) * norm_sq;
  const long double u = eps *
                        std::abs(static_cast<long double>(bf.c_h()) -
                                 static_cast<long double>(bf.c_s()) * e_min) /
                        (2.0L * static_cast<long double>(h_norm) * (eps - eps_k_val));
  const long double u_bound =
      (static_cast<long double>(bf.c_h()) +
       static_cast<long double>(h_norm) * static_cast<long double>(bf.c_s())) *
      eps / (2.0L * static_cast<long double>(h_norm) * (eps - eps_k_val));

  SmallEtaEstimate out;
  out.gamma = static_cast<double>(u * u * ratio * ratio);
  out.u = static_cast<double>(u);
  out.u_bound = static_cast<double>(u_bound);
  out.norm_ratio = static_cast<double>(ratio);
  return out;
}

CostReport make_cost_report(const Protocol& p, int d, double kappa, double eta, double epsilon,
                            double p_g, double h_norm) {
  CostReport r;
  r.epsilon = epsilon;
  r.kappa = kappa;
  r.eta = eta;
  r.alpha = p.alpha(kappa);
  r.beta = p.beta(d);
  r.gamma = gamma_factor(p_g, epsilon, h_norm, eta);
  r.factor1 = r.alpha * h_norm * h_norm / (p_g * p_g * epsilon * epsilon);
  r.m_tot = m_tot(p, d, kappa, eta);
  r.m_per_part = p.m_for(d, eta, kappa);
  r.p_g = p_g;
  r.h_norm = h_norm;
  return r;
}

}  // namespace qksd
