#include "qksd/solver.hpp"

#include <cmath>

namespace qksd {

namespace {

Eigen::MatrixXcd shifted(const Eigen::MatrixXcd& m, double amount) {
  Eigen::MatrixXcd out = m;
  out.diagonal().array() += amount;
  return out;
}

Solution finish(PencilResult<Eigen::MatrixXcd, Eigen::MatrixXcd>&& r, double eta,
                SolveMethod method) {
  Solution out;
  out.e_min = r.min_value;
  out.coefficients = r.coefficients;
  const double norm = out.coefficients.norm();
  if (norm > 0.0) out.coefficients /= norm;
  out.eta = eta;
  out.method = method;
  out.retained = r.retained;
  return out;
}

}  // namespace

const char* solve_method_tag(SolveMethod m) {
  switch (m) {
    case SolveMethod::exact: return "exact";
    case SolveMethod::regularised: return "regularised";
    case SolveMethod::thresholded: return "thresholded";
  }
  return "?";
}

Solution solve_regularised(const KrylovMatrices& km, double eta) {
  if (eta < 0.0) throw std::invalid_argument("solver: regulariser must be non-negative");
  auto r = pencil_min_eig(shifted(km.h, km.c_h * eta), shifted(km.s, km.c_s * eta), 1e-12);
  return finish(std::move(r), eta, eta == 0.0 ? SolveMethod::exact : SolveMethod::regularised);
}

Solution solve_thresholded(const KrylovMatrices& km, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("solver: threshold must be non-negative");
  const Eigen::Index d = km.s.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(km.s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("solver: eigendecomposition of the overlap matrix failed");
  const auto& lam = es.eigenvalues();
  if (threshold > lam(d - 1))
    throw std::runtime_error("solver: threshold above the largest overlap eigenvalue");

  int kept = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (lam(i) >= threshold && lam(i) > 0.0) ++kept;
  if (kept == 0) throw std::runtime_error("solver: threshold discarded every direction");

  Eigen::MatrixXcd b(d, kept);
  int col = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam(i) < threshold || lam(i) <= 0.0) continue;
    b.col(col++) = es.eigenvectors().col(i) / std::sqrt(lam(i));
  }
  Eigen::MatrixXcd reduced = b.adjoint() * km.h * b;
  reduced = ((reduced + reduced.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_r(reduced);
  if (es_r.info() != Eigen::Success)
    throw std::runtime_error("solver: reduced eigendecomposition failed");

  Solution out;
  out.e_min = es_r.eigenvalues()(0);
  out.coefficients = b * es_r.eigenvectors().col(0);
  const double norm = out.coefficients.norm();
  if (norm > 0.0) out.coefficients /= norm;
  out.eta = threshold;
  out.method = SolveMethod::thresholded;
  out.retained = kept;
  return out;
}

double rayleigh_quotient(const KrylovMatrices& km, const Eigen::VectorXcd& a, double eta) {
  if (a.size() != km.h.rows()) throw std::invalid_argument("solver: coefficient size mismatch");
  const Eigen::MatrixXcd h = shifted(km.h, km.c_h * eta);
  const Eigen::MatrixXcd s = shifted(km.s, km.c_s * eta);
  const std::complex<double> num = a.dot(h * a);
  const std::complex<double> den = a.dot(s * a);
  if (std::abs(den) == 0.0) throw std::runtime_error("solver: zero norm in the quotient");
  return (num / den).real();
}

}  // namespace qksd
