#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "qksd/basis.hpp"

namespace qksd {

// Minimum eigenpair of the Hermitian pencil (h, s): h a = e s a with s
// positive semi-definite.  Directions whose s-eigenvalue falls below
// floor_rel * lambda_max are projected out before reducing to a standard
// Hermitian problem.  The returned vector satisfies a^dag s a = 1.
template <typename MatH, typename MatS>
struct PencilResult {
  using Scalar = typename MatH::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  Real min_value{};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
  int retained = 0;
  bool floored = false;
};

template <typename MatH, typename MatS>
PencilResult<MatH, MatS> pencil_min_eig(const MatH& h, const MatS& s,
                                        double floor_rel = 1e-12) {
  using Scalar = typename MatH::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index d = s.rows();
  if (d == 0 || s.cols() != d || h.rows() != d || h.cols() != d)
    throw std::invalid_argument("pencil_min_eig: matrix pair must be square and same size");

  Eigen::SelfAdjointEigenSolver<Mat> es_s(s);
  if (es_s.info() != Eigen::Success)
    throw std::runtime_error("pencil_min_eig: eigendecomposition of the overlap part failed");
  const auto& lam = es_s.eigenvalues();
  const Real lam_max = lam(d - 1);
  if (!(lam_max > Real(0)))
    throw std::runtime_error("pencil_min_eig: overlap part has no positive eigenvalue");
  const Real floor = Real(floor_rel) * lam_max;

  int kept = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (lam(i) > floor) ++kept;
  if (kept == 0) throw std::runtime_error("pencil_min_eig: every direction fell below the floor");

  Mat b(d, kept);
  int col = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam(i) <= floor) continue;
    b.col(col++) = es_s.eigenvectors().col(i) / std::sqrt(lam(i));
  }

  Mat reduced = b.adjoint() * h * b;
  reduced = ((reduced + reduced.adjoint()) / Real(2)).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es_r(reduced);
  if (es_r.info() != Eigen::Success)
    throw std::runtime_error("pencil_min_eig: reduced eigendecomposition failed");

  PencilResult<MatH, MatS> out;
  out.min_value = es_r.eigenvalues()(0);
  out.coefficients = Vec(b * es_r.eigenvectors().col(0));
  out.retained = kept;
  out.floored = kept < static_cast<int>(d);
  return out;
}

enum class SolveMethod { exact, regularised, thresholded };
const char* solve_method_tag(SolveMethod m);

struct Solution {
  double e_min = 0.0;
  Eigen::VectorXcd coefficients;  // unit 2-norm
  double eta = 0.0;               // regulariser (or threshold) actually applied
  SolveMethod method = SolveMethod::exact;
  int retained = 0;               // subspace directions kept by the solver
};

// Ground-energy estimate from the pencil (h + c_h eta I, s + c_s eta I).
// eta = 0 reduces to the plain (floored) pencil solve.
Solution solve_regularised(const KrylovMatrices& km, double eta);

// Ground-energy estimate after discarding every overlap eigendirection with
// eigenvalue strictly below `threshold` (no shift applied).
Solution solve_thresholded(const KrylovMatrices& km, double threshold);

// Rayleigh quotient of `a` on the pencil pair shifted by eta (same shift the
// regularised solver applies); used to validate solutions independently.
double rayleigh_quotient(const KrylovMatrices& km, const Eigen::VectorXcd& a, double eta);

}  // namespace qksd
