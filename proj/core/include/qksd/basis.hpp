#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qksd/exact.hpp"

namespace qksd {

// The seven filter-function families that generate the subspace states
// |phi_k> = f_k(H) |phi>, k = 1..d.  Shifted argument x = E - e0 throughout.
enum class BasisFamily {
  power,           // P:   x^{k-1}
  chebyshev_poly,  // CP:  T_{k-1}(x / h_tot)
  gaussian_power,  // GP:  x^{k-1} exp(-x^2 tau^2 / 2), optionally rescaled
  inverse_power,   // IP:  x^{-(k-1)}
  imaginary_time,  // ITE: exp(-tau (k-1) x)
  real_time,       // RTE: exp(-i x dt (k - (d+1)/2))
  filter_sinc,     // F:   sinc((x - dE (k-1)) tau)
};

constexpr int kFamilyCount = 7;

// Short tag used in CSV output and configs ("P", "CP", "GP", ...).
const char* family_tag(BasisFamily family);
std::optional<BasisFamily> family_from_tag(std::string_view tag);
const std::vector<BasisFamily>& all_families();

// Algebraic structure of the subspace matrix pair; drives the fast build
// paths and the correlated measurement-noise model.
enum class MatrixStructure {
  real_hankel,        // entry depends on k+q only
  real_symmetric,     // real entries, symmetric
  hermitian_toeplitz, // entry depends on k-q only
  dense,              // no exploitable structure
};

MatrixStructure structure_of(BasisFamily family);
const char* structure_tag(MatrixStructure s);

struct BasisSpec {
  BasisFamily family = BasisFamily::power;
  int d = 1;            // subspace dimension
  double e0 = 0.0;      // spectral shift, x = E - e0
  double tau = 0.0;     // width (gaussian_power, imaginary_time, filter_sinc)
  double delta_t = 0.0; // time step (real_time)
  double delta_e = 0.0; // frequency step (filter_sinc)
  double h_tot = 0.0;   // coefficient 1-norm of H (chebyshev_poly, gaussian_power)
  // Optional per-k divisors c_k; when set, f'_k = f_k / rescale[k-1] is used
  // so that every state produced by the sampling circuits has unit cost.
  std::vector<double> rescale;
};

// f_k evaluated at shifted energy x (rescaling applied when configured).
std::complex<double> eval_f(const BasisSpec& spec, int k, double x);

// Subspace matrix pair: h(k,q) = <phi_k|H|phi_q>, s(k,q) = <phi_k|phi_q>,
// with the per-part noise scales c_h, c_s of the estimation protocol.
struct KrylovMatrices {
  Eigen::MatrixXcd h;
  Eigen::MatrixXcd s;
  MatrixStructure structure = MatrixStructure::dense;
  double c_h = 1.0;
  double c_s = 1.0;
};

KrylovMatrices build_matrices(const BasisSpec& spec, const SpectralDecomposition& sd);

// Extended-precision scalar types for the conditioning-sensitive paths.
using RealL = long double;
using ComplexL = std::complex<long double>;
using VectorXld = Eigen::Matrix<RealL, Eigen::Dynamic, 1>;
using MatrixXld = Eigen::Matrix<RealL, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXcld = Eigen::Matrix<ComplexL, Eigen::Dynamic, 1>;
using MatrixXcld = Eigen::Matrix<ComplexL, Eigen::Dynamic, Eigen::Dynamic>;

struct KrylovMatricesHp {
  MatrixXcld h;
  MatrixXcld s;
  MatrixStructure structure = MatrixStructure::dense;
  double c_h = 1.0;
  double c_s = 1.0;
};

KrylovMatricesHp build_matrices_hp(const BasisSpec& spec, const SpectralDecomposition& sd);
KrylovMatrices to_double(const KrylovMatricesHp& hp);

// eps_K = E_min(subspace) - E_g, the irreducible subspace error.
double subspace_error(const KrylovMatrices& km, double e_g);
// Extended-precision variant that rebuilds the matrices internally.
double subspace_error_hp(const BasisSpec& spec, const SpectralDecomposition& sd);

// Diagnostic target used to match widths across families: the energy error
// H_dd/S_dd - E_g of the final power-basis state (its own shift e0 = E_g + 1).
double power_diag_error(const SpectralDecomposition& sd, int d);

struct TauSelection {
  double tau = 0.0;
  bool degenerate = false;  // no positive solution; range endpoint returned
  double eps_b = 0.0;       // the diagnostic target that was matched
};

// Solve diag-ratio(tau) = eps_b for the width of gaussian_power (first state),
// filter_sinc (first state) or imaginary_time (last state), all anchored at
// e0 = E_g.  gaussian_power results are clipped into the admissible range
// (sqrt((d-1)/e), sqrt(d-1)/eps0].
TauSelection select_tau(BasisFamily family, const SpectralDecomposition& sd, int d,
                        double eps_b, double eps0 = 0.1);

struct GridSearchResult {
  double param = 0.0;  // delta_t (real_time) or delta_e (filter_sinc)
  double eps_k = 0.0;  // subspace error at the chosen value
};

// Scan the 100-point parameter grid and keep the value minimising the
// subspace error (ties resolved toward the smaller parameter).
// filter_sinc requires the pre-selected width tau.
GridSearchResult grid_search_param(BasisFamily family, const SpectralDecomposition& sd,
                                   int d, double tau = 0.0);

}  // namespace qksd
