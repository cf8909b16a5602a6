#include "qksd/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qksd/chebyshev.hpp"
#include "qksd/solver.hpp"

namespace qksd {

namespace {

constexpr long double kPi = 3.14159265358979323846264338327950288L;

long double sinc_l(long double y) {
  if (std::abs(y) < 1e-8L) return 1.0L - y * y / 6.0L;
  return std::sin(y) / y;
}

// Spectrum restricted to levels that actually overlap the reference state;
// zero-weight levels contribute nothing to any subspace matrix.
struct SpectralView {
  std::vector<long double> e;
  std::vector<long double> w;
};

SpectralView make_view(const SpectralDecomposition& sd, bool drop_zero_weight) {
  SpectralView v;
  const auto n = sd.energies.size();
  v.e.reserve(n);
  v.w.reserve(n);
  const double w_max = sd.weights.size() ? sd.weights.maxCoeff() : 0.0;
  const double cut = drop_zero_weight ? 1e-30 * w_max : -1.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    if (sd.weights(m) <= cut) continue;
    v.e.push_back(static_cast<long double>(sd.energies(m)));
    v.w.push_back(static_cast<long double>(sd.weights(m)));
  }
  if (v.e.empty()) throw std::runtime_error("basis: reference state has no spectral support");
  return v;
}

void validate_spec(const BasisSpec& spec, const SpectralDecomposition& sd) {
  if (spec.d < 1) throw std::invalid_argument("basis: subspace dimension must be >= 1");
  switch (spec.family) {
    case BasisFamily::gaussian_power:
      if (!(spec.tau > 0.0)) throw std::invalid_argument("basis: gaussian width must be positive");
      if (!(spec.h_tot > 0.0))
        throw std::invalid_argument("basis: coefficient 1-norm required for gaussian_power");
      if (spec.d >= 2 && !(spec.tau * spec.tau * static_cast<double>(M_E) > spec.d - 1))
        throw std::invalid_argument("basis: gaussian width below the admissible range");
      break;
    case BasisFamily::imaginary_time:
    case BasisFamily::filter_sinc:
      if (!(spec.tau > 0.0)) throw std::invalid_argument("basis: width must be positive");
      if (spec.family == BasisFamily::filter_sinc && spec.d >= 2 && !(spec.delta_e > 0.0))
        throw std::invalid_argument("basis: frequency step must be positive");
      break;
    case BasisFamily::chebyshev_poly:
      if (!(spec.h_tot > 0.0))
        throw std::invalid_argument("basis: coefficient 1-norm required for chebyshev_poly");
      break;
    case BasisFamily::real_time:
      if (spec.d >= 2 && !(spec.delta_t > 0.0))
        throw std::invalid_argument("basis: time step must be positive");
      break;
    case BasisFamily::inverse_power: {
      const double lo = sd.energies(0);
      const double hi = sd.energies(sd.energies.size() - 1);
      if (spec.e0 >= lo && spec.e0 <= hi)
        throw std::domain_error("basis: inverse_power shift inside the spectrum is singular");
      break;
    }
    case BasisFamily::power:
      break;
  }
  if (!spec.rescale.empty()) {
    if (static_cast<int>(spec.rescale.size()) != spec.d)
      throw std::invalid_argument("basis: rescale vector must have one entry per subspace state");
    for (double c : spec.rescale)
      if (!(c > 0.0)) throw std::invalid_argument("basis: rescale entries must be positive");
  }
}

long double rescale_of(const BasisSpec& spec, int k) {
  if (spec.rescale.empty()) return 1.0L;
  return static_cast<long double>(spec.rescale[static_cast<size_t>(k - 1)]);
}

// f_k at shifted energy x in extended precision (rescaling applied).
ComplexL eval_f_l(const BasisSpec& spec, int k, long double x) {
  const long double r = rescale_of(spec, k);
  switch (spec.family) {
    case BasisFamily::power:
      return ComplexL((k == 1) ? 1.0L : std::pow(x, static_cast<long double>(k - 1)), 0.0L) / r;
    case BasisFamily::chebyshev_poly:
      return ComplexL(chebyshev_t<long double>(k - 1, x / static_cast<long double>(spec.h_tot)),
                      0.0L) / r;
    case BasisFamily::gaussian_power: {
      const long double t = static_cast<long double>(spec.tau);
      const long double p = (k == 1) ? 1.0L : std::pow(x, static_cast<long double>(k - 1));
      return ComplexL(p * std::exp(-x * x * t * t / 2.0L), 0.0L) / r;
    }
    case BasisFamily::inverse_power:
      if (x == 0.0L) throw std::domain_error("basis: inverse power evaluated at the shift");
      return ComplexL((k == 1) ? 1.0L : std::pow(x, -static_cast<long double>(k - 1)), 0.0L) / r;
    case BasisFamily::imaginary_time:
      return ComplexL(std::exp(-static_cast<long double>(spec.tau) * (k - 1) * x), 0.0L) / r;
    case BasisFamily::real_time: {
      const long double phase =
          -x * static_cast<long double>(spec.delta_t) * (k - (spec.d + 1) / 2.0L);
      return ComplexL(std::cos(phase), std::sin(phase)) / r;
    }
    case BasisFamily::filter_sinc: {
      const long double y =
          (x - static_cast<long double>(spec.delta_e) * (k - 1)) * static_cast<long double>(spec.tau);
      return ComplexL(sinc_l(y), 0.0L) / r;
    }
  }
  throw std::logic_error("basis: unknown family");
}

// Shared Hankel driver: entry (k,q) of the pair depends on j = k+q-2 only.
// base^j carries the family dependence; level_w an extra per-level weight.
void fill_hankel(const BasisSpec& spec, const SpectralView& v, long double e_g_unused,
                 MatrixXcld& h, MatrixXcld& s) {
  (void)e_g_unused;
  const int d = spec.d;
  const int n_mom = 2 * d - 1;
  std::vector<long double> gs(static_cast<size_t>(n_mom), 0.0L);
  std::vector<long double> gh(static_cast<size_t>(n_mom), 0.0L);
  const long double tau = static_cast<long double>(spec.tau);
  for (size_t m = 0; m < v.e.size(); ++m) {
    const long double energy = v.e[m];
    const long double x = energy - static_cast<long double>(spec.e0);
    long double base = 0.0L;
    long double lw = 1.0L;
    switch (spec.family) {
      case BasisFamily::power:
        base = x;
        break;
      case BasisFamily::gaussian_power:
        base = x;
        lw = std::exp(-x * x * tau * tau);
        break;
      case BasisFamily::inverse_power:
        if (x == 0.0L) throw std::domain_error("basis: inverse power evaluated at the shift");
        base = 1.0L / x;
        break;
      case BasisFamily::imaginary_time:
        base = std::exp(-tau * x);
        break;
      default:
        throw std::logic_error("basis: family is not hankel-structured");
    }
    long double p = v.w[m] * lw;
    for (int j = 0; j < n_mom; ++j) {
      gs[static_cast<size_t>(j)] += p;
      gh[static_cast<size_t>(j)] += p * energy;
      p *= base;
    }
  }
  h.setZero(d, d);
  s.setZero(d, d);
  for (int k = 1; k <= d; ++k) {
    for (int q = 1; q <= d; ++q) {
      const long double r = rescale_of(spec, k) * rescale_of(spec, q);
      const size_t j = static_cast<size_t>(k + q - 2);
      h(k - 1, q - 1) = ComplexL(gh[j] / r, 0.0L);
      s(k - 1, q - 1) = ComplexL(gs[j] / r, 0.0L);
    }
  }
}

// Toeplitz driver for real_time: entry (k,q) depends on the offset k-q only.
void fill_toeplitz(const BasisSpec& spec, const SpectralView& v, MatrixXcld& h, MatrixXcld& s) {
  const int d = spec.d;
  std::vector<ComplexL> ts(static_cast<size_t>(d));
  std::vector<ComplexL> th(static_cast<size_t>(d));
  for (int o = 0; o < d; ++o) {
    ComplexL as(0.0L, 0.0L), ah(0.0L, 0.0L);
    for (size_t m = 0; m < v.e.size(); ++m) {
      const long double x = v.e[m] - static_cast<long double>(spec.e0);
      const long double phase = x * static_cast<long double>(spec.delta_t) * o;
      const ComplexL z(std::cos(phase), std::sin(phase));
      as += v.w[m] * z;
      ah += v.w[m] * v.e[m] * z;
    }
    ts[static_cast<size_t>(o)] = as;
    th[static_cast<size_t>(o)] = ah;
  }
  h.setZero(d, d);
  s.setZero(d, d);
  for (int k = 0; k < d; ++k) {
    for (int q = 0; q < d; ++q) {
      const long double r = rescale_of(spec, k + 1) * rescale_of(spec, q + 1);
      const int o = k - q;
      const ComplexL vs = (o >= 0) ? ts[static_cast<size_t>(o)] : std::conj(ts[static_cast<size_t>(-o)]);
      const ComplexL vh = (o >= 0) ? th[static_cast<size_t>(o)] : std::conj(th[static_cast<size_t>(-o)]);
      s(k, q) = vs / r;
      h(k, q) = vh / r;
    }
  }
}

// Generic real driver (chebyshev_poly, filter_sinc): weighted Gram matrices
// of the filter values over the populated levels.
void fill_symmetric(const BasisSpec& spec, const SpectralView& v, MatrixXcld& h, MatrixXcld& s) {
  const int d = spec.d;
  const size_t n = v.e.size();
  MatrixXld f(n, d);
  for (size_t m = 0; m < n; ++m) {
    const long double x = v.e[m] - static_cast<long double>(spec.e0);
    for (int k = 1; k <= d; ++k) f(static_cast<Eigen::Index>(m), k - 1) = eval_f_l(spec, k, x).real();
  }
  h.setZero(d, d);
  s.setZero(d, d);
  for (int k = 0; k < d; ++k) {
    for (int q = k; q < d; ++q) {
      long double as = 0.0L, ah = 0.0L;
      for (size_t m = 0; m < n; ++m) {
        const long double p = v.w[m] * f(static_cast<Eigen::Index>(m), k) * f(static_cast<Eigen::Index>(m), q);
        as += p;
        ah += p * v.e[m];
      }
      s(k, q) = s(q, k) = ComplexL(as, 0.0L);
      h(k, q) = h(q, k) = ComplexL(ah, 0.0L);
    }
  }
}

KrylovMatricesHp build_hp_impl(const BasisSpec& spec, const SpectralDecomposition& sd,
                               bool drop_zero_weight) {
  validate_spec(spec, sd);
  const SpectralView v = make_view(sd, drop_zero_weight);
  KrylovMatricesHp out;
  out.structure = structure_of(spec.family);
  out.c_h = (spec.family == BasisFamily::gaussian_power) ? spec.h_tot : 1.0;
  out.c_s = 1.0;
  switch (out.structure) {
    case MatrixStructure::real_hankel:
      fill_hankel(spec, v, sd.ground_energy, out.h, out.s);
      break;
    case MatrixStructure::hermitian_toeplitz:
      fill_toeplitz(spec, v, out.h, out.s);
      break;
    case MatrixStructure::real_symmetric:
      fill_symmetric(spec, v, out.h, out.s);
      break;
    case MatrixStructure::dense:
      fill_symmetric(spec, v, out.h, out.s);
      break;
  }
  return out;
}

constexpr double kHpPencilFloor = 3e-17;

}  // namespace

const char* family_tag(BasisFamily family) {
  switch (family) {
    case BasisFamily::power: return "P";
    case BasisFamily::chebyshev_poly: return "CP";
    case BasisFamily::gaussian_power: return "GP";
    case BasisFamily::inverse_power: return "IP";
    case BasisFamily::imaginary_time: return "ITE";
    case BasisFamily::real_time: return "RTE";
    case BasisFamily::filter_sinc: return "F";
  }
  return "?";
}

std::optional<BasisFamily> family_from_tag(std::string_view tag) {
  for (BasisFamily f : all_families())
    if (tag == family_tag(f)) return f;
  return std::nullopt;
}

const std::vector<BasisFamily>& all_families() {
  static const std::vector<BasisFamily> fams = {
      BasisFamily::power,          BasisFamily::chebyshev_poly, BasisFamily::gaussian_power,
      BasisFamily::inverse_power,  BasisFamily::imaginary_time, BasisFamily::real_time,
      BasisFamily::filter_sinc};
  return fams;
}

MatrixStructure structure_of(BasisFamily family) {
  switch (family) {
    case BasisFamily::power:
    case BasisFamily::gaussian_power:
    case BasisFamily::inverse_power:
    case BasisFamily::imaginary_time:
      return MatrixStructure::real_hankel;
    case BasisFamily::chebyshev_poly:
    case BasisFamily::filter_sinc:
      return MatrixStructure::real_symmetric;
    case BasisFamily::real_time:
      return MatrixStructure::hermitian_toeplitz;
  }
  return MatrixStructure::dense;
}

const char* structure_tag(MatrixStructure s) {
  switch (s) {
    case MatrixStructure::real_hankel: return "real_hankel";
    case MatrixStructure::real_symmetric: return "real_symmetric";
    case MatrixStructure::hermitian_toeplitz: return "hermitian_toeplitz";
    case MatrixStructure::dense: return "dense";
  }
  return "?";
}

std::complex<double> eval_f(const BasisSpec& spec, int k, double x) {
  if (k < 1 || k > spec.d) throw std::invalid_argument("basis: state index out of range");
  const ComplexL z = eval_f_l(spec, k, static_cast<long double>(x));
  return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

KrylovMatricesHp build_matrices_hp(const BasisSpec& spec, const SpectralDecomposition& sd) {
  return build_hp_impl(spec, sd, false);
}

KrylovMatrices to_double(const KrylovMatricesHp& hp) {
  KrylovMatrices out;
  out.h = hp.h.cast<std::complex<double>>();
  out.s = hp.s.cast<std::complex<double>>();
  out.structure = hp.structure;
  out.c_h = hp.c_h;
  out.c_s = hp.c_s;
  return out;
}

KrylovMatrices build_matrices(const BasisSpec& spec, const SpectralDecomposition& sd) {
  return to_double(build_matrices_hp(spec, sd));
}

double subspace_error(const KrylovMatrices& km, double e_g) {
  const auto r = pencil_min_eig(km.h, km.s, 1e-12);
  return r.min_value - e_g;
}

double subspace_error_hp(const BasisSpec& spec, const SpectralDecomposition& sd) {
  const KrylovMatricesHp hp = build_hp_impl(spec, sd, false);
  const auto r = pencil_min_eig(hp.h, hp.s, kHpPencilFloor);
  return static_cast<double>(r.min_value - static_cast<long double>(sd.ground_energy));
}

double power_diag_error(const SpectralDecomposition& sd, int d) {
  if (d < 1) throw std::invalid_argument("basis: subspace dimension must be >= 1");
  const SpectralView v = make_view(sd, false);
  const long double e_g = static_cast<long double>(sd.ground_energy);
  long double num = 0.0L, den = 0.0L;
  for (size_t m = 0; m < v.e.size(); ++m) {
    const long double x = v.e[m] - e_g - 1.0L;
    const long double p = v.w[m] * std::pow(x * x, static_cast<long double>(d - 1));
    den += p;
    num += p * v.e[m];
  }
  if (!(den > 0.0L)) throw std::runtime_error("basis: degenerate diagnostic state");
  return static_cast<double>(num / den - e_g);
}

namespace {

// Energy error of the single diagnostic state used for width selection:
// |f(H)|phi> with f = f_1 (gaussian_power, filter_sinc) or f_d (imaginary_time),
// all anchored at e0 = E_g.
long double width_diag_error(BasisFamily family, const SpectralView& v, long double e_g, int d,
                             long double tau) {
  long double num = 0.0L, den = 0.0L;
  for (size_t m = 0; m < v.e.size(); ++m) {
    const long double x = v.e[m] - e_g;
    long double p2 = 1.0L;
    switch (family) {
      case BasisFamily::gaussian_power:
        p2 = std::exp(-x * x * tau * tau);
        break;
      case BasisFamily::filter_sinc: {
        const long double sv = sinc_l(x * tau);
        p2 = sv * sv;
        break;
      }
      case BasisFamily::imaginary_time:
        p2 = std::exp(-2.0L * tau * (d - 1) * x);
        break;
      default:
        throw std::invalid_argument("basis: width selection applies to GP, ITE and F only");
    }
    const long double p = v.w[m] * p2;
    den += p;
    num += p * v.e[m];
  }
  return num / den - e_g;
}

}  // namespace

TauSelection select_tau(BasisFamily family, const SpectralDecomposition& sd, int d, double eps_b,
                        double eps0) {
  if (family != BasisFamily::gaussian_power && family != BasisFamily::imaginary_time &&
      family != BasisFamily::filter_sinc)
    throw std::invalid_argument("basis: width selection applies to GP, ITE and F only");
  if (d < 1) throw std::invalid_argument("basis: subspace dimension must be >= 1");

  const bool gp = family == BasisFamily::gaussian_power;
  const long double lb = gp && d >= 2 ? std::sqrt((d - 1.0L) / static_cast<long double>(M_E)) : 0.0L;
  const long double ub = gp && d >= 2 ? std::sqrt(static_cast<long double>(d - 1)) /
                                             static_cast<long double>(eps0)
                                      : 0.0L;
  auto clip = [&](long double tau, bool flag) {
    TauSelection out;
    out.eps_b = eps_b;
    out.degenerate = flag;
    if (gp && d >= 2) {
      if (tau <= lb) {
        tau = lb * (1.0L + 1e-6L);
        out.degenerate = true;
      } else if (tau > ub) {
        tau = ub;
        out.degenerate = true;
      }
    }
    out.tau = static_cast<double>(tau);
    return out;
  };

  if (family == BasisFamily::imaginary_time && d == 1) return clip(1.0L, true);

  const SpectralView v = make_view(sd, true);
  const long double e_g = static_cast<long double>(sd.ground_energy);
  const long double target = static_cast<long double>(std::max(eps_b, 1e-15));
  auto g = [&](long double tau) { return width_diag_error(family, v, e_g, d, tau); };

  if (g(0.0L) <= target) return clip(lb > 0.0L ? lb : 1e-8L, true);

  long double hi = 1.0L;
  int guard = 0;
  while (g(hi) > target) {
    hi *= 2.0L;
    if (++guard > 200) return clip(hi, true);
  }
  long double lo = hi / 2.0L;
  if (guard == 0) lo = 0.0L;  // root below tau = 1
  for (int it = 0; it < 200 && (hi - lo) > 1e-12L * hi; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (g(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return clip(0.5L * (lo + hi), false);
}

GridSearchResult grid_search_param(BasisFamily family, const SpectralDecomposition& sd, int d,
                                   double tau) {
  if (family != BasisFamily::real_time && family != BasisFamily::filter_sinc)
    throw std::invalid_argument("basis: grid search applies to RTE and F only");
  if (family == BasisFamily::filter_sinc && !(tau > 0.0))
    throw std::invalid_argument("basis: grid search for F requires the selected width");

  BasisSpec spec;
  spec.family = family;
  spec.d = d;
  spec.e0 = sd.ground_energy;
  spec.tau = tau;

  GridSearchResult best;
  best.eps_k = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    double param;
    if (family == BasisFamily::real_time) {
      param = static_cast<double>(i) * 2.0 * static_cast<double>(kPi) / 100.0;
      spec.delta_t = param;
    } else {
      param = static_cast<double>(i) * 2.0 / (100.0 * d);
      spec.delta_e = param;
    }
    const KrylovMatricesHp hp = build_hp_impl(spec, sd, true);
    double eps;
    try {
      const auto r = pencil_min_eig(hp.h, hp.s, kHpPencilFloor);
      eps = static_cast<double>(r.min_value - static_cast<long double>(sd.ground_energy));
    } catch (const std::runtime_error&) {
      continue;  // fully degenerate grid point
    }
    if (eps < best.eps_k) {
      best.eps_k = eps;
      best.param = param;
    }
  }
  if (!std::isfinite(best.eps_k))
    throw std::runtime_error("basis: parameter grid produced no solvable subspace");
  return best;
}

}  // namespace qksd
