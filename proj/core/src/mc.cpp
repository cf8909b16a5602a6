#include "qksd/mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qksd/statevector.hpp"

namespace qksd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Index of the coefficient-weighted term: P(j) = |h_j| / h_tot.
size_t draw_term(const PauliSum& h, double h_tot, Rng& rng) {
  const auto& terms = h.terms();
  double u = rng.uniform() * h_tot;
  for (size_t j = 0; j < terms.size(); ++j) {
    u -= std::abs(terms[j].coeff);
    if (u <= 0.0) return j;
  }
  return terms.size() - 1;
}

// Order draw for the Taylor remainder: k with probability proportional to
// y^k / k! restricted to k >= 2, by direct CDF inversion. Rejection sampling
// would need ~2/y^2 attempts for small y.
int draw_remainder_order(double y, Rng& rng) {
  if (y > 500.0) throw std::runtime_error("mc: remainder mean too large to sample");
  const double total = std::expm1(y) - y;  // sum_{k>=2} y^k / k!
  const double target = rng.uniform() * total;
  int k = 2;
  double term = 0.5 * y * y;
  double cum = term;
  while (cum < target && k < 1000) {
    ++k;
    term *= y / k;
    cum += term;
  }
  return k;
}

}  // namespace

LcuTerm lor_sample(const PauliSum& h, double dt, Rng& rng) {
  if (h.terms().empty()) throw std::invalid_argument("mc: empty operator");
  const double h_tot = h.h_tot();
  if (!(h_tot > 0.0)) throw std::invalid_argument("mc: zero coefficient norm");

  LcuTerm out;
  const double c = cost_c(dt, h_tot);
  out.importance = c;
  const double y = h_tot * std::abs(dt);
  const double p_leading = std::sqrt(1.0 + y * y) / c;

  if (rng.uniform() < p_leading) {
    // Rotation part: 1 - i H dt as an average of Pauli rotations.
    const size_t j = draw_term(h, h_tot, rng);
    const auto& term = h.terms()[j];
    const double phi = std::atan(y);
    const double beta = (y > 0.0) ? std::abs(term.coeff) * std::abs(dt) / std::sin(phi)
                                  : std::abs(term.coeff) / h_tot;
    LcuFactor f;
    f.op = term.op;
    f.is_rotation = true;
    f.angle = phi;
    f.sign = ((term.coeff < 0.0) != (dt < 0.0)) ? -1 : 1;
    out.factors.push_back(f);
    out.coefficient = beta;
  } else {
    // Taylor remainder: strings of order >= 2 with coefficient
    // prod_a (-i h_{j_a} dt) / k!.
    const int k = draw_remainder_order(y, rng);
    std::complex<double> coeff = 1.0;
    long double fact = 1.0L;
    for (int a = 2; a <= k; ++a) fact *= a;
    coeff /= static_cast<double>(fact);
    PauliString prod;  // identity
    for (int a = 0; a < k; ++a) {
      const size_t j = draw_term(h, h_tot, rng);
      const auto& term = h.terms()[j];
      coeff *= std::complex<double>(0.0, -1.0) * term.coeff * dt;
      prod = term.op * prod;  // V <- V * sigma with new factors on the left
    }
    // Fold the accumulated string phase into the coefficient so the factor
    // stays a canonical Hermitian Pauli.
    coeff *= prod.phase();
    prod.phase_exp = 0;
    LcuFactor f;
    f.op = prod;
    f.is_rotation = false;
    out.factors.push_back(f);
    out.coefficient = coeff;
  }
  return out;
}

LcuTerm rte_sample(const PauliSum& h, double t, int n_steps, Rng& rng) {
  if (n_steps < 1) throw std::invalid_argument("mc: step count must be positive");
  LcuTerm out;
  out.coefficient = 1.0;
  out.importance = 1.0;
  for (int s = 0; s < n_steps; ++s) {
    LcuTerm step = lor_sample(h, t / n_steps, rng);
    out.coefficient *= step.coefficient;
    // Keep only the phase of the running product. The raw modulus shrinks
    // geometrically with the step count (one |h_j| / h_tot factor per step)
    // and underflows to zero long before the step counts used in practice,
    // which would silently destroy the phase. The modulus is redundant:
    // step-wise, |coefficient| / P(draw) equals cost_c exactly, so
    // `importance` already carries it.
    const double mod = std::abs(out.coefficient);
    if (mod > 0.0) out.coefficient /= mod;
    out.importance *= step.importance;
    for (auto& f : step.factors) out.factors.push_back(std::move(f));
  }
  return out;
}

Eigen::VectorXcd apply_factors(const LcuTerm& term, const Eigen::VectorXcd& state) {
  Eigen::VectorXcd cur = state;
  Eigen::VectorXcd next(state.size());
  for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
    if (it->is_rotation)
      apply_pauli_rotation(it->sign, it->angle, it->op, cur, next);
    else
      apply_pauli(it->op, cur, next);
    cur.swap(next);
  }
  return cur;
}

Eigen::MatrixXcd term_matrix(const LcuTerm& term, int n_qubits) {
  if (n_qubits < 1 || n_qubits > 12) throw std::invalid_argument("mc: dense matrix qubit range");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Eigen::MatrixXcd u(dim, dim);
  Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    basis.setZero();
    basis(c) = 1.0;
    u.col(c) = apply_factors(term, basis);
  }
  return u;
}

std::complex<double> term_overlap(const LcuTerm& term, const Eigen::VectorXcd& state) {
  const Eigen::VectorXcd applied = apply_factors(term, state);
  if (std::abs(applied.norm() - state.norm()) > 1e-9)
    throw std::runtime_error("mc: non-unitary factor detected");
  return state.dot(applied);  // Eigen's dot conjugates the left argument
}

HadamardOutcome hadamard_test(const LcuTerm& term, const Eigen::VectorXcd& state, Rng& rng) {
  const std::complex<double> z = term_overlap(term, state);
  HadamardOutcome o;
  o.mu_x = (rng.uniform() < 0.5 * (1.0 + z.real())) ? 1 : -1;
  o.mu_y = (rng.uniform() < 0.5 * (1.0 + z.imag())) ? 1 : -1;
  return o;
}

GpBasisSampler::GpBasisSampler(const PauliSum& h, int k, double e0, double tau, int n_steps,
                               int table_cells)
    : h_(&h), e0_(e0), density_(k, tau, h.h_tot(), n_steps) {
  if (table_cells < 16) throw std::invalid_argument("mc: density table too small");
  const double t_max = density_.t_max();
  const int n = table_cells;
  edges_.resize(static_cast<size_t>(n) + 1);
  cdf_.resize(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) edges_[static_cast<size_t>(i)] = -t_max + 2.0 * t_max * i / n;
  // 5-point Gauss-Legendre mass per cell.
  static const double gl_x[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                 0.538469310105683, 0.906179845938664};
  static const double gl_w[5] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                                 0.478628670499366, 0.236926885056189};
  cdf_[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = edges_[static_cast<size_t>(i)];
    const double b = edges_[static_cast<size_t>(i) + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double mass = 0.0;
    for (int g = 0; g < 5; ++g) mass += gl_w[g] * density_(mid + half * gl_x[g]);
    mass *= half;
    cdf_[static_cast<size_t>(i) + 1] = cdf_[static_cast<size_t>(i)] + mass;
  }
  if (!(cdf_.back() > 0.0)) throw std::runtime_error("mc: degenerate time density");
}

double GpBasisSampler::tabulated_density(double t) const {
  if (t < edges_.front() || t >= edges_.back()) return 0.0;
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
  const size_t cell = static_cast<size_t>(std::distance(edges_.begin(), it)) - 1;
  const double width = edges_[cell + 1] - edges_[cell];
  return (cdf_[cell + 1] - cdf_[cell]) / width;
}

GpSample GpBasisSampler::sample(Rng& rng) const {
  // Inverse-CDF draw of the evolution time (piecewise-uniform density).
  const double target = rng.uniform() * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  size_t cell = (it == cdf_.begin()) ? 0 : static_cast<size_t>(std::distance(cdf_.begin(), it)) - 1;
  cell = std::min(cell, edges_.size() - 2);
  const double mass = cdf_[cell + 1] - cdf_[cell];
  const double frac = (mass > 0.0) ? (target - cdf_[cell]) / mass : 0.5;
  const double t = edges_[cell] + frac * (edges_[cell + 1] - edges_[cell]);
  // Normalised sampling density of the drawn time (cell mass / width / total).
  const double p_sample = mass / ((edges_[cell + 1] - edges_[cell]) * cdf_.back());

  GpSample out;
  out.t = t;
  out.term = rte_sample(*h_, t, density_.n_steps(), rng);

  // Scalar prefactor i^{k-1} (sqrt2 tau)^{-(k-1)} H_{k-1}(t/(sqrt2 tau))
  // g_tau(t) e^{i e0 t}.
  const int n = density_.k() - 1;
  const long double tl = static_cast<long double>(density_.tau());
  const long double sqrt2 = 1.41421356237309504880168872420969808L;
  const long double herm = hermite_l(n, static_cast<long double>(t) / (sqrt2 * tl));
  const long double gauss = std::exp(-static_cast<long double>(t) * t / (2.0L * tl * tl)) /
                            (tl * std::sqrt(2.0L * 3.14159265358979323846264338327950288L));
  const long double mag = std::pow(sqrt2 * tl, static_cast<long double>(-n)) * herm * gauss;
  std::complex<double> pref(static_cast<double>(mag), 0.0);
  switch (n & 3) {  // i^{k-1}
    case 1: pref *= std::complex<double>(0.0, 1.0); break;
    case 2: pref *= -1.0; break;
    case 3: pref *= std::complex<double>(0.0, -1.0); break;
    default: break;
  }
  pref *= std::complex<double>(std::cos(e0_ * t), std::sin(e0_ * t));

  out.term.coefficient *= pref;
  // Unit-modulus phase convention (see rte_sample): the contribution of a
  // draw divided by its probability is importance * coefficient * factors.
  const double cmod = std::abs(out.term.coefficient);
  if (cmod > 0.0) out.term.coefficient /= cmod;
  // |true coefficient| / P(t, circuit); the circuit part contributes c^N
  // exactly, the time draw the exact-to-tabulated density ratio.
  out.term.importance = out.term.importance * std::abs(pref) / p_sample;
  return out;
}

EntryEstimate estimate_entry(EntryKind kind, const PauliSum& h, const GpBasisSampler& fk,
                             const GpBasisSampler& fq, const Eigen::VectorXcd& reference,
                             long long shots, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("mc: at least one shot");
  const double h_tot = h.h_tot();
  const double cost = (kind == EntryKind::hamiltonian ? h_tot : 1.0) * fk.cost() * fq.cost();

  std::complex<double> acc = 0.0;
  double imp_k = 0.0, imp_q = 0.0;
  for (long long s = 0; s < shots; ++s) {
    const GpSample sk = fk.sample(rng);
    const GpSample sq = fq.sample(rng);
    // Normalise each side before combining: the two coefficients can sit many
    // decades below 1, and multiplying them first can underflow the product
    // to zero and lose the phase, which is the only part the estimator uses.
    const double mk = std::abs(sk.term.coefficient);
    const double mq = std::abs(sq.term.coefficient);
    std::complex<double> weight =
        (mk > 0.0 ? std::conj(sk.term.coefficient) / mk : std::complex<double>(1.0, 0.0)) *
        (mq > 0.0 ? sq.term.coefficient / mq : std::complex<double>(1.0, 0.0));

    LcuTerm circuit;
    circuit.factors.reserve(sk.term.factors.size() + sq.term.factors.size() + 1);
    for (auto it = sk.term.factors.rbegin(); it != sk.term.factors.rend(); ++it) {
      LcuFactor f = *it;  // dagger: reverse order, flip rotation signs
      if (f.is_rotation) f.sign = -f.sign;
      circuit.factors.push_back(std::move(f));
    }
    if (kind == EntryKind::hamiltonian) {
      const size_t j = draw_term(h, h_tot, rng);
      weight *= h.terms()[j].coeff;
      LcuFactor f;
      f.op = h.terms()[j].op;
      circuit.factors.push_back(std::move(f));
    }
    for (const auto& f : sq.term.factors) circuit.factors.push_back(f);

    const HadamardOutcome o = hadamard_test(circuit, reference, rng);
    const double mod = std::abs(weight);
    const std::complex<double> phase = (mod > 0.0) ? weight / mod : std::complex<double>(1.0, 0.0);
    acc += phase * std::complex<double>(o.mu_x, o.mu_y);
    imp_k += sk.term.importance;
    imp_q += sq.term.importance;
  }

  EntryEstimate out;
  out.shots = shots;
  out.cost_factor = cost;
  out.value = acc * (cost / static_cast<double>(shots));
  // Every shot has squared modulus 2 cost^2; the population variance is
  // 2 cost^2 - |mean|^2.
  out.per_shot_variance = 2.0 * cost * cost - std::norm(out.value);
  out.std_error = std::sqrt(std::max(out.per_shot_variance, 0.0) / static_cast<double>(shots));
  out.mean_importance_k = imp_k / static_cast<double>(shots);
  out.mean_importance_q = imp_q / static_cast<double>(shots);
  return out;
}

}  // namespace qksd
