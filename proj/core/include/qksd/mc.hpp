#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qksd/gp_cost.hpp"
#include "qksd/pauli.hpp"
#include "qksd/rng.hpp"

namespace qksd {

// One unitary factor of a sampled circuit: a Pauli rotation
// exp(-i sign angle op) or a bare Pauli string.
struct LcuFactor {
  PauliString op;
  double angle = 0.0;  // rotations only
  int sign = 1;        // rotations only
  bool is_rotation = false;
};

// One sampled term of a unitary decomposition.  The represented contribution
// is coefficient * factors[0] * factors[1] * ... (matrix product order).
// `importance` is |coefficient| divided by the draw probability; for every
// sampler here it is a deterministic function of the draw parameters
// (the decomposition 1-norm), which is what makes phase-only estimators work.
// Multi-step samplers renormalise `coefficient` to unit modulus as the
// product accumulates (the raw modulus underflows for long circuits); the
// contribution of a draw divided by its probability is then
// importance * coefficient * factors.
struct LcuTerm {
  std::complex<double> coefficient{1.0, 0.0};
  std::vector<LcuFactor> factors;
  double importance = 1.0;
};

// One step of the leading-order-rotation decomposition of 1 - i H dt plus the
// Taylor remainder of exp(-i H dt); importance equals cost_c(dt, h_tot).
LcuTerm lor_sample(const PauliSum& h, double dt, Rng& rng);

// N-step decomposition of exp(-i H t); importance equals cost_c(t/N, h_tot)^N
// and the returned coefficient is the unit-modulus phase of the step product.
LcuTerm rte_sample(const PauliSum& h, double t, int n_steps, Rng& rng);

// factors[0] * ... * factors[L-1] |state> (coefficient not applied).
Eigen::VectorXcd apply_factors(const LcuTerm& term, const Eigen::VectorXcd& state);

// Dense matrix of the factor product (small qubit counts; diagnostics).
Eigen::MatrixXcd term_matrix(const LcuTerm& term, int n_qubits);

// <state| factors |state>.  Throws if the factor product drifts the state
// norm by more than 1e-9 (a non-unitary factor slipped in).
std::complex<double> term_overlap(const LcuTerm& term, const Eigen::VectorXcd& state);

struct HadamardOutcome {
  int mu_x = 1;
  int mu_y = 1;
};

// One-shot X- and Y-basis Hadamard tests of <state|factors|state>.
HadamardOutcome hadamard_test(const LcuTerm& term, const Eigen::VectorXcd& state, Rng& rng);

struct GpSample {
  LcuTerm term;  // full sampled contribution to f_k(H), prefactor included
  double t = 0.0;
};

// Sampler of the k-th Gaussian-damped power-basis state f_k(H)|phi>:
// the evolution time is drawn from the |Hermite| x Gaussian x cost density
// (tabulated inverse CDF), the circuit from the N-step decomposition.
class GpBasisSampler {
 public:
  GpBasisSampler(const PauliSum& h, int k, double e0, double tau, int n_steps,
                 int table_cells = 8192);

  GpSample sample(Rng& rng) const;

  double cost() const { return density_.integral(); }  // c_k
  double density(double t) const { return density_(t); }
  double tabulated_density(double t) const;
  int k() const { return density_.k(); }
  double tau() const { return density_.tau(); }
  double e0() const { return e0_; }
  int n_steps() const { return density_.n_steps(); }

 private:
  const PauliSum* h_;
  double e0_;
  GpTimeDensity density_;
  std::vector<double> edges_;  // cell edges over [-t_max, t_max]
  std::vector<double> cdf_;    // cumulative cell masses, cdf_.back() ~ c_k
};

enum class EntryKind { hamiltonian, overlap };

struct EntryEstimate {
  std::complex<double> value;
  double cost_factor = 0.0;        // h_tot c_k c_q (H) or c_k c_q (S)
  double per_shot_variance = 0.0;  // population variance of the complex shots
  double std_error = 0.0;          // sqrt(variance / shots)
  long long shots = 0;
  double mean_importance_k = 0.0;  // should match c_k
  double mean_importance_q = 0.0;  // should match c_q
};

// Shot-by-shot estimator of the unrescaled subspace matrix entry
// <phi| f_k(H)^dag [H] f_q(H) |phi> via single-shot Hadamard tests.
EntryEstimate estimate_entry(EntryKind kind, const PauliSum& h, const GpBasisSampler& fk,
                             const GpBasisSampler& fq, const Eigen::VectorXcd& reference,
                             long long shots, Rng& rng);

}  // namespace qksd
