#pragma once

#include <vector>

#include "qksd/cost.hpp"
#include "qksd/rng.hpp"
#include "qksd/solver.hpp"

namespace qksd {

// One synthetic measurement outcome: the matrix pair plus Gaussian estimation
// noise with per-part standard deviations c_h/sqrt(M) and c_s/sqrt(M).
// Collective protocols share one noise variable per repeated structural value
// (anti-diagonal, unordered pair, offset); independent protocols draw every
// entry separately.  Hermiticity is preserved in all cases.
KrylovMatrices draw_noisy(const KrylovMatrices& km, ProtocolKind kind, double m, Rng& rng);

enum class EtaRule {
  table2,       // regularised solve, eta = protocol deviation bound at M
  threshold10,  // thresholded solve, threshold = 10 c_s / sqrt(M)
};

const char* eta_rule_tag(EtaRule rule);

struct TrialRecord {
  double m = 0.0;       // per-part samples
  int trial = 0;
  double e_hat = 0.0;
  bool success = false;  // |e_hat - e_g| <= epsilon
  bool solved = false;   // solver produced an estimate at all
};

struct NecessaryMResult {
  double m_necessary = 0.0;  // smallest grid M reaching the success target
  bool found = false;
  double epsilon = 0.0;
  double kappa = 0.0;
  int trials = 0;
  std::vector<TrialRecord> records;
  std::vector<std::pair<double, int>> successes_per_m;
};

// Scan M over a sqrt(10)-ratio geometric grid until at least
// ceil((1-kappa) * trials) of the noisy solves land within epsilon of e_g.
NecessaryMResult necessary_measurement(const KrylovMatrices& km, ProtocolKind kind, double e_g,
                                       double epsilon, double kappa, int trials, EtaRule rule,
                                       Rng& rng, double m_floor = 1.0, double m_ceiling = 1e30);

struct SufficiencyResult {
  double eta = 0.0;
  double m_per_part = 0.0;
  double m_total = 0.0;
  int trials = 0;
  double fraction_in_range = 0.0;    // e_hat in [e_g, e_g + epsilon]
  double fraction_variational = 0.0; // e_hat >= e_g
  std::vector<TrialRecord> records;
};

// Forward check of the budget rule: eta from the regulariser solve at the
// target accuracy, M from the protocol's deviation bound, then the success
// fractions over noisy trials.
SufficiencyResult sufficiency_check(const KrylovMatrices& km, const Protocol& protocol, double e_g,
                                    double epsilon, double kappa, int trials, Rng& rng);

}  // namespace qksd
