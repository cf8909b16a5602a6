#include "qksd/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace qksd {

namespace {

void require_structure(const KrylovMatrices& km, MatrixStructure wanted, const char* what) {
  if (km.structure != wanted)
    throw std::invalid_argument(std::string("noise: ") + what +
                                " protocol requires matrices tagged " + structure_tag(wanted));
}

// Independent complex Gaussian on every entry, Hermitian by mirroring the
// upper triangle (diagonal noise purely real).
void add_independent(Eigen::MatrixXcd& m, double std_dev, Rng& rng) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index k = 0; k < d; ++k) {
    m(k, k) += std::complex<double>(std_dev * rng.normal(), 0.0);
    for (Eigen::Index q = k + 1; q < d; ++q) {
      const std::complex<double> z(std_dev * rng.normal(), std_dev * rng.normal());
      m(k, q) += z;
      m(q, k) += std::conj(z);
    }
  }
}

// One real Gaussian per anti-diagonal k+q.
void add_hankel(Eigen::MatrixXcd& m, double std_dev, Rng& rng) {
  const Eigen::Index d = m.rows();
  std::vector<double> g(static_cast<size_t>(2 * d - 1));
  for (auto& v : g) v = std_dev * rng.normal();
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index q = 0; q < d; ++q) m(k, q) += g[static_cast<size_t>(k + q)];
}

// One real Gaussian per unordered index pair.
void add_symmetric(Eigen::MatrixXcd& m, double std_dev, Rng& rng) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index q = k; q < d; ++q) {
      const double v = std_dev * rng.normal();
      m(k, q) += v;
      if (q != k) m(q, k) += v;
    }
  }
}

// One complex Gaussian per offset k-q (offset zero real), Hermitian.
void add_toeplitz(Eigen::MatrixXcd& m, double std_dev, Rng& rng) {
  const Eigen::Index d = m.rows();
  std::vector<std::complex<double>> g(static_cast<size_t>(d));
  g[0] = std::complex<double>(std_dev * rng.normal(), 0.0);
  for (Eigen::Index o = 1; o < d; ++o)
    g[static_cast<size_t>(o)] = std::complex<double>(std_dev * rng.normal(), std_dev * rng.normal());
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index q = 0; q < d; ++q) {
      const Eigen::Index o = k - q;
      m(k, q) += (o >= 0) ? g[static_cast<size_t>(o)] : std::conj(g[static_cast<size_t>(-o)]);
    }
  }
}

}  // namespace

KrylovMatrices draw_noisy(const KrylovMatrices& km, ProtocolKind kind, double m, Rng& rng) {
  if (!(m > 0.0)) throw std::invalid_argument("noise: sample count must be positive");
  KrylovMatrices out = km;
  const double std_h = km.c_h / std::sqrt(m);
  const double std_s = km.c_s / std::sqrt(m);
  switch (kind) {
    case ProtocolKind::im_chebyshev:
    case ProtocolKind::im_hoeffding:
      add_independent(out.h, std_h, rng);
      add_independent(out.s, std_s, rng);
      break;
    case ProtocolKind::cm_real_hankel:
      require_structure(km, MatrixStructure::real_hankel, "collective hankel");
      add_hankel(out.h, std_h, rng);
      add_hankel(out.s, std_s, rng);
      break;
    case ProtocolKind::cm_real_symmetric:
      require_structure(km, MatrixStructure::real_symmetric, "collective symmetric");
      add_symmetric(out.h, std_h, rng);
      add_symmetric(out.s, std_s, rng);
      break;
    case ProtocolKind::cm_complex_toeplitz:
      require_structure(km, MatrixStructure::hermitian_toeplitz, "collective toeplitz");
      add_toeplitz(out.h, std_h, rng);
      add_toeplitz(out.s, std_s, rng);
      break;
  }
  return out;
}

const char* eta_rule_tag(EtaRule rule) {
  switch (rule) {
    case EtaRule::table2: return "table2";
    case EtaRule::threshold10: return "threshold10";
  }
  return "?";
}

namespace {

TrialRecord run_trial(const KrylovMatrices& km, ProtocolKind kind, double m, int trial,
                      double e_g, double epsilon, double kappa, EtaRule rule, Rng& trial_rng) {
  TrialRecord rec;
  rec.m = m;
  rec.trial = trial;
  KrylovMatrices noisy = draw_noisy(km, kind, m, trial_rng);
  try {
    Solution sol;
    if (rule == EtaRule::table2) {
      Protocol p;
      p.kind = kind;
      const int d = static_cast<int>(km.s.rows());
      sol = solve_regularised(noisy, p.eta_for(d, m, kappa));
    } else {
      sol = solve_thresholded(noisy, 10.0 * km.c_s / std::sqrt(m));
    }
    rec.e_hat = sol.e_min;
    rec.solved = true;
    rec.success = std::abs(sol.e_min - e_g) <= epsilon;
  } catch (const std::runtime_error&) {
    rec.solved = false;
    rec.success = false;
  }
  return rec;
}

}  // namespace

NecessaryMResult necessary_measurement(const KrylovMatrices& km, ProtocolKind kind, double e_g,
                                       double epsilon, double kappa, int trials, EtaRule rule,
                                       Rng& rng, double m_floor, double m_ceiling) {
  if (trials < 100) throw std::invalid_argument("noise: at least 100 trials per grid point");
  if (!(epsilon > 0.0)) throw std::invalid_argument("noise: accuracy target must be positive");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("noise: failure probability must lie in (0, 1)");
  if (!(m_floor > 0.0) || !(m_ceiling > m_floor))
    throw std::invalid_argument("noise: invalid sample grid bounds");

  NecessaryMResult out;
  out.epsilon = epsilon;
  out.kappa = kappa;
  out.trials = trials;
  const int needed = static_cast<int>(std::ceil((1.0 - kappa) * trials));
  const double ratio = std::sqrt(10.0);

  int grid_index = 0;
  for (double m = m_floor; m <= m_ceiling * (1.0 + 1e-12); m *= ratio, ++grid_index) {
    Rng point_rng = rng.child(static_cast<std::uint64_t>(grid_index));
    int successes = 0;
    for (int t = 0; t < trials; ++t) {
      Rng trial_rng = point_rng.child(static_cast<std::uint64_t>(t));
      TrialRecord rec = run_trial(km, kind, m, t, e_g, epsilon, kappa, rule, trial_rng);
      successes += rec.success ? 1 : 0;
      out.records.push_back(std::move(rec));
    }
    out.successes_per_m.emplace_back(m, successes);
    if (successes >= needed) {
      out.m_necessary = m;
      out.found = true;
      break;
    }
  }
  return out;
}

SufficiencyResult sufficiency_check(const KrylovMatrices& km, const Protocol& protocol, double e_g,
                                    double epsilon, double kappa, int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("noise: at least one trial");
  SufficiencyResult out;
  out.trials = trials;
  out.eta = solve_eta(km, e_g, epsilon);
  const int d = static_cast<int>(km.s.rows());
  out.m_per_part = protocol.m_for(d, out.eta, kappa);
  out.m_total = out.m_per_part * protocol.entries_factor(d);

  int in_range = 0, variational = 0;
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng = rng.child(static_cast<std::uint64_t>(t));
    TrialRecord rec;
    rec.m = out.m_per_part;
    rec.trial = t;
    KrylovMatrices noisy = draw_noisy(km, protocol.kind, out.m_per_part, trial_rng);
    try {
      Solution sol = solve_regularised(noisy, out.eta);
      rec.e_hat = sol.e_min;
      rec.solved = true;
      rec.success = sol.e_min >= e_g && sol.e_min <= e_g + epsilon;
    } catch (const std::runtime_error&) {
      rec.solved = false;
    }
    if (rec.solved) {
      in_range += rec.success ? 1 : 0;
      variational += (rec.e_hat >= e_g) ? 1 : 0;
    }
    out.records.push_back(std::move(rec));
  }
  out.fraction_in_range = static_cast<double>(in_range) / trials;
  out.fraction_variational = static_cast<double>(variational) / trials;
  return out;
}

}  // namespace qksd
