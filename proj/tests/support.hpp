#pragma once

// Shared oracle helpers for the unit tests. Everything here is written
// independently of the library's own computation paths (dense matrices are
// assembled via single-operator statevector application, fermionic models are
// built directly in the occupation-number basis) so the tests compare two
// genuinely different routes to the same numbers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qksd/lattice.hpp"
#include "qksd/pauli.hpp"
#include "qksd/statevector.hpp"

namespace qksd::test {

// Dense matrix of a Pauli sum assembled column-by-column through the
// matrix-free statevector path (independent of PauliSum::dense()).
inline Eigen::MatrixXcd dense_by_columns(const PauliSum& h) {
  const Eigen::Index dim = Eigen::Index(1) << h.n_qubits();
  Eigen::MatrixXcd m(dim, dim);
  Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(dim);
  Eigen::VectorXcd out(dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    basis.setZero();
    basis(c) = 1.0;
    apply_pauli_sum(h, basis, out);
    m.col(c) = out;
  }
  return m;
}

struct Eigh {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns
};

inline Eigh eigh(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  return {es.eigenvalues(), es.eigenvectors()};
}

// Sorted eigenvalues of a Hermitian matrix.
inline Eigen::VectorXd spectrum_of(const Eigen::MatrixXcd& m) { return eigh(m).values; }

// ---- brute-force fermions -------------------------------------------------
//
// Annihilation operator for mode p on the occupation-number basis (bit p of
// the basis index is the occupancy of mode p), with the standard
// antisymmetric sign (-1)^{sum_{q<p} n_q}.
inline Eigen::MatrixXd fermion_annihilator(int n_modes, int p) {
  const Eigen::Index dim = Eigen::Index(1) << n_modes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  const std::uint64_t mask_below = (std::uint64_t(1) << p) - 1;
  for (std::uint64_t n = 0; n < static_cast<std::uint64_t>(dim); ++n) {
    if (!((n >> p) & 1)) continue;
    const int sign = (std::uint64_t(__builtin_popcountll(n & mask_below)) & 1) ? -1 : 1;
    a(static_cast<Eigen::Index>(n ^ (std::uint64_t(1) << p)), static_cast<Eigen::Index>(n)) =
        sign;
  }
  return a;
}

// Hubbard Hamiltonian assembled from the fermionic operators directly:
// modes are 2*site + spin, hopping -j sum_{edges,spin} (a^T_p a_q + h.c.),
// interaction u sum_site (n_up - 1/2)(n_dn - 1/2).
inline Eigen::MatrixXd fock_hubbard_dense(const Lattice& lattice, double j, double u) {
  const int n_modes = 2 * lattice.spec.size;
  const Eigen::Index dim = Eigen::Index(1) << n_modes;
  std::vector<Eigen::MatrixXd> a;
  a.reserve(static_cast<std::size_t>(n_modes));
  for (int p = 0; p < n_modes; ++p) a.push_back(fermion_annihilator(n_modes, p));

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [s, t] : lattice.edges) {
    for (int spin = 0; spin < 2; ++spin) {
      const auto& ap = a[static_cast<std::size_t>(2 * s + spin)];
      const auto& aq = a[static_cast<std::size_t>(2 * t + spin)];
      h -= j * (ap.transpose() * aq + aq.transpose() * ap);
    }
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
  for (int site = 0; site < lattice.spec.size; ++site) {
    const auto& up = a[static_cast<std::size_t>(2 * site)];
    const auto& dn = a[static_cast<std::size_t>(2 * site + 1)];
    h += u * (up.transpose() * up - 0.5 * id) * (dn.transpose() * dn - 0.5 * id);
  }
  return h;
}

// ---- statistics ------------------------------------------------------------

// Kolmogorov-Smirnov statistic of samples against a reference CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // population variance
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size());
  return {m, v};
}

}  // namespace qksd::test
