#include "qksd/exact.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "qksd/statevector.hpp"

namespace qksd {

namespace {

// Absolute tolerance for ground-level degeneracy, relative to the energy scale.
double degeneracy_tol(const Eigen::VectorXd& energies) {
  const double scale = std::max(1.0, energies.cwiseAbs().maxCoeff());
  return 1e-9 * scale;
}

SpectralDecomposition finish(Eigen::VectorXd energies, Eigen::VectorXd weights) {
  SpectralDecomposition sd;
  sd.ground_energy = energies(0);
  const double tol = degeneracy_tol(energies);
  double pg = 0.0;
  double gap = 0.0;
  for (Eigen::Index m = 0; m < energies.size(); ++m) {
    if (energies(m) - sd.ground_energy <= tol) {
      pg += weights(m);
    } else {
      gap = energies(m) - sd.ground_energy;
      break;
    }
  }
  sd.energies = std::move(energies);
  sd.weights = std::move(weights);
  sd.p_g = pg;
  sd.gap = gap;
  return sd;
}

}  // namespace

SpectralDecomposition diagonalise(const PauliSum& h, const Eigen::VectorXcd& ref) {
  const Eigen::Index dim = Eigen::Index(1) << h.n_qubits();
  if (ref.size() != dim)
    throw std::invalid_argument("diagonalise: reference dimension does not match qubit count");
  if (std::abs(ref.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("diagonalise: reference state is not normalised");

  Eigen::VectorXd energies;
  Eigen::VectorXd weights(dim);
  if (h.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense_real());
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalise: eigensolver failed");
    energies = es.eigenvalues();
    // columns are real; overlap with a complex reference
    for (Eigen::Index m = 0; m < dim; ++m) {
      const std::complex<double> ov = es.eigenvectors().col(m).cast<std::complex<double>>().dot(ref);
      weights(m) = std::norm(ov);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalise: eigensolver failed");
    energies = es.eigenvalues();
    for (Eigen::Index m = 0; m < dim; ++m) weights(m) = std::norm(es.eigenvectors().col(m).dot(ref));
  }
  return finish(std::move(energies), std::move(weights));
}

double spectral_norm(const PauliSum& h) {
  if (h.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense_real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LanczosResult lanczos_ritz(const PauliSum& h, const Eigen::VectorXcd& ref, int d) {
  const Eigen::Index dim = Eigen::Index(1) << h.n_qubits();
  if (d < 1) throw std::invalid_argument("lanczos_ritz: d must be at least 1");
  if (d > dim) throw std::invalid_argument("lanczos_ritz: d exceeds the Hilbert space dimension");
  if (ref.size() != dim)
    throw std::invalid_argument("lanczos_ritz: reference dimension does not match qubit count");
  if (std::abs(ref.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("lanczos_ritz: reference state is not normalised");

  std::vector<Eigen::VectorXcd> basis;
  basis.reserve(static_cast<std::size_t>(d));
  basis.push_back(ref);
  std::vector<double> alpha, beta;  // tridiagonal entries
  bool truncated = false;

  Eigen::VectorXcd w;
  for (int j = 0; j < d; ++j) {
    apply_pauli_sum(h, basis.back(), w);
    alpha.push_back(w.dot(basis.back()).real() /* = <v_j|H|v_j> */);
    if (j + 1 == d) break;
    // full reorthogonalisation, two passes for stability
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& v : basis) w -= v.dot(w) * v;
    }
    const double b = w.norm();
    if (b < 1e-13) {
      truncated = true;
      break;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }

  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    tri(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) {
      tri(i, i + 1) = beta[static_cast<std::size_t>(i)];
      tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri, Eigen::EigenvaluesOnly);

  LanczosResult res;
  res.ritz_values = es.eigenvalues();
  res.dimension = m;
  res.truncated = truncated;
  return res;
}

namespace {
constexpr char kCacheMagic[8] = {'Q', 'K', 'S', 'D', 'S', 'D', '0', '1'};
}

void save_decomposition(const std::string& path, const SpectralDecomposition& sd) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_decomposition: cannot open " + path);
  const std::uint64_t n = static_cast<std::uint64_t>(sd.energies.size());
  bool ok = std::fwrite(kCacheMagic, 1, 8, f) == 8;
  ok = ok && std::fwrite(&n, sizeof n, 1, f) == 1;
  ok = ok && std::fwrite(&sd.ground_energy, sizeof(double), 1, f) == 1;
  ok = ok && std::fwrite(&sd.gap, sizeof(double), 1, f) == 1;
  ok = ok && std::fwrite(&sd.p_g, sizeof(double), 1, f) == 1;
  ok = ok && std::fwrite(sd.energies.data(), sizeof(double), n, f) == n;
  ok = ok && std::fwrite(sd.weights.data(), sizeof(double), n, f) == n;
  std::fclose(f);
  if (!ok) throw std::runtime_error("save_decomposition: short write to " + path);
}

std::optional<SpectralDecomposition> load_decomposition(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return std::nullopt;
  char magic[8];
  std::uint64_t n = 0;
  SpectralDecomposition sd;
  bool ok = std::fread(magic, 1, 8, f) == 8 && std::equal(magic, magic + 8, kCacheMagic);
  ok = ok && std::fread(&n, sizeof n, 1, f) == 1 && n > 0 && n <= (std::uint64_t(1) << 24);
  if (ok) {
    sd.energies.resize(static_cast<Eigen::Index>(n));
    sd.weights.resize(static_cast<Eigen::Index>(n));
    ok = std::fread(&sd.ground_energy, sizeof(double), 1, f) == 1 &&
         std::fread(&sd.gap, sizeof(double), 1, f) == 1 &&
         std::fread(&sd.p_g, sizeof(double), 1, f) == 1 &&
         std::fread(sd.energies.data(), sizeof(double), n, f) == n &&
         std::fread(sd.weights.data(), sizeof(double), n, f) == n;
  }
  std::fclose(f);
  if (!ok) return std::nullopt;
  return sd;
}

}  // namespace qksd
