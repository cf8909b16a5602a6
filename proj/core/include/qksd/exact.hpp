#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "qksd/pauli.hpp"

namespace qksd {

/// Exact spectral data of (H, reference): full eigenvalue list plus reference
/// weights. Downstream modules consume only (energies, weights); eigenvectors
/// are never stored. Degenerate ground levels have their weights summed into
/// p_g, and gap is measured to the first level strictly above the ground
/// degeneracy tolerance.
struct SpectralDecomposition {
  Eigen::VectorXd energies;  // ascending
  Eigen::VectorXd weights;   // |<m|ref>|^2, sums to 1
  double ground_energy = 0.0;
  double gap = 0.0;
  double p_g = 0.0;
};

/// Dense diagonalisation (guarded to <= 14 qubits). The reference must be
/// normalised to 1e-12. Real-matrix operators take a real symmetric path.
SpectralDecomposition diagonalise(const PauliSum& h, const Eigen::VectorXcd& ref);

/// Largest |eigenvalue| by dense diagonalisation.
double spectral_norm(const PauliSum& h);

/// Ritz values of a d-step Lanczos run with full reorthogonalisation,
/// using matrix-free operator application. Stops early (truncated = true)
/// when the residual norm drops below 1e-13.
struct LanczosResult {
  Eigen::VectorXd ritz_values;  // ascending, size = dimension
  int dimension = 0;
  bool truncated = false;
};

LanczosResult lanczos_ritz(const PauliSum& h, const Eigen::VectorXcd& ref, int d);

/// Binary cache of decompositions so repeated CLI runs skip diagonalisation.
/// Round trips are bit-exact.
void save_decomposition(const std::string& path, const SpectralDecomposition& sd);
std::optional<SpectralDecomposition> load_decomposition(const std::string& path);

}  // namespace qksd
