#pragma once

#include <Eigen/Dense>
#include <string>

#include "qksd/lattice.hpp"
#include "qksd/pauli.hpp"

namespace qksd {

enum class ModelKind { heisenberg, hubbard };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

/// Model selection as it appears in run configs. The lattice is over spins
/// (Heisenberg) or orbital sites (Hubbard; each site becomes two qubits).
struct ModelConfig {
  ModelKind model = ModelKind::heisenberg;
  LatticeSpec lattice;
  double j = 1.0;
  double u = 1.0;
};

/// Antiferromagnetic exchange J * sum_edges (X_i X_j + Y_i Y_j + Z_i Z_j);
/// multi-edges amplify the bond coefficient. One qubit per site.
PauliSum build_heisenberg(const Lattice& lattice, double j);

/// Fermi-Hubbard at half-filling chemical potential,
///   -J sum_{edges,spin} (a^t_i a_j + a^t_j a_i) + U sum_i (n_up-1/2)(n_dn-1/2),
/// mapped to qubits by the Jordan-Wigner transform with qubit = 2*site + spin
/// (spin up = 0). Hopping strings carry the Z chain between their endpoints;
/// the on-site term becomes (U/4) Z_{2i} Z_{2i+1}.
PauliSum build_hubbard(const Lattice& lattice, double j, double u);

PauliSum build_model(const ModelConfig& config, const Lattice& lattice);
int model_qubits(const ModelConfig& config);

/// Tensor product of two-qubit singlets (|01> - |10>)/sqrt(2) on qubit pairs
/// (0,1), (2,3), ... Requires an even qubit count.
Eigen::VectorXcd reference_singlet_pairs(int n_qubits);

/// Slater determinant of the lowest one-particle orbitals of the hopping
/// matrix (the u = 0 problem) at half filling (n_elec = n_sites), encoded as
/// qubit amplitudes under the same Jordan-Wigner conventions as build_hubbard.
/// Odd electron counts put the unpaired electron in the spin-up orbital.
Eigen::VectorXcd reference_hartree_fock(const Lattice& lattice, double j);

Eigen::VectorXcd reference_state(const ModelConfig& config, const Lattice& lattice);

/// Divide all coefficients by the given spectral norm.
PauliSum normalise(const PauliSum& h, double spectral_norm);

}  // namespace qksd
