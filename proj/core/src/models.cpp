#include "qksd/models.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qksd {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "heisenberg") return ModelKind::heisenberg;
  if (s == "hubbard") return ModelKind::hubbard;
  throw std::invalid_argument("model must be heisenberg or hubbard: " + s);
}

std::string to_string(ModelKind k) {
  return k == ModelKind::heisenberg ? "heisenberg" : "hubbard";
}

namespace {

PauliString single(std::uint64_t xbit, std::uint64_t zbit) {
  PauliString p;
  p.x_mask = xbit;
  p.z_mask = zbit;
  return p;
}

PauliString pauli_x(int q) { return single(std::uint64_t(1) << q, 0); }
PauliString pauli_y(int q) { return single(std::uint64_t(1) << q, std::uint64_t(1) << q); }
PauliString pauli_z(int q) { return single(0, std::uint64_t(1) << q); }

std::uint64_t z_chain(int lo_excl, int hi_excl) {
  std::uint64_t m = 0;
  for (int q = lo_excl + 1; q < hi_excl; ++q) m |= std::uint64_t(1) << q;
  return m;
}

}  // namespace

PauliSum build_heisenberg(const Lattice& lattice, double j) {
  if (lattice.edges.empty())
    throw std::invalid_argument("models: exchange model needs at least one edge");
  PauliSum h(lattice.spec.size);
  for (const auto& [a, b] : lattice.edges) {
    h.add(j, pauli_x(a) * pauli_x(b));
    h.add(j, pauli_y(a) * pauli_y(b));
    h.add(j, pauli_z(a) * pauli_z(b));
  }
  h.compress();
  return h;
}

PauliSum build_hubbard(const Lattice& lattice, double j, double u) {
  const int n_sites = lattice.spec.size;
  PauliSum h(2 * n_sites);
  // hopping: -J (a^t_p a_q + a^t_q a_p) -> -(J/2)(X_p Z..Z X_q + Y_p Z..Z Y_q), p < q
  for (const auto& [a, b] : lattice.edges) {
    for (int spin = 0; spin < 2; ++spin) {
      const int p = 2 * std::min(a, b) + spin;
      const int q = 2 * std::max(a, b) + spin;
      const std::uint64_t chain = z_chain(p, q);
      PauliString xx = pauli_x(p) * pauli_x(q);
      xx.z_mask |= chain;
      PauliString yy = pauli_y(p) * pauli_y(q);
      yy.z_mask |= chain;
      h.add(-0.5 * j, xx);
      h.add(-0.5 * j, yy);
    }
  }
  // on-site: U (n_up - 1/2)(n_dn - 1/2) = (U/4) Z_up Z_dn exactly
  for (int s = 0; s < n_sites; ++s) {
    h.add(0.25 * u, pauli_z(2 * s) * pauli_z(2 * s + 1));
  }
  h.compress();
  return h;
}

PauliSum build_model(const ModelConfig& config, const Lattice& lattice) {
  return config.model == ModelKind::heisenberg ? build_heisenberg(lattice, config.j)
                                               : build_hubbard(lattice, config.j, config.u);
}

int model_qubits(const ModelConfig& config) {
  return config.model == ModelKind::heisenberg ? config.lattice.size : 2 * config.lattice.size;
}

Eigen::VectorXcd reference_singlet_pairs(int n_qubits) {
  if (n_qubits < 2 || n_qubits % 2 != 0)
    throw std::invalid_argument("reference_singlet_pairs: needs a positive even qubit count");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  const int pairs = n_qubits / 2;
  const double amp = std::pow(1.0 / std::sqrt(2.0), pairs);
  // Iterate over the 2^pairs choices of which pair member is excited;
  // (|01> - |10>)/sqrt(2) on each pair: sign - when the lower qubit is 1.
  for (std::uint64_t c = 0; c < (std::uint64_t(1) << pairs); ++c) {
    std::uint64_t idx = 0;
    int sign = 1;
    for (int p = 0; p < pairs; ++p) {
      if ((c >> p) & 1) {
        idx |= std::uint64_t(1) << (2 * p);  // |10> on (2p, 2p+1)
        sign = -sign;
      } else {
        idx |= std::uint64_t(1) << (2 * p + 1);  // |01>
      }
    }
    v(static_cast<Eigen::Index>(idx)) = sign * amp;
  }
  return v;
}

Eigen::VectorXcd reference_hartree_fock(const Lattice& lattice, double j) {
  const int n_sites = lattice.spec.size;
  if (2 * n_sites > 22)
    throw std::invalid_argument("reference_hartree_fock: state vector would be too large");
  // one-particle hopping matrix over sites
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_sites, n_sites);
  for (const auto& [a, b] : lattice.edges) {
    t(a, b) -= j;
    t(b, a) -= j;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("reference_hartree_fock: one-particle diagonalisation failed");
  const Eigen::MatrixXd& orb = es.eigenvectors();  // columns ascending by energy

  // occupied spin-orbitals at half filling: (level 0, up), (level 0, dn),
  // (level 1, up), ... truncated to n_elec = n_sites.
  const int n_elec = n_sites;
  const int n_qubits = 2 * n_sites;
  Eigen::MatrixXd occupied = Eigen::MatrixXd::Zero(n_qubits, n_elec);
  for (int e = 0; e < n_elec; ++e) {
    const int level = e / 2;
    const int spin = e % 2;
    for (int s = 0; s < n_sites; ++s) occupied(2 * s + spin, e) = orb(s, level);
  }

  // Slater determinant amplitudes: for occupation bitstring b with positions
  // p_1 < ... < p_Ne, amp(b) = det(occupied[p_i, :]) under the Jordan-Wigner
  // convention |b> = a^t_{p1} ... a^t_{pNe} |vac> with ascending order.
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  Eigen::MatrixXd sub(n_elec, n_elec);
  for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
    if (std::popcount(b) != n_elec) continue;
    int r = 0;
    for (int q = 0; q < n_qubits; ++q) {
      if ((b >> q) & 1) sub.row(r++) = occupied.row(q);
    }
    v(static_cast<Eigen::Index>(b)) = sub.determinant();
  }
  const double norm = v.norm();
  if (norm <= 0.0) throw std::runtime_error("reference_hartree_fock: zero determinant state");
  v /= norm;
  return v;
}

Eigen::VectorXcd reference_state(const ModelConfig& config, const Lattice& lattice) {
  return config.model == ModelKind::heisenberg
             ? reference_singlet_pairs(lattice.spec.size)
             : reference_hartree_fock(lattice, config.j);
}

PauliSum normalise(const PauliSum& h, double spectral_norm) {
  if (!(spectral_norm > 0.0)) throw std::invalid_argument("normalise: spectral norm must be positive");
  PauliSum out = h;
  out.scale(1.0 / spectral_norm);
  return out;
}

}  // namespace qksd
