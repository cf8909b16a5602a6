#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace qksd {

/// Pauli string on up to 64 qubits in symplectic form. The represented
/// operator is
///
///   i^{phase_exp} * P(x, z),   P(x, z) = i^{|x & z|} X^x Z^z,
///
/// where P(x, z) is the canonical Hermitian string (every overlapping bit of
/// x_mask and z_mask contributes a Y). phase_exp == 0 therefore means a plain
/// Hermitian tensor product of I/X/Y/Z; products of strings accumulate
/// phase_exp in {0,1,2,3} (phase +1, +i, -1, -i).
struct PauliString {
  std::uint64_t x_mask = 0;
  std::uint64_t z_mask = 0;
  std::uint8_t phase_exp = 0;

  bool is_identity() const { return x_mask == 0 && z_mask == 0 && phase_exp == 0; }
  bool is_hermitian() const { return phase_exp == 0 || phase_exp == 2; }

  std::complex<double> phase() const {
    static const std::complex<double> table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[phase_exp & 3];
  }

  /// Number of qubits carrying Y (overlap of the two masks).
  int y_count() const;

  PauliString adjoint() const {
    PauliString r = *this;
    r.phase_exp = static_cast<std::uint8_t>((4 - phase_exp) & 3);
    return r;
  }

  bool operator==(const PauliString& o) const {
    return x_mask == o.x_mask && z_mask == o.z_mask && phase_exp == o.phase_exp;
  }

  /// Build from a label such as "XIZY" (character q acts on qubit q), with the
  /// canonical Hermitian phase. Throws on characters outside {I,X,Y,Z}.
  static PauliString from_label(const std::string& label);

  /// Inverse of from_label.
  std::string to_label(int n_qubits) const;
};

/// Operator product lhs * rhs with deterministic phase bookkeeping.
PauliString operator*(const PauliString& lhs, const PauliString& rhs);

/// One term of a Hermitian Pauli-sum Hamiltonian: coeff is real and the
/// string is canonical (phase_exp == 0).
struct PauliTerm {
  double coeff = 0.0;
  PauliString op;
};

/// Hermitian operator H = sum_j h_j P_j with real h_j and canonical Hermitian
/// strings. Like terms are combined on construction; term order is the
/// deterministic (x_mask, z_mask) lexicographic order.
class PauliSum {
 public:
  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_qubits_(n_qubits) {}

  int n_qubits() const { return n_qubits_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }

  /// Sum of |h_j| (the one-norm of the coefficient vector).
  double h_tot() const;

  /// Adds coeff * string. The string's phase must be real (+1 or -1, folded
  /// into the coefficient); a +/-i phase would make the term anti-Hermitian.
  void add(double coeff, PauliString op);

  /// Combine like terms, drop coefficients with |h| <= tol, sort terms.
  void compress(double tol = 0.0);

  /// Multiply every coefficient by s.
  void scale(double s);

  /// True when every term has an even Y count, i.e. the matrix is real.
  bool is_real() const;

  /// Dense matrix in the computational basis, little-endian bit order
  /// (bit q of the basis index is the state of qubit q). Guarded to
  /// n_qubits <= 14.
  Eigen::MatrixXcd dense() const;

  /// Dense real matrix; valid only when is_real().
  Eigen::MatrixXd dense_real() const;

 private:
  int n_qubits_ = 0;
  std::vector<PauliTerm> terms_;
};

}  // namespace qksd
