#pragma once

#include <Eigen/Dense>

#include "qksd/pauli.hpp"

namespace qksd {

/// out = op |v>, computational basis, little-endian bit order.
void apply_pauli(const PauliString& op, const Eigen::VectorXcd& v, Eigen::VectorXcd& out);

Eigen::VectorXcd apply_pauli(const PauliString& op, const Eigen::VectorXcd& v);

/// out = H |v> for a Pauli-sum operator (no dense matrix is formed).
void apply_pauli_sum(const PauliSum& h, const Eigen::VectorXcd& v, Eigen::VectorXcd& out);

Eigen::VectorXcd apply_pauli_sum(const PauliSum& h, const Eigen::VectorXcd& v);

/// out = exp(-i * sign * angle * axis) |v> = cos(angle) v - i sign sin(angle) axis v.
/// axis must be Hermitian with axis^2 = I (any phase_exp == 0 Pauli string).
void apply_pauli_rotation(int sign, double angle, const PauliString& axis,
                          const Eigen::VectorXcd& v, Eigen::VectorXcd& out);

}  // namespace qksd
