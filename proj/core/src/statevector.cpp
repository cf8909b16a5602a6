#include "qksd/statevector.hpp"

#include <bit>
#include <complex>
#include <stdexcept>

namespace qksd {

namespace {
const std::complex<double> kIPhase[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
}

void apply_pauli(const PauliString& op, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
  const auto dim = static_cast<std::uint64_t>(v.size());
  out.resize(v.size());
  const std::complex<double> base = kIPhase[(op.phase_exp + op.y_count()) & 3];
  for (std::uint64_t b = 0; b < dim; ++b) {
    const std::uint64_t row = b ^ op.x_mask;
    const double sign = (std::popcount(b & op.z_mask) & 1) ? -1.0 : 1.0;
    out(static_cast<Eigen::Index>(row)) = sign * base * v(static_cast<Eigen::Index>(b));
  }
}

Eigen::VectorXcd apply_pauli(const PauliString& op, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out;
  apply_pauli(op, v, out);
  return out;
}

void apply_pauli_sum(const PauliSum& h, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
  const auto dim = static_cast<std::uint64_t>(v.size());
  out = Eigen::VectorXcd::Zero(v.size());
  for (const auto& t : h.terms()) {
    const std::complex<double> base = t.coeff * kIPhase[t.op.y_count() & 3];
    for (std::uint64_t b = 0; b < dim; ++b) {
      const std::uint64_t row = b ^ t.op.x_mask;
      const double sign = (std::popcount(b & t.op.z_mask) & 1) ? -1.0 : 1.0;
      out(static_cast<Eigen::Index>(row)) += sign * base * v(static_cast<Eigen::Index>(b));
    }
  }
}

Eigen::VectorXcd apply_pauli_sum(const PauliSum& h, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out;
  apply_pauli_sum(h, v, out);
  return out;
}

void apply_pauli_rotation(int sign, double angle, const PauliString& axis,
                          const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
  if (axis.phase_exp != 0)
    throw std::invalid_argument("apply_pauli_rotation: axis must be a canonical Hermitian string");
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("apply_pauli_rotation: sign must be +1 or -1");
  Eigen::VectorXcd sv;
  apply_pauli(axis, v, sv);
  const std::complex<double> minus_i_s_sin(0.0, -sign * std::sin(angle));
  out = std::cos(angle) * v + minus_i_s_sin * sv;
}

}  // namespace qksd
