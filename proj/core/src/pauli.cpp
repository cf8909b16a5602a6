#include "qksd/pauli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace qksd {

namespace {
inline int popcount64(std::uint64_t v) { return std::popcount(v); }
}  // namespace

int PauliString::y_count() const { return popcount64(x_mask & z_mask); }

PauliString PauliString::from_label(const std::string& label) {
  if (label.size() > 64) throw std::invalid_argument("PauliString: more than 64 qubits");
  PauliString p;
  for (std::size_t q = 0; q < label.size(); ++q) {
    const std::uint64_t bit = std::uint64_t(1) << q;
    switch (label[q]) {
      case 'I': break;
      case 'X': p.x_mask |= bit; break;
      case 'Y': p.x_mask |= bit; p.z_mask |= bit; break;
      case 'Z': p.z_mask |= bit; break;
      default: throw std::invalid_argument("PauliString: label must use I/X/Y/Z");
    }
  }
  return p;
}

std::string PauliString::to_label(int n_qubits) const {
  std::string s(static_cast<std::size_t>(n_qubits), 'I');
  for (int q = 0; q < n_qubits; ++q) {
    const bool x = (x_mask >> q) & 1, z = (z_mask >> q) & 1;
    s[static_cast<std::size_t>(q)] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
  }
  return s;
}

PauliString operator*(const PauliString& lhs, const PauliString& rhs) {
  PauliString r;
  r.x_mask = lhs.x_mask ^ rhs.x_mask;
  r.z_mask = lhs.z_mask ^ rhs.z_mask;
  // i^{na} X^{xa} Z^{za} * i^{nb} X^{xb} Z^{zb}
  //   = i^{na+nb} (-1)^{|za & xb|} X^{xc} Z^{zc}
  //   = i^{na+nb-nc} (-1)^{|za & xb|} P(xc, zc)
  const int na = popcount64(lhs.x_mask & lhs.z_mask);
  const int nb = popcount64(rhs.x_mask & rhs.z_mask);
  const int nc = popcount64(r.x_mask & r.z_mask);
  const int anti = popcount64(lhs.z_mask & rhs.x_mask);
  int e = lhs.phase_exp + rhs.phase_exp + na + nb - nc + 2 * anti;
  r.phase_exp = static_cast<std::uint8_t>(((e % 4) + 4) % 4);
  return r;
}

double PauliSum::h_tot() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coeff);
  return s;
}

void PauliSum::add(double coeff, PauliString op) {
  if (op.phase_exp == 1 || op.phase_exp == 3) {
    if (coeff == 0.0) return;
    throw std::invalid_argument("PauliSum::add: term with imaginary phase is anti-Hermitian");
  }
  if (op.phase_exp == 2) {
    coeff = -coeff;
    op.phase_exp = 0;
  }
  terms_.push_back({coeff, op});
}

void PauliSum::compress(double tol) {
  std::sort(terms_.begin(), terms_.end(), [](const PauliTerm& a, const PauliTerm& b) {
    if (a.op.x_mask != b.op.x_mask) return a.op.x_mask < b.op.x_mask;
    return a.op.z_mask < b.op.z_mask;
  });
  std::vector<PauliTerm> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!out.empty() && out.back().op.x_mask == t.op.x_mask && out.back().op.z_mask == t.op.z_mask) {
      out.back().coeff += t.coeff;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [tol](const PauliTerm& t) { return std::abs(t.coeff) <= tol; });
  terms_ = std::move(out);
}

void PauliSum::scale(double s) {
  for (auto& t : terms_) t.coeff *= s;
}

bool PauliSum::is_real() const {
  for (const auto& t : terms_) {
    if (t.op.y_count() % 2 != 0) return false;
  }
  return true;
}

Eigen::MatrixXcd PauliSum::dense() const {
  if (n_qubits_ > 14) throw std::invalid_argument("PauliSum::dense: limited to 14 qubits");
  const std::size_t dim = std::size_t(1) << n_qubits_;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  static const std::complex<double> iphase[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& t : terms_) {
    const std::complex<double> base = t.coeff * iphase[t.op.y_count() & 3];
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t row = b ^ t.op.x_mask;
      const double sign = (popcount64(b & t.op.z_mask) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(b)) += sign * base;
    }
  }
  return m;
}

Eigen::MatrixXd PauliSum::dense_real() const {
  if (!is_real()) throw std::invalid_argument("PauliSum::dense_real: operator has complex entries");
  if (n_qubits_ > 14) throw std::invalid_argument("PauliSum::dense_real: limited to 14 qubits");
  const std::size_t dim = std::size_t(1) << n_qubits_;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& t : terms_) {
    // even Y count: i^{ny} = +/-1
    const double base = t.coeff * ((t.op.y_count() & 3) == 0 ? 1.0 : -1.0);
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t row = b ^ t.op.x_mask;
      const double sign = (popcount64(b & t.op.z_mask) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(b)) += sign * base;
    }
  }
  return m;
}

}  // namespace qksd
