#include "qksd/lattice.hpp"

#include <algorithm>
#include <stdexcept>

#include "qksd/rng.hpp"

namespace qksd {

LatticeKind lattice_kind_from_string(const std::string& s) {
  if (s == "chain") return LatticeKind::chain;
  if (s == "ladder") return LatticeKind::ladder;
  if (s == "random_graph") return LatticeKind::random_graph;
  throw std::invalid_argument("lattice kind must be chain, ladder or random_graph: " + s);
}

std::string to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::chain: return "chain";
    case LatticeKind::ladder: return "ladder";
    case LatticeKind::random_graph: return "random_graph";
  }
  return "?";
}

Lattice build_lattice(const LatticeSpec& spec) {
  // A single-site chain (no bonds) is legal: the Hubbard model still has its
  // on-site interaction there. Everything else needs at least two sites.
  const int min_size = spec.kind == LatticeKind::chain ? 1 : 2;
  if (spec.size < min_size) throw std::invalid_argument("build_lattice: lattice too small");
  Lattice lat;
  lat.spec = spec;
  const int n = spec.size;
  switch (spec.kind) {
    case LatticeKind::chain:
      for (int i = 0; i + 1 < n; ++i) lat.edges.emplace_back(i, i + 1);
      break;
    case LatticeKind::ladder:
      // rungs
      for (int i = 0; 2 * i + 1 < n; ++i) lat.edges.emplace_back(2 * i, 2 * i + 1);
      // even leg
      for (int i = 0; 2 * i + 2 < n; ++i) lat.edges.emplace_back(2 * i, 2 * i + 2);
      // odd leg
      for (int i = 0; 2 * i + 3 < n; ++i) lat.edges.emplace_back(2 * i + 1, 2 * i + 3);
      break;
    case LatticeKind::random_graph: {
      Rng rng(spec.seed);
      for (int v = 0; v < n; ++v) {
        for (int rep = 0; rep < 2; ++rep) {
          // uniform over the n-1 vertices distinct from v
          int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
          if (u >= v) ++u;
          lat.edges.emplace_back(std::min(v, u), std::max(v, u));
        }
      }
      break;
    }
  }
  return lat;
}

}  // namespace qksd
