#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qksd {

enum class LatticeKind { chain, ladder, random_graph };

LatticeKind lattice_kind_from_string(const std::string& s);
std::string to_string(LatticeKind k);

struct LatticeSpec {
  LatticeKind kind = LatticeKind::chain;
  int size = 0;                 // number of sites
  std::uint64_t seed = 0;       // random_graph only
};

/// Undirected multigraph over sites; parallel edges are kept (they amplify
/// the interaction on that bond).
struct Lattice {
  LatticeSpec spec;
  std::vector<std::pair<int, int>> edges;
};

/// Site ordering conventions:
///  - chain: 0-1-2-...; edges (i, i+1).
///  - ladder: rung-major. Sites 2i and 2i+1 form rung i; even sites are one
///    leg, odd sites the other. Even site counts give 3*size/2 - 2 edges; an
///    odd count leaves the last site unpaired on the even leg.
///  - random_graph: every vertex draws two partners uniformly from the other
///    vertices (multi-edges kept), giving exactly 2*size edges and mean
///    degree 4. Deterministic under spec.seed.
Lattice build_lattice(const LatticeSpec& spec);

}  // namespace qksd
