#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcpn/numeric.hpp"
#include "rcpn/parse_tree.hpp"

namespace rcpn {

// Ordered list of retained class indices; node states are bitmasks over
// positions in this list.
struct RetainedLabels {
  std::vector<int> labels;

  int size() const { return int(labels.size()); }
  std::uint32_t full_mask() const { return (1u << labels.size()) - 1u; }
};

// The k most frequent voted super-pixel labels, ties toward the smaller
// class index.
RetainedLabels retain_labels(const std::vector<int>& leaf_predictions, int k = 9);

struct MrfProblem {
  const ParseTree* tree = nullptr;
  std::vector<Vec> node_dist;  // per node, full C-class categorizer output
  RetainedLabels retained;
};

// f1: mean of -log(max(p_k, 1e-12)) over the labels in the state.
double unary_cost(std::uint32_t state, const RetainedLabels& retained, const Vec& p);

// f2 hard constraint: feasible iff child subset of parent.
inline bool pairwise_feasible(std::uint32_t child, std::uint32_t parent) {
  return (child & ~parent) == 0;
}

struct DecodeResult {
  std::vector<std::uint32_t> states;  // per node
  double energy = 0.0;
  // (child_state_count x parent_state_count) evaluations per child edge,
  // indexed by child node id
  std::vector<std::uint64_t> edge_pair_evals;
};

// Exact MAP by min-sum dynamic programming up the tree; leaves range over
// singletons, internal nodes over non-empty subsets. Ties pick the
// smallest bitmask.
DecodeResult map_decode(const MrfProblem& problem);

// Exhaustive enumeration with the same tie-break; guard on the joint
// search-space size.
DecodeResult brute_force_decode(const MrfProblem& problem, std::uint64_t guard = 10'000'000);

std::vector<int> decode_leaf_labels(const DecodeResult& result, const ParseTree& tree,
                                    const RetainedLabels& retained);

// Per-node `id state_bitmask f1` lines plus the total energy.
std::string dump_decode(const DecodeResult& result, const MrfProblem& problem);

}  // namespace rcpn
