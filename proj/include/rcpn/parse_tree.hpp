#pragma once

#include <string>
#include <vector>

#include "rcpn/image.hpp"
#include "rcpn/numeric.hpp"

namespace rcpn {

// Random binary merge hierarchy over the super-pixel graph. Leaves are
// nodes 0..S-1; internal node S+i records the i-th merge, so children
// always have smaller ids than their parent and the root is 2S-2.
struct ParseTree {
  struct Internal {
    int left = -1;   // left < right by node id
    int right = -1;
    int pure_label = kVoid;  // kVoid when impure / unmarked
  };

  int leaf_count = 0;
  std::vector<Internal> internals;  // internals[i] is node leaf_count + i

  int node_count() const { return 2 * leaf_count - 1; }
  int root() const { return 2 * leaf_count - 2; }
  bool is_leaf(int node) const { return node < leaf_count; }
  const Internal& internal(int node) const { return internals[node - leaf_count]; }

  int pure_node_count() const {
    int n = 0;
    for (const auto& in : internals)
      if (in.pure_label != kVoid) ++n;
    return n;
  }
};

enum class TreePolicy { Uniform, Balanced };

ParseTree build_random_tree(const SuperpixelGraph& graph, Rng& rng, TreePolicy policy);

// Sets pure_label on every internal node whose descendant leaves all share
// one non-VOID ground-truth label. Requires graph.labels.
ParseTree mark_pure_nodes(const ParseTree& tree, const SuperpixelGraph& graph);

// One line per internal node: `id left right pure_label|-`.
std::string dump_tree(const ParseTree& tree);

// Leaf ids under each node (index by node id).
std::vector<std::vector<int>> leaf_sets(const ParseTree& tree);

}  // namespace rcpn
