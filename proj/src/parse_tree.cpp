#include "rcpn/parse_tree.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

ParseTree build_random_tree(const SuperpixelGraph& graph, Rng& rng, TreePolicy policy) {
  int s = graph.count;
  if (s < 1) throw DataError("build_random_tree: empty graph");
  ParseTree tree;
  tree.leaf_count = s;
  if (s == 1) return tree;

  // contracted-graph state: neighbor sets and leaf counts per active node
  std::vector<std::set<int>> nbr(2 * s - 1);
  std::vector<int> leaves(2 * s - 1, 0);
  for (int i = 0; i < s; ++i) {
    leaves[i] = 1;
    for (int j : graph.adjacency[i]) nbr[i].insert(j);
  }
  std::set<int> active;
  for (int i = 0; i < s; ++i) active.insert(i);

  for (int step = 0; step < s - 1; ++step) {
    // deterministic edge enumeration: ascending (a, b), a < b
    std::vector<std::pair<int, int>> edges;
    for (int a : active)
      for (int b : nbr[a])
        if (a < b) edges.emplace_back(a, b);
    if (edges.empty())
      throw DataError("build_random_tree: graph is disconnected (no edge at step " +
                      std::to_string(step) + ")");
    std::pair<int, int> pick;
    if (policy == TreePolicy::Uniform) {
      pick = edges[rng.index(edges.size())];
    } else {
      int best = INT32_MAX;
      for (auto& [a, b] : edges) best = std::min(best, leaves[a] + leaves[b]);
      std::vector<std::pair<int, int>> minimal;
      for (auto& [a, b] : edges)
        if (leaves[a] + leaves[b] == best) minimal.emplace_back(a, b);
      pick = minimal[rng.index(minimal.size())];
    }
    auto [a, b] = pick;
    int k = s + step;
    tree.internals.push_back({a, b, kVoid});
    leaves[k] = leaves[a] + leaves[b];
    for (int n : nbr[a])
      if (n != b) nbr[k].insert(n);
    for (int n : nbr[b])
      if (n != a) nbr[k].insert(n);
    for (int n : nbr[k]) {
      nbr[n].erase(a);
      nbr[n].erase(b);
      nbr[n].insert(k);
    }
    active.erase(a);
    active.erase(b);
    active.insert(k);
    nbr[a].clear();
    nbr[b].clear();
  }
  return tree;
}

ParseTree mark_pure_nodes(const ParseTree& tree, const SuperpixelGraph& graph) {
  if (!graph.labels) throw DataError("mark_pure_nodes: graph has no ground-truth labels");
  const auto& labels = *graph.labels;
  ParseTree out = tree;
  // per-node label: >=0 pure with that class, kVoid leaf without label, -2 impure
  constexpr int kImpure = -2;
  std::vector<int> node_label(tree.node_count());
  for (int i = 0; i < tree.leaf_count; ++i) node_label[i] = labels[i];
  for (std::size_t i = 0; i < out.internals.size(); ++i) {
    int l = node_label[out.internals[i].left];
    int r = node_label[out.internals[i].right];
    int v = (l >= 0 && l == r) ? l : kImpure;
    node_label[tree.leaf_count + i] = v;
    out.internals[i].pure_label = v >= 0 ? v : kVoid;
  }
  return out;
}

std::string dump_tree(const ParseTree& tree) {
  std::ostringstream os;
  for (std::size_t i = 0; i < tree.internals.size(); ++i) {
    const auto& in = tree.internals[i];
    os << tree.leaf_count + i << ' ' << in.left << ' ' << in.right << ' ';
    if (in.pure_label == kVoid)
      os << '-';
    else
      os << in.pure_label;
    os << '\n';
  }
  return os.str();
}

std::vector<std::vector<int>> leaf_sets(const ParseTree& tree) {
  std::vector<std::vector<int>> sets(tree.node_count());
  for (int i = 0; i < tree.leaf_count; ++i) sets[i] = {i};
  for (std::size_t i = 0; i < tree.internals.size(); ++i) {
    auto& dst = sets[tree.leaf_count + i];
    const auto& l = sets[tree.internals[i].left];
    const auto& r = sets[tree.internals[i].right];
    dst.reserve(l.size() + r.size());
    dst.insert(dst.end(), l.begin(), l.end());
    dst.insert(dst.end(), r.begin(), r.end());
    std::sort(dst.begin(), dst.end());
  }
  return sets;
}

}  // namespace rcpn
