#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "rcpn/error.hpp"
#include "rcpn/parse_tree.hpp"

using namespace rcpn;

namespace {

// graph with given adjacency pairs
SuperpixelGraph make_graph(int s, const std::vector<std::pair<int, int>>& edges) {
  SuperpixelGraph g;
  g.count = s;
  g.features.assign(s, Vec(3, 0.0));
  g.pixel_counts.assign(s, 1);
  g.adjacency.resize(s);
  for (auto [a, b] : edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& n : g.adjacency) std::sort(n.begin(), n.end());
  return g;
}

SuperpixelGraph path_graph(int s) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < s; ++i) edges.emplace_back(i, i + 1);
  return make_graph(s, edges);
}

// random connected graph: a random spanning tree plus extra edges
SuperpixelGraph random_graph(int s, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < s; ++i) edges.emplace_back(int(rng.index(i)), i);
  for (int extra = 0; extra < s / 2; ++extra) {
    int a = int(rng.index(s)), b = int(rng.index(s));
    if (a == b) continue;
    auto e = std::minmax(a, b);
    if (std::find(edges.begin(), edges.end(), std::make_pair(e.first, e.second)) ==
        edges.end())
      edges.emplace_back(e.first, e.second);
  }
  return make_graph(s, edges);
}

int depth_of(const ParseTree& tree, int node) {
  if (tree.is_leaf(node)) return 0;
  const auto& in = tree.internal(node);
  return 1 + std::max(depth_of(tree, in.left), depth_of(tree, in.right));
}

// replay the contraction and verify every merged pair was adjacent
void check_merges_adjacent(const ParseTree& tree, const SuperpixelGraph& graph) {
  int s = tree.leaf_count;
  std::vector<std::set<int>> nbr(2 * s - 1);
  for (int i = 0; i < s; ++i)
    for (int j : graph.adjacency[i]) nbr[i].insert(j);
  for (std::size_t k = 0; k < tree.internals.size(); ++k) {
    int a = tree.internals[k].left, b = tree.internals[k].right;
    REQUIRE(nbr[a].count(b) == 1);
    int id = s + int(k);
    for (int n : nbr[a])
      if (n != b) nbr[id].insert(n);
    for (int n : nbr[b])
      if (n != a) nbr[id].insert(n);
    for (int n : nbr[id]) {
      nbr[n].erase(a);
      nbr[n].erase(b);
      nbr[n].insert(id);
    }
  }
}

}  // namespace

TEST_CASE("single super-pixel tree") {
  SuperpixelGraph g = make_graph(1, {});
  Rng rng(1);
  ParseTree t = build_random_tree(g, rng, TreePolicy::Balanced);
  CHECK(t.leaf_count == 1);
  CHECK(t.internals.empty());
  CHECK(t.node_count() == 1);
  CHECK(t.root() == 0);
}

TEST_CASE("five leaves give internal ids 5..8 with root 8") {
  SuperpixelGraph g = path_graph(5);
  Rng rng(3);
  ParseTree t = build_random_tree(g, rng, TreePolicy::Uniform);
  CHECK(t.internals.size() == 4);
  CHECK(t.root() == 8);
  for (std::size_t k = 0; k < t.internals.size(); ++k) {
    CHECK(t.internals[k].left < t.internals[k].right);
    CHECK(t.internals[k].right < int(5 + k));
  }
}

TEST_CASE("balanced policy keeps a path of 8 shallow") {
  SuperpixelGraph g = path_graph(8);
  double balanced_sum = 0, uniform_sum = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng a(seed), b(seed);
    int db = depth_of(build_random_tree(g, a, TreePolicy::Balanced), 14);
    int du = depth_of(build_random_tree(g, b, TreePolicy::Uniform), 14);
    CHECK(db <= 4);  // min-size merges can be off-balance by one level
    CHECK(db >= 3);
    balanced_sum += db;
    uniform_sum += du;
  }
  CHECK(balanced_sum < uniform_sum);
}

TEST_CASE("uniform policy produces deeper trees than 3 somewhere") {
  SuperpixelGraph g = path_graph(8);
  bool deeper = false;
  for (std::uint64_t seed = 0; seed < 1000 && !deeper; ++seed) {
    Rng rng(seed);
    ParseTree t = build_random_tree(g, rng, TreePolicy::Uniform);
    if (depth_of(t, t.root()) > 3) deeper = true;
  }
  CHECK(deeper);
}

TEST_CASE("disconnected graph rejected") {
  SuperpixelGraph g = make_graph(4, {{0, 1}, {2, 3}});
  Rng rng(1);
  CHECK_THROWS_WITH_AS(build_random_tree(g, rng, TreePolicy::Uniform),
                       doctest::Contains("disconnected"), DataError);
}

TEST_CASE("tree construction deterministic per seed and policy") {
  Rng grng(17);
  SuperpixelGraph g = random_graph(12, grng);
  for (TreePolicy p : {TreePolicy::Uniform, TreePolicy::Balanced}) {
    Rng a(99), b(99);
    ParseTree ta = build_random_tree(g, a, p);
    ParseTree tb = build_random_tree(g, b, p);
    REQUIRE(ta.internals.size() == tb.internals.size());
    for (std::size_t k = 0; k < ta.internals.size(); ++k) {
      CHECK(ta.internals[k].left == tb.internals[k].left);
      CHECK(ta.internals[k].right == tb.internals[k].right);
    }
  }
}

TEST_CASE("structural invariants on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    int s = 2 + int(rng.index(14));
    SuperpixelGraph g = random_graph(s, rng);
    TreePolicy p = rng.index(2) == 0 ? TreePolicy::Uniform : TreePolicy::Balanced;
    ParseTree t = build_random_tree(g, rng, p);
    CHECK(int(t.internals.size()) == s - 1);
    auto sets = leaf_sets(t);
    std::vector<int> all(s);
    for (int i = 0; i < s; ++i) all[i] = i;
    CHECK(sets[t.root()] == all);
    // children regions disjoint, parent = union
    for (std::size_t k = 0; k < t.internals.size(); ++k) {
      const auto& l = sets[t.internals[k].left];
      const auto& r = sets[t.internals[k].right];
      std::vector<int> inter;
      std::set_intersection(l.begin(), l.end(), r.begin(), r.end(),
                            std::back_inserter(inter));
      CHECK(inter.empty());
      CHECK(l.size() + r.size() == sets[s + k].size());
    }
    check_merges_adjacent(t, g);
  }
}

TEST_CASE("mark_pure_nodes requires labels") {
  SuperpixelGraph g = path_graph(3);
  Rng rng(1);
  ParseTree t = build_random_tree(g, rng, TreePolicy::Balanced);
  CHECK_THROWS_AS(mark_pure_nodes(t, g), DataError);
}

TEST_CASE("all leaves same label: every internal node pure") {
  SuperpixelGraph g = path_graph(6);
  g.labels = std::vector<int>(6, 2);
  Rng rng(5);
  ParseTree t = mark_pure_nodes(build_random_tree(g, rng, TreePolicy::Uniform), g);
  CHECK(t.pure_node_count() == 5);
  for (const auto& in : t.internals) CHECK(in.pure_label == 2);
}

TEST_CASE("all leaves distinct labels: zero pure nodes") {
  SuperpixelGraph g = path_graph(5);
  g.labels = std::vector<int>{0, 1, 2, 3, 4};
  Rng rng(5);
  ParseTree t = mark_pure_nodes(build_random_tree(g, rng, TreePolicy::Uniform), g);
  CHECK(t.pure_node_count() == 0);
}

TEST_CASE("void leaves poison purity") {
  SuperpixelGraph g = path_graph(2);
  g.labels = std::vector<int>{1, kVoid};
  Rng rng(5);
  ParseTree t = mark_pure_nodes(build_random_tree(g, rng, TreePolicy::Uniform), g);
  CHECK(t.pure_node_count() == 0);
}

TEST_CASE("pure marks equal brute-force descendant scan") {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    int s = 2 + int(rng.index(9));
    SuperpixelGraph g = random_graph(s, rng);
    std::vector<int> labels(s);
    for (int& l : labels) {
      std::size_t r = rng.index(4);
      l = r == 3 ? kVoid : int(r);
    }
    g.labels = labels;
    ParseTree t = mark_pure_nodes(build_random_tree(g, rng, TreePolicy::Uniform), g);
    auto sets = leaf_sets(t);
    for (std::size_t k = 0; k < t.internals.size(); ++k) {
      const auto& leaves = sets[s + k];
      int expect = labels[leaves[0]];
      for (int leaf : leaves)
        if (labels[leaf] == kVoid || labels[leaf] != expect) expect = kVoid;
      if (expect == kVoid)
        CHECK(t.internals[k].pure_label == kVoid);
      else
        CHECK(t.internals[k].pure_label == expect);
    }
  }
}

TEST_CASE("tree dump format") {
  SuperpixelGraph g = path_graph(2);
  g.labels = std::vector<int>{1, 1};
  Rng rng(1);
  ParseTree t = mark_pure_nodes(build_random_tree(g, rng, TreePolicy::Balanced), g);
  CHECK(dump_tree(t) == "2 0 1 1\n");
}
