#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "rcpn/error.hpp"
#include "rcpn/tree_mrf.hpp"

using namespace rcpn;

namespace {

SuperpixelGraph path_graph(int s) {
  SuperpixelGraph g;
  g.count = s;
  g.pixel_counts.assign(s, 1);
  g.features.assign(s, Vec(3, 0.0));
  g.adjacency.resize(s);
  for (int i = 0; i + 1 < s; ++i) {
    g.adjacency[i].push_back(i + 1);
    g.adjacency[i + 1].push_back(i);
  }
  return g;
}

Vec random_dist(int classes, Rng& rng) {
  Vec z(classes);
  for (double& v : z) v = rng.uniform(-2, 2);
  return softmax(z);
}

MrfProblem random_problem(ParseTree& tree_storage, int s, int classes, Rng& rng) {
  SuperpixelGraph g = path_graph(s);
  tree_storage = build_random_tree(g, rng, TreePolicy::Uniform);
  MrfProblem prob;
  prob.tree = &tree_storage;
  prob.node_dist.resize(tree_storage.node_count());
  for (auto& d : prob.node_dist) d = random_dist(classes, rng);
  std::vector<int> retained(classes);
  for (int c = 0; c < classes; ++c) retained[c] = c;
  prob.retained.labels = retained;
  return prob;
}

double recompute_energy(const DecodeResult& r, const MrfProblem& prob) {
  double e = 0;
  for (int n = 0; n < prob.tree->node_count(); ++n)
    e += unary_cost(r.states[std::size_t(n)], prob.retained, prob.node_dist[std::size_t(n)]);
  return e;
}

}  // namespace

TEST_CASE("retain_labels orders by count then index and truncates") {
  std::vector<int> preds{3, 3, 3, 1, 1, 7, 0, 0};
  RetainedLabels r = retain_labels(preds, 9);
  CHECK(r.labels == std::vector<int>{3, 0, 1, 7});
  RetainedLabels r2 = retain_labels(preds, 2);
  CHECK(r2.labels == std::vector<int>{3, 0});
  CHECK(r2.full_mask() == 3u);
}

TEST_CASE("retain_labels tie goes to smaller class index") {
  std::vector<int> preds{5, 2, 2, 5};
  RetainedLabels r = retain_labels(preds, 9);
  CHECK(r.labels == std::vector<int>{2, 5});
}

TEST_CASE("unary cost singleton and pair") {
  RetainedLabels ret;
  ret.labels = {0, 1, 2};
  Vec p{0.5, 0.25, 0.25};
  CHECK(unary_cost(0b001, ret, p) == doctest::Approx(-std::log(0.5)).epsilon(1e-14));
  CHECK(unary_cost(0b011, ret, p) ==
        doctest::Approx((-std::log(0.5) - std::log(0.25)) / 2).epsilon(1e-14));
}

TEST_CASE("unary cost clamps tiny probabilities") {
  RetainedLabels ret;
  ret.labels = {0, 1};
  Vec p{0.0, 1.0};
  CHECK(unary_cost(0b01, ret, p) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
}

TEST_CASE("pairwise feasibility is the subset relation") {
  CHECK(pairwise_feasible(0b001, 0b011));
  CHECK(pairwise_feasible(0b011, 0b011));
  CHECK(!pairwise_feasible(0b100, 0b011));
  CHECK(!pairwise_feasible(0b101, 0b001));
}

TEST_CASE("decode on a single leaf picks the best singleton") {
  ParseTree tree;
  tree.leaf_count = 1;
  MrfProblem prob;
  prob.tree = &tree;
  prob.node_dist = {Vec{0.1, 0.7, 0.2}};
  prob.retained.labels = {0, 1, 2};
  DecodeResult r = map_decode(prob);
  CHECK(r.states[0] == 0b010u);
  CHECK(decode_leaf_labels(r, tree, prob.retained) == std::vector<int>{1});
}

TEST_CASE("decode degenerates to per-leaf argmax when one class dominates") {
  // every node distribution strongly favours the same single class, so
  // the decode keeps each leaf at its own argmax
  SuperpixelGraph g = path_graph(4);
  Rng rng(2);
  ParseTree tree = build_random_tree(g, rng, TreePolicy::Balanced);
  MrfProblem prob;
  prob.tree = &tree;
  prob.retained.labels = {0, 1};
  prob.node_dist.assign(tree.node_count(), Vec{0.99, 0.01});
  DecodeResult r = map_decode(prob);
  for (int i = 0; i < 4; ++i) CHECK(r.states[std::size_t(i)] == 0b01u);
}

TEST_CASE("dp equals brute force on random instances") {
  Rng rng(33);
  for (int trial = 0; trial < 60; ++trial) {
    int s = 2 + int(rng.index(5));
    int classes = 2 + int(rng.index(3));
    ParseTree tree;
    MrfProblem prob = random_problem(tree, s, classes, rng);
    DecodeResult dp = map_decode(prob);
    DecodeResult bf = brute_force_decode(prob);
    CHECK(dp.energy == bf.energy);
    CHECK(dp.states == bf.states);
  }
}

TEST_CASE("decode energy matches recomputation from chosen states") {
  Rng rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    ParseTree tree;
    MrfProblem prob = random_problem(tree, 2 + int(rng.index(6)), 3, rng);
    DecodeResult r = map_decode(prob);
    CHECK(r.energy == doctest::Approx(recompute_energy(r, prob)).epsilon(1e-12));
  }
}

TEST_CASE("decoded states satisfy the structural constraints") {
  Rng rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    int s = 2 + int(rng.index(7));
    ParseTree tree;
    MrfProblem prob = random_problem(tree, s, 4, rng);
    DecodeResult r = map_decode(prob);
    for (int i = 0; i < s; ++i) CHECK(std::popcount(r.states[std::size_t(i)]) == 1);
    for (std::size_t k = 0; k < tree.internals.size(); ++k) {
      std::uint32_t parent = r.states[std::size_t(s) + k];
      CHECK(parent != 0u);
      CHECK(pairwise_feasible(r.states[std::size_t(tree.internals[k].left)], parent));
      CHECK(pairwise_feasible(r.states[std::size_t(tree.internals[k].right)], parent));
    }
  }
}

TEST_CASE("decode energy never above the independent argmax assignment energy") {
  // building the root state as the union of per-leaf argmax singletons is
  // one feasible assignment, so the optimum cannot cost more
  Rng rng(66);
  for (int trial = 0; trial < 30; ++trial) {
    int s = 2 + int(rng.index(5));
    ParseTree tree;
    MrfProblem prob = random_problem(tree, s, 3, rng);
    DecodeResult r = map_decode(prob);

    DecodeResult naive;
    naive.states.assign(std::size_t(tree.node_count()), 0);
    auto sets = leaf_sets(tree);
    for (int i = 0; i < s; ++i) {
      const Vec& p = prob.node_dist[std::size_t(i)];
      int arg = 0;
      for (int c = 1; c < int(p.size()); ++c)
        if (p[std::size_t(c)] > p[std::size_t(arg)]) arg = c;
      naive.states[std::size_t(i)] = 1u << arg;
    }
    for (std::size_t k = 0; k < tree.internals.size(); ++k) {
      std::uint32_t u = 0;
      for (int leaf : sets[std::size_t(s) + k]) u |= naive.states[std::size_t(leaf)];
      naive.states[std::size_t(s) + k] = u;
    }
    CHECK(r.energy <= recompute_energy(naive, prob) + 1e-12);
  }
}

TEST_CASE("edge pair evaluation counts stay within the 511x511 bound") {
  Rng rng(77);
  ParseTree tree;
  MrfProblem prob = random_problem(tree, 6, 4, rng);
  DecodeResult r = map_decode(prob);
  std::uint64_t bound = 511ull * 511ull;
  bool any = false;
  for (std::uint64_t v : r.edge_pair_evals) {
    CHECK(v <= bound);
    if (v > 0) any = true;
  }
  CHECK(any);
}

TEST_CASE("brute force guard trips on oversized instances") {
  Rng rng(88);
  ParseTree tree;
  MrfProblem prob = random_problem(tree, 8, 5, rng);
  CHECK_THROWS_AS(brute_force_decode(prob, 10), DataError);
}

TEST_CASE("dump lists every node and the energy") {
  ParseTree tree;
  tree.leaf_count = 1;
  MrfProblem prob;
  prob.tree = &tree;
  prob.node_dist = {Vec{0.25, 0.75}};
  prob.retained.labels = {0, 1};
  DecodeResult r = map_decode(prob);
  std::string s = dump_decode(r, prob);
  CHECK(s.find("0 2 ") != std::string::npos);
  CHECK(s.find("energy") != std::string::npos);
}
