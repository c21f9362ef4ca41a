#include "rcpn/tree_mrf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

RetainedLabels retain_labels(const std::vector<int>& leaf_predictions, int k) {
  if (leaf_predictions.empty()) throw DataError("retain_labels: no leaf predictions");
  if (k < 1) throw DataError("retain_labels: k must be >= 1");
  std::map<int, int> counts;
  for (int l : leaf_predictions) ++counts[l];
  std::vector<std::pair<int, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  RetainedLabels out;
  for (const auto& [label, count] : ranked) {
    if (int(out.labels.size()) == k) break;
    out.labels.push_back(label);
  }
  return out;
}

double unary_cost(std::uint32_t state, const RetainedLabels& retained, const Vec& p) {
  if (state == 0) throw DataError("unary_cost: empty state");
  constexpr double kEps = 1e-12;
  double sum = 0.0;
  int n = 0;
  for (int bit = 0; bit < retained.size(); ++bit)
    if (state & (1u << bit)) {
      sum += -std::log(std::max(p[retained.labels[bit]], kEps));
      ++n;
    }
  return sum / n;
}

namespace {

void check_problem(const MrfProblem& problem) {
  if (!problem.tree) throw DataError("mrf decode: missing tree");
  if (int(problem.node_dist.size()) != problem.tree->node_count())
    throw DataError("mrf decode: need one distribution per tree node");
  if (problem.retained.labels.empty()) throw DataError("mrf decode: empty retained label set");
}

bool singleton(std::uint32_t m) { return std::popcount(m) == 1; }

}  // namespace

DecodeResult map_decode(const MrfProblem& problem) {
  check_problem(problem);
  const ParseTree& tree = *problem.tree;
  int n = tree.node_count();
  std::uint32_t full = problem.retained.full_mask();
  constexpr double kInf = 1e300;

  std::vector<std::vector<double>> cost(n, std::vector<double>(full + 1, kInf));
  // choice[child][parent_state] = child's best state given the parent's
  std::vector<std::vector<std::uint32_t>> choice(n);

  DecodeResult res;
  res.edge_pair_evals.assign(n, 0);

  for (int node = 0; node < n; ++node) {
    if (tree.is_leaf(node)) {
      for (std::uint32_t s = 1; s <= full; ++s)
        if (singleton(s)) cost[node][s] = unary_cost(s, problem.retained, problem.node_dist[node]);
      continue;
    }
    const auto& in = tree.internal(node);
    for (int child : {in.left, in.right}) choice[child].assign(full + 1, 0);
    for (std::uint32_t s = 1; s <= full; ++s) {
      double total = unary_cost(s, problem.retained, problem.node_dist[node]);
      for (int child : {in.left, in.right}) {
        double best = kInf;
        std::uint32_t best_mask = 0;
        // submask enumeration descends, so <= keeps the smallest mask on ties
        for (std::uint32_t sub = s;; sub = (sub - 1) & s) {
          if (sub != 0 && cost[child][sub] <= best) {
            best = cost[child][sub];
            best_mask = sub;
          }
          ++res.edge_pair_evals[child];
          if (sub == 0) break;
        }
        choice[child][s] = best_mask;
        total += best;
      }
      cost[node][s] = total;
    }
  }

  int root = tree.root();
  double best = kInf;
  std::uint32_t best_root = 0;
  for (std::uint32_t s = 1; s <= full; ++s)
    if (cost[root][s] < best) {
      best = cost[root][s];
      best_root = s;
    }
  if (best_root == 0) throw DataError("map_decode: no feasible assignment");

  res.states.assign(n, 0);
  res.states[root] = best_root;
  res.energy = best;
  for (int k = int(tree.internals.size()) - 1; k >= 0; --k) {
    int node = tree.leaf_count + k;
    const auto& in = tree.internals[k];
    std::uint32_t s = res.states[node];
    res.states[in.left] = choice[in.left][s];
    res.states[in.right] = choice[in.right][s];
  }
  return res;
}

namespace {

// Energy of a full assignment with the same summation association as the
// DP pass, so equal-energy ties compare bit-exactly.
double assignment_energy(const MrfProblem& problem, const std::vector<std::uint32_t>& states,
                         int node) {
  const ParseTree& tree = *problem.tree;
  double e = unary_cost(states[node], problem.retained, problem.node_dist[node]);
  if (!tree.is_leaf(node)) {
    const auto& in = tree.internal(node);
    e += assignment_energy(problem, states, in.left);
    e += assignment_energy(problem, states, in.right);
  }
  return e;
}

struct BruteState {
  const MrfProblem& problem;
  std::uint64_t guard;
  std::uint64_t evaluated = 0;
  std::vector<std::uint32_t> assign;
  std::vector<std::uint32_t> best_assign;
  double best = 1e300;
  bool found = false;

  // nodes in preorder (root first); masks enumerated ascending, so the
  // first strict minimum is the lexicographically smallest tie
  void recurse(std::size_t order_idx, const std::vector<int>& preorder) {
    const ParseTree& tree = *problem.tree;
    if (order_idx == preorder.size()) {
      if (++evaluated > guard)
        throw DataError("brute_force_decode: search space exceeds guard of " +
                        std::to_string(guard) + " assignments");
      double e = assignment_energy(problem, assign, tree.root());
      if (!found || e < best) {
        best = e;
        best_assign = assign;
        found = true;
      }
      return;
    }
    int node = preorder[order_idx];
    std::uint32_t full = problem.retained.full_mask();
    bool leaf = tree.is_leaf(node);
    std::uint32_t parent_mask = full;
    if (node != tree.root()) {
      for (std::size_t k = 0; k < tree.internals.size(); ++k)
        if (tree.internals[k].left == node || tree.internals[k].right == node)
          parent_mask = assign[tree.leaf_count + k];
    }
    for (std::uint32_t s = 1; s <= full; ++s) {
      if (leaf && !singleton(s)) continue;
      if (!pairwise_feasible(s, parent_mask)) continue;
      assign[node] = s;
      recurse(order_idx + 1, preorder);
    }
  }
};

}  // namespace

DecodeResult brute_force_decode(const MrfProblem& problem, std::uint64_t guard) {
  check_problem(problem);
  const ParseTree& tree = *problem.tree;
  std::vector<int> preorder;
  // root-first traversal; children of a node always follow it
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    preorder.push_back(node);
    if (!tree.is_leaf(node)) {
      const auto& in = tree.internal(node);
      stack.push_back(in.right);
      stack.push_back(in.left);
    }
  }
  BruteState bs{problem, guard, 0, {}, {}, 1e300, false};
  bs.assign.assign(tree.node_count(), 0);
  bs.recurse(0, preorder);
  if (!bs.found) throw DataError("brute_force_decode: no feasible assignment");
  DecodeResult res;
  res.states = bs.best_assign;
  res.energy = bs.best;
  return res;
}

std::vector<int> decode_leaf_labels(const DecodeResult& result, const ParseTree& tree,
                                    const RetainedLabels& retained) {
  std::vector<int> labels(tree.leaf_count);
  for (int i = 0; i < tree.leaf_count; ++i) {
    std::uint32_t s = result.states[i];
    if (!singleton(s)) throw DataError("decode_leaf_labels: leaf state is not a singleton");
    labels[i] = retained.labels[std::countr_zero(s)];
  }
  return labels;
}

std::string dump_decode(const DecodeResult& result, const MrfProblem& problem) {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < result.states.size(); ++i)
    os << i << ' ' << result.states[i] << ' '
       << unary_cost(result.states[i], problem.retained, problem.node_dist[i]) << '\n';
  os << "energy " << result.energy << '\n';
  return os.str();
}

}  // namespace rcpn
