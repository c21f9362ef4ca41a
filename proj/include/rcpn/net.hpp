#pragma once

#include <vector>

#include "rcpn/image.hpp"
#include "rcpn/numeric.hpp"
#include "rcpn/parse_tree.hpp"

namespace rcpn {

// Weights of the four 1-layer modules; every matrix carries a trailing
// bias column.
struct RcpnParams {
  DenseMatrix w_sem;  // d_sem x (d_vis + 1)
  DenseMatrix w_com;  // d_sem x (2 d_sem + 1)
  DenseMatrix w_dec;  // d_sem x (2 d_sem + 1)
  DenseMatrix w_cat;  // C x (d_sem + 1)
  Activation act = Activation::Tanh;

  int d_vis() const { return int(w_sem.cols) - 1; }
  int d_sem() const { return int(w_sem.rows); }
  int classes() const { return int(w_cat.rows); }

  // Uniform init in +-sqrt(6 / (fan_in + fan_out)) per block.
  static RcpnParams init(int d_vis, int d_sem, int classes, Activation act, Rng& rng);
};

// Per-node caches of one forward pass over one tree.
struct ForwardTrace {
  std::vector<Vec> x;         // semantic features
  std::vector<Vec> x_deriv;   // activation derivative at x's pre-activation
  std::vector<Vec> xt;        // enhanced features
  std::vector<Vec> xt_deriv;  // empty for the root (identity there)
  std::vector<Vec> y;         // categorizer distributions
  int combiner_calls = 0;
  int decombiner_calls = 0;
};

struct Gradients {
  DenseMatrix w_sem, w_com, w_dec, w_cat;

  static Gradients zeros_like(const RcpnParams& p);
  void add(const Gradients& other);
  void scale(double f);
  double squared_norm() const;
  double block_squared_norm(int block) const;  // 0 sem, 1 com, 2 dec, 3 cat
  std::size_t block_param_count(int block) const;
};

ForwardTrace forward(const RcpnParams& params, const SuperpixelGraph& graph,
                     const ParseTree& tree);

enum class LossMode { Rcpn, PureNode };

struct LossResult {
  double value = 0.0;
  double leaf_loss_sum = 0.0;
  double pure_loss_sum = 0.0;
  int leaf_count = 0;  // labeled leaves
  int pure_count = 0;
  // dL/d(categorizer logits) per node; empty vector = no error at that node
  std::vector<Vec> node_errors;
};

// Per-tree loss. leaf_div / pure_div default to this tree's labeled-leaf
// and pure-node counts; the trainer passes R*S and sum(P_r) instead so the
// aggregate over R trees matches the per-image objective.
LossResult loss(const ForwardTrace& trace, const SuperpixelGraph& graph, const ParseTree& tree,
                LossMode mode, const Vec& class_weights, double leaf_div = 0.0,
                double pure_div = 0.0);

// Exact gradients via backpropagation through the tree structure.
Gradients backward(const ForwardTrace& trace, const RcpnParams& params,
                   const SuperpixelGraph& graph, const ParseTree& tree,
                   const std::vector<Vec>& node_errors);

struct Prediction {
  std::vector<int> leaf_labels;
  std::vector<Vec> leaf_mean_dist;  // averaged categorizer output over trees
  std::vector<ForwardTrace> traces;
};

// Majority vote over per-tree argmax labels; ties go to the label with the
// highest mean probability, then to the smaller class index.
Prediction predict(const RcpnParams& params, const SuperpixelGraph& graph,
                   const std::vector<ParseTree>& trees);

// Degenerate context-free path (semantic mapper + categorizer only), the
// plain-NN baseline. Shares weights and shapes with the full model.
struct LocalTrace {
  std::vector<Vec> x, x_deriv, y;
};

LocalTrace forward_local(const RcpnParams& params, const SuperpixelGraph& graph);
LossResult loss_local(const LocalTrace& trace, const SuperpixelGraph& graph,
                      const Vec& class_weights, double leaf_div = 0.0);
Gradients backward_local(const LocalTrace& trace, const RcpnParams& params,
                         const SuperpixelGraph& graph, const std::vector<Vec>& node_errors);

}  // namespace rcpn
