#include "rcpn/net.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

namespace {

void glorot_fill(DenseMatrix& m, Rng& rng) {
  double bound = std::sqrt(6.0 / double(m.rows + m.cols));
  for (double& v : m.data) v = rng.uniform(-bound, bound);
}

Vec concat2(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// grad += e * [x; 1]^T
void outer_add(DenseMatrix& grad, const Vec& e, const Vec& x) {
  for (std::size_t i = 0; i < grad.rows; ++i) {
    double* row = grad.data.data() + i * grad.cols;
    for (std::size_t j = 0; j < x.size(); ++j) row[j] += e[i] * x[j];
    row[grad.cols - 1] += e[i];
  }
}

// out[j0..j0+n) += W[:, j0..j0+n)^T * e  (skips the bias column by range)
void back_project(const DenseMatrix& w, const Vec& e, std::size_t j0, std::size_t n, Vec& out) {
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + i * w.cols;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j0 + j] * e[i];
  }
}

void elemwise_mul(Vec& a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
}

}  // namespace

RcpnParams RcpnParams::init(int d_vis, int d_sem, int classes, Activation act, Rng& rng) {
  RcpnParams p;
  p.act = act;
  p.w_sem = DenseMatrix(d_sem, d_vis + 1);
  p.w_com = DenseMatrix(d_sem, 2 * d_sem + 1);
  p.w_dec = DenseMatrix(d_sem, 2 * d_sem + 1);
  p.w_cat = DenseMatrix(classes, d_sem + 1);
  glorot_fill(p.w_sem, rng);
  glorot_fill(p.w_com, rng);
  glorot_fill(p.w_dec, rng);
  glorot_fill(p.w_cat, rng);
  return p;
}

Gradients Gradients::zeros_like(const RcpnParams& p) {
  Gradients g;
  g.w_sem = DenseMatrix(p.w_sem.rows, p.w_sem.cols);
  g.w_com = DenseMatrix(p.w_com.rows, p.w_com.cols);
  g.w_dec = DenseMatrix(p.w_dec.rows, p.w_dec.cols);
  g.w_cat = DenseMatrix(p.w_cat.rows, p.w_cat.cols);
  return g;
}

void Gradients::add(const Gradients& other) {
  auto acc = [](DenseMatrix& a, const DenseMatrix& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  };
  acc(w_sem, other.w_sem);
  acc(w_com, other.w_com);
  acc(w_dec, other.w_dec);
  acc(w_cat, other.w_cat);
}

void Gradients::scale(double f) {
  for (auto* m : {&w_sem, &w_com, &w_dec, &w_cat})
    for (double& v : m->data) v *= f;
}

double Gradients::block_squared_norm(int block) const {
  const DenseMatrix* m[4] = {&w_sem, &w_com, &w_dec, &w_cat};
  double s = 0.0;
  for (double v : m[block]->data) s += v * v;
  return s;
}

std::size_t Gradients::block_param_count(int block) const {
  const DenseMatrix* m[4] = {&w_sem, &w_com, &w_dec, &w_cat};
  return m[block]->size();
}

double Gradients::squared_norm() const {
  return block_squared_norm(0) + block_squared_norm(1) + block_squared_norm(2) +
         block_squared_norm(3);
}

ForwardTrace forward(const RcpnParams& params, const SuperpixelGraph& graph,
                     const ParseTree& tree) {
  if (graph.count != tree.leaf_count)
    throw DataError("forward: tree has " + std::to_string(tree.leaf_count) +
                    " leaves but graph has " + std::to_string(graph.count) + " super-pixels");
  int n = tree.node_count();
  ForwardTrace t;
  t.x.resize(n);
  t.x_deriv.resize(n);
  t.xt.resize(n);
  t.xt_deriv.resize(n);
  t.y.resize(n);

  // bottom-up: semantic mapper at leaves, combiner at internal nodes
  for (int i = 0; i < tree.leaf_count; ++i) {
    Activated a = activation(affine(params.w_sem, graph.features[i]), params.act);
    t.x[i] = std::move(a.value);
    t.x_deriv[i] = std::move(a.derivative);
  }
  for (std::size_t k = 0; k < tree.internals.size(); ++k) {
    const auto& in = tree.internals[k];
    Activated a = activation(
        affine(params.w_com, concat2(t.x[in.left], t.x[in.right])), params.act);
    t.x[tree.leaf_count + k] = std::move(a.value);
    t.x_deriv[tree.leaf_count + k] = std::move(a.derivative);
    ++t.combiner_calls;
  }

  // top-down: the root's enhanced feature is its semantic feature
  t.xt[tree.root()] = t.x[tree.root()];
  for (int k = int(tree.internals.size()) - 1; k >= 0; --k) {
    const auto& in = tree.internals[k];
    int parent = tree.leaf_count + k;
    for (int child : {in.left, in.right}) {
      Activated a = activation(
          affine(params.w_dec, concat2(t.x[child], t.xt[parent])), params.act);
      t.xt[child] = std::move(a.value);
      t.xt_deriv[child] = std::move(a.derivative);
      ++t.decombiner_calls;
    }
  }

  for (int i = 0; i < n; ++i) t.y[i] = softmax(affine(params.w_cat, t.xt[i]));
  return t;
}

namespace {

LossResult leaf_loss_impl(const std::vector<Vec>& y, const SuperpixelGraph& graph,
                          const Vec& class_weights, double leaf_div, int node_count) {
  if (!graph.labels) throw DataError("loss: graph has no ground-truth labels");
  const auto& labels = *graph.labels;
  LossResult r;
  r.node_errors.assign(node_count, Vec{});
  for (int s = 0; s < graph.count; ++s)
    if (labels[s] != kVoid) ++r.leaf_count;
  if (r.leaf_count == 0) throw DataError("loss: no labeled (non-VOID) leaves");
  if (leaf_div <= 0.0) leaf_div = r.leaf_count;

  for (int s = 0; s < graph.count; ++s) {
    int target = labels[s];
    if (target == kVoid) continue;
    double w = class_weights.empty() ? 1.0 : class_weights[target];
    r.leaf_loss_sum += cross_entropy(y[s], std::size_t(target), w);
    Vec e = y[s];
    e[target] -= 1.0;
    for (double& v : e) v *= w / leaf_div;
    r.node_errors[s] = std::move(e);
  }
  r.value = r.leaf_loss_sum / leaf_div;
  return r;
}

}  // namespace

LossResult loss(const ForwardTrace& trace, const SuperpixelGraph& graph, const ParseTree& tree,
                LossMode mode, const Vec& class_weights, double leaf_div, double pure_div) {
  LossResult r = leaf_loss_impl(trace.y, graph, class_weights, leaf_div, tree.node_count());
  r.pure_count = tree.pure_node_count();
  if (mode == LossMode::PureNode && r.pure_count > 0) {
    if (pure_div <= 0.0) pure_div = r.pure_count;
    for (std::size_t k = 0; k < tree.internals.size(); ++k) {
      int target = tree.internals[k].pure_label;
      if (target == kVoid) continue;
      int node = tree.leaf_count + int(k);
      double w = class_weights.empty() ? 1.0 : class_weights[target];
      r.pure_loss_sum += cross_entropy(trace.y[node], std::size_t(target), w);
      Vec e = trace.y[node];
      e[target] -= 1.0;
      for (double& v : e) v *= w / pure_div;
      r.node_errors[node] = std::move(e);
    }
    r.value += r.pure_loss_sum / pure_div;
  }
  return r;
}

Gradients backward(const ForwardTrace& trace, const RcpnParams& params,
                   const SuperpixelGraph& graph, const ParseTree& tree,
                   const std::vector<Vec>& node_errors) {
  int n = tree.node_count();
  int d = params.d_sem();
  Gradients g = Gradients::zeros_like(params);
  std::vector<Vec> d_xt(n, Vec(d, 0.0));  // error at enhanced features
  std::vector<Vec> d_x(n, Vec(d, 0.0));   // error at semantic features

  // categorizer
  for (int i = 0; i < n; ++i) {
    if (node_errors[i].empty()) continue;
    outer_add(g.w_cat, node_errors[i], trace.xt[i]);
    back_project(params.w_cat, node_errors[i], 0, d, d_xt[i]);
  }

  // decombiner, children before parents (ids ascend toward the root)
  for (int c = 0; c < n - 1; ++c) {
    // parent of c
    int parent = -1;
    for (std::size_t k = 0; k < tree.internals.size(); ++k)
      if (tree.internals[k].left == c || tree.internals[k].right == c) {
        parent = tree.leaf_count + int(k);
        break;
      }
    Vec e = d_xt[c];
    elemwise_mul(e, trace.xt_deriv[c]);
    outer_add(g.w_dec, e, concat2(trace.x[c], trace.xt[parent]));
    back_project(params.w_dec, e, 0, d, d_x[c]);        // bypass path
    back_project(params.w_dec, e, d, d, d_xt[parent]);  // tree path
  }
  if (n > 0) {
    // x~_root = x_root identity
    for (int j = 0; j < d; ++j) d_x[tree.root()][j] += d_xt[tree.root()][j];
  }

  // combiner, root down
  for (int k = int(tree.internals.size()) - 1; k >= 0; --k) {
    const auto& in = tree.internals[k];
    int node = tree.leaf_count + k;
    Vec e = d_x[node];
    elemwise_mul(e, trace.x_deriv[node]);
    outer_add(g.w_com, e, concat2(trace.x[in.left], trace.x[in.right]));
    back_project(params.w_com, e, 0, d, d_x[in.left]);
    back_project(params.w_com, e, d, d, d_x[in.right]);
  }

  // semantic mapper
  for (int i = 0; i < tree.leaf_count; ++i) {
    Vec e = d_x[i];
    elemwise_mul(e, trace.x_deriv[i]);
    outer_add(g.w_sem, e, graph.features[i]);
  }
  return g;
}

Prediction predict(const RcpnParams& params, const SuperpixelGraph& graph,
                   const std::vector<ParseTree>& trees) {
  if (trees.empty()) throw DataError("predict: need at least one parse tree");
  int s = graph.count;
  int c = params.classes();
  Prediction out;
  out.leaf_mean_dist.assign(s, Vec(c, 0.0));
  std::vector<std::vector<int>> votes(s, std::vector<int>(c, 0));

  for (const auto& tree : trees) {
    ForwardTrace t = forward(params, graph, tree);
    for (int i = 0; i < s; ++i) {
      const Vec& y = t.y[i];
      int arg = int(std::max_element(y.begin(), y.end()) - y.begin());
      ++votes[i][arg];
      for (int k = 0; k < c; ++k) out.leaf_mean_dist[i][k] += y[k];
    }
    out.traces.push_back(std::move(t));
  }
  double inv_r = 1.0 / double(trees.size());
  for (auto& m : out.leaf_mean_dist)
    for (double& v : m) v *= inv_r;

  out.leaf_labels.resize(s);
  for (int i = 0; i < s; ++i) {
    int best = 0;
    for (int k = 1; k < c; ++k) {
      if (votes[i][k] > votes[i][best] ||
          (votes[i][k] == votes[i][best] &&
           out.leaf_mean_dist[i][k] > out.leaf_mean_dist[i][best]))
        best = k;
      // equal votes and equal mean probability keep the smaller index
    }
    out.leaf_labels[i] = best;
  }
  return out;
}

LocalTrace forward_local(const RcpnParams& params, const SuperpixelGraph& graph) {
  LocalTrace t;
  t.x.resize(graph.count);
  t.x_deriv.resize(graph.count);
  t.y.resize(graph.count);
  for (int i = 0; i < graph.count; ++i) {
    Activated a = activation(affine(params.w_sem, graph.features[i]), params.act);
    t.x[i] = std::move(a.value);
    t.x_deriv[i] = std::move(a.derivative);
    t.y[i] = softmax(affine(params.w_cat, t.x[i]));
  }
  return t;
}

LossResult loss_local(const LocalTrace& trace, const SuperpixelGraph& graph,
                      const Vec& class_weights, double leaf_div) {
  return leaf_loss_impl(trace.y, graph, class_weights, leaf_div, graph.count);
}

Gradients backward_local(const LocalTrace& trace, const RcpnParams& params,
                         const SuperpixelGraph& graph, const std::vector<Vec>& node_errors) {
  int d = params.d_sem();
  Gradients g = Gradients::zeros_like(params);
  for (int i = 0; i < graph.count; ++i) {
    if (node_errors[i].empty()) continue;
    outer_add(g.w_cat, node_errors[i], trace.x[i]);
    Vec dx(d, 0.0);
    back_project(params.w_cat, node_errors[i], 0, d, dx);
    elemwise_mul(dx, trace.x_deriv[i]);
    outer_add(g.w_sem, dx, graph.features[i]);
  }
  return g;
}

}  // namespace rcpn
