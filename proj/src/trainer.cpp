#include "rcpn/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

Vec class_weights(const Dataset& dataset, int classes, bool balanced) {
  if (!balanced) return Vec(classes, 1.0);
  std::vector<long> freq(classes, 0);
  long total = 0;
  for (const auto& g : dataset) {
    if (!g.labels) throw DataError("class_weights: graph without labels");
    for (int l : *g.labels)
      if (l != kVoid) {
        if (l >= classes) throw DataError("class_weights: label exceeds class count");
        ++freq[l];
        ++total;
      }
  }
  if (total == 0) throw DataError("class_weights: no labeled super-pixels in dataset");
  Vec w(classes, 0.0);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c)
    if (freq[c] > 0) {
      w[c] = double(total) / double(freq[c]);
      sum += w[c];
      ++present;
    }
  for (double& v : w) v *= present / sum;  // mean over present classes = 1
  return w;
}

void sgd_step(RcpnParams& params, const Gradients& grads, Velocity& velocity,
              const TrainConfig& config) {
  double sq = grads.squared_norm();
  if (!std::isfinite(sq)) throw NumericError("sgd_step: non-finite gradient");
  Gradients g = grads;
  if (config.clip_norm > 0.0) {
    double norm = std::sqrt(sq);
    if (norm > config.clip_norm) g.scale(config.clip_norm / norm);
  }
  DenseMatrix* p[4] = {&params.w_sem, &params.w_com, &params.w_dec, &params.w_cat};
  const DenseMatrix* gm[4] = {&g.w_sem, &g.w_com, &g.w_dec, &g.w_cat};
  DenseMatrix* vm[4] = {&velocity.v.w_sem, &velocity.v.w_com, &velocity.v.w_dec,
                        &velocity.v.w_cat};
  for (int b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < p[b]->data.size(); ++i) {
      double dv = gm[b]->data[i] + config.weight_decay * p[b]->data[i];
      vm[b]->data[i] = config.momentum * vm[b]->data[i] - config.learning_rate * dv;
      p[b]->data[i] += vm[b]->data[i];
    }
}

DiagnosticsRow gradient_strengths(const Gradients& grads) {
  DiagnosticsRow row;
  double* out[4] = {&row.g_sem, &row.g_com, &row.g_dec, &row.g_cat};
  for (int b = 0; b < 4; ++b)
    *out[b] = std::sqrt(grads.block_squared_norm(b) / double(grads.block_param_count(b)));
  return row;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, int d_vis, int classes) {
  if (dataset.empty()) throw DataError("train: empty dataset");
  for (const auto& g : dataset)
    if (!g.labels) throw DataError("train: graph without labels");

  Rng rng(config.seed);
  Rng init_rng = rng.fork();
  Rng tree_rng = rng.fork();
  Rng order_rng = rng.fork();

  TrainResult res;
  res.params = RcpnParams::init(d_vis, config.d_sem, classes, config.act, init_rng);
  Vec weights = class_weights(dataset, classes, config.balanced);
  Velocity vel{Gradients::zeros_like(res.params)};

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  int iter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_sum = 0.0;
    for (std::size_t idx : order) {
      const SuperpixelGraph& graph = dataset[idx];
      Gradients grads = Gradients::zeros_like(res.params);
      double image_loss = 0.0;

      if (config.plain_nn) {
        LocalTrace t = forward_local(res.params, graph);
        LossResult lr = loss_local(t, graph, weights);
        grads.add(backward_local(t, res.params, graph, lr.node_errors));
        image_loss = lr.value;
      } else {
        std::vector<ParseTree> trees;
        int sum_pure = 0;
        for (int r = 0; r < config.r_train; ++r) {
          ParseTree t = build_random_tree(graph, tree_rng, config.policy);
          t = mark_pure_nodes(t, graph);
          sum_pure += t.pure_node_count();
          trees.push_back(std::move(t));
        }
        int labeled = 0;
        for (int l : *graph.labels)
          if (l != kVoid) ++labeled;
        double leaf_div = double(config.r_train) * labeled;
        double pure_div = sum_pure > 0 ? double(sum_pure) : 1.0;
        for (const auto& tree : trees) {
          ForwardTrace t = forward(res.params, graph, tree);
          LossResult lr = loss(t, graph, tree, config.mode, weights, leaf_div, pure_div);
          grads.add(backward(t, res.params, graph, tree, lr.node_errors));
          image_loss += lr.value;
        }
      }

      sgd_step(res.params, grads, vel, config);
      DiagnosticsRow row = gradient_strengths(grads);
      row.iteration = iter++;
      row.loss = image_loss;
      res.diagnostics.push_back(row);
      epoch_sum += image_loss;
    }
    res.epoch_loss.push_back(epoch_sum / double(dataset.size()));
  }
  return res;
}

namespace {

constexpr char kMagic[8] = {'R', 'C', 'P', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError(path + ": truncated checkpoint");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

void put_block(std::ostream& out, const DenseMatrix& m) {
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            std::streamsize(m.data.size() * 8));
}

void get_block(std::istream& in, DenseMatrix& m, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(m.data.data()), std::streamsize(m.data.size() * 8)))
    throw DataError(path + ": truncated checkpoint payload");
}

}  // namespace

void save_checkpoint(const RcpnParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, std::uint32_t(params.d_vis()));
  put_u32(out, std::uint32_t(params.d_sem()));
  put_u32(out, std::uint32_t(params.classes()));
  put_u32(out, params.act == Activation::Tanh ? 0 : 1);
  put_block(out, params.w_sem);
  put_block(out, params.w_com);
  put_block(out, params.w_dec);
  put_block(out, params.w_cat);
  if (!out) throw DataError("checkpoint write failed: " + path);
}

RcpnParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError(path + ": bad checkpoint magic, expected RCPNCKPT");
  std::uint32_t version = get_u32(in, path);
  if (version != kVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  int d_vis = int(get_u32(in, path));
  int d_sem = int(get_u32(in, path));
  int classes = int(get_u32(in, path));
  std::uint32_t act = get_u32(in, path);
  if (act > 1) throw DataError(path + ": bad activation tag");
  if (d_vis < 1 || d_sem < 1 || classes < 1) throw DataError(path + ": bad dimensions");

  RcpnParams p;
  p.act = act == 0 ? Activation::Tanh : Activation::Relu;
  p.w_sem = DenseMatrix(d_sem, d_vis + 1);
  p.w_com = DenseMatrix(d_sem, 2 * d_sem + 1);
  p.w_dec = DenseMatrix(d_sem, 2 * d_sem + 1);
  p.w_cat = DenseMatrix(classes, d_sem + 1);
  get_block(in, p.w_sem, path);
  get_block(in, p.w_com, path);
  get_block(in, p.w_dec, path);
  get_block(in, p.w_cat, path);
  if (!all_finite(p.w_sem) || !all_finite(p.w_com) || !all_finite(p.w_dec) ||
      !all_finite(p.w_cat))
    throw DataError(path + ": non-finite weights in checkpoint");
  return p;
}

void check_checkpoint_dims(const RcpnParams& params, int d_vis, int d_sem, int classes) {
  if (params.d_vis() != d_vis || params.d_sem() != d_sem || params.classes() != classes) {
    std::ostringstream os;
    os << "checkpoint shape mismatch: has (d_vis=" << params.d_vis()
       << ", d_sem=" << params.d_sem() << ", classes=" << params.classes()
       << ") but session expects (d_vis=" << d_vis << ", d_sem=" << d_sem
       << ", classes=" << classes << ")";
    throw DataError(os.str());
  }
}

}  // namespace rcpn
