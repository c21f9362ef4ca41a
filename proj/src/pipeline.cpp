#include "rcpn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rcpn/error.hpp"
#include "rcpn/parse_tree.hpp"
#include "rcpn/trainer.hpp"

namespace fs = std::filesystem;

namespace rcpn {

namespace {

std::vector<std::string> list_stems(const std::string& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext)
      stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SegmentationMap segment(const CliConfig& cfg, const PixelGrid& img) {
  if (cfg.superpixel_method == "slic")
    return slic_superpixels(img, cfg.superpixel_count, cfg.slic_compactness, cfg.slic_iters);
  return grid_superpixels(img, cfg.superpixel_count);
}

std::vector<ImageCase> load_cases(const CliConfig& cfg, bool need_labels) {
  std::vector<std::string> stems = list_stems(cfg.images_dir, ".ppm");
  if (stems.empty()) throw DataError("no .ppm images in " + cfg.images_dir);
  std::vector<ImageCase> cases;
  for (const std::string& stem : stems) {
    ImageCase c;
    c.name = stem;
    c.image = load_image(cfg.images_dir + "/" + stem + ".ppm");
    const LabelGrid* labels = nullptr;
    if (!cfg.labels_dir.empty()) {
      std::string lpath = cfg.labels_dir + "/" + stem + ".pgm";
      if (fs::exists(lpath)) {
        c.labels = load_labels(lpath, cfg.void_value);
        if (c.labels->width != c.image.width || c.labels->height != c.image.height)
          throw DataError(lpath + ": label map dimensions differ from the image");
        labels = &*c.labels;
      } else if (need_labels) {
        throw DataError("missing label map: " + lpath);
      }
    } else if (need_labels) {
      throw ConfigError("labels_dir is required for this command");
    }
    c.seg = segment(cfg, c.image);
    c.graph = build_graph(c.seg, c.image, labels);
    if (!cfg.features_dir.empty())
      c.graph = import_features(cfg.features_dir + "/" + stem + ".csv", c.graph);
    cases.push_back(std::move(c));
  }
  return cases;
}

int resolve_classes(const CliConfig& cfg, const std::vector<ImageCase>& cases) {
  if (cfg.classes > 0) return cfg.classes;
  int max_label = -1;
  for (const auto& c : cases)
    if (c.graph.labels)
      for (int l : *c.graph.labels) max_label = std::max(max_label, l);
  if (max_label < 0) throw DataError("cannot infer class count: no labels in dataset");
  return max_label + 1;
}

LabelGrid broadcast_labels(const SegmentationMap& seg, const std::vector<int>& leaf_labels) {
  LabelGrid out(seg.width, seg.height);
  for (int y = 0; y < seg.height; ++y)
    for (int x = 0; x < seg.width; ++x) out.at(x, y) = leaf_labels[seg.at(x, y)];
  return out;
}

std::vector<int> vote_labels(const std::vector<std::vector<int>>& per_tree_labels,
                             const std::vector<Vec>& mean_dist) {
  if (per_tree_labels.empty()) throw DataError("vote_labels: no trees");
  std::size_t s = per_tree_labels[0].size();
  int classes = int(mean_dist[0].size());
  std::vector<int> out(s);
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<int> votes(classes, 0);
    for (const auto& t : per_tree_labels) ++votes[t[i]];
    int best = 0;
    for (int k = 1; k < classes; ++k)
      if (votes[k] > votes[best] ||
          (votes[k] == votes[best] && mean_dist[i][k] > mean_dist[i][best]))
        best = k;
    out[i] = best;
  }
  return out;
}

InferOutput infer_graph(const RcpnParams& params, const SuperpixelGraph& graph,
                        const CliConfig& cfg, Rng& rng) {
  if (params.d_vis() != graph.feature_dim())
    throw DataError("checkpoint expects d_vis=" + std::to_string(params.d_vis()) +
                    " but graph features have dimension " +
                    std::to_string(graph.feature_dim()));
  InferOutput out;
  std::vector<ParseTree> trees;
  TreePolicy policy = cfg.tree_policy_kind();
  for (int r = 0; r < cfg.r_test; ++r)
    trees.push_back(build_random_tree(graph, rng, policy));

  Prediction pred;
  out.timing.time_stage("network", [&] { pred = predict(params, graph, trees); });
  out.leaf_labels = pred.leaf_labels;

  if (cfg.mrf) {
    out.timing.time_stage("mrf", [&] {
      RetainedLabels retained = retain_labels(pred.leaf_labels, cfg.mrf_k);
      std::vector<std::vector<int>> per_tree;
      for (std::size_t r = 0; r < trees.size(); ++r) {
        MrfProblem problem{&trees[r], pred.traces[r].y, retained};
        DecodeResult dec = map_decode(problem);
        per_tree.push_back(decode_leaf_labels(dec, trees[r], retained));
      }
      out.leaf_labels = vote_labels(per_tree, pred.leaf_mean_dist);
    });
  }
  return out;
}

PixelGrid colorize(const LabelGrid& labels, int classes) {
  (void)classes;
  PixelGrid img(labels.width, labels.height);
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x) {
      int l = labels.at(x, y);
      double rgb[3] = {0, 0, 0};
      if (l != kVoid) {
        auto frac = [](double v) { return v - std::floor(v); };
        rgb[0] = 0.15 + 0.7 * frac(0.41 * (l + 1));
        rgb[1] = 0.15 + 0.7 * frac(0.61 * (l + 1));
        rgb[2] = 0.15 + 0.7 * frac(0.89 * (l + 1));
      }
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = rgb[c];
    }
  return img;
}

int run_synth(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  SynthSpec spec;
  spec.cells_x = cfg.synth_cells_x;
  spec.cells_y = cfg.synth_cells_y;
  spec.cell_size = cfg.synth_cell_size;
  spec.classes = cfg.synth_classes;
  spec.ambiguity = cfg.synth_ambiguity;
  spec.noise = cfg.synth_noise;

  Rng master(cfg.seed);
  std::ostringstream manifest;
  manifest << "cells_x = " << spec.cells_x << '\n'
           << "cells_y = " << spec.cells_y << '\n'
           << "cell_size = " << spec.cell_size << '\n'
           << "classes = " << spec.classes << '\n'
           << "ambiguity = " << csv_num(spec.ambiguity) << '\n'
           << "noise = " << csv_num(spec.noise) << '\n'
           << "image,seed,marker_cell,marker_variant,ambiguous_cells\n";
  for (int i = 0; i < cfg.synth_count; ++i) {
    std::uint64_t seed = master.next_u64();
    Rng rng(seed);
    SynthImage im = generate_synthetic(spec, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d", i);
    write_ppm(cfg.out + "/" + name + ".ppm", im.image);
    write_labels(cfg.out + "/" + name + ".pgm", im.labels, cfg.void_value);
    manifest << name << ',' << seed << ',' << im.marker_cell << ',' << im.marker_variant
             << ',';
    for (std::size_t k = 0; k < im.ambiguous_cells.size(); ++k) {
      if (k) manifest << ':';
      manifest << im.ambiguous_cells[k];
    }
    manifest << '\n';
  }
  write_text(cfg.out + "/manifest.txt", manifest.str());
  return 0;
}

namespace {

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  std::ostringstream os;
  os << "iter,loss,g_sem,g_com,g_dec,g_cat\n";
  for (const auto& r : rows)
    os << r.iteration << ',' << csv_num(r.loss) << ',' << csv_num(r.g_sem) << ','
       << csv_num(r.g_com) << ',' << csv_num(r.g_dec) << ',' << csv_num(r.g_cat) << '\n';
  return os.str();
}

TrainResult train_cases(const std::vector<ImageCase>& cases, const TrainConfig& tc,
                        int classes) {
  Dataset dataset;
  for (const auto& c : cases) dataset.push_back(c.graph);
  int d_vis = dataset[0].feature_dim();
  return train(dataset, tc, d_vis, classes);
}

}  // namespace

int run_train(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  std::vector<ImageCase> cases = load_cases(cfg, /*need_labels=*/true);
  int classes = resolve_classes(cfg, cases);
  TrainResult res = train_cases(cases, cfg.train_config(), classes);

  save_checkpoint(res.params, cfg.out + "/checkpoint.bin");
  write_text(cfg.out + "/diagnostics.csv", diagnostics_csv(res.diagnostics));
  {
    std::ostringstream os;
    os << "epoch,loss\n";
    for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
      os << e << ',' << csv_num(res.epoch_loss[e]) << '\n';
    write_text(cfg.out + "/loss_curve.csv", os.str());
  }

  // final train-set metrics (raw voted predictions, MRF off)
  if (cfg.epochs > 0) {
    ConfusionMatrix conf(classes);
    Rng rng(cfg.seed + 1);
    CliConfig infer_cfg = cfg;
    infer_cfg.mrf = false;
    for (const auto& c : cases) {
      if (cfg.plain_nn) {
        LocalTrace t = forward_local(res.params, c.graph);
        std::vector<int> labels(c.graph.count);
        for (int i = 0; i < c.graph.count; ++i)
          labels[i] =
              int(std::max_element(t.y[i].begin(), t.y[i].end()) - t.y[i].begin());
        accumulate(conf, broadcast_labels(c.seg, labels), *c.labels);
      } else {
        InferOutput out = infer_graph(res.params, c.graph, infer_cfg, rng);
        accumulate(conf, broadcast_labels(c.seg, out.leaf_labels), *c.labels);
      }
    }
    Scores s = scores(conf);
    std::ostringstream os;
    os << "ppa,mca,iou\n"
       << csv_num(s.ppa) << ',' << csv_num(s.mca) << ',' << csv_num(s.iou) << '\n';
    write_text(cfg.out + "/train_metrics.csv", os.str());
  }
  return 0;
}

int run_infer(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  RcpnParams params = load_checkpoint(cfg.model);
  std::vector<ImageCase> cases;
  TimingReport timing;
  {
    CliConfig load_cfg = cfg;
    load_cfg.labels_dir.clear();  // labels are not needed for inference
    timing.time_stage("ingest", [&] { cases = load_cases(load_cfg, false); });
  }
  Rng rng(cfg.seed);
  for (const auto& c : cases) {
    InferOutput out = infer_graph(params, c.graph, cfg, rng);
    for (const auto& [name, sec] : out.timing.stages()) timing.add(name, sec);
    LabelGrid pred = broadcast_labels(c.seg, out.leaf_labels);
    write_labels(cfg.out + "/" + c.name + ".pgm", pred, cfg.void_value);
    if (cfg.overlay) write_ppm(cfg.out + "/" + c.name + "_overlay.ppm",
                               colorize(pred, params.classes()));
  }
  write_text(cfg.out + "/timing.csv", timing.format());
  return 0;
}

int run_eval(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  std::vector<std::string> pred_stems = list_stems(cfg.pred_dir, ".pgm");
  std::vector<std::string> gt_stems = list_stems(cfg.labels_dir, ".pgm");
  std::vector<std::string> common, missing;
  std::set_intersection(pred_stems.begin(), pred_stems.end(), gt_stems.begin(),
                        gt_stems.end(), std::back_inserter(common));
  std::set_symmetric_difference(pred_stems.begin(), pred_stems.end(), gt_stems.begin(),
                                gt_stems.end(), std::back_inserter(missing));
  if (common.empty() || !missing.empty()) {
    std::ostringstream os;
    os << "eval: prediction and ground-truth filenames do not match; unpaired:";
    for (const auto& m : missing) os << ' ' << m;
    if (common.empty()) os << " (no common files)";
    throw DataError(os.str());
  }

  int classes = cfg.classes;
  std::vector<std::pair<LabelGrid, LabelGrid>> pairs;
  for (const auto& stem : common) {
    LabelGrid pred = load_labels(cfg.pred_dir + "/" + stem + ".pgm", cfg.void_value);
    LabelGrid gt = load_labels(cfg.labels_dir + "/" + stem + ".pgm", cfg.void_value);
    if (classes == 0)
      for (const auto* g : {&pred, &gt})
        for (int l : g->labels) classes = std::max(classes, l + 1);
    pairs.emplace_back(std::move(pred), std::move(gt));
  }
  if (classes == 0) throw DataError("eval: no labeled pixels found");
  ConfusionMatrix conf(classes);
  for (const auto& [pred, gt] : pairs) accumulate(conf, pred, gt);
  Scores s = scores(conf);

  std::ostringstream os;
  os << "ppa,mca,iou";
  if (!cfg.iou_subset.empty()) os << ",iou_subset";
  os << '\n' << csv_num(s.ppa) << ',' << csv_num(s.mca) << ',' << csv_num(s.iou);
  if (!cfg.iou_subset.empty()) {
    std::vector<int> subset;
    std::stringstream ss(cfg.iou_subset);
    std::string tok;
    while (std::getline(ss, tok, ','))
      subset.push_back(std::stoi(tok));
    os << ',' << csv_num(iou_subset(conf, subset));
  }
  os << '\n';
  write_text(cfg.out + "/metrics.csv", os.str());
  return 0;
}

int run_diag(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  std::vector<ImageCase> cases = load_cases(cfg, /*need_labels=*/true);
  int classes = resolve_classes(cfg, cases);

  TrainConfig rcpn_tc = cfg.train_config();
  rcpn_tc.mode = LossMode::Rcpn;
  TrainConfig pure_tc = cfg.train_config();
  pure_tc.mode = LossMode::PureNode;

  TrainResult rcpn_res = train_cases(cases, rcpn_tc, classes);
  TrainResult pure_res = train_cases(cases, pure_tc, classes);
  write_text(cfg.out + "/diag_rcpn.csv", diagnostics_csv(rcpn_res.diagnostics));
  write_text(cfg.out + "/diag_pure_node.csv", diagnostics_csv(pure_res.diagnostics));

  auto early_ratio = [](const std::vector<DiagnosticsRow>& rows) {
    std::size_t n = std::max<std::size_t>(1, rows.size() / 10);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += rows[i].g_com / rows[i].g_sem;
    return sum / double(n);
  };
  std::ostringstream os;
  os << "mode,early_gcom_gsem_ratio\n"
     << "rcpn," << csv_num(early_ratio(rcpn_res.diagnostics)) << '\n'
     << "pure_node," << csv_num(early_ratio(pure_res.diagnostics)) << '\n';
  write_text(cfg.out + "/summary.csv", os.str());
  return 0;
}

int run_command(const CliConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(cfg.out + "/resolved_config", resolved_config(cfg));
  if (cfg.command == "synth") return run_synth(cfg);
  if (cfg.command == "train") return run_train(cfg);
  if (cfg.command == "infer") return run_infer(cfg);
  if (cfg.command == "eval") return run_eval(cfg);
  if (cfg.command == "diag") return run_diag(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace rcpn
