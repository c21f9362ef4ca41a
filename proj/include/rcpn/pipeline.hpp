#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcpn/config.hpp"
#include "rcpn/image.hpp"
#include "rcpn/metrics.hpp"
#include "rcpn/net.hpp"
#include "rcpn/tree_mrf.hpp"

namespace rcpn {

struct ImageCase {
  std::string name;  // file stem
  PixelGrid image;
  std::optional<LabelGrid> labels;
  SegmentationMap seg;
  SuperpixelGraph graph;
};

// Loads *.ppm from images_dir (sorted), companion <stem>.pgm labels and
// <stem>.csv features when the directories are configured, segments and
// builds the graphs.
std::vector<ImageCase> load_cases(const CliConfig& cfg, bool need_labels);

// Largest label + 1 across the dataset unless cfg.classes overrides.
int resolve_classes(const CliConfig& cfg, const std::vector<ImageCase>& cases);

SegmentationMap segment(const CliConfig& cfg, const PixelGrid& img);

LabelGrid broadcast_labels(const SegmentationMap& seg, const std::vector<int>& leaf_labels);

// Shared vote rule: majority, ties by highest mean probability, then
// smaller class index.
std::vector<int> vote_labels(const std::vector<std::vector<int>>& per_tree_labels,
                             const std::vector<Vec>& mean_dist);

struct InferOutput {
  std::vector<int> leaf_labels;
  TimingReport timing;
};

InferOutput infer_graph(const RcpnParams& params, const SuperpixelGraph& graph,
                        const CliConfig& cfg, Rng& rng);

PixelGrid colorize(const LabelGrid& labels, int classes);

int run_synth(const CliConfig& cfg);
int run_train(const CliConfig& cfg);
int run_infer(const CliConfig& cfg);
int run_eval(const CliConfig& cfg);
int run_diag(const CliConfig& cfg);

// Dispatch on cfg.command; writes resolved_config into cfg.out first.
int run_command(const CliConfig& cfg);

}  // namespace rcpn
