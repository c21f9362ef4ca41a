#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcpn/numeric.hpp"

namespace rcpn {

constexpr int kVoid = -1;

// RGB image, values in [0,1], channel-interleaved row-major.
struct PixelGrid {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 * width * height

  PixelGrid() = default;
  PixelGrid(int w, int h) : width(w), height(h), data(3ull * w * h, 0.0) {}

  double at(int x, int y, int c) const { return data[3ull * (std::size_t(y) * width + x) + c]; }
  double& at(int x, int y, int c) { return data[3ull * (std::size_t(y) * width + x) + c]; }
};

// Per-pixel class index, kVoid for unlabeled pixels.
struct LabelGrid {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  LabelGrid() = default;
  LabelGrid(int w, int h, int fill = kVoid)
      : width(w), height(h), labels(std::size_t(w) * h, fill) {}

  int at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
  int& at(int x, int y) { return labels[std::size_t(y) * width + x]; }
};

// Partition of the image into S super-pixels, ids 0..S-1.
struct SegmentationMap {
  int width = 0;
  int height = 0;
  int count = 0;  // S
  std::vector<int> ids;

  int at(int x, int y) const { return ids[std::size_t(y) * width + x]; }
  int& at(int x, int y) { return ids[std::size_t(y) * width + x]; }
};

struct SuperpixelGraph {
  int count = 0;                        // S
  std::vector<Vec> features;            // v_i, length d_vis each
  std::optional<std::vector<int>> labels;  // majority ground truth, kVoid allowed
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists, symmetric
  std::vector<int> pixel_counts;

  int feature_dim() const { return features.empty() ? 0 : int(features[0].size()); }
};

// PPM (P3/P6) reader/writer, maxval 255. Parse errors carry the byte offset.
PixelGrid load_image(const std::string& path);
void write_ppm(const std::string& path, const PixelGrid& img);

// PGM (P2/P5) label maps. Pixels equal to void_value become kVoid.
LabelGrid load_labels(const std::string& path, int void_value);
void write_labels(const std::string& path, const LabelGrid& labels, int void_value);

SegmentationMap grid_superpixels(const PixelGrid& img, int target_count);

SegmentationMap slic_superpixels(const PixelGrid& img, int target_count, double compactness,
                                 int iters);

SuperpixelGraph build_graph(const SegmentationMap& seg, const PixelGrid& img,
                            const LabelGrid* labels);

// CSV feature import/export, rows `id,f1,...,fd`.
SuperpixelGraph import_features(const std::string& path, const SuperpixelGraph& graph);
void export_features(const std::string& path, const SuperpixelGraph& graph);

// Synthetic context-dependent dataset. Each image is a grid of colored
// cells; a marker cell's color decides whether the gray "ambiguous" cells
// belong to class 0 or class 1, so leaf features alone cannot label them.
struct SynthSpec {
  int cells_x = 4;
  int cells_y = 4;
  int cell_size = 8;   // pixels per cell side
  int classes = 4;     // >= 3: 0/1 ambiguous pair, 2 marker, rest distractors
  double ambiguity = 0.3;
  double noise = 0.03;
};

struct SynthImage {
  PixelGrid image;
  LabelGrid labels;
  int marker_cell = 0;
  int marker_variant = 0;            // 0 -> ambiguous cells are class 0, 1 -> class 1
  std::vector<int> ambiguous_cells;  // cell indices, row-major
};

SynthImage generate_synthetic(const SynthSpec& spec, Rng& rng);

}  // namespace rcpn
