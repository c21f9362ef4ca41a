#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcpn/image.hpp"

namespace rcpn {

// Rows are ground truth, columns predictions; VOID ground-truth pixels
// are never counted.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int c) : classes(c), counts(std::size_t(c) * c, 0) {}

  std::int64_t& at(int gt, int pred) { return counts[std::size_t(gt) * classes + pred]; }
  std::int64_t at(int gt, int pred) const { return counts[std::size_t(gt) * classes + pred]; }
  std::int64_t total() const;
  void merge(const ConfusionMatrix& other);
};

void accumulate(ConfusionMatrix& conf, const LabelGrid& pred, const LabelGrid& gt);

struct Scores {
  double ppa = 0.0;
  double mca = 0.0;
  double iou = 0.0;
};

Scores scores(const ConfusionMatrix& conf);

// Mean IoU restricted to a class subset (classes absent from both ground
// truth and prediction are still excluded).
double iou_subset(const ConfusionMatrix& conf, const std::vector<int>& subset);

// Per-stage wall-clock timing. A stage may not be re-entered while open.
class TimingReport {
 public:
  double time_stage(const std::string& name, const std::function<void()>& thunk);
  void add(const std::string& name, double seconds);

  const std::vector<std::pair<std::string, double>>& stages() const { return stages_; }
  double total() const;
  // `stage,seconds` lines with 3 decimals, plus a trailing total line
  std::string format() const;

 private:
  std::vector<std::pair<std::string, double>> stages_;
  std::vector<std::string> open_;
};

}  // namespace rcpn
