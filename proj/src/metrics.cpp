#include "rcpn/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "rcpn/error.hpp"

namespace rcpn {

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t(0));
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes != classes) throw DataError("ConfusionMatrix::merge: class count differs");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

void accumulate(ConfusionMatrix& conf, const LabelGrid& pred, const LabelGrid& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DataError("accumulate: prediction and ground-truth dimensions differ");
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    int t = gt.labels[i];
    if (t == kVoid) continue;
    int p = pred.labels[i];
    if (p == kVoid) throw DataError("accumulate: prediction contains VOID pixels");
    if (t >= conf.classes || p >= conf.classes)
      throw DataError("accumulate: label exceeds confusion matrix class count");
    ++conf.at(t, p);
  }
}

Scores scores(const ConfusionMatrix& conf) {
  std::int64_t total = conf.total();
  if (total == 0) throw DataError("scores: empty confusion matrix");
  Scores s;
  std::int64_t diag = 0;
  double mca_sum = 0.0, iou_sum = 0.0;
  int mca_classes = 0, iou_classes = 0;
  for (int c = 0; c < conf.classes; ++c) {
    std::int64_t row = 0, col = 0;
    for (int j = 0; j < conf.classes; ++j) {
      row += conf.at(c, j);
      col += conf.at(j, c);
    }
    std::int64_t d = conf.at(c, c);
    diag += d;
    if (row > 0) {
      mca_sum += double(d) / double(row);
      ++mca_classes;
    }
    if (row + col > 0) {
      iou_sum += double(d) / double(row + col - d);
      ++iou_classes;
    }
  }
  s.ppa = double(diag) / double(total);
  s.mca = mca_classes > 0 ? mca_sum / mca_classes : 0.0;
  s.iou = iou_classes > 0 ? iou_sum / iou_classes : 0.0;
  return s;
}

double iou_subset(const ConfusionMatrix& conf, const std::vector<int>& subset) {
  double sum = 0.0;
  int n = 0;
  for (int c : subset) {
    if (c < 0 || c >= conf.classes) throw DataError("iou_subset: class index out of range");
    std::int64_t row = 0, col = 0;
    for (int j = 0; j < conf.classes; ++j) {
      row += conf.at(c, j);
      col += conf.at(j, c);
    }
    if (row + col == 0) continue;
    sum += double(conf.at(c, c)) / double(row + col - conf.at(c, c));
    ++n;
  }
  if (n == 0) throw DataError("iou_subset: no class of the subset appears");
  return sum / n;
}

double TimingReport::time_stage(const std::string& name, const std::function<void()>& thunk) {
  if (std::find(open_.begin(), open_.end(), name) != open_.end())
    throw DataError("time_stage: stage '" + name + "' is already open");
  open_.push_back(name);
  auto t0 = std::chrono::steady_clock::now();
  thunk();
  auto t1 = std::chrono::steady_clock::now();
  open_.pop_back();
  double sec = std::chrono::duration<double>(t1 - t0).count();
  add(name, sec);
  return sec;
}

void TimingReport::add(const std::string& name, double seconds) {
  for (auto& [n, s] : stages_)
    if (n == name) {
      s += seconds;
      return;
    }
  stages_.emplace_back(name, seconds);
}

double TimingReport::total() const {
  double t = 0.0;
  for (const auto& [n, s] : stages_) t += s;
  return t;
}

std::string TimingReport::format() const {
  std::string out;
  char buf[128];
  for (const auto& [n, s] : stages_) {
    std::snprintf(buf, sizeof(buf), "%s,%.3f\n", n.c_str(), s);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "total,%.3f\n", total());
  out += buf;
  return out;
}

}  // namespace rcpn
