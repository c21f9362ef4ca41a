#include "rcpn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcpn/error.hpp"

namespace rcpn {

Vec affine(const DenseMatrix& w, const Vec& x) {
  if (w.cols != x.size() + 1) {
    std::ostringstream os;
    os << "affine: weight is " << w.rows << "x" << w.cols << " but input has length "
       << x.size() << " (need cols = len+1 for the bias column)";
    throw DataError(os.str());
  }
  Vec out(w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + i * w.cols;
    double acc = row[w.cols - 1];  // bias
    for (std::size_t j = 0; j + 1 < w.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Activated activation(const Vec& z, Activation kind) {
  Activated out;
  out.value.resize(z.size());
  out.derivative.resize(z.size());
  if (kind == Activation::Tanh) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      double t = std::tanh(z[i]);
      out.value[i] = t;
      out.derivative[i] = 1.0 - t * t;
    }
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) {
      out.value[i] = z[i] > 0.0 ? z[i] : 0.0;
      out.derivative[i] = z[i] > 0.0 ? 1.0 : 0.0;
    }
  }
  return out;
}

Vec softmax(const Vec& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double cross_entropy(const Vec& probs, std::size_t target, double weight) {
  if (target >= probs.size()) {
    std::ostringstream os;
    os << "cross_entropy: target " << target << " out of range for " << probs.size()
       << " classes";
    throw DataError(os.str());
  }
  constexpr double kEps = 1e-12;
  return -weight * std::log(std::max(probs[target], kEps));
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const DenseMatrix& m) { return all_finite(m.data); }

}  // namespace rcpn
