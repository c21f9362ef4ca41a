#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rcpn {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles. Bias columns are folded into the
// weight matrices, so every network module is a single DenseMatrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// Counter-based deterministic generator (splitmix64). Identical seed gives
// an identical draw sequence on every platform; no library engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0,n). n must be > 0.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  // Independent child stream; the parent advances by one draw.
  Rng fork() { return Rng(next_u64()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::uint64_t state_;
};

enum class Activation { Tanh, Relu };

struct Activated {
  Vec value;
  Vec derivative;
};

// y = W * [x; 1]. Throws DataError on shape mismatch naming both shapes.
Vec affine(const DenseMatrix& w, const Vec& x);

Activated activation(const Vec& z, Activation kind);

// Numerically stable softmax (max subtraction).
Vec softmax(const Vec& logits);

// -weight * log(max(probs[target], 1e-12)).
double cross_entropy(const Vec& probs, std::size_t target, double weight);

bool all_finite(const Vec& v);
bool all_finite(const DenseMatrix& m);

}  // namespace rcpn
