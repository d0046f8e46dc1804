#pragma once

// Independent reference implementations and random-instance generators for
// the tests. Nothing here calls into the library's arithmetic.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rareda/dataio.hpp"
#include "rareda/numcore/matrix.hpp"

namespace oracle {

using rareda::Matrix;

/// Test-side randomness, deliberately a different engine from the library's.
class Gen {
 public:
  explicit Gen(std::uint32_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(eng_); }
  std::size_t size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }
  Matrix matrix(std::size_t r, std::size_t c, double sd = 1.0) {
    Matrix m(r, c);
    for (double& v : m.values()) v = normal(sd);
    return m;
  }
  std::vector<std::size_t> labels(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out(n);
    for (auto& l : out) l = size(0, k - 1);
    return out;
  }
  std::mt19937& engine() { return eng_; }

 private:
  std::mt19937 eng_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Two-pass (mean first, then centred products) unbiased covariance.
inline Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<long double> mean(d, 0.0L);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= static_cast<long double>(n);
  Matrix c(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < n; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = static_cast<double>(s / static_cast<long double>(n - 1));
    }
  return c;
}

inline double coral(const Matrix& s, const Matrix& t) {
  const Matrix cs = oracle::covariance(s), ct = oracle::covariance(t);
  const double d = static_cast<double>(s.cols());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < cs.values().size(); ++i) {
    const long double diff = cs.values()[i] - ct.values()[i];
    sum += diff * diff;
  }
  return static_cast<double>(sum / (4.0L * d * d));
}

/// Mean negative log-likelihood, computed with long doubles.
inline double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    long double z = 0.0L;
    for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(static_cast<long double>(logits(i, j)));
    total += std::log(z) - logits(i, labels[i]);
  }
  return static_cast<double>(total / static_cast<long double>(logits.rows()));
}

/// Mean of the defined per-class recalls, skipping `rare`.
inline double macro_other(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& pred, std::size_t k, std::size_t rare,
                          bool* defined = nullptr) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (c == rare) continue;
    std::size_t total = 0, hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      ++total;
      if (pred[i] == c) ++hit;
    }
    if (total == 0) continue;
    sum += static_cast<double>(hit) / static_cast<double>(total);
    ++n;
  }
  if (defined) *defined = n > 0;
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// Small benchmark used where a full-size dataset would be slow.
inline rareda::GenSpec small_spec(std::uint64_t seed = 3) {
  rareda::GenSpec g = rareda::GenSpec::defaults();
  g.class_count = 3;
  g.feature_dim = 4;
  g.rare_class_id = 2;
  g.train_counts = {60, 40, 12};
  g.eval_count_per_class = 20;
  g.locations_per_class = 4;
  g.trans_locations_per_class = 1;
  g.synthetic_pool = 120;
  g.seed = seed;
  g.set_gap(rareda::GapShape{});
  return g;
}

}  // namespace oracle
