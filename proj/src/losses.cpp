#include "rareda/losses.hpp"

#include <cmath>

#include "rareda/numcore/kernels.hpp"

namespace rareda {

LossValue cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw Error("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw Error("cross_entropy: empty batch");
  const std::size_t k = logits.cols();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) {
      throw Error("cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                  std::to_string(i) + " outside [0," + std::to_string(k) + ")");
    }
  }
  LossValue out;
  out.n_terms = logits.rows();
  out.dlogits = softmax_rows(logits);
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    // log-sum-exp form keeps the value exact for large margins
    auto row = logits.row(i);
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    total += (m + std::log(z)) - row[labels[i]];

    auto g = out.dlogits.row(i);
    g[labels[i]] -= 1.0;
    for (double& v : g) v *= inv_n;
  }
  out.value = total * inv_n;
  return out;
}

LossValue domain_confusion(const Matrix& logits, std::span<const DomainLabel> labels) {
  if (logits.rows() == 0) {
    throw Error("domain_confusion: no routed samples in batch");
  }
  if (logits.cols() != 2) {
    throw Error("domain_confusion: expected 2 logit columns, got " + logits.shape_string());
  }
  std::vector<std::size_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) idx[i] = static_cast<std::size_t>(labels[i]);
  return cross_entropy(logits, idx);
}

Matrix covariance(const Matrix& batch) {
  const std::size_t n = batch.rows();
  const std::size_t d = batch.cols();
  if (n < 2) {
    throw Error("covariance: need at least 2 rows, got " + std::to_string(n));
  }
  // (BᵀB − (1ᵀB)ᵀ(1ᵀB)/n)/(n−1), evaluated on B shifted by its first row.
  // The estimator is translation invariant; the shift removes the
  // cancellation the raw-moment form suffers when |mean| ≫ spread.
  Matrix shifted = batch;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = shifted.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] -= batch(0, j);
  }
  Matrix gram = matmul_tn(shifted, shifted);
  const Matrix s = column_sums(shifted);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_n1 = 1.0 / static_cast<double>(n - 1);
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      cov(i, j) = (gram(i, j) - s(0, i) * s(0, j) * inv_n) * inv_n1;
    }
  }
  // exact symmetry
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) cov(j, i) = cov(i, j);
  return cov;
}

namespace {

Matrix centered(const Matrix& x) {
  const Matrix mu = column_means(x);
  Matrix c = x;
  for (std::size_t i = 0; i < c.rows(); ++i) kernels::axpy(-1.0, mu.row(0), c.row(i));
  return c;
}

}  // namespace

CoralValue coral_loss(const Matrix& source, const Matrix& target) {
  if (source.cols() != target.cols()) {
    throw Error("coral_loss: dimension mismatch " + source.shape_string() + " vs " +
                target.shape_string());
  }
  if (source.rows() < 2 || target.rows() < 2) {
    throw Error("coral_loss: need at least 2 rows per batch, got " +
                std::to_string(source.rows()) + " and " + std::to_string(target.rows()));
  }
  const double d = static_cast<double>(source.cols());
  const Matrix diff = covariance(source) - covariance(target);

  CoralValue out;
  out.value = frobenius_sq(diff) / (4.0 * d * d);
  // dL/dC_S = diff/(2d²); through the covariance, dL/dX_S = 2·Xc·(dL/dC_S)/(n−1)
  const double ks = 1.0 / (d * d * static_cast<double>(source.rows() - 1));
  const double kt = -1.0 / (d * d * static_cast<double>(target.rows() - 1));
  out.d_source = ks * matmul(centered(source), diff);
  out.d_target = kt * matmul(centered(target), diff);
  return out;
}

double composite_dann(const LossValue& classification, const std::optional<LossValue>& domain,
                      double domain_weight) {
  if (!domain) return classification.value;
  return classification.value + domain_weight * domain->value;
}

double composite_coral(const LossValue& classification, double coral_value, double lambda) {
  if (!(lambda >= 0.0)) throw Error("composite_coral: lambda must be non-negative");
  return classification.value + lambda * coral_value;
}

}  // namespace rareda
