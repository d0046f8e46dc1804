#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rareda/numcore/matrix.hpp"

namespace rareda {

/// A scalar objective and its gradient with respect to the input it consumed.
struct LossValue {
  double value = 0.0;
  Matrix dlogits;
  std::size_t n_terms = 0;
};

/// Mean over rows of −log softmax(logits)[label]. Gradient (softmax − onehot)/n.
LossValue cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

/// Domain labels for the discriminator. Values are the logit column indices.
enum class DomainLabel : std::size_t { source = 0, target = 1 };

/// Two-class cross-entropy of the discriminator (source = synthetic side,
/// target = real side). Throws on an empty batch.
LossValue domain_confusion(const Matrix& logits, std::span<const DomainLabel> labels);

/// Unbiased covariance of the rows of `batch` (d × d). Requires n ≥ 2.
Matrix covariance(const Matrix& batch);

struct CoralValue {
  double value = 0.0;
  Matrix d_source;
  Matrix d_target;
};

/// ‖C_S − C_T‖²_F / (4d²) with exact gradients for both batches.
CoralValue coral_loss(const Matrix& source, const Matrix& target);

/// L_C + w_D·L_D. An absent domain term (no routed rows) contributes nothing.
double composite_dann(const LossValue& classification, const std::optional<LossValue>& domain,
                      double domain_weight = 1.0);

/// L_C + λ·L_CORAL. λ must be non-negative.
double composite_coral(const LossValue& classification, double coral_value, double lambda);

inline constexpr double kDefaultCoralLambda = 0.5;

}  // namespace rareda
