#pragma once

#include <cstddef>
#include <vector>

#include "rareda/model.hpp"

namespace rareda {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Added to weight gradients as l2·w (classical L2, not decoupled decay).
  double l2 = 0.0;
  bool l2_on_bias = false;
  double head_lr_multiplier = 1.0;
  double discriminator_lr_multiplier = 1.0;
  /// When false the discriminator is left untouched (methods without D).
  bool update_discriminator = true;
};

/// First and second moment estimates, one pair per parameter tensor in
/// `parameters()` order.
class AdamState {
 public:
  explicit AdamState(const ModelParams& params);

  std::size_t step_count() const noexcept { return step_; }

  /// One bias-corrected Adam update from the gradients in `params`.
  /// Throws Error naming the tensor if a gradient is non-finite.
  void step(ModelParams& params, const AdamSettings& s);

 private:
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t step_ = 0;
};

}  // namespace rareda
