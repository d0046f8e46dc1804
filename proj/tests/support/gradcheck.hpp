#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rareda/model.hpp"
#include "support/oracles.hpp"

namespace oracle {

/// Relative error floor: entries whose analytic and numeric values are both
/// far below it are compared on an absolute scale.
inline constexpr double kRelFloor = 1e-6;

inline double rel_err(double a, double b, double floor = kRelFloor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central differences of `loss` w.r.t. every parameter of `p`, compared
/// with the gradients currently stored in `p`. Returns the worst relative
/// error.
inline double param_grad_error(rareda::ModelParams& p,
                               const std::function<double(const rareda::ModelParams&)>& loss,
                               double h = 1e-4) {
  double worst = 0.0;
  for (auto& ref : rareda::parameters(p)) {
    auto w = ref.value->values();
    auto g = ref.grad->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + h;
      const double up = loss(p);
      w[i] = orig - h;
      const double down = loss(p);
      w[i] = orig;
      worst = std::max(worst, rel_err(g[i], (up - down) / (2 * h)));
    }
  }
  return worst;
}

/// Smallest |pre-activation| of any ReLU/tanh layer in the trace; instances
/// where this is tiny sit on a kink and are resampled.
inline double min_abs_pre(const rareda::MlpTrace& t) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& pre : t.pre)
    for (double v : pre.values()) m = std::min(m, std::abs(v));
  return m;
}

inline double min_abs_pre(const rareda::ForwardTrace& t) {
  double m = min_abs_pre(t.features);
  if (t.classifier) m = std::min(m, min_abs_pre(t.classifier->trace));
  if (t.discriminator) m = std::min(m, min_abs_pre(t.discriminator->trace));
  return m;
}

/// Small random network, dims ≤ 8.
inline rareda::NetworkSpec small_network(Gen& g, rareda::Activation act, std::size_t in,
                                         std::size_t k) {
  rareda::NetworkSpec s;
  const std::size_t f = g.size(2, 6);
  s.features = {in, {g.size(2, 8)}, f, act, true};
  s.classifier = {f, {g.size(2, 8)}, k, act, false};
  s.discriminator = {f, {g.size(2, 8)}, 2, act, false};
  return s;
}

}  // namespace oracle
