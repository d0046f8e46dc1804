#include "rareda/optimizer.hpp"

#include <cmath>

namespace rareda {

AdamState::AdamState(const ModelParams& params) {
  // same order as parameters(): F, C, D layers; weight then bias
  for (Part part : {Part::features, Part::classifier, Part::discriminator}) {
    for (const auto& layer : params.part(part).layers) {
      for (const Matrix* t : {&layer.weight, &layer.bias}) {
        m_.emplace_back(t->rows(), t->cols());
        v_.emplace_back(t->rows(), t->cols());
      }
    }
  }
}

void AdamState::step(ModelParams& params, const AdamSettings& s) {
  auto refs = parameters(params);
  if (refs.size() != m_.size()) throw Error("adam: parameter layout changed");
  for (const auto& p : refs) {
    if (!p.grad->all_finite()) {
      throw NonFiniteError("adam: non-finite gradient in " + p.name + " (training diverged)");
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(s.beta1, t);
  const double bc2 = 1.0 - std::pow(s.beta2, t);

  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& p = refs[k];
    if (p.part == Part::discriminator && !s.update_discriminator) continue;
    double lr = s.learning_rate;
    if (params.is_head_layer(p.part, p.layer)) lr *= s.head_lr_multiplier;
    if (p.part == Part::discriminator) lr *= s.discriminator_lr_multiplier;
    const bool decay = s.l2 > 0.0 && (!p.is_bias || s.l2_on_bias);

    auto w = p.value->values();
    auto g = p.grad->values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = decay ? g[i] + s.l2 * w[i] : g[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + s.epsilon);
    }
  }
}

}  // namespace rareda
