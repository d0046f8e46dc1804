#pragma once

// Feature extractor F, label classifier C and domain discriminator D, with
// the gradient reversal layer between F and D. Backpropagation is written
// out by hand against cached forward traces.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rareda/numcore/matrix.hpp"

namespace rareda {

enum class Activation { relu, tanh, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 0;
  Activation activation = Activation::relu;
  /// Apply the activation after the final layer too (true for F, whose
  /// output is a feature vector rather than logits).
  bool activate_output = false;

  void validate(const std::string& what) const;
  std::size_t layer_count() const noexcept { return hidden_dims.size() + 1; }
};

struct DenseLayer {
  Matrix weight;  // in × out
  Matrix bias;    // 1 × out
  Matrix grad_weight;
  Matrix grad_bias;
};

struct Mlp {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const noexcept { return spec.input_dim; }
  std::size_t output_dim() const noexcept { return spec.output_dim; }
};

struct NetworkSpec {
  MlpSpec features;
  MlpSpec classifier;
  MlpSpec discriminator;

  /// F = [in → 64 → 32], C = [32 → 32 → K], D = [32 → 32 → 2], ReLU.
  static NetworkSpec defaults(std::size_t input_dim, std::size_t class_count);
  void validate() const;
};

/// Which sub-network a layer belongs to.
enum class Part { features, classifier, discriminator };

std::string part_prefix(Part p);

struct ModelParams {
  Mlp features;
  Mlp classifier;
  Mlp discriminator;

  std::size_t class_count() const noexcept { return classifier.output_dim(); }
  std::size_t feature_dim() const noexcept { return features.output_dim(); }

  const Mlp& part(Part p) const;
  Mlp& part(Part p);

  /// True for the final two layers of the F∘C path; these train at the head
  /// learning-rate multiplier.
  bool is_head_layer(Part p, std::size_t layer) const noexcept;

  void zero_grad();

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// He-style initialization (normal, std √(2/fan_in)), zero biases.
/// F, C and D draw from independent sub-streams of `seed`.
ModelParams init_model(const NetworkSpec& spec, std::uint64_t seed);

/// Non-owning view of one parameter tensor and its gradient buffer.
struct ParamRef {
  std::string name;  // e.g. "F.0.weight"
  Part part;
  std::size_t layer;
  bool is_bias;
  Matrix* value;
  Matrix* grad;
};

/// Every parameter in fixed order: F layers, C layers, D layers; weight then bias.
std::vector<ParamRef> parameters(ModelParams& params);

struct MlpTrace {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
};

struct HeadPass {
  MlpTrace trace;
  /// Feature row feeding each head row.
  std::vector<std::size_t> rows;

  const Matrix& logits() const noexcept { return trace.output; }
};

struct ForwardTrace {
  MlpTrace features;
  std::optional<HeadPass> classifier;
  std::optional<HeadPass> discriminator;

  const Matrix& feature_matrix() const noexcept { return features.output; }
};

MlpTrace forward_mlp(const Mlp& mlp, const Matrix& x);

/// F(x). The returned trace's output equals the returned features.
MlpTrace forward_features(const ModelParams& params, const Matrix& x);
/// Raw class logits C(f), n × K.
Matrix forward_classifier(const ModelParams& params, const Matrix& features);
/// Raw domain logits D(f), n × 2. Column 0 is "source", column 1 "target".
Matrix forward_discriminator(const ModelParams& params, const Matrix& features);

/// Full pass: F on all rows of x, C on `classifier_rows`, D on
/// `discriminator_rows` (through the GRL, whose forward is the identity).
/// An absent row list skips that head.
ForwardTrace forward(const ModelParams& params, const Matrix& x,
                     std::optional<std::vector<std::size_t>> classifier_rows,
                     std::optional<std::vector<std::size_t>> discriminator_rows);

/// Gradient reversal: forward is the identity.
inline const Matrix& grl_forward(const Matrix& x) noexcept { return x; }
/// Gradient reversal: −scale·upstream.
Matrix grl_backward(const Matrix& upstream, double scale);

struct BackwardInputs {
  /// dL/d(classifier logits), rows aligned with trace.classifier->rows.
  const Matrix* classifier = nullptr;
  /// dL/d(discriminator logits), rows aligned with trace.discriminator->rows.
  const Matrix* discriminator = nullptr;
  /// Extra dL/d(features) added directly at F's output (feature-space CORAL).
  const Matrix* features = nullptr;
  double grl_scale = 1.0;
};

/// Backpropagates through C and D (D's contribution to F passes the GRL) and
/// then F, accumulating into the gradient buffers of `params`.
void backward(ModelParams& params, const ForwardTrace& trace, const BackwardInputs& in);

/// Accumulates parameter gradients for one MLP and returns dL/d(input).
Matrix backward_mlp(Mlp& mlp, const MlpTrace& trace, const Matrix& dout);

}  // namespace rareda
