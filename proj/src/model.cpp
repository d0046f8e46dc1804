#include "rareda/model.hpp"

#include <cmath>

#include "rareda/numcore/kernels.hpp"
#include "rareda/numcore/rng.hpp"

namespace rareda {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw Error("unknown activation '" + name + "' (expected relu, tanh or identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

void MlpSpec::validate(const std::string& what) const {
  if (input_dim < 1 || output_dim < 1) throw Error(what + ": dimensions must be >= 1");
  for (std::size_t h : hidden_dims) {
    if (h < 1) throw Error(what + ": hidden dimensions must be >= 1");
  }
}

NetworkSpec NetworkSpec::defaults(std::size_t input_dim, std::size_t class_count) {
  NetworkSpec s;
  s.features = {input_dim, {64}, 32, Activation::relu, true};
  s.classifier = {32, {32}, class_count, Activation::relu, false};
  s.discriminator = {32, {32}, 2, Activation::relu, false};
  return s;
}

void NetworkSpec::validate() const {
  features.validate("feature extractor");
  classifier.validate("classifier");
  discriminator.validate("discriminator");
  if (classifier.input_dim != features.output_dim ||
      discriminator.input_dim != features.output_dim) {
    throw Error("classifier and discriminator inputs must equal the feature dimension " +
                std::to_string(features.output_dim));
  }
  if (classifier.output_dim < 2) throw Error("classifier needs at least 2 classes");
  if (discriminator.output_dim != 2) throw Error("discriminator output must have 2 columns");
}

std::string part_prefix(Part p) {
  switch (p) {
    case Part::features: return "F";
    case Part::classifier: return "C";
    case Part::discriminator: return "D";
  }
  return "?";
}

const Mlp& ModelParams::part(Part p) const {
  switch (p) {
    case Part::features: return features;
    case Part::classifier: return classifier;
    case Part::discriminator: return discriminator;
  }
  return features;
}

Mlp& ModelParams::part(Part p) {
  return const_cast<Mlp&>(static_cast<const ModelParams&>(*this).part(p));
}

bool ModelParams::is_head_layer(Part p, std::size_t layer) const noexcept {
  const std::size_t nc = classifier.layers.size();
  const std::size_t nf = features.layers.size();
  if (p == Part::classifier) return layer + 2 >= nc;  // always within the last two when nc <= 2
  if (p == Part::features && nc < 2) return layer + (2 - nc) >= nf;
  return false;
}

void ModelParams::zero_grad() {
  for (Mlp* m : {&features, &classifier, &discriminator}) {
    for (auto& l : m->layers) {
      std::fill(l.grad_weight.values().begin(), l.grad_weight.values().end(), 0.0);
      std::fill(l.grad_bias.values().begin(), l.grad_bias.values().end(), 0.0);
    }
  }
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  for (Part p : {Part::features, Part::classifier, Part::discriminator}) {
    const auto& la = a.part(p).layers;
    const auto& lb = b.part(p).layers;
    if (la.size() != lb.size()) return false;
    for (std::size_t i = 0; i < la.size(); ++i) {
      if (!(la[i].weight == lb[i].weight) || !(la[i].bias == lb[i].bias)) return false;
    }
  }
  return true;
}

namespace {

Mlp init_mlp(const MlpSpec& spec, RngStream& rng) {
  Mlp m{spec, {}};
  std::size_t in = spec.input_dim;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t out = l < spec.hidden_dims.size() ? spec.hidden_dims[l] : spec.output_dim;
    DenseLayer layer{Matrix(in, out), Matrix(1, out), Matrix(in, out), Matrix(1, out)};
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : layer.weight.values()) w = rng.normal(0.0, stddev);
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

bool activated(const MlpSpec& spec, std::size_t layer) {
  return layer + 1 < spec.layer_count() || spec.activate_output;
}

void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::relu:
      for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : z.values()) v = std::tanh(v);
      break;
    case Activation::identity: break;
  }
}

// Multiplies `grad` in place by the activation derivative at pre-activation `pre`.
void activation_backward(Activation a, const Matrix& pre, Matrix& grad) {
  auto g = grad.values();
  auto z = pre.values();
  switch (a) {
    case Activation::relu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(z[i] > 0.0)) g[i] = 0.0;
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = std::tanh(z[i]);
        g[i] *= 1.0 - t * t;
      }
      break;
    case Activation::identity: break;
  }
}

void scatter_add_rows(Matrix& dst, const Matrix& src, const std::vector<std::size_t>& rows) {
  if (src.rows() != rows.size()) {
    throw Error("backward: gradient has " + std::to_string(src.rows()) + " rows but head saw " +
                std::to_string(rows.size()));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= dst.rows()) {
      throw Error("backward: row index " + std::to_string(rows[i]) + " out of range for " +
                  std::to_string(dst.rows()) + " feature rows");
    }
    kernels::axpy(1.0, src.row(i), dst.row(rows[i]));
  }
}

void check_head_grad(const Matrix& g, const HeadPass& pass, const char* head) {
  if (g.rows() != pass.rows.size() || g.cols() != pass.logits().cols()) {
    throw Error(std::string("backward: ") + head + " gradient shape " + g.shape_string() +
                " does not match logits " + pass.logits().shape_string());
  }
}

}  // namespace

ModelParams init_model(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream rf(derive_seed(seed, "init.F"));
  RngStream rc(derive_seed(seed, "init.C"));
  RngStream rd(derive_seed(seed, "init.D"));
  return ModelParams{init_mlp(spec.features, rf), init_mlp(spec.classifier, rc),
                     init_mlp(spec.discriminator, rd)};
}

std::vector<ParamRef> parameters(ModelParams& params) {
  std::vector<ParamRef> out;
  for (Part p : {Part::features, Part::classifier, Part::discriminator}) {
    auto& layers = params.part(p).layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string base = part_prefix(p) + "." + std::to_string(l);
      out.push_back({base + ".weight", p, l, false, &layers[l].weight, &layers[l].grad_weight});
      out.push_back({base + ".bias", p, l, true, &layers[l].bias, &layers[l].grad_bias});
    }
  }
  return out;
}

MlpTrace forward_mlp(const Mlp& mlp, const Matrix& x) {
  if (x.cols() != mlp.input_dim()) {
    throw Error("forward: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                std::to_string(mlp.input_dim()));
  }
  MlpTrace t;
  Matrix h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    Matrix z = matmul(h, layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) kernels::axpy(1.0, layer.bias.row(0), z.row(i));
    t.inputs.push_back(std::move(h));
    h = z;
    if (activated(mlp.spec, l)) apply_activation(mlp.spec.activation, h);
    t.pre.push_back(std::move(z));
  }
  t.output = std::move(h);
  return t;
}

MlpTrace forward_features(const ModelParams& params, const Matrix& x) {
  x.require_finite("forward_features");
  return forward_mlp(params.features, x);
}

Matrix forward_classifier(const ModelParams& params, const Matrix& features) {
  return forward_mlp(params.classifier, features).output;
}

Matrix forward_discriminator(const ModelParams& params, const Matrix& features) {
  return forward_mlp(params.discriminator, grl_forward(features)).output;
}

ForwardTrace forward(const ModelParams& params, const Matrix& x,
                     std::optional<std::vector<std::size_t>> classifier_rows,
                     std::optional<std::vector<std::size_t>> discriminator_rows) {
  ForwardTrace t;
  t.features = forward_features(params, x);
  const Matrix& f = t.features.output;
  if (classifier_rows) {
    t.classifier = HeadPass{forward_mlp(params.classifier, gather_rows(f, *classifier_rows)),
                            std::move(*classifier_rows)};
  }
  if (discriminator_rows) {
    t.discriminator =
        HeadPass{forward_mlp(params.discriminator, grl_forward(gather_rows(f, *discriminator_rows))),
                 std::move(*discriminator_rows)};
  }
  return t;
}

Matrix grl_backward(const Matrix& upstream, double scale) { return (-scale) * upstream; }

Matrix backward_mlp(Mlp& mlp, const MlpTrace& trace, const Matrix& dout) {
  if (dout.rows() != trace.output.rows() || dout.cols() != trace.output.cols()) {
    throw Error("backward: upstream gradient " + dout.shape_string() + " does not match output " +
                trace.output.shape_string());
  }
  Matrix g = dout;
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    auto& layer = mlp.layers[l];
    if (activated(mlp.spec, l)) activation_backward(mlp.spec.activation, trace.pre[l], g);
    layer.grad_weight += matmul_tn(trace.inputs[l], g);
    layer.grad_bias += column_sums(g);
    g = matmul_nt(g, layer.weight);
  }
  return g;
}

void backward(ModelParams& params, const ForwardTrace& trace, const BackwardInputs& in) {
  if (in.classifier == nullptr && in.discriminator == nullptr && in.features == nullptr) {
    throw Error("backward: no upstream gradient supplied");
  }
  const Matrix& f = trace.feature_matrix();
  Matrix df(f.rows(), f.cols());
  if (in.classifier != nullptr) {
    if (!trace.classifier) throw Error("backward: classifier gradient without classifier pass");
    check_head_grad(*in.classifier, *trace.classifier, "classifier");
    Matrix dc = backward_mlp(params.classifier, trace.classifier->trace, *in.classifier);
    scatter_add_rows(df, dc, trace.classifier->rows);
  }
  if (in.discriminator != nullptr) {
    if (!trace.discriminator) {
      throw Error("backward: discriminator gradient without discriminator pass");
    }
    check_head_grad(*in.discriminator, *trace.discriminator, "discriminator");
    Matrix dd = backward_mlp(params.discriminator, trace.discriminator->trace, *in.discriminator);
    scatter_add_rows(df, grl_backward(dd, in.grl_scale), trace.discriminator->rows);
  }
  if (in.features != nullptr) df += *in.features;
  backward_mlp(params.features, trace.features, df);
}

}  // namespace rareda
