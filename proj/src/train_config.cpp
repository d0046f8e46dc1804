#include "rareda/train_config.hpp"

#include <cmath>
#include <set>

#include "rareda/numcore/rng.hpp"

namespace rareda {

std::string to_string(CoralSpace s) { return s == CoralSpace::logits ? "logits" : "features"; }

std::string to_string(GrlSchedule s) {
  return s == GrlSchedule::constant ? "constant" : "dann_ramp";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error("config field '" + field + "': " + why);
  };
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (batch_size < 2) fail("batch_size", "must be >= 2");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon", "must be > 0");
  if (!(l2 >= 0.0)) fail("l2", "must be >= 0");
  if (!(head_lr_multiplier > 0.0)) fail("head_lr_multiplier", "must be > 0");
  if (!(discriminator_lr_multiplier > 0.0)) fail("discriminator_lr_multiplier", "must be > 0");
  if (!(coral_lambda >= 0.0)) fail("coral_lambda", "must be >= 0");
  if (!(grl_scale >= 0.0)) fail("grl_scale", "must be >= 0");
  if (!(domain_weight >= 0.0)) fail("domain_weight", "must be >= 0");
  if (oversample_factor < 1) fail("oversample_factor", "must be >= 1");
  if (!(feature_jitter >= 0.0)) fail("feature_jitter", "must be >= 0");
  if (feature_dim < 1) fail("feature_dim", "must be >= 1");
  if (!(selection_tolerance >= 0.0)) fail("selection_tolerance", "must be >= 0");
}

NetworkSpec TrainConfig::network(std::size_t input_dim, std::size_t class_count) const {
  NetworkSpec s;
  s.features = {input_dim, feature_hidden, feature_dim, activation, true};
  s.classifier = {feature_dim, classifier_hidden, class_count, activation, false};
  s.discriminator = {feature_dim, discriminator_hidden, 2, activation, false};
  s.validate();
  return s;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json(*this).dump()); }

nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"method", to_string(c.method)},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_epsilon", c.adam_epsilon},
      {"l2", c.l2},
      {"l2_on_bias", c.l2_on_bias},
      {"head_lr_multiplier", c.head_lr_multiplier},
      {"discriminator_lr_multiplier", c.discriminator_lr_multiplier},
      {"coral_lambda", c.coral_lambda},
      {"coral_space", to_string(c.coral_space)},
      {"grl_scale", c.grl_scale},
      {"grl_schedule", to_string(c.grl_schedule)},
      {"domain_weight", c.domain_weight},
      {"source_real_policy", to_string(c.source_real_policy)},
      {"oversample_factor", c.oversample_factor},
      {"synthetic_count", c.synthetic_count},
      {"feature_jitter", c.feature_jitter},
      {"feature_hidden", c.feature_hidden},
      {"feature_dim", c.feature_dim},
      {"classifier_hidden", c.classifier_hidden},
      {"discriminator_hidden", c.discriminator_hidden},
      {"activation", to_string(c.activation)},
      {"selection_tolerance", c.selection_tolerance},
      {"seed", c.seed},
  };
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename Enum, typename Parse>
void read_enum(const nlohmann::json& j, const char* key, Enum& out, Parse parse) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_string()) throw Error(std::string("config field '") + key + "': expected a string");
  try {
    out = parse(it->get<std::string>());
  } catch (const Error& e) {
    throw Error(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  const std::set<std::string> known = [] {
    std::set<std::string> k;
    const nlohmann::json defaults = to_json(TrainConfig{});
    for (const auto& [key, _] : defaults.items()) k.insert(key);
    return k;
  }();
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("config field '" + key + "': unknown field");
  }
  read_enum(j, "method", c.method, parse_method);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_epsilon", c.adam_epsilon);
  read(j, "l2", c.l2);
  read(j, "l2_on_bias", c.l2_on_bias);
  read(j, "head_lr_multiplier", c.head_lr_multiplier);
  read(j, "discriminator_lr_multiplier", c.discriminator_lr_multiplier);
  read(j, "coral_lambda", c.coral_lambda);
  read_enum(j, "coral_space", c.coral_space, [](const std::string& s) {
    if (s == "logits") return CoralSpace::logits;
    if (s == "features") return CoralSpace::features;
    throw Error("expected logits or features, got '" + s + "'");
  });
  read(j, "grl_scale", c.grl_scale);
  read_enum(j, "grl_schedule", c.grl_schedule, [](const std::string& s) {
    if (s == "constant") return GrlSchedule::constant;
    if (s == "dann_ramp") return GrlSchedule::dann_ramp;
    throw Error("expected constant or dann_ramp, got '" + s + "'");
  });
  read(j, "domain_weight", c.domain_weight);
  read_enum(j, "source_real_policy", c.source_real_policy, parse_source_real_policy);
  read(j, "oversample_factor", c.oversample_factor);
  read(j, "synthetic_count", c.synthetic_count);
  read(j, "feature_jitter", c.feature_jitter);
  read(j, "feature_hidden", c.feature_hidden);
  read(j, "feature_dim", c.feature_dim);
  read(j, "classifier_hidden", c.classifier_hidden);
  read(j, "discriminator_hidden", c.discriminator_hidden);
  read_enum(j, "activation", c.activation, parse_activation);
  read(j, "selection_tolerance", c.selection_tolerance);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace rareda
