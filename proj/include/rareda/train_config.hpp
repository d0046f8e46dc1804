#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rareda/domains.hpp"
#include "rareda/model.hpp"

namespace rareda {

enum class CoralSpace { logits, features };
enum class GrlSchedule { constant, dann_ramp };

std::string to_string(CoralSpace s);
std::string to_string(GrlSchedule s);

struct TrainConfig {
  Method method = Method::baseline;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Coefficient of the L2 term added to weight gradients.
  double l2 = 1e-4;
  bool l2_on_bias = false;
  /// Multiplier for the last two layers of the F∘C path.
  double head_lr_multiplier = 10.0;
  double discriminator_lr_multiplier = 1.0;

  double coral_lambda = 0.5;
  CoralSpace coral_space = CoralSpace::logits;

  double grl_scale = 1.0;
  GrlSchedule grl_schedule = GrlSchedule::constant;
  /// Weight on the domain confusion term; 1 reproduces the unweighted sum.
  double domain_weight = 1.0;
  SourceRealPolicy source_real_policy = SourceRealPolicy::label_source;

  std::size_t oversample_factor = kDefaultOversampleFactor;
  std::size_t synthetic_count = 2000;
  /// Std of Gaussian noise added to training inputs; 0 disables.
  double feature_jitter = 0.0;

  std::vector<std::size_t> feature_hidden{64};
  std::size_t feature_dim = 32;
  std::vector<std::size_t> classifier_hidden{32};
  std::vector<std::size_t> discriminator_hidden{32};
  Activation activation = Activation::relu;

  /// Allowed drop (as a fraction) in trans-val other-class macro accuracy
  /// relative to the best epoch when selecting the checkpoint.
  double selection_tolerance = 0.01;

  std::uint64_t seed = 1;

  void validate() const;
  NetworkSpec network(std::size_t input_dim, std::size_t class_count) const;
  /// Stable FNV-1a hash of the canonical JSON form.
  std::uint64_t hash() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Fields absent from `j` keep the values in `base`. Unknown keys and bad
/// values raise Error naming the field.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace rareda
