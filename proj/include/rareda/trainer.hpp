#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rareda/checkpoint.hpp"
#include "rareda/dataio.hpp"
#include "rareda/domains.hpp"
#include "rareda/metrics.hpp"
#include "rareda/optimizer.hpp"
#include "rareda/train_config.hpp"

namespace rareda {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double classification_loss = 0.0;
  /// Mean over batches that produced the term; absent if none did.
  std::optional<double> domain_loss;
  std::optional<double> coral_loss;
  double total_loss = 0.0;
  /// Balanced (per-domain mean) accuracy of D on routed training rows.
  std::optional<double> discriminator_accuracy;
  double grl_scale = 0.0;
  RunMetrics metrics;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  Checkpoint best;
  std::size_t selected_epoch = 0;
  std::vector<EpochRecord> history;
};

struct TrainHooks {
  /// Called after every optimizer step with the updated parameters.
  std::function<void(std::size_t step, const ModelParams&)> on_step;
};

/// Signals a divergent run (NaN/Inf loss or gradient).
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

AdamSettings adam_settings(const TrainConfig& cfg);

/// GRL coefficient at training progress p ∈ [0, 1].
double grl_coefficient(const TrainConfig& cfg, double progress);

/// Losses and gradients of one minibatch; accumulates into params' gradient
/// buffers (callers zero them first). Exposed for gradient checking.
struct BatchLoss {
  double total = 0.0;
  double classification = 0.0;
  std::optional<double> domain;
  std::optional<double> coral;
  std::size_t disc_correct_source = 0;
  std::size_t disc_total_source = 0;
  std::size_t disc_correct_target = 0;
  std::size_t disc_total_target = 0;
};

BatchLoss batch_loss_and_grad(ModelParams& params, const BatchPair& batch, const TrainConfig& cfg,
                              double grl_scale, bool compute_grad = true);

/// Picks the epoch with the highest trans-val rare accuracy among epochs whose
/// trans-val other-class macro accuracy is within `tolerance` of the best one;
/// ties go to the earliest epoch. Returns an index into `history`.
std::size_t select_epoch(const std::vector<EpochRecord>& history, double tolerance);

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Named metric snapshot stored in checkpoints and selected-metrics files.
std::vector<std::pair<std::string, double>> metric_snapshot(const RunMetrics& m);

}  // namespace rareda
