#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "rareda/dataio.hpp"
#include "rareda/model.hpp"

namespace rareda {

/// Per-class recall and aggregates for one split.
struct SplitMetrics {
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> class_counts;
  /// Empty optional where the class has no samples in the split.
  std::vector<std::optional<double>> per_class_accuracy;
  std::size_t rare_class_id = 0;
  std::optional<double> rare_accuracy;
  /// Mean of the defined per-class accuracies excluding the rare class.
  std::optional<double> other_macro;
  double overall = 0.0;
  std::size_t total = 0;

  friend bool operator==(const SplitMetrics&, const SplitMetrics&) = default;
};

SplitMetrics metrics_from_predictions(std::span<const std::size_t> truth,
                                      std::span<const std::size_t> predicted,
                                      std::size_t class_count, std::size_t rare_class_id);

/// Row-wise argmax (first maximum wins).
std::vector<std::size_t> argmax_rows(const Matrix& logits);

std::vector<std::size_t> predict(const ModelParams& params, const Matrix& x);

/// Evaluates real samples of `split`. Throws if the split is empty.
SplitMetrics evaluate(const ModelParams& params, const Dataset& ds, Split split);

struct RunMetrics {
  std::array<std::optional<SplitMetrics>, 5> splits;

  const SplitMetrics& at(Split s) const;
  void set(Split s, SplitMetrics m) { splits[static_cast<std::size_t>(s)] = std::move(m); }
  bool has(Split s) const { return splits[static_cast<std::size_t>(s)].has_value(); }

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

/// Evaluates every non-empty split.
RunMetrics evaluate_all(const ModelParams& params, const Dataset& ds);

}  // namespace rareda
