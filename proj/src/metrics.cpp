#include "rareda/metrics.hpp"

namespace rareda {

SplitMetrics metrics_from_predictions(std::span<const std::size_t> truth,
                                      std::span<const std::size_t> predicted,
                                      std::size_t class_count, std::size_t rare_class_id) {
  if (truth.size() != predicted.size()) throw Error("metrics: label/prediction length mismatch");
  SplitMetrics m;
  m.rare_class_id = rare_class_id;
  m.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
  m.class_counts.assign(class_count, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= class_count || predicted[i] >= class_count) {
      throw Error("metrics: label out of range at row " + std::to_string(i));
    }
    ++m.confusion[truth[i]][predicted[i]];
    ++m.class_counts[truth[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  m.total = truth.size();
  m.overall = m.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m.total);

  double other_sum = 0.0;
  std::size_t other_n = 0;
  m.per_class_accuracy.resize(class_count);
  for (std::size_t c = 0; c < class_count; ++c) {
    if (m.class_counts[c] == 0) continue;
    const double acc =
        static_cast<double>(m.confusion[c][c]) / static_cast<double>(m.class_counts[c]);
    m.per_class_accuracy[c] = acc;
    if (c != rare_class_id) {
      other_sum += acc;
      ++other_n;
    }
  }
  m.rare_accuracy = m.per_class_accuracy.at(rare_class_id);
  if (other_n > 0) m.other_macro = other_sum / static_cast<double>(other_n);
  return m;
}

std::vector<std::size_t> argmax_rows(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

std::vector<std::size_t> predict(const ModelParams& params, const Matrix& x) {
  return argmax_rows(forward_classifier(params, forward_features(params, x).output));
}

SplitMetrics evaluate(const ModelParams& params, const Dataset& ds, Split split) {
  const auto idx = ds.indices(split, Domain::real);
  if (idx.empty()) {
    throw Error("evaluate: split '" + std::string(to_string(split)) + "' has no real samples");
  }
  const auto pred = predict(params, ds.features(idx));
  return metrics_from_predictions(ds.labels(idx), pred, ds.class_count, ds.rare_class_id);
}

const SplitMetrics& RunMetrics::at(Split s) const {
  const auto& m = splits[static_cast<std::size_t>(s)];
  if (!m) throw Error("no metrics recorded for split '" + std::string(to_string(s)) + "'");
  return *m;
}

RunMetrics evaluate_all(const ModelParams& params, const Dataset& ds) {
  RunMetrics r;
  for (Split s : kAllSplits) {
    if (!ds.indices(s, Domain::real).empty()) r.set(s, evaluate(params, ds, s));
  }
  return r;
}

}  // namespace rareda
