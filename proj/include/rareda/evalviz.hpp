#pragma once

// Synthetic-count sweeps, comparison tables and 2-D PCA projections of
// pre-logit features.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rareda/metrics.hpp"
#include "rareda/trainer.hpp"

namespace rareda {

// ---- sweeps ---------------------------------------------------------------

struct SweepCell {
  std::size_t synthetic_count = 0;
  std::uint64_t seed = 0;
  /// Set on success.
  std::optional<TrainResult> result;
  /// Set on failure; the rest of the sweep still runs.
  std::string error;

  bool ok() const noexcept { return result.has_value(); }
  /// Metrics of the selected checkpoint.
  const RunMetrics& metrics() const;
};

struct SweepResult {
  Method method = Method::baseline;
  /// Count-major: all seeds of counts[0], then counts[1], ...
  std::vector<SweepCell> cells;
};

/// One train + select + evaluate per (count, seed). Counts must be strictly
/// increasing and within the synthetic pool. `jobs` > 1 runs cells on worker
/// threads; the result does not depend on it.
SweepResult sweep(const Dataset& ds, const TrainConfig& base, Method method,
                  const std::vector<std::size_t>& counts, const std::vector<std::uint64_t>& seeds,
                  std::size_t jobs = 1);

/// count,seed,trans_rare_acc,trans_other_avg,cis_rare_acc,cis_other_avg
/// (test splits of the selected checkpoint; failed cells are skipped).
std::string learning_curve_csv(const SweepResult& r);

// ---- comparison table -----------------------------------------------------

struct ComparisonRow {
  std::string name;
  double trans_rare = 0.0;
  double cis_rare = 0.0;
  double trans_other = 0.0;
  double cis_other = 0.0;

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

/// Accuracies on the trans_test and cis_test splits.
ComparisonRow comparison_row(const std::string& name, const RunMetrics& m);

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  /// Aligned text, accuracies in percent with one decimal.
  std::string text() const;
  /// method,trans_rare,cis_rare,trans_other_avg,cis_other_avg (fractions,
  /// shortest round-trip formatting).
  std::string csv() const;
};

ComparisonTable comparison_table(const std::vector<std::pair<std::string, RunMetrics>>& entries);
ComparisonTable parse_comparison_csv(const std::string& text);

// ---- PCA projection -------------------------------------------------------

struct Pca {
  std::vector<double> mean;
  /// k × D, rows are orthonormal principal directions.
  Matrix components;
  /// Non-increasing.
  std::vector<double> explained_variance;
};

/// Principal components of the rows of `x` (unbiased covariance). The sign of
/// each component makes its largest-magnitude entry positive. Throws if
/// rows <= k or the covariance rank is below k.
Pca fit_pca(const Matrix& x, std::size_t k);
Matrix pca_project(const Pca& pca, const Matrix& x);
/// Inverse map coords · components + mean.
Matrix pca_reconstruct(const Pca& pca, const Matrix& coords);

/// Input of the classifier's last layer.
Matrix pre_logit_features(const ModelParams& params, const Matrix& x);

struct ProjectedFeatures {
  Matrix coords;  // n × k
  std::vector<std::size_t> class_ids;
  std::vector<Domain> domains;
  std::vector<Split> splits;
  std::vector<bool> correct;
  Matrix components;
  std::vector<double> explained_variance;
};

/// Projects the samples `idx` of `ds` (real and synthetic).
ProjectedFeatures project_features(const ModelParams& params, const Dataset& ds,
                                   const std::vector<std::size_t>& idx, std::size_t k = 2);

/// Writes `csv` (x,y,class_id,domain,split,correct) and a static SVG.
/// SVG: fill colour by class, circle = real, square = synthetic, red outline
/// = misclassified.
void export_scatter(const ProjectedFeatures& proj, const std::filesystem::path& csv,
                    const std::filesystem::path& svg);

struct ScatterRow {
  double x = 0.0;
  double y = 0.0;
  std::size_t class_id = 0;
  Domain domain = Domain::real;
  Split split = Split::train;
  bool correct = false;

  friend bool operator==(const ScatterRow&, const ScatterRow&) = default;
};

std::vector<ScatterRow> read_scatter_csv(const std::filesystem::path& csv);

/// Separation of real vs synthetic points: balanced accuracy of a
/// deterministic 2-means split against the domain labels, taking the better
/// of the two cluster/domain pairings. Near 0.5 when mixed, 1 when apart.
/// Throws unless both domains are present.
double bimodality_score(const Matrix& points, const std::vector<Domain>& domains);
/// Same, restricted to the rare-class rows of `proj` (first two coordinates).
double bimodality_score(const ProjectedFeatures& proj, std::size_t rare_class_id);

}  // namespace rareda
