#pragma once

// Long-tailed benchmark with a controllable real/synthetic gap, plus CSV I/O.
//
// Every class is a mixture over camera locations: a location mean is the
// class mean plus Gaussian jitter, and real samples are Gaussian around their
// location mean. Train and cis splits use the "seen" locations of a class,
// trans splits use held-out ones. Synthetic samples exist only for the rare
// class: they are drawn from the rare-class mixture (all of its locations,
// seen and held out) and then pushed through x → A·x + b + extra noise.

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rareda/numcore/matrix.hpp"

namespace rareda {

enum class Domain { real, synthetic };
enum class Split { train, cis_val, cis_test, trans_val, trans_test };

inline constexpr std::array<Split, 5> kAllSplits{Split::train, Split::cis_val, Split::cis_test,
                                                 Split::trans_val, Split::trans_test};

std::string_view to_string(Domain d) noexcept;
std::string_view to_string(Split s) noexcept;
Domain parse_domain(std::string_view token);
Split parse_split(std::string_view token);

struct Sample {
  std::vector<double> features;
  std::size_t class_id = 0;
  Domain domain = Domain::real;
  std::size_t location_id = 0;
  Split split = Split::train;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Parametric form of the synthetic shift used by the defaults.
struct GapShape {
  double angle_rad = std::numbers::pi / 6.0;
  double condition = 1.5;
  /// ‖b‖ in class-separation units, one unit being class_mean_scale·√(2d).
  double offset_units = 1.0;
  /// Total synthetic noise relative to the real within-location noise.
  double noise_ratio = 1.5;
};

struct GenSpec {
  std::size_t class_count = 8;
  std::size_t feature_dim = 16;
  std::size_t rare_class_id = 7;
  /// Real train samples per class; the rare class must hold the minimum.
  std::vector<std::size_t> train_counts;
  /// Real samples per class in each of cis_val, cis_test, trans_val, trans_test.
  std::size_t eval_count_per_class = 300;
  std::size_t locations_per_class = 8;
  /// Locations per class reserved for the trans splits.
  std::size_t trans_locations_per_class = 3;
  double class_mean_scale = 1.0;
  double location_jitter = 0.85;
  double noise_scale = 1.0;

  /// Synthetic rare-class pool size.
  std::size_t synthetic_pool = 4000;
  Matrix gap_matrix;                // d × d, the A of x → A·x + b
  std::vector<double> gap_offset;   // length d, the b
  double gap_extra_noise = 0.0;     // std of noise added after the map

  std::uint64_t seed = 1;

  /// Geometric long tail (max 1000, ratio 0.6) with the rare class at 41,
  /// and the default domain gap.
  static GenSpec defaults();
  /// Replaces gap_matrix, gap_offset and gap_extra_noise; uses feature_dim,
  /// class_mean_scale and noise_scale as currently set.
  void set_gap(const GapShape& g);
  /// Identical real/synthetic rare populations: A = I, b = 0, no extra noise.
  GenSpec with_zero_gap() const;

  void validate() const;
  /// Stable hash of every field; recorded as dataset provenance.
  std::uint64_t hash() const;
};

/// Rotation-like gap map: rotation by `angle_rad` in the plane of dims (0, 1)
/// composed with axis scales √c and 1/√c there (condition number c); identity
/// elsewhere.
Matrix make_gap_matrix(std::size_t dim, double angle_rad, double condition);

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  std::size_t rare_class_id = 0;
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  std::string provenance;

  std::vector<std::size_t> indices(Split split, std::optional<Domain> domain = std::nullopt) const;
  Matrix features(std::span<const std::size_t> idx) const;
  std::vector<std::size_t> labels(std::span<const std::size_t> idx) const;

  /// Checks the structural invariants (synthetic ⇒ rare class and train split,
  /// trans locations disjoint from train/cis locations, labels in range).
  void validate() const;
};

Dataset generate(const GenSpec& spec);

/// Header `f0,...,f{d-1},class_id,domain,location_id,split`.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
/// `class_count` defaults to max label + 1 and `rare_class_id` to the class
/// with the fewest real train samples. Violations of the sample invariants
/// (e.g. a synthetic sample outside the rare class) are rejected.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> rare_class_id = std::nullopt,
                 std::optional<std::size_t> class_count = std::nullopt);

/// Per-class sample counts in `split`, real samples unless `domain` says otherwise.
std::vector<std::size_t> class_histogram(const Dataset& ds, Split split,
                                         Domain domain = Domain::real);

}  // namespace rareda
