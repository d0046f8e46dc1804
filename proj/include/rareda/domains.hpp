#pragma once

// Source/target organization for the rare-class adaptation methods.
//
//   S = train ∪ (n_syn synthetic rare samples)          for every method
//   T = ∅                                               baseline
//   T = real rare train samples × oversample_factor     deerdann
//   T = train ∪ (real rare train × oversample_factor)   alldann, deercoral
//
// Oversampling is index multiplicity; T never holds synthetic samples.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rareda/dataio.hpp"
#include "rareda/losses.hpp"
#include "rareda/numcore/rng.hpp"

namespace rareda {

enum class Method { baseline, deerdann, alldann, deercoral };

std::string to_string(Method m);
Method parse_method(const std::string& name);

inline bool uses_discriminator(Method m) noexcept {
  return m == Method::deerdann || m == Method::alldann;
}
inline bool uses_target(Method m) noexcept { return m != Method::baseline; }

/// How routed real rare samples that live in S are labelled for D.
enum class SourceRealPolicy {
  label_source,  // domain label follows set membership (default)
  label_target,  // labelled by their true (real) domain
  exclude,       // not routed to D at all
};

std::string to_string(SourceRealPolicy p);
SourceRealPolicy parse_source_real_policy(const std::string& name);

inline constexpr std::size_t kDefaultOversampleFactor = 50;

struct DomainOrg {
  Method method = Method::baseline;
  std::vector<std::size_t> source;  // dataset indices
  std::vector<std::size_t> target;  // dataset indices, with multiplicity
  std::size_t rare_class_id = 0;
  std::size_t oversample_factor = kDefaultOversampleFactor;
  std::size_t synthetic_count = 0;
};

/// Synthetic samples are the first `synthetic_count` entries of a
/// seed-determined permutation of the pool, so smaller counts are subsets of
/// larger ones under the same seed.
DomainOrg build_domains(const Dataset& ds, Method method, std::size_t synthetic_count,
                        std::size_t oversample_factor, std::uint64_t seed);

/// Rows whose features reach the discriminator: rare-class rows for the deer
/// methods, every row for alldann, none for baseline/deercoral.
std::vector<std::size_t> route_delta(std::span<const std::size_t> labels, Method method,
                                     std::size_t rare_class_id);

struct BatchPair {
  std::vector<std::size_t> source_ids;  // dataset indices
  std::vector<std::size_t> target_ids;
  Matrix source_x;
  Matrix target_x;
  std::vector<std::size_t> source_labels;
  std::vector<std::size_t> target_labels;
  std::vector<Domain> source_domains;
  std::vector<Domain> target_domains;
  /// Rows (within each batch) selected by route_delta.
  std::vector<std::size_t> routed_source_rows;
  std::vector<std::size_t> routed_target_rows;
};

/// Discriminator rows and labels for a batch, after applying the policy for
/// real samples on the source side. Source rows index the source batch,
/// target rows the target batch.
struct DiscriminatorRouting {
  std::vector<std::size_t> source_rows;
  std::vector<std::size_t> target_rows;
  std::vector<DomainLabel> labels;  // source rows first, then target rows
};

DiscriminatorRouting discriminator_routing(const BatchPair& batch, SourceRealPolicy policy);

/// One epoch of paired minibatches: a shuffled pass over S in batches of B,
/// each paired with B rows drawn from T (reshuffling T whenever it runs out).
/// A final source batch with fewer than 2 rows is dropped.
class PairedSampler {
 public:
  PairedSampler(const Dataset& ds, const DomainOrg& org, std::size_t batch_size,
                std::uint64_t seed, std::size_t epoch);

  std::optional<BatchPair> next();
  std::size_t batch_count() const noexcept;

 private:
  void refill_target();

  const Dataset* ds_;
  const DomainOrg* org_;
  std::size_t batch_size_;
  std::vector<std::size_t> source_order_;
  std::size_t source_pos_ = 0;
  std::vector<std::size_t> target_order_;
  std::size_t target_pos_ = 0;
  RngStream target_rng_;
};

}  // namespace rareda
