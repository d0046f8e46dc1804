#include "rareda/domains.hpp"

#include <algorithm>

namespace rareda {

std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::deerdann: return "deerdann";
    case Method::alldann: return "alldann";
    case Method::deercoral: return "deercoral";
  }
  return "baseline";
}

Method parse_method(const std::string& name) {
  if (name == "baseline") return Method::baseline;
  if (name == "deerdann") return Method::deerdann;
  if (name == "alldann") return Method::alldann;
  if (name == "deercoral") return Method::deercoral;
  throw Error("unknown method '" + name + "' (expected baseline, deerdann, alldann or deercoral)");
}

std::string to_string(SourceRealPolicy p) {
  switch (p) {
    case SourceRealPolicy::label_source: return "label_source";
    case SourceRealPolicy::label_target: return "label_target";
    case SourceRealPolicy::exclude: return "exclude";
  }
  return "label_source";
}

SourceRealPolicy parse_source_real_policy(const std::string& name) {
  if (name == "label_source") return SourceRealPolicy::label_source;
  if (name == "label_target") return SourceRealPolicy::label_target;
  if (name == "exclude") return SourceRealPolicy::exclude;
  throw Error("unknown source_real_policy '" + name +
              "' (expected label_source, label_target or exclude)");
}

DomainOrg build_domains(const Dataset& ds, Method method, std::size_t synthetic_count,
                        std::size_t oversample_factor, std::uint64_t seed) {
  const auto train = ds.indices(Split::train, Domain::real);
  auto pool = ds.indices(Split::train, Domain::synthetic);
  if (synthetic_count > pool.size()) {
    throw Error("requested " + std::to_string(synthetic_count) +
                " synthetic samples but the pool holds " + std::to_string(pool.size()));
  }
  std::vector<std::size_t> rare;
  for (std::size_t i : train) {
    if (ds.samples[i].class_id == ds.rare_class_id) rare.push_back(i);
  }
  if (rare.empty()) throw Error("no real rare-class samples in the train split");
  if (oversample_factor < 1) throw Error("oversample_factor must be >= 1");

  RngStream rng(derive_seed(seed, "domains.synthetic"));
  rng.shuffle(std::span<std::size_t>(pool));
  pool.resize(synthetic_count);

  DomainOrg org;
  org.method = method;
  org.rare_class_id = ds.rare_class_id;
  org.oversample_factor = oversample_factor;
  org.synthetic_count = synthetic_count;
  org.source = train;
  org.source.insert(org.source.end(), pool.begin(), pool.end());

  if (method == Method::alldann || method == Method::deercoral) org.target = train;
  if (method != Method::baseline) {
    for (std::size_t rep = 0; rep < oversample_factor; ++rep) {
      org.target.insert(org.target.end(), rare.begin(), rare.end());
    }
  }
  return org;
}

std::vector<std::size_t> route_delta(std::span<const std::size_t> labels, Method method,
                                     std::size_t rare_class_id) {
  std::vector<std::size_t> rows;
  switch (method) {
    case Method::deerdann:
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == rare_class_id) rows.push_back(i);
      }
      break;
    case Method::alldann:
      rows.resize(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) rows[i] = i;
      break;
    case Method::baseline:
    case Method::deercoral: break;
  }
  return rows;
}

DiscriminatorRouting discriminator_routing(const BatchPair& batch, SourceRealPolicy policy) {
  DiscriminatorRouting r;
  std::vector<DomainLabel> target_side;
  for (std::size_t row : batch.routed_source_rows) {
    if (batch.source_domains[row] == Domain::real) {
      if (policy == SourceRealPolicy::exclude) continue;
      if (policy == SourceRealPolicy::label_target) {
        r.source_rows.push_back(row);
        r.labels.push_back(DomainLabel::target);
        continue;
      }
    }
    r.source_rows.push_back(row);
    r.labels.push_back(DomainLabel::source);
  }
  for (std::size_t row : batch.routed_target_rows) {
    r.target_rows.push_back(row);
    r.labels.push_back(DomainLabel::target);
  }
  return r;
}

PairedSampler::PairedSampler(const Dataset& ds, const DomainOrg& org, std::size_t batch_size,
                             std::uint64_t seed, std::size_t epoch)
    : ds_(&ds),
      org_(&org),
      batch_size_(batch_size),
      source_order_(org.source),
      target_rng_(derive_seed(seed, "sampler.target", epoch)) {
  if (batch_size < 2) throw Error("batch size must be >= 2");
  if (uses_target(org.method) && org.target.empty()) {
    throw Error("method " + to_string(org.method) + " requires a non-empty target domain");
  }
  // Source order depends only on (seed, epoch) so every method sees the same
  // source batches.
  RngStream source_rng(derive_seed(seed, "sampler.source", epoch));
  source_rng.shuffle(std::span<std::size_t>(source_order_));
}

std::size_t PairedSampler::batch_count() const noexcept {
  const std::size_t n = source_order_.size();
  const std::size_t full = n / batch_size_;
  return full + ((n % batch_size_) >= 2 ? 1 : 0);
}

void PairedSampler::refill_target() {
  target_order_ = org_->target;
  target_rng_.shuffle(std::span<std::size_t>(target_order_));
  target_pos_ = 0;
}

std::optional<BatchPair> PairedSampler::next() {
  const std::size_t remaining = source_order_.size() - source_pos_;
  if (remaining < 2) return std::nullopt;
  const std::size_t b = std::min(batch_size_, remaining);

  BatchPair batch;
  batch.source_ids.assign(source_order_.begin() + static_cast<std::ptrdiff_t>(source_pos_),
                          source_order_.begin() + static_cast<std::ptrdiff_t>(source_pos_ + b));
  source_pos_ += b;

  if (uses_target(org_->method)) {
    batch.target_ids.reserve(b);
    while (batch.target_ids.size() < b) {
      if (target_pos_ >= target_order_.size()) refill_target();
      batch.target_ids.push_back(target_order_[target_pos_++]);
    }
  }

  const Dataset& ds = *ds_;
  batch.source_x = ds.features(batch.source_ids);
  batch.source_labels = ds.labels(batch.source_ids);
  for (std::size_t i : batch.source_ids) batch.source_domains.push_back(ds.samples[i].domain);
  if (!batch.target_ids.empty()) {
    batch.target_x = ds.features(batch.target_ids);
    batch.target_labels = ds.labels(batch.target_ids);
    for (std::size_t i : batch.target_ids) batch.target_domains.push_back(ds.samples[i].domain);
  }
  batch.routed_source_rows = route_delta(batch.source_labels, org_->method, org_->rare_class_id);
  batch.routed_target_rows = route_delta(batch.target_labels, org_->method, org_->rare_class_id);
  return batch;
}

}  // namespace rareda
