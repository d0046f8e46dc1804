#pragma once

#include "rareda/domains.hpp"
#include "support/oracles.hpp"

namespace oracle {

/// Random paired batch of n source and n target rows. Row 0 of each side is
/// forced to the rare class so deerdann always routes something.
inline rareda::BatchPair micro_batch(Gen& g, std::size_t n, std::size_t in, std::size_t k,
                                     std::size_t rare, rareda::Method m) {
  using rareda::Domain;
  rareda::BatchPair b;
  b.source_x = g.matrix(n, in);
  b.target_x = g.matrix(n, in);
  b.source_labels = g.labels(n, k);
  b.target_labels = g.labels(n, k);
  b.source_labels[0] = rare;
  b.target_labels[0] = rare;
  for (std::size_t i = 0; i < n; ++i) {
    b.source_domains.push_back(g.uniform() < 0.5 ? Domain::real : Domain::synthetic);
    b.target_domains.push_back(Domain::real);
  }
  b.routed_source_rows = rareda::route_delta(b.source_labels, m, rare);
  b.routed_target_rows = rareda::route_delta(b.target_labels, m, rare);
  return b;
}

}  // namespace oracle
