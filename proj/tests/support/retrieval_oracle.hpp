#pragma once

// Brute-force retrieval metrics for verification. Ranks are derived by
// counting closer entries rather than sorting, so this shares no machinery
// with the library implementation. Ties count entries with a smaller gallery
// index as closer, matching the documented deterministic tie-break.

#include <cstddef>
#include <vector>

#include "glemb/retrieval_eval.hpp"

namespace testsupport {

inline double oracle_sq_dist(const std::vector<double>& a,
                             const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    acc += (a[k] - b[k]) * (a[k] - b[k]);
  }
  return acc;
}

// 1-based rank of gallery entry g in the probe's ranking.
inline std::size_t oracle_rank_of(const std::vector<double>& probe,
                                  const std::vector<glemb::RetrievalEntry>& gallery,
                                  std::size_t g) {
  const double dg = oracle_sq_dist(probe, gallery[g].feature);
  std::size_t before = 0;
  for (std::size_t other = 0; other < gallery.size(); ++other) {
    if (other == g) continue;
    const double d = oracle_sq_dist(probe, gallery[other].feature);
    if (d < dg || (d == dg && other < g)) ++before;
  }
  return before + 1;
}

inline std::vector<double> oracle_cmc(const std::vector<glemb::RetrievalSplit>& splits,
                                      std::size_t max_rank) {
  std::vector<double> curve(max_rank, 0.0);
  for (const auto& split : splits) {
    std::vector<double> hits(max_rank, 0.0);
    for (const auto& probe : split.probes) {
      std::size_t best = max_rank + 1;
      for (std::size_t g = 0; g < split.gallery.size(); ++g) {
        if (split.gallery[g].identity != probe.identity) continue;
        const std::size_t rank = oracle_rank_of(probe.feature, split.gallery, g);
        if (rank < best) best = rank;
      }
      for (std::size_t r = best; r <= max_rank; ++r) hits[r - 1] += 1.0;
    }
    for (std::size_t r = 0; r < max_rank; ++r) {
      curve[r] += hits[r] / static_cast<double>(split.probes.size());
    }
  }
  for (double& v : curve) v /= static_cast<double>(splits.size());
  return curve;
}

inline double oracle_average_precision(const glemb::RetrievalEntry& probe,
                                       const std::vector<glemb::RetrievalEntry>& gallery) {
  // walk ranks in ascending order so the precision terms accumulate the same
  // way a scan over the ranked list would
  double precision_sum = 0.0;
  std::size_t matches = 0;
  for (std::size_t rank = 1; rank <= gallery.size(); ++rank) {
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (gallery[g].identity != probe.identity) continue;
      if (oracle_rank_of(probe.feature, gallery, g) != rank) continue;
      ++matches;
      precision_sum += static_cast<double>(matches) / static_cast<double>(rank);
    }
  }
  return matches ? precision_sum / static_cast<double>(matches) : -1.0;
}

inline double oracle_map(const std::vector<glemb::RetrievalEntry>& probes,
                         const std::vector<glemb::RetrievalEntry>& gallery) {
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (const auto& probe : probes) {
    const double ap = oracle_average_precision(probe, gallery);
    if (ap < 0.0) continue;
    sum += ap;
    ++evaluated;
  }
  return evaluated ? sum / static_cast<double>(evaluated) : 0.0;
}

}  // namespace testsupport
