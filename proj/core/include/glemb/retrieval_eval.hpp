#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "glemb/linalg.hpp"

namespace glemb {

/// One gallery or probe entry: an embedded sample with its identity and view.
struct RetrievalEntry {
  std::vector<double> feature;
  int identity = 0;
  int view = 0;
};

/// A probe/gallery split. Single-shot galleries hold each identity at most
/// once; every probe identity must be enrolled in the gallery.
struct RetrievalSplit {
  std::vector<RetrievalEntry> probes;
  std::vector<RetrievalEntry> gallery;
  bool single_shot = true;

  void validate() const;  ///< throws std::invalid_argument on violations
};

/// Gallery indices sorted by ascending Euclidean distance to the probe.
/// Ties break on ascending gallery index so rankings are deterministic.
/// Throws on an empty gallery or dimension mismatch.
std::vector<std::size_t> rank_gallery(const std::vector<double>& probe,
                                      const std::vector<RetrievalEntry>& gallery);

/// Cumulative match curve averaged over splits: entry r-1 is the fraction of
/// probes whose correct identity appears within the top r, averaged over the
/// per-split fractions. The curve has max_rank entries (ranks past the
/// gallery size saturate at the full-gallery value).
std::vector<double> cmc_curve(const std::vector<RetrievalSplit>& splits,
                              std::size_t max_rank);

struct MapResult {
  double map = 0.0;
  std::size_t evaluated_probes = 0;
  std::size_t skipped_probes = 0;  ///< probes with no true match in the gallery
};

/// Mean average precision over probes against a (possibly multi-shot)
/// gallery: per probe, precision at each true-match rank averaged over the
/// true matches; probes without any true match are skipped and counted.
MapResult mean_average_precision(const std::vector<RetrievalEntry>& probes,
                                 const std::vector<RetrievalEntry>& gallery);

/// Build one single-shot cross-view split from an embedded pool: for every
/// identity with at least one view-B sample, a random view-B sample enters
/// the gallery; all view-A samples of enrolled identities become probes.
RetrievalSplit make_single_shot_split(const std::vector<RetrievalEntry>& pool,
                                      std::mt19937_64& rng);

/// Mean intra-identity and inter-identity feature distances over a pool.
struct DistanceStats {
  double intra_mean = 0.0;
  double inter_mean = 0.0;
  double ratio = 0.0;  ///< intra_mean / inter_mean, 0 when undefined
};

DistanceStats distance_stats(const std::vector<RetrievalEntry>& pool);

/// Aggregate retrieval report: CMC over `num_trials` reseeded single-shot
/// splits plus mAP against the full multi-shot cross-view gallery.
struct MetricsReport {
  std::vector<double> cmc;
  double map = 0.0;
  std::size_t num_trials = 0;
  std::size_t gallery_size = 0;
  std::size_t num_probes = 0;
  std::size_t skipped_probes = 0;

  double cmc_at(std::size_t rank) const;  ///< rank is 1-based, clamped to curve
};

MetricsReport evaluate_retrieval(const std::vector<RetrievalEntry>& pool,
                                 std::size_t num_trials, std::uint64_t seed);

/// Feature files. CSV uses the dataset layout (id, view, values...) behind a
/// '#' header; the binary format is magic "GLEMBFEA", u32 version (1),
/// u32 sample count, u32 dim, then per sample u32 id, u32 view and the
/// feature values as little-endian doubles.
void save_features_csv(const std::vector<RetrievalEntry>& entries,
                       const std::filesystem::path& path);
std::vector<RetrievalEntry> load_features_csv(const std::filesystem::path& path);
void save_features_binary(const std::vector<RetrievalEntry>& entries,
                          const std::filesystem::path& path);
std::vector<RetrievalEntry> load_features_binary(const std::filesystem::path& path);

}  // namespace glemb
