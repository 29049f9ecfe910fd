#include "glemb/retrieval_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "serial_util.hpp"

namespace glemb {

namespace {

constexpr char kFeatureMagic[9] = "GLEMBFEA";

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("retrieval: feature dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void RetrievalSplit::validate() const {
  if (gallery.empty()) throw std::invalid_argument("RetrievalSplit: empty gallery");
  std::set<int> gallery_ids;
  for (const auto& g : gallery) {
    if (single_shot && !gallery_ids.insert(g.identity).second) {
      throw std::invalid_argument(
          "RetrievalSplit: identity enrolled twice in a single-shot gallery");
    }
    if (!single_shot) gallery_ids.insert(g.identity);
  }
  for (const auto& p : probes) {
    if (!gallery_ids.count(p.identity)) {
      throw std::invalid_argument("RetrievalSplit: probe identity missing from gallery");
    }
  }
}

std::vector<std::size_t> rank_gallery(const std::vector<double>& probe,
                                      const std::vector<RetrievalEntry>& gallery) {
  if (gallery.empty()) throw std::invalid_argument("rank_gallery: empty gallery");
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    dist[g] = sq_dist(probe, gallery[g].feature);
  }
  std::stable_sort(order.begin(), order.end(), [&dist](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

std::vector<double> cmc_curve(const std::vector<RetrievalSplit>& splits,
                              std::size_t max_rank) {
  if (splits.empty()) throw std::invalid_argument("cmc_curve: no splits");
  if (max_rank == 0) throw std::invalid_argument("cmc_curve: max_rank must be >= 1");
  std::vector<double> curve(max_rank, 0.0);
  for (const auto& split : splits) {
    split.validate();
    if (split.probes.empty()) {
      throw std::invalid_argument("cmc_curve: split without probes");
    }
    std::vector<double> hits(max_rank, 0.0);
    for (const auto& probe : split.probes) {
      const auto order = rank_gallery(probe.feature, split.gallery);
      std::size_t match_rank = order.size();  // 0-based position of first match
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (split.gallery[order[pos]].identity == probe.identity) {
          match_rank = pos;
          break;
        }
      }
      for (std::size_t r = match_rank; r < max_rank; ++r) hits[r] += 1.0;
    }
    for (std::size_t r = 0; r < max_rank; ++r) {
      curve[r] += hits[r] / static_cast<double>(split.probes.size());
    }
  }
  for (double& v : curve) v /= static_cast<double>(splits.size());
  return curve;
}

MapResult mean_average_precision(const std::vector<RetrievalEntry>& probes,
                                 const std::vector<RetrievalEntry>& gallery) {
  if (gallery.empty()) throw std::invalid_argument("mean_average_precision: empty gallery");
  MapResult res;
  double ap_sum = 0.0;
  for (const auto& probe : probes) {
    const auto order = rank_gallery(probe.feature, gallery);
    double precision_sum = 0.0;
    std::size_t matches = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (gallery[order[pos]].identity == probe.identity) {
        ++matches;
        precision_sum += static_cast<double>(matches) / static_cast<double>(pos + 1);
      }
    }
    if (matches == 0) {
      ++res.skipped_probes;
      continue;
    }
    ap_sum += precision_sum / static_cast<double>(matches);
    ++res.evaluated_probes;
  }
  res.map = res.evaluated_probes
                ? ap_sum / static_cast<double>(res.evaluated_probes)
                : 0.0;
  return res;
}

RetrievalSplit make_single_shot_split(const std::vector<RetrievalEntry>& pool,
                                      std::mt19937_64& rng) {
  std::map<int, std::vector<std::size_t>> view_b_by_id;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].view != 0) view_b_by_id[pool[i].identity].push_back(i);
  }
  if (view_b_by_id.empty()) {
    throw std::invalid_argument("make_single_shot_split: no view-B samples to enroll");
  }
  RetrievalSplit split;
  split.single_shot = true;
  std::set<int> enrolled;
  for (auto& [identity, candidates] : view_b_by_id) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    split.gallery.push_back(pool[candidates[pick(rng)]]);
    enrolled.insert(identity);
  }
  for (const auto& entry : pool) {
    if (entry.view == 0 && enrolled.count(entry.identity)) {
      split.probes.push_back(entry);
    }
  }
  if (split.probes.empty()) {
    throw std::invalid_argument("make_single_shot_split: no view-A probes");
  }
  split.validate();
  return split;
}

DistanceStats distance_stats(const std::vector<RetrievalEntry>& pool) {
  DistanceStats stats;
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const double d = std::sqrt(sq_dist(pool[i].feature, pool[j].feature));
      if (pool[i].identity == pool[j].identity) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  stats.intra_mean = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
  stats.inter_mean = n_inter ? inter / static_cast<double>(n_inter) : 0.0;
  stats.ratio = stats.inter_mean > 0.0 ? stats.intra_mean / stats.inter_mean : 0.0;
  return stats;
}

double MetricsReport::cmc_at(std::size_t rank) const {
  if (cmc.empty()) return 0.0;
  const std::size_t idx = std::min(rank == 0 ? 1 : rank, cmc.size()) - 1;
  return cmc[idx];
}

MetricsReport evaluate_retrieval(const std::vector<RetrievalEntry>& pool,
                                 std::size_t num_trials, std::uint64_t seed) {
  if (num_trials == 0) {
    throw std::invalid_argument("evaluate_retrieval: need at least one trial");
  }
  std::vector<RetrievalSplit> splits;
  splits.reserve(num_trials);
  for (std::size_t trial = 0; trial < num_trials; ++trial) {
    std::mt19937_64 rng(seed + trial);  // per-trial reseeded split
    splits.push_back(make_single_shot_split(pool, rng));
  }
  MetricsReport report;
  report.num_trials = num_trials;
  report.gallery_size = splits.front().gallery.size();
  report.num_probes = splits.front().probes.size();
  report.cmc = cmc_curve(splits, report.gallery_size);

  // mAP against the full multi-shot cross-view gallery (all view-B samples).
  std::vector<RetrievalEntry> probes, gallery;
  for (const auto& entry : pool) {
    (entry.view == 0 ? probes : gallery).push_back(entry);
  }
  const MapResult map_res = mean_average_precision(probes, gallery);
  report.map = map_res.map;
  report.skipped_probes = map_res.skipped_probes;
  return report;
}

void save_features_csv(const std::vector<RetrievalEntry>& entries,
                       const std::filesystem::path& path) {
  if (entries.empty()) throw std::invalid_argument("save_features_csv: no entries");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_features_csv: cannot open " + path.string());
  const std::size_t dim = entries.front().feature.size();
  os << "# glemb feature file\n";
  os << "# samples=" << entries.size() << " dim=" << dim << "\n";
  os << "id,view";
  for (std::size_t k = 0; k < dim; ++k) os << ",f" << k;
  os << "\n";
  for (const auto& e : entries) {
    os << e.identity << "," << (e.view == 0 ? 'A' : 'B');
    for (double x : e.feature) os << "," << format_double(x);
    os << "\n";
  }
  if (!os) throw std::runtime_error("save_features_csv: write failed");
}

std::vector<RetrievalEntry> load_features_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_features_csv: cannot open " + path.string());
  std::vector<RetrievalEntry> entries;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    RetrievalEntry entry;
    if (!std::getline(ss, field, ',')) {
      throw std::runtime_error("load_features_csv: malformed row");
    }
    entry.identity = std::stoi(field);
    if (!std::getline(ss, field, ',') || field.empty()) {
      throw std::runtime_error("load_features_csv: missing view tag");
    }
    if (field == "A") {
      entry.view = 0;
    } else if (field == "B") {
      entry.view = 1;
    } else {
      throw std::runtime_error("load_features_csv: view tag must be A or B");
    }
    while (std::getline(ss, field, ',')) entry.feature.push_back(std::stod(field));
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) {
    throw std::runtime_error("load_features_csv: no entries in " + path.string());
  }
  return entries;
}

void save_features_binary(const std::vector<RetrievalEntry>& entries,
                          const std::filesystem::path& path) {
  if (entries.empty()) throw std::invalid_argument("save_features_binary: no entries");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_features_binary: cannot open " + path.string());
  const std::size_t dim = entries.front().feature.size();
  detail::write_magic(os, kFeatureMagic);
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(entries.size()));
  detail::write_u32(os, static_cast<std::uint32_t>(dim));
  for (const auto& e : entries) {
    if (e.feature.size() != dim) {
      throw std::invalid_argument("save_features_binary: ragged feature lengths");
    }
    detail::write_u32(os, static_cast<std::uint32_t>(e.identity));
    detail::write_u32(os, static_cast<std::uint32_t>(e.view));
    for (double x : e.feature) detail::write_f64(os, x);
  }
  if (!os) throw std::runtime_error("save_features_binary: write failed");
}

std::vector<RetrievalEntry> load_features_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_features_binary: cannot open " + path.string());
  detail::expect_magic(is, kFeatureMagic, "load_features_binary");
  const std::uint32_t version = detail::read_u32(is);
  if (version != 1) throw std::runtime_error("load_features_binary: unsupported version");
  const std::uint32_t count = detail::read_u32(is);
  const std::uint32_t dim = detail::read_u32(is);
  std::vector<RetrievalEntry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    RetrievalEntry entry;
    entry.identity = static_cast<int>(detail::read_u32(is));
    entry.view = static_cast<int>(detail::read_u32(is));
    entry.feature.resize(dim);
    for (double& x : entry.feature) x = detail::read_f64(is);
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace glemb
