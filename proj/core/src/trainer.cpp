#include "glemb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>

namespace glemb {

namespace {

struct Bundle {
  std::size_t first = 0;
  std::size_t second = 0;
  int label = 0;
};

// One bundle per (view-A, view-B) sample pair of an identity, pairing order
// shuffled per call. Unpaired leftovers within an identity are skipped.
std::vector<Bundle> make_bundles(const LabeledDataset& dataset,
                                 std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> view_a(dataset.num_classes);
  std::vector<std::vector<std::size_t>> view_b(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    (s.view == kViewA ? view_a : view_b)[static_cast<std::size_t>(s.label)]
        .push_back(i);
  }
  std::vector<Bundle> bundles;
  for (std::size_t cls = 0; cls < dataset.num_classes; ++cls) {
    auto& a = view_a[cls];
    auto& b = view_b[cls];
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    const std::size_t pairs = std::min(a.size(), b.size());
    for (std::size_t p = 0; p < pairs; ++p) {
      bundles.push_back(Bundle{a[p], b[p], static_cast<int>(cls)});
    }
  }
  return bundles;
}

// If the leading `count` bundles share one identity, swap in the first later
// bundle with a different one. Returns false when none exists.
template <typename Seq>
bool ensure_two_identities(Seq& bundles, std::size_t count) {
  bool mixed = false;
  for (std::size_t i = 1; i < count; ++i) {
    if (bundles[i].label != bundles[0].label) {
      mixed = true;
      break;
    }
  }
  if (mixed) return true;
  for (std::size_t j = count; j < bundles.size(); ++j) {
    if (bundles[j].label != bundles[0].label) {
      std::swap(bundles[count - 1], bundles[j]);
      return true;
    }
  }
  return false;
}

Batch materialize(const LabeledDataset& dataset, const std::vector<Bundle>& bundles,
                  std::size_t count) {
  const std::size_t n = 2 * count;
  Batch batch{Matrix(dataset.dim, n), Labels(n)};
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t slot = 0; slot < 2; ++slot) {
      const std::size_t idx = slot == 0 ? bundles[p].first : bundles[p].second;
      const auto& s = dataset.samples[idx];
      batch.inputs.set_column(2 * p + slot, s.input);
      batch.labels[2 * p + slot] = s.label;
    }
  }
  return batch;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

bool params_finite(const EmbedNetParams& params) {
  for (const auto& layer : params.trunk) {
    if (!layer.w.all_finite()) return false;
    for (double x : layer.b) {
      if (!std::isfinite(x)) return false;
    }
  }
  if (!params.classifier.w.all_finite()) return false;
  for (double x : params.classifier.b) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

double LearningRateSchedule::at(std::size_t iteration) const {
  if (decay_interval == 0) return base;
  return base * std::pow(decay_factor,
                         static_cast<double>(iteration / decay_interval));
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 4 || batch_size % 2 != 0) {
    throw std::invalid_argument("TrainConfig: batch_size must be even and >= 4");
  }
  if (!(lr.base > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  }
  if (embed_dim < 2) throw std::invalid_argument("TrainConfig: embed_dim must be >= 2");
  loss.validate();
}

void SynthConfig::validate() const {
  if (num_identities < 2) {
    throw std::invalid_argument("SynthConfig: need at least two identities");
  }
  if (samples_per_view == 0) {
    throw std::invalid_argument("SynthConfig: samples_per_view must be >= 1");
  }
  if (dim == 0) throw std::invalid_argument("SynthConfig: dim must be >= 1");
  if (center_scale < 0.0 || noise_scale < 0.0 || view_offset_scale < 0.0) {
    throw std::invalid_argument("SynthConfig: scales must be >= 0");
  }
}

LabeledDataset gen_synth(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](std::size_t count, double scale) {
    std::vector<double> v(count);
    for (double& x : v) x = scale * unit(rng);
    return v;
  };

  std::vector<std::vector<double>> centers;
  centers.reserve(config.num_identities);
  for (std::size_t c = 0; c < config.num_identities; ++c) {
    centers.push_back(draw(config.dim, config.center_scale));
  }
  const std::vector<std::vector<double>> offsets = {
      draw(config.dim, config.view_offset_scale),
      draw(config.dim, config.view_offset_scale)};

  LabeledDataset dataset;
  dataset.num_classes = config.num_identities;
  dataset.dim = config.dim;
  for (std::size_t cls = 0; cls < config.num_identities; ++cls) {
    for (int view : {kViewA, kViewB}) {
      for (std::size_t s = 0; s < config.samples_per_view; ++s) {
        LabeledSample sample;
        sample.label = static_cast<int>(cls);
        sample.view = view;
        sample.input = draw(config.dim, config.noise_scale);
        for (std::size_t k = 0; k < config.dim; ++k) {
          sample.input[k] += centers[cls][k] + offsets[static_cast<std::size_t>(view)][k];
        }
        dataset.samples.push_back(std::move(sample));
      }
    }
  }
  dataset.validate();
  return dataset;
}

Batch sample_batch(const LabeledDataset& dataset, std::size_t batch_size,
                   std::mt19937_64& rng) {
  if (batch_size < 4 || batch_size % 2 != 0) {
    throw std::invalid_argument("sample_batch: batch_size must be even and >= 4");
  }
  dataset.validate();
  std::vector<Bundle> bundles = make_bundles(dataset, rng);
  const std::size_t half = batch_size / 2;
  if (bundles.size() < half) {
    throw std::invalid_argument("sample_batch: dataset too small for one batch");
  }
  std::shuffle(bundles.begin(), bundles.end(), rng);
  ensure_two_identities(bundles, half);
  return materialize(dataset, bundles, half);
}

TrainResult train(const LabeledDataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();

  std::vector<std::size_t> dims;
  dims.push_back(dataset.dim);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.embed_dim);
  EmbedNetParams params = init_params(dims, dataset.num_classes, config.seed);

  NetGradients velocity;
  velocity.trunk.reserve(params.trunk.size());
  for (const auto& layer : params.trunk) {
    velocity.trunk.push_back(
        DenseLayer{Matrix(layer.w.rows(), layer.w.cols()),
                   std::vector<double>(layer.b.size(), 0.0)});
  }
  velocity.classifier = DenseLayer{
      Matrix(params.classifier.w.rows(), params.classifier.w.cols()),
      std::vector<double>(params.classifier.b.size(), 0.0)};

  std::mt19937_64 rng(config.seed);
  const std::size_t half = config.batch_size / 2;
  std::deque<Bundle> pending;
  std::vector<IterationRecord> log;
  std::size_t iteration = 0;

  auto apply_update = [&](DenseLayer& p, DenseLayer& v, const DenseLayer& g,
                          double lr) {
    for (std::size_t i = 0; i < p.w.size(); ++i) {
      v.w.data()[i] = config.momentum * v.w.data()[i] - lr * g.w.data()[i];
      p.w.data()[i] += v.w.data()[i];
    }
    for (std::size_t i = 0; i < p.b.size(); ++i) {
      v.b[i] = config.momentum * v.b[i] - lr * g.b[i];
      p.b[i] += v.b[i];
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    {
      std::vector<Bundle> fresh = make_bundles(dataset, rng);
      std::shuffle(fresh.begin(), fresh.end(), rng);
      pending.insert(pending.end(), fresh.begin(), fresh.end());
    }
    if (pending.size() < half && epoch == 0) {
      throw std::invalid_argument("train: dataset too small for one batch");
    }
    while (pending.size() >= half) {
      // Keep the invariant that a batch spans >= 2 identities; a single-identity
      // remainder spills into the next epoch instead.
      if (!ensure_two_identities(pending, half)) break;
      std::vector<Bundle> chosen(pending.begin(),
                                 pending.begin() + static_cast<std::ptrdiff_t>(half));
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(half));
      const Batch batch = materialize(dataset, chosen, half);

      // Shapes and labels were validated up front, so an invalid-input error
      // out of the loss stack here means the forward pass overflowed.
      std::pair<NetGradients, JointDiagnostics> step;
      try {
        step = joint_backward(params, batch, config.loss, config.mode,
                              config.scale_by_batch);
      } catch (const std::invalid_argument& e) {
        throw DivergenceError("train: numerical blow-up at iteration " +
                                  std::to_string(iteration) + " (" + e.what() + ")",
                              log);
      }
      auto& [grads, diag] = step;
      if (!std::isfinite(diag.total_loss)) {
        throw DivergenceError("train: loss became non-finite at iteration " +
                                  std::to_string(iteration),
                              log);
      }
      const double lr = config.lr.at(iteration);
      for (std::size_t m = 0; m < params.trunk.size(); ++m) {
        apply_update(params.trunk[m], velocity.trunk[m], grads.trunk[m], lr);
      }
      apply_update(params.classifier, velocity.classifier, grads.classifier, lr);
      if (!params_finite(params)) {
        throw DivergenceError("train: parameters became non-finite at iteration " +
                                  std::to_string(iteration),
                              log);
      }
      log.push_back(IterationRecord{iteration, diag.softmax_loss, diag.laplacian_raw,
                                    diag.total_loss, diag.active_negative_pairs,
                                    diag.active_triplets, diag.intra_inter_ratio});
      ++iteration;
    }
  }
  return TrainResult{std::move(params), std::move(log)};
}

void save_dataset_csv(const LabeledDataset& dataset,
                      const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset_csv: cannot open " + path.string());
  os << "# glemb synthetic identity dataset\n";
  os << "# identities=" << dataset.num_classes << " dim=" << dataset.dim
     << " samples=" << dataset.samples.size() << "\n";
  os << "id,view";
  for (std::size_t k = 0; k < dataset.dim; ++k) os << ",f" << k;
  os << "\n";
  for (const auto& s : dataset.samples) {
    os << s.label << "," << (s.view == kViewA ? 'A' : 'B');
    for (double x : s.input) os << "," << format_double(x);
    os << "\n";
  }
  if (!os) throw std::runtime_error("save_dataset_csv: write failed");
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset_csv: cannot open " + path.string());
  LabeledDataset dataset;
  std::string line;
  bool header_seen = false;
  int max_label = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    LabeledSample sample;
    if (!std::getline(ss, field, ',')) {
      throw std::runtime_error("load_dataset_csv: malformed row");
    }
    sample.label = std::stoi(field);
    if (!std::getline(ss, field, ',') || field.empty()) {
      throw std::runtime_error("load_dataset_csv: missing view tag");
    }
    if (field == "A") {
      sample.view = kViewA;
    } else if (field == "B") {
      sample.view = kViewB;
    } else {
      throw std::runtime_error("load_dataset_csv: view tag must be A or B");
    }
    while (std::getline(ss, field, ',')) {
      sample.input.push_back(std::stod(field));
    }
    max_label = std::max(max_label, sample.label);
    dataset.samples.push_back(std::move(sample));
  }
  if (dataset.samples.empty()) {
    throw std::runtime_error("load_dataset_csv: no samples in " + path.string());
  }
  dataset.dim = dataset.samples.front().input.size();
  dataset.num_classes = static_cast<std::size_t>(max_label + 1);
  dataset.validate();
  return dataset;
}

void write_train_log_csv(const std::vector<IterationRecord>& log,
                         const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_train_log_csv: cannot open " + path.string());
  os << "iteration,softmax_loss,laplacian_loss,total_loss,active_pairs,"
        "active_triplets,intra_inter_ratio\n";
  for (const auto& rec : log) {
    os << rec.iteration << "," << format_double(rec.softmax_loss) << ","
       << format_double(rec.laplacian_loss) << "," << format_double(rec.total_loss)
       << "," << rec.active_pairs << "," << rec.active_triplets << ","
       << format_double(rec.intra_inter_ratio) << "\n";
  }
  if (!os) throw std::runtime_error("write_train_log_csv: write failed");
}

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::softmax_only: return "softmax";
    case TrainMode::bgcl_only: return "bgcl";
    case TrainMode::bgtl_only: return "bgtl";
    case TrainMode::bgctl_only: return "bgctl";
    case TrainMode::joint: return "joint";
  }
  return "unknown";
}

TrainMode parse_mode(const std::string& name) {
  if (name == "softmax") return TrainMode::softmax_only;
  if (name == "bgcl") return TrainMode::bgcl_only;
  if (name == "bgtl") return TrainMode::bgtl_only;
  if (name == "bgctl") return TrainMode::bgctl_only;
  if (name == "joint") return TrainMode::joint;
  throw std::invalid_argument("unknown training mode: " + name);
}

}  // namespace glemb
