#include "glemb/embed_net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "glemb/laplacian_loss.hpp"
#include "serial_util.hpp"

namespace glemb {

namespace {

constexpr char kCheckpointMagic[9] = "GLEMBNET";

Matrix affine(const DenseLayer& layer, const Matrix& x) {
  return mat_mul(layer.w, x);
}

void add_bias_columns(Matrix& m, const std::vector<double>& b) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) += b[r];
  }
}

std::vector<double> column_sum(const Matrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += m(r, c);
  }
  return out;
}

// Counts read off the unnormalized weight matrices: each -1 in S^v is one
// active negative pair, each positive S^t entry counts the triplets anchored
// on that pair.
std::size_t count_negative_entries(const WeightMatrix& w) {
  std::size_t count = 0;
  for (double x : w.s.data()) {
    if (x < 0.0) ++count;
  }
  return count;
}

std::size_t sum_positive_entries(const WeightMatrix& w) {
  double sum = 0.0;
  for (double x : w.s.data()) {
    if (x > 0.0) sum += x;
  }
  return static_cast<std::size_t>(std::llround(sum));
}

}  // namespace

void EmbedNetParams::validate() const {
  if (trunk.empty()) throw std::invalid_argument("EmbedNetParams: empty trunk");
  for (std::size_t m = 0; m < trunk.size(); ++m) {
    const auto& layer = trunk[m];
    if (layer.b.size() != layer.w.rows()) {
      throw std::invalid_argument("EmbedNetParams: bias length mismatch");
    }
    if (m > 0 && trunk[m - 1].w.rows() != layer.w.cols()) {
      throw std::invalid_argument("EmbedNetParams: layer dimensions do not chain");
    }
    if (!layer.w.all_finite()) {
      throw std::invalid_argument("EmbedNetParams: non-finite weight");
    }
    for (double x : layer.b) {
      if (!std::isfinite(x)) throw std::invalid_argument("EmbedNetParams: non-finite bias");
    }
  }
  if (embed_dim() < 2) {
    throw std::invalid_argument("EmbedNetParams: embedding dimension must be >= 2");
  }
  if (classifier.w.cols() != embed_dim() ||
      classifier.b.size() != classifier.w.rows()) {
    throw std::invalid_argument("EmbedNetParams: classifier shape mismatch");
  }
  if (!classifier.w.all_finite()) {
    throw std::invalid_argument("EmbedNetParams: non-finite classifier weight");
  }
}

bool EmbedNetParams::operator==(const EmbedNetParams& o) const {
  if (trunk.size() != o.trunk.size()) return false;
  for (std::size_t m = 0; m < trunk.size(); ++m) {
    if (!(trunk[m].w == o.trunk[m].w) || trunk[m].b != o.trunk[m].b) return false;
  }
  return classifier.w == o.classifier.w && classifier.b == o.classifier.b;
}

EmbedNetParams init_params(const std::vector<std::size_t>& layer_dims,
                           std::size_t num_classes, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("init_params: need at least input and embedding dims");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("init_params: need at least two classes");
  }
  std::mt19937_64 rng(seed);
  auto make_layer = [&rng](std::size_t out, std::size_t in) {
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-s, s);
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& x : layer.w.data()) x = dist(rng);
    return layer;
  };
  EmbedNetParams params;
  for (std::size_t m = 0; m + 1 < layer_dims.size(); ++m) {
    params.trunk.push_back(make_layer(layer_dims[m + 1], layer_dims[m]));
  }
  params.classifier = make_layer(num_classes, layer_dims.back());
  params.validate();
  return params;
}

ForwardResult forward(const EmbedNetParams& params, const Matrix& inputs) {
  if (inputs.rows() != params.input_dim()) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  ForwardResult res;
  Matrix x = inputs;
  const std::size_t last = params.trunk.size() - 1;
  for (std::size_t m = 0; m < params.trunk.size(); ++m) {
    res.layer_inputs.push_back(x);
    Matrix z = affine(params.trunk[m], x);
    res.preacts.push_back(z);
    if (m != last) {
      for (double& v : z.data()) v = std::max(v, 0.0);
    }
    add_bias_columns(z, params.trunk[m].b);
    x = std::move(z);
  }
  res.features = x;
  res.logits = affine(params.classifier, res.features);
  add_bias_columns(res.logits, params.classifier.b);
  return res;
}

SoftmaxResult softmax_loss_and_grad(const Matrix& logits, const Labels& labels) {
  const std::size_t c = logits.rows();
  const std::size_t n = logits.cols();
  if (labels.size() != n) {
    throw std::invalid_argument("softmax: label count mismatch");
  }
  SoftmaxResult res;
  res.grad = Matrix(c, n);
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const int label = labels[j];
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw std::invalid_argument("softmax: label out of range");
    }
    double maxv = logits(0, j);
    for (std::size_t i = 1; i < c; ++i) maxv = std::max(maxv, logits(i, j));
    double denom = 0.0;
    for (std::size_t i = 0; i < c; ++i) denom += std::exp(logits(i, j) - maxv);
    loss += std::log(denom) - (logits(static_cast<std::size_t>(label), j) - maxv);
    for (std::size_t i = 0; i < c; ++i) {
      double p = std::exp(logits(i, j) - maxv) / denom;
      if (i == static_cast<std::size_t>(label)) p -= 1.0;
      res.grad(i, j) = p / static_cast<double>(n);
    }
  }
  res.loss = loss / static_cast<double>(n);
  return res;
}

void LabeledDataset::validate() const {
  if (num_classes < 2) {
    throw std::invalid_argument("LabeledDataset: need at least two identities");
  }
  std::vector<std::set<int>> views_per_class(num_classes);
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes) {
      throw std::invalid_argument("LabeledDataset: label out of range");
    }
    if (s.input.size() != dim) {
      throw std::invalid_argument("LabeledDataset: sample dimension mismatch");
    }
    views_per_class[static_cast<std::size_t>(s.label)].insert(s.view);
    ++counts[static_cast<std::size_t>(s.label)];
  }
  for (std::size_t cls = 0; cls < num_classes; ++cls) {
    if (counts[cls] < 2 || views_per_class[cls].size() < 2) {
      throw std::invalid_argument(
          "LabeledDataset: every identity needs >= 2 samples across >= 2 views");
    }
  }
}

std::pair<NetGradients, JointDiagnostics> joint_backward(
    const EmbedNetParams& params, const Batch& batch, const LossConfig& config,
    TrainMode mode, bool scale_by_batch) {
  config.validate();
  const bool softmax_active = mode == TrainMode::softmax_only || mode == TrainMode::joint;
  const bool laplacian_active = mode != TrainMode::softmax_only;
  const double lap_weight = mode == TrainMode::joint ? config.lambda : 1.0;
  const std::size_t n = batch.inputs.cols();

  const ForwardResult fwd = forward(params, batch.inputs);
  const SoftmaxResult sm = softmax_loss_and_grad(fwd.logits, batch.labels);

  JointDiagnostics diag;
  diag.softmax_loss = sm.loss;

  // Distances drive both the weight matrices and the compactness diagnostics.
  const DistanceMatrix d2 = pairwise_sq_dist(fwd.features);
  {
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (batch.labels[i] == batch.labels[j]) {
          intra += std::sqrt(d2(i, j));
          ++n_intra;
        } else {
          inter += std::sqrt(d2(i, j));
          ++n_inter;
        }
      }
    }
    diag.intra_mean = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
    diag.inter_mean = n_inter ? inter / static_cast<double>(n_inter) : 0.0;
    diag.intra_inter_ratio =
        diag.inter_mean > 0.0 ? diag.intra_mean / diag.inter_mean : 0.0;
  }
  diag.active_negative_pairs =
      count_negative_entries(contrastive_weights(d2, batch.labels, config.alpha));
  diag.active_triplets =
      sum_positive_entries(triplet_weights(d2, batch.labels, config.tau));

  // Gradient with respect to the feature columns.
  Matrix d_features(fwd.features.rows(), n);
  if (softmax_active) {
    d_features = mat_mul(params.classifier.w.transposed(), sm.grad);
  }
  if (laplacian_active) {
    const WeightMatrix s = assemble_weights(d2, batch.labels, config, mode);
    const LaplacianMatrix lap = build_laplacian(s);
    diag.laplacian_raw = laplacian_loss(fwd.features, lap);
    const double scale =
        lap_weight / (scale_by_batch ? static_cast<double>(n) : 1.0);
    diag.laplacian_term = scale * diag.laplacian_raw;
    d_features = add_scaled(d_features, laplacian_grad(fwd.features, lap), scale);
  }
  diag.total_loss = (softmax_active ? sm.loss : 0.0) + diag.laplacian_term;

  NetGradients grads;
  grads.classifier.w = softmax_active
                           ? mat_mul(sm.grad, fwd.features.transposed())
                           : Matrix(params.classifier.w.rows(), params.classifier.w.cols());
  grads.classifier.b = softmax_active
                           ? column_sum(sm.grad)
                           : std::vector<double>(params.classifier.b.size(), 0.0);

  // Backprop through the trunk. The bias sits outside the activation, so its
  // gradient is the plain column sum of the downstream gradient.
  grads.trunk.resize(params.trunk.size());
  Matrix d_out = std::move(d_features);
  const std::size_t last = params.trunk.size() - 1;
  for (std::size_t m = params.trunk.size(); m-- > 0;) {
    grads.trunk[m].b = column_sum(d_out);
    Matrix dz = d_out;
    if (m != last) {
      const Matrix& z = fwd.preacts[m];
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (z.data()[i] <= 0.0) dz.data()[i] = 0.0;
      }
    }
    grads.trunk[m].w = mat_mul(dz, fwd.layer_inputs[m].transposed());
    if (m > 0) d_out = mat_mul(params.trunk[m].w.transposed(), dz);
  }
  return {std::move(grads), diag};
}

double joint_loss(const EmbedNetParams& params, const Batch& batch,
                  const LossConfig& config, TrainMode mode, bool scale_by_batch) {
  config.validate();
  const ForwardResult fwd = forward(params, batch.inputs);
  double total = 0.0;
  if (mode == TrainMode::softmax_only || mode == TrainMode::joint) {
    total += softmax_loss_and_grad(fwd.logits, batch.labels).loss;
  }
  if (mode != TrainMode::softmax_only) {
    const DistanceMatrix d2 = pairwise_sq_dist(fwd.features);
    const WeightMatrix s = assemble_weights(d2, batch.labels, config, mode);
    const double r = laplacian_loss(fwd.features, build_laplacian(s));
    const double weight = mode == TrainMode::joint ? config.lambda : 1.0;
    total += weight * r /
             (scale_by_batch ? static_cast<double>(batch.inputs.cols()) : 1.0);
  }
  return total;
}

void save_checkpoint(const EmbedNetParams& params,
                     const std::filesystem::path& path) {
  params.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  detail::write_magic(os, kCheckpointMagic);
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(params.trunk.size()));
  detail::write_u32(os, static_cast<std::uint32_t>(params.num_classes()));
  detail::write_u32(os, static_cast<std::uint32_t>(params.input_dim()));
  for (const auto& layer : params.trunk) {
    detail::write_u32(os, static_cast<std::uint32_t>(layer.w.rows()));
  }
  auto write_layer = [&os](const DenseLayer& layer) {
    for (double x : layer.w.data()) detail::write_f64(os, x);
    for (double x : layer.b) detail::write_f64(os, x);
  };
  for (const auto& layer : params.trunk) write_layer(layer);
  write_layer(params.classifier);
  if (!os) throw std::runtime_error("save_checkpoint: write failed");
}

EmbedNetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  detail::expect_magic(is, kCheckpointMagic, "load_checkpoint");
  const std::uint32_t version = detail::read_u32(is);
  if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  const std::uint32_t num_layers = detail::read_u32(is);
  const std::uint32_t num_classes = detail::read_u32(is);
  std::vector<std::size_t> dims;
  dims.push_back(detail::read_u32(is));
  for (std::uint32_t m = 0; m < num_layers; ++m) dims.push_back(detail::read_u32(is));
  auto read_layer = [&is](std::size_t out, std::size_t in) {
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& x : layer.w.data()) x = detail::read_f64(is);
    for (double& x : layer.b) x = detail::read_f64(is);
    return layer;
  };
  EmbedNetParams params;
  for (std::uint32_t m = 0; m < num_layers; ++m) {
    params.trunk.push_back(read_layer(dims[m + 1], dims[m]));
  }
  params.classifier = read_layer(num_classes, dims.back());
  params.validate();
  return params;
}

}  // namespace glemb
