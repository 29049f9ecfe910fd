#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "glemb/embed_net.hpp"
#include "glemb/laplacian_loss.hpp"
#include "glemb/oracles.hpp"
#include "glemb/retrieval_eval.hpp"
#include "glemb/trainer.hpp"

namespace glemb::cli {

namespace {

using nlohmann::json;

void ensure_out_dir(const RunConfig& config) {
  if (config.out_dir.empty()) {
    throw std::runtime_error("an output directory is required (--out DIR)");
  }
  std::filesystem::create_directories(config.out_dir);
}

void echo_resolved_config(const RunConfig& config) {
  std::ofstream os(config.out_dir / "resolved_config.txt");
  if (!os) throw std::runtime_error("cannot write resolved_config.txt");
  os << render_resolved_config(config);
}

std::vector<RetrievalEntry> embed_dataset(const EmbedNetParams& params,
                                          const LabeledDataset& dataset) {
  Matrix inputs(dataset.dim, dataset.samples.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    inputs.set_column(i, dataset.samples[i].input);
  }
  const ForwardResult fwd = forward(params, inputs);
  std::vector<RetrievalEntry> pool;
  pool.reserve(dataset.samples.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    pool.push_back(RetrievalEntry{fwd.features.column(i),
                                  dataset.samples[i].label,
                                  dataset.samples[i].view});
  }
  return pool;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// check command: randomized property suite over the loss stack.

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

// Plain loop for sum_ij S_ij ||x_i - x_j||^2, kept separate from the library
// path on purpose.
double weighted_distance_sum(const Matrix& s, const Matrix& h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.cols(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < h.rows(); ++k) {
        const double diff = h(k, i) - h(k, j);
        d2 += diff * diff;
      }
      acc += s(i, j) * d2;
    }
  }
  return acc;
}

PropertyResult prop_laplacian_identity(std::mt19937_64& rng, std::size_t instances) {
  std::uniform_int_distribution<std::size_t> n_dist(2, 16);
  std::uniform_int_distribution<std::size_t> d_dist(1, 8);
  double worst = 0.0;
  for (std::size_t it = 0; it < instances; ++it) {
    const std::size_t n = n_dist(rng);
    const std::size_t d = d_dist(rng);
    const Matrix h = random_matrix(rng, d, n, -1.0, 1.0);
    Matrix s = random_matrix(rng, n, n, -2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) s(i, i) = 0.0;
    const double naive = weighted_distance_sum(s, h);
    const WeightMatrix w{s, WeightKind::combined, false};
    const double trace_form = laplacian_loss(h, build_laplacian(w));
    worst = std::max(worst,
                     std::abs(naive - trace_form) / (1.0 + std::abs(trace_form)));
  }
  return {"laplacian-identity", worst < 1e-9,
          "max_rel_residual=" + sci(worst) + " (" + std::to_string(instances) +
              " instances)"};
}

PropertyResult prop_laplacian_structure(std::mt19937_64& rng, std::size_t instances,
                                        const LossConfig& loss) {
  double worst_row_sum = 0.0;
  double worst_invariance = 0.0;
  bool symmetric = true;
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (std::size_t it = 0; it < instances; ++it) {
    const auto batch = oracles::random_batch(rng);
    const auto d2 = pairwise_sq_dist(batch.h);
    const auto lap = build_laplacian(
        assemble_weights(d2, batch.labels, loss, TrainMode::joint));
    const std::size_t n = lap.size();
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row += lap.psi(i, j);
        if (lap.psi(i, j) != lap.psi(j, i)) symmetric = false;
      }
      worst_row_sum = std::max(worst_row_sum, std::abs(row));
    }
    // translating every column must leave loss and gradient untouched
    Matrix shifted = batch.h;
    std::vector<double> t(batch.h.rows());
    for (double& x : t) x = shift(rng);
    for (std::size_t c = 0; c < shifted.cols(); ++c) {
      for (std::size_t r = 0; r < shifted.rows(); ++r) shifted(r, c) += t[r];
    }
    const auto lap2 = build_laplacian(assemble_weights(
        pairwise_sq_dist(shifted), batch.labels, loss, TrainMode::joint));
    const double base_loss = laplacian_loss(batch.h, lap);
    const double moved_loss = laplacian_loss(shifted, lap2);
    worst_invariance =
        std::max(worst_invariance,
                 std::abs(moved_loss - base_loss) / (1.0 + std::abs(base_loss)));
    const Matrix g1 = laplacian_grad(batch.h, lap);
    const Matrix g2 = laplacian_grad(shifted, lap2);
    for (std::size_t i = 0; i < g1.size(); ++i) {
      worst_invariance = std::max(
          worst_invariance, std::abs(g1.data()[i] - g2.data()[i]));
    }
  }
  const bool pass = symmetric && worst_row_sum < 1e-12 && worst_invariance < 1e-9;
  return {"laplacian-structure", pass,
          std::string("symmetric=") + (symmetric ? "yes" : "NO") +
              " max_row_sum=" + sci(worst_row_sum) +
              " max_translation_drift=" + sci(worst_invariance)};
}

PropertyResult prop_contrastive_equivalence(std::mt19937_64& rng,
                                            std::size_t instances, double alpha) {
  double worst = 0.0;
  for (std::size_t it = 0; it < instances; ++it) {
    const auto batch = oracles::random_batch(rng);
    worst = std::max(
        worst,
        oracles::check_contrastive_equivalence(batch.h, batch.labels, alpha).residual);
  }
  return {"contrastive-equivalence", worst < 1e-9,
          "max_residual=" + sci(worst) + " (" + std::to_string(instances) +
              " batches)"};
}

// The optional fault flips the sign of the repulsive triplet entries, exactly
// the mutation the equivalence oracle must catch.
oracles::EquivalenceReport triplet_equivalence_report(const Matrix& h,
                                                      const Labels& labels,
                                                      double tau,
                                                      bool flip_negative_sign) {
  if (!flip_negative_sign) {
    return oracles::check_triplet_equivalence(h, labels, tau);
  }
  oracles::EquivalenceReport rep;
  rep.naive_value = oracles::naive_batch_triplet(h, labels, tau);
  const auto d2 = pairwise_sq_dist(h);
  WeightMatrix s = triplet_weights(d2, labels, tau);
  for (double& x : s.s.data()) {
    if (x < 0.0) x = -x;
  }
  const auto constants = oracles::hinge_constants(d2, labels, 1.0, tau);
  rep.laplacian_value = laplacian_loss(h, build_laplacian(s));
  rep.hinge_constant = constants.triplet_constant;
  rep.active_count = constants.active_triplets;
  rep.residual =
      std::abs(rep.naive_value - (rep.laplacian_value + rep.hinge_constant));
  return rep;
}

PropertyResult prop_triplet_equivalence(std::mt19937_64& rng, std::size_t instances,
                                        double tau, bool inject_fault) {
  double worst = 0.0;
  for (std::size_t it = 0; it < instances; ++it) {
    const auto batch = oracles::random_batch(rng);
    worst = std::max(worst, triplet_equivalence_report(batch.h, batch.labels, tau,
                                                       inject_fault)
                                .residual);
  }
  return {"triplet-equivalence", worst < 1e-9,
          "max_residual=" + sci(worst) + " (" + std::to_string(instances) +
              " batches)" + (inject_fault ? " [fault injected]" : "")};
}

PropertyResult prop_combined_equivalence(std::mt19937_64& rng, std::size_t instances,
                                         const LossConfig& loss) {
  double worst = 0.0;
  for (std::size_t it = 0; it < instances; ++it) {
    const auto batch = oracles::random_batch(rng);
    worst = std::max(worst,
                     oracles::check_combined_equivalence(
                         batch.h, batch.labels, loss.alpha, loss.tau, loss.beta)
                         .residual);
  }
  return {"combined-equivalence", worst < 1e-9,
          "max_residual=" + sci(worst) + " (" + std::to_string(instances) +
              " batches)"};
}

// Coincident batch of `classes` identities with `per_class` samples each.
std::pair<Matrix, Labels> coincident_batch(std::size_t classes,
                                           std::size_t per_class) {
  const std::size_t n = classes * per_class;
  Matrix h(3, n);
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i / per_class);
    for (std::size_t r = 0; r < 3; ++r) h(r, i) = 0.5;
  }
  return {h, labels};
}

PropertyResult prop_triplet_count(double tau) {
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<std::size_t, std::size_t>> cases = {
      {3, 2}, {2, 2}, {2, 3}, {4, 3}};
  for (const auto& [classes, per_class] : cases) {
    const auto [h, labels] = coincident_batch(classes, per_class);
    const std::size_t count =
        oracles::count_active_triplets(pairwise_sq_dist(h), labels, tau);
    const std::size_t expected =
        classes * per_class * (per_class - 1) * (classes - 1) * per_class;
    if (count != expected) pass = false;
    if (classes == 3 && per_class == 2) {
      detail = "3x2_coincident=" + std::to_string(count) + " (expect 24)";
      if (count != 24) pass = false;
    }
  }
  return {"triplet-count", pass, detail};
}

PropertyResult prop_gradient_features(std::mt19937_64& rng, std::size_t batches,
                                      const LossConfig& loss) {
  LossConfig cfg = loss;
  cfg.normalize_rows = true;
  double worst = 0.0;
  for (std::size_t it = 0; it < batches; ++it) {
    const auto batch =
        oracles::random_hinge_safe_batch(rng, cfg.alpha, cfg.tau, 1e-3);
    const Labels labels = batch.labels;
    auto objective = [&](const Matrix& h) {
      const auto d2 = pairwise_sq_dist(h);
      const auto s = assemble_weights(d2, labels, cfg, TrainMode::bgctl_only);
      return laplacian_loss(h, build_laplacian(s));
    };
    const auto lap = build_laplacian(assemble_weights(
        pairwise_sq_dist(batch.h), labels, cfg, TrainMode::bgctl_only));
    const Matrix analytic = laplacian_grad(batch.h, lap);
    const Matrix fd = oracles::finite_diff_grad(objective, batch.h, 1e-6);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double err = std::abs(fd.data()[i] - analytic.data()[i]) /
                         std::max(1.0, std::abs(analytic.data()[i]));
      worst = std::max(worst, err);
    }
  }
  return {"gradient-features", worst < 1e-5,
          "max_rel_err=" + sci(worst) + " (" + std::to_string(batches) +
              " batches)"};
}

double min_abs_hidden_preact(const EmbedNetParams& params,
                             const ForwardResult& fwd) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m + 1 < params.trunk.size(); ++m) {
    for (double z : fwd.preacts[m].data()) {
      margin = std::min(margin, std::abs(z));
    }
  }
  return margin;
}

PropertyResult prop_gradient_params(std::mt19937_64& rng, std::size_t batches,
                                    const LossConfig& loss) {
  LossConfig cfg = loss;
  cfg.normalize_rows = true;
  constexpr double kEps = 1e-6;
  constexpr int kClasses = 4;
  double worst = 0.0;
  std::uniform_int_distribution<std::uint64_t> seed_dist;
  for (std::size_t it = 0; it < batches; ++it) {
    // resample until hinge arguments and hidden pre-activations are clear of
    // their kinks, so the finite differences see a smooth function
    Batch batch;
    EmbedNetParams params;
    for (;;) {
      const auto rb = oracles::random_hinge_safe_batch(rng, cfg.alpha, cfg.tau, 1e-2);
      if (rb.h.rows() > 6) continue;  // keep the FD net small
      params = init_params({rb.h.rows(), 5, 3}, kClasses, seed_dist(rng));
      batch = Batch{rb.h, rb.labels};
      const auto fwd = forward(params, batch.inputs);
      if (min_abs_hidden_preact(params, fwd) < 1e-3) continue;
      if (oracles::min_hinge_margin(fwd.features, batch.labels, cfg.alpha,
                                    cfg.tau) < 1e-3) {
        continue;
      }
      break;
    }
    const auto [grads, diag] =
        joint_backward(params, batch, cfg, TrainMode::joint, true);
    auto objective = [&](EmbedNetParams& p) {
      return joint_loss(p, batch, cfg, TrainMode::joint, true);
    };
    auto check_entry = [&](double& slot, double analytic) {
      const double saved = slot;
      slot = saved + kEps;
      const double up = objective(params);
      slot = saved - kEps;
      const double down = objective(params);
      slot = saved;
      const double fd = (up - down) / (2.0 * kEps);
      worst = std::max(worst,
                       std::abs(fd - analytic) / std::max(1.0, std::abs(analytic)));
    };
    for (std::size_t m = 0; m < params.trunk.size(); ++m) {
      for (std::size_t i = 0; i < params.trunk[m].w.size(); ++i) {
        check_entry(params.trunk[m].w.data()[i], grads.trunk[m].w.data()[i]);
      }
      for (std::size_t i = 0; i < params.trunk[m].b.size(); ++i) {
        check_entry(params.trunk[m].b[i], grads.trunk[m].b[i]);
      }
    }
    for (std::size_t i = 0; i < params.classifier.w.size(); ++i) {
      check_entry(params.classifier.w.data()[i], grads.classifier.w.data()[i]);
    }
    for (std::size_t i = 0; i < params.classifier.b.size(); ++i) {
      check_entry(params.classifier.b[i], grads.classifier.b[i]);
    }
  }
  return {"gradient-params", worst < 1e-4,
          "max_rel_err=" + sci(worst) + " (" + std::to_string(batches) +
              " nets)"};
}

}  // namespace

int cmd_gen_data(const RunConfig& config) {
  if (!config.synth_seed_set) {
    throw std::runtime_error("gen-data requires a seed (--seed or [synth] seed)");
  }
  ensure_out_dir(config);
  const LabeledDataset dataset = gen_synth(config.synth);
  const auto path = config.out_dir / "dataset.csv";
  save_dataset_csv(dataset, path);
  echo_resolved_config(config);
  std::cout << "wrote " << path.string() << ": identities=" << dataset.num_classes
            << " samples=" << dataset.samples.size() << " dim=" << dataset.dim
            << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config) {
  if (!config.train_seed_set) {
    throw std::runtime_error("train requires a seed (--seed or [train] seed)");
  }
  if (config.data_path.empty()) {
    throw std::runtime_error("train requires --data DATASET.csv");
  }
  ensure_out_dir(config);
  const LabeledDataset dataset = load_dataset_csv(config.data_path);
  echo_resolved_config(config);

  TrainResult result;
  try {
    result = train(dataset, config.train);
  } catch (const DivergenceError& e) {
    write_train_log_csv(e.log, config.out_dir / "train_log.csv");
    std::cerr << "train: diverged: " << e.what() << " (partial log retained)\n";
    return kExitDiverged;
  }

  save_checkpoint(result.params, config.out_dir / "checkpoint.bin");
  write_train_log_csv(result.log, config.out_dir / "train_log.csv");

  const DistanceStats stats = distance_stats(embed_dataset(result.params, dataset));
  json summary;
  summary["mode"] = mode_name(config.train.mode);
  summary["epochs"] = config.train.epochs;
  summary["iterations"] = result.log.size();
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    summary["final_softmax_loss"] = last.softmax_loss;
    summary["final_laplacian_loss"] = last.laplacian_loss;
    summary["final_total_loss"] = last.total_loss;
  }
  summary["dataset_intra_mean"] = stats.intra_mean;
  summary["dataset_inter_mean"] = stats.inter_mean;
  summary["dataset_intra_inter_ratio"] = stats.ratio;
  std::ofstream os(config.out_dir / "summary.json");
  os << summary.dump(2) << "\n";

  std::cout << "trained mode=" << mode_name(config.train.mode)
            << " iterations=" << result.log.size()
            << " final_total_loss="
            << (result.log.empty() ? 0.0 : result.log.back().total_loss)
            << " intra_inter_ratio=" << stats.ratio << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& config) {
  ensure_out_dir(config);
  std::vector<RetrievalEntry> pool;
  if (!config.features_path.empty()) {
    // sniff the binary magic, fall back to CSV
    std::ifstream probe(config.features_path, std::ios::binary);
    char magic[8] = {};
    probe.read(magic, 8);
    if (probe.gcount() == 8 && std::string(magic, 8) == "GLEMBFEA") {
      pool = load_features_binary(config.features_path);
    } else {
      pool = load_features_csv(config.features_path);
    }
  } else {
    if (config.data_path.empty() || config.checkpoint_path.empty()) {
      throw std::runtime_error(
          "eval requires --features FILE or both --data and --checkpoint");
    }
    const LabeledDataset dataset = load_dataset_csv(config.data_path);
    const EmbedNetParams params = load_checkpoint(config.checkpoint_path);
    pool = embed_dataset(params, dataset);
  }
  echo_resolved_config(config);

  const MetricsReport report =
      evaluate_retrieval(pool, config.eval.trials, config.train.seed);

  {
    std::ofstream os(config.out_dir / "cmc.csv");
    os << "rank,accuracy\n";
    char buf[64];
    for (std::size_t r = 0; r < report.cmc.size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", r + 1, report.cmc[r]);
      os << buf;
    }
  }
  json out;
  out["rank1"] = report.cmc_at(1);
  out["rank5"] = report.cmc_at(5);
  out["rank10"] = report.cmc_at(10);
  out["rank20"] = report.cmc_at(20);
  out["mAP"] = report.map;
  out["num_trials"] = report.num_trials;
  out["num_probes"] = report.num_probes;
  out["gallery_size"] = report.gallery_size;
  out["skipped_probes"] = report.skipped_probes;
  std::ofstream os(config.out_dir / "report.json");
  os << out.dump(2) << "\n";

  if (config.dump_features) {
    save_features_csv(pool, config.out_dir / "features.csv");
    save_features_binary(pool, config.out_dir / "features.bin");
  }
  std::cout << "eval trials=" << report.num_trials << " rank1=" << report.cmc_at(1)
            << " rank5=" << report.cmc_at(5) << " rank10=" << report.cmc_at(10)
            << " rank20=" << report.cmc_at(20) << " mAP=" << report.map << "\n";
  return kExitOk;
}

int cmd_check(const RunConfig& config) {
  if (!config.check.inject_fault.empty() &&
      config.check.inject_fault != "triplet-sign") {
    throw std::runtime_error("unknown fault '" + config.check.inject_fault +
                             "' (supported: triplet-sign)");
  }
  const bool fault = config.check.inject_fault == "triplet-sign";
  const LossConfig& loss = config.train.loss;
  const std::size_t instances = config.check.equivalence_instances;

  std::vector<PropertyResult> results;
  {
    std::mt19937_64 rng(config.check.seed);
    results.push_back(prop_laplacian_identity(rng, instances));
  }
  {
    std::mt19937_64 rng(config.check.seed + 1);
    results.push_back(prop_laplacian_structure(rng, instances, loss));
  }
  {
    std::mt19937_64 rng(config.check.seed + 2);
    results.push_back(prop_contrastive_equivalence(rng, instances, loss.alpha));
  }
  {
    std::mt19937_64 rng(config.check.seed + 3);
    results.push_back(prop_triplet_equivalence(rng, instances, loss.tau, fault));
  }
  {
    std::mt19937_64 rng(config.check.seed + 4);
    results.push_back(prop_combined_equivalence(rng, instances, loss));
  }
  results.push_back(prop_triplet_count(loss.tau));
  {
    std::mt19937_64 rng(config.check.seed + 5);
    results.push_back(
        prop_gradient_features(rng, config.check.gradient_batches, loss));
  }
  {
    std::mt19937_64 rng(config.check.seed + 6);
    results.push_back(
        prop_gradient_params(rng, config.check.gradient_batches, loss));
  }

  if (!config.out_dir.empty()) {
    ensure_out_dir(config);
    echo_resolved_config(config);
  }
  std::size_t passed = 0;
  for (const auto& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.detail
              << "\n";
    if (r.pass) ++passed;
  }
  std::cout << "check: " << passed << "/" << results.size()
            << " properties passed\n";
  return passed == results.size() ? kExitOk : kExitCheckFailed;
}

}  // namespace glemb::cli
