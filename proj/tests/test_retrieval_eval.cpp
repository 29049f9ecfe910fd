#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "glemb/retrieval_eval.hpp"
#include "support/retrieval_oracle.hpp"
#include "support/test_util.hpp"

using namespace glemb;

namespace {

RetrievalEntry entry(std::vector<double> f, int id, int view = 0) {
  return RetrievalEntry{std::move(f), id, view};
}

// random pool: `ids` identities, view-A and view-B samples per identity
std::vector<RetrievalEntry> random_pool(std::mt19937_64& rng, int ids,
                                        std::size_t per_view, std::size_t dim) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<RetrievalEntry> pool;
  for (int id = 0; id < ids; ++id) {
    for (int view = 0; view < 2; ++view) {
      for (std::size_t s = 0; s < per_view; ++s) {
        std::vector<double> f(dim);
        for (double& x : f) x = coord(rng);
        pool.push_back(entry(std::move(f), id, view));
      }
    }
  }
  return pool;
}

}  // namespace

TEST_CASE("rank_gallery basics") {
  const std::vector<double> probe{0.0, 0.0};
  std::vector<RetrievalEntry> gallery;
  gallery.push_back(entry({2.0, 0.0}, 0));
  gallery.push_back(entry({1.0, 0.0}, 1));
  gallery.push_back(entry({3.0, 0.0}, 2));
  const auto order = rank_gallery(probe, gallery);
  CHECK(order == std::vector<std::size_t>{1, 0, 2});

  // exact copy ranks first
  gallery.push_back(entry({0.0, 0.0}, 3));
  CHECK(rank_gallery(probe, gallery).front() == 3);

  // single-element gallery
  const std::vector<RetrievalEntry> one{entry({5.0, 5.0}, 9)};
  CHECK(rank_gallery(probe, one) == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(rank_gallery(probe, {}), std::invalid_argument);
}

TEST_CASE("rank_gallery breaks distance ties by gallery index") {
  const std::vector<double> probe{0.0};
  std::vector<RetrievalEntry> gallery;
  gallery.push_back(entry({1.0}, 0));
  gallery.push_back(entry({-1.0}, 1));
  gallery.push_back(entry({1.0}, 2));
  CHECK(rank_gallery(probe, gallery) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("cmc: perfect features hit at rank one") {
  RetrievalSplit split;
  for (int id = 0; id < 4; ++id) {
    split.gallery.push_back(entry({double(id), double(id)}, id, 1));
    split.probes.push_back(entry({double(id), double(id)}, id, 0));
  }
  const auto curve = cmc_curve({split}, 4);
  CHECK(curve[0] == 1.0);
  CHECK(curve[3] == 1.0);
}

TEST_CASE("cmc: constructed adversarial ranking") {
  // every probe lands nearest to the wrong identity, correct at rank 2
  RetrievalSplit split;
  split.gallery.push_back(entry({0.0}, 0, 1));
  split.gallery.push_back(entry({10.0}, 1, 1));
  split.probes.push_back(entry({9.0}, 0, 0));   // closer to id 1
  split.probes.push_back(entry({1.0}, 1, 0));   // closer to id 0
  const auto curve = cmc_curve({split}, 2);
  CHECK(curve[0] == 0.0);
  CHECK(curve[1] == 1.0);
}

TEST_CASE("cmc rejects probes whose identity is missing") {
  RetrievalSplit split;
  split.gallery.push_back(entry({0.0}, 0, 1));
  split.probes.push_back(entry({0.0}, 7, 0));
  CHECK_THROWS_AS(cmc_curve({split}, 1), std::invalid_argument);
}

TEST_CASE("single-shot gallery rejects duplicate identities") {
  RetrievalSplit split;
  split.gallery.push_back(entry({0.0}, 0, 1));
  split.gallery.push_back(entry({1.0}, 0, 1));
  split.single_shot = true;
  CHECK_THROWS_AS(split.validate(), std::invalid_argument);
  split.single_shot = false;
  CHECK_NOTHROW(split.validate());
}

TEST_CASE("mAP hand cases") {
  std::vector<RetrievalEntry> gallery;
  gallery.push_back(entry({0.0}, 0, 1));
  gallery.push_back(entry({1.0}, 1, 1));

  // single true match at rank 1
  auto res = mean_average_precision({entry({0.1}, 0)}, gallery);
  CHECK(res.map == 1.0);
  // single true match at rank 2 of 2
  res = mean_average_precision({entry({0.9}, 0)}, gallery);
  CHECK(res.map == 0.5);

  // two true matches at ranks 1 and 3
  std::vector<RetrievalEntry> multi;
  multi.push_back(entry({0.0}, 0, 1));
  multi.push_back(entry({1.0}, 1, 1));
  multi.push_back(entry({2.0}, 0, 1));
  res = mean_average_precision({entry({0.0}, 0)}, multi);
  CHECK(res.map == (1.0 / 1.0 + 2.0 / 3.0) / 2.0);
  CHECK(std::abs(res.map - 5.0 / 6.0) < 1e-15);

  // a probe with no true match is skipped and counted
  res = mean_average_precision({entry({0.0}, 42)}, gallery);
  CHECK(res.map == 0.0);
  CHECK(res.skipped_probes == 1);
  CHECK(res.evaluated_probes == 0);
}

TEST_CASE("cmc is monotone and saturates at the gallery size") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto pool = random_pool(rng, 6, 2, 4);
    std::mt19937_64 split_rng(rep);
    const auto split = make_single_shot_split(pool, split_rng);
    const auto curve = cmc_curve({split}, split.gallery.size());
    for (std::size_t r = 1; r < curve.size(); ++r) CHECK(curve[r] >= curve[r - 1]);
    CHECK(curve.back() == 1.0);
  }
}

TEST_CASE("ranking is invariant under positive feature scaling") {
  std::mt19937_64 rng(5);
  const auto pool = random_pool(rng, 5, 2, 4);
  std::vector<RetrievalEntry> scaled = pool;
  for (auto& e : scaled) {
    for (double& x : e.feature) x *= 37.5;
  }
  std::mt19937_64 r1(9), r2(9);
  const auto s1 = make_single_shot_split(pool, r1);
  const auto s2 = make_single_shot_split(scaled, r2);
  for (std::size_t p = 0; p < s1.probes.size(); ++p) {
    CHECK(rank_gallery(s1.probes[p].feature, s1.gallery) ==
          rank_gallery(s2.probes[p].feature, s2.gallery));
  }
  CHECK(cmc_curve({s1}, s1.gallery.size()) == cmc_curve({s2}, s2.gallery.size()));
}

TEST_CASE("library CMC and mAP match the brute-force oracle exactly") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ids_dist(2, 10);
  for (int rep = 0; rep < 50; ++rep) {
    const int ids = ids_dist(rng);
    const auto pool = random_pool(rng, ids, 2, 3);
    std::mt19937_64 split_rng(static_cast<std::uint64_t>(rep) + 100);
    const auto split = make_single_shot_split(pool, split_rng);
    const auto curve = cmc_curve({split}, split.gallery.size());
    const auto oracle = testsupport::oracle_cmc({split}, split.gallery.size());
    REQUIRE(curve.size() == oracle.size());
    for (std::size_t r = 0; r < curve.size(); ++r) CHECK(curve[r] == oracle[r]);

    std::vector<RetrievalEntry> probes, gallery;
    for (const auto& e : pool) (e.view == 0 ? probes : gallery).push_back(e);
    const auto got = mean_average_precision(probes, gallery);
    CHECK(got.map == testsupport::oracle_map(probes, gallery));
  }
}

TEST_CASE("mAP is one exactly when true matches lead every ranking") {
  std::vector<RetrievalEntry> gallery;
  gallery.push_back(entry({0.0, 0.0}, 0, 1));
  gallery.push_back(entry({0.1, 0.0}, 0, 1));
  gallery.push_back(entry({9.0, 9.0}, 1, 1));
  gallery.push_back(entry({9.1, 9.0}, 1, 1));
  const std::vector<RetrievalEntry> probes{entry({0.0, 0.05}, 0),
                                           entry({9.0, 9.05}, 1)};
  CHECK(mean_average_precision(probes, gallery).map == 1.0);
}

TEST_CASE("make_single_shot_split enrolls each identity once from view B") {
  std::mt19937_64 rng(11);
  const auto pool = random_pool(rng, 7, 3, 4);
  std::mt19937_64 split_rng(13);
  const auto split = make_single_shot_split(pool, split_rng);
  CHECK(split.gallery.size() == 7);
  for (const auto& g : split.gallery) CHECK(g.view == 1);
  for (const auto& p : split.probes) CHECK(p.view == 0);
  CHECK(split.probes.size() == 7 * 3);
  CHECK_NOTHROW(split.validate());
}

TEST_CASE("evaluate_retrieval aggregates trials deterministically") {
  std::mt19937_64 rng(17);
  const auto pool = random_pool(rng, 6, 2, 4);
  const auto a = evaluate_retrieval(pool, 5, 99);
  const auto b = evaluate_retrieval(pool, 5, 99);
  CHECK(a.cmc == b.cmc);
  CHECK(a.map == b.map);
  CHECK(a.num_trials == 5);
  CHECK(a.gallery_size == 6);
  CHECK(a.cmc_at(1) == a.cmc[0]);
  CHECK(a.cmc_at(100) == a.cmc.back());
}

TEST_CASE("distance stats separate tight clusters from spread ones") {
  std::vector<RetrievalEntry> pool;
  pool.push_back(entry({0.0, 0.0}, 0));
  pool.push_back(entry({0.1, 0.0}, 0));
  pool.push_back(entry({5.0, 5.0}, 1));
  pool.push_back(entry({5.1, 5.0}, 1));
  const auto stats = distance_stats(pool);
  CHECK(stats.intra_mean == doctest::Approx(0.1));
  CHECK(stats.ratio < 0.05);
}

TEST_CASE("feature files round trip in both formats") {
  std::mt19937_64 rng(19);
  const auto pool = random_pool(rng, 4, 2, 5);
  testsupport::TempDir dir;

  save_features_csv(pool, dir / "f.csv");
  const auto csv = load_features_csv(dir / "f.csv");
  REQUIRE(csv.size() == pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(csv[i].identity == pool[i].identity);
    CHECK(csv[i].view == pool[i].view);
    CHECK(csv[i].feature == pool[i].feature);
  }

  save_features_binary(pool, dir / "f.bin");
  const auto bin = load_features_binary(dir / "f.bin");
  REQUIRE(bin.size() == pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(bin[i].feature == pool[i].feature);
  }
  // byte-stable rewrite
  save_features_binary(bin, dir / "f2.bin");
  CHECK(testsupport::read_file(dir / "f.bin") == testsupport::read_file(dir / "f2.bin"));

  CHECK_THROWS_AS(load_features_binary(dir / "f.csv"), std::runtime_error);
}
