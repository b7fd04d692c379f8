#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "decompal/baselines.hpp"
#include "decompal/image_selection.hpp"
#include "decompal/region_space.hpp"
#include "oracles.hpp"

using namespace decompal;

namespace {

PredictionField uniform_probs(ImageShape shape, int classes) {
  return PredictionField::from_probabilities(
      shape, classes, std::vector<float>(shape.units() * classes, 1.0f / classes));
}

Candidate candidate(ImageId image, int x, double uncertainty, FeatureVector feature,
                    FeatureVector embedding = {}) {
  return Candidate{Region::square(image, 0, x, 1), uncertainty, std::move(feature),
                   std::move(embedding)};
}

void check_disjoint(const std::vector<Region>& regions) {
  for (std::size_t a = 0; a < regions.size(); ++a) {
    for (std::size_t b = a + 1; b < regions.size(); ++b) {
      if (regions[a].image == regions[b].image) CHECK_FALSE(regions_overlap(regions[a], regions[b]));
    }
  }
}

}  // namespace

TEST_CASE("entropy and least-confidence maps") {
  const auto uniform = uniform_probs(ImageShape::plane(2, 2), 4);
  for (double h : entropy_map(uniform)) CHECK(h == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  const auto onehot = PredictionField::from_probabilities(ImageShape::plane(1, 1), 3, {0, 1, 0});
  CHECK(entropy_map(onehot)[0] == 0.0);
  const auto two = PredictionField::from_probabilities(ImageShape::plane(1, 1), 2, {0.7f, 0.3f});
  CHECK(entropy_map(two)[0] == doctest::Approx(0.6109).epsilon(1e-4));

  auto labels_only = two;
  labels_only.full_probs.clear();
  CHECK_THROWS_AS(entropy_map(labels_only), ValidationError);
  labels_only.max_prob = {1.0f};
  CHECK(least_confidence_map(labels_only)[0] == 0.0);
  labels_only.max_prob = {0.25f};
  CHECK(least_confidence_map(labels_only)[0] == 0.75);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<float> u(0, 1);
  PredictionField r = labels_only;
  r.shape = ImageShape::plane(10, 10);
  r.pseudo_labels.assign(100, 0);
  r.max_prob.resize(100);
  for (auto& p : r.max_prob) p = u(gen);
  const auto lc = least_confidence_map(r);
  for (std::size_t j = 0; j < 100; ++j) CHECK(lc[j] + r.max_prob[j] == doctest::Approx(1.0));
}

TEST_CASE("uncertainty image selection follows the shared top-k and loop rule") {
  std::set<ImageId> visited;
  const std::vector<ImageScore> means{{0, 0.9}, {1, 0.1}};
  CHECK(select_top_images(means, visited, 1) == std::vector<ImageId>{0});
  std::set<ImageId> fresh;
  const std::vector<ImageScore> tied{{4, 0.5}, {2, 0.5}};
  CHECK(select_top_images(tied, fresh, 1) == std::vector<ImageId>{2});
}

TEST_CASE("uncert_select_regions spec examples") {
  const auto shape = ImageShape::plane(8, 8);
  std::vector<double> spike(64, 0.0);
  spike[4 * 8 + 4] = 1.0;
  const auto one = uncert_select_regions(spike, shape, 0, 3, 1, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].region == Region::square(0, 2, 2, 3));

  std::vector<double> two_peaks(64, 0.0);
  two_peaks[1 * 8 + 1] = 1.0;
  two_peaks[1 * 8 + 2] = 1.0;
  two_peaks[6 * 8 + 6] = 0.5;
  const auto picks = uncert_select_regions(two_peaks, shape, 0, 2, 2, {});
  REQUIRE(picks.size() == 2);
  CHECK(picks[0].region == Region::square(0, 0, 1, 2));
  CHECK(picks[1].region == Region::square(0, 5, 5, 2));

  const std::vector<double> flat(64, 0.25);
  const auto cascade = uncert_select_regions(flat, shape, 0, 2, 5, {});
  const std::vector<std::pair<int, int>> want{{0, 0}, {0, 2}, {0, 4}, {0, 6}, {2, 0}};
  for (std::size_t k = 0; k < want.size(); ++k) {
    CHECK(cascade[k].region == Region::square(0, want[k].first, want[k].second, 2));
  }
}

TEST_CASE("uncert_select_regions matches greedy exhaustive scans") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 80; ++trial) {
    const int depth = trial % 3 == 0 ? 2 + gen() % 2 : 1;
    const int h = 2 + gen() % 14, w = 2 + gen() % 14;
    const auto shape = depth == 1 ? ImageShape::plane(h, w) : ImageShape::volume(depth, h, w);
    const auto umap = oracle::dyadic_map(gen, shape.units());
    const int side = 1 + gen() % std::min(h, w);
    const int n = 1 + gen() % 5;
    const auto excluded = oracle::random_exclusions(gen, shape, 3);
    const auto got = uncert_select_regions(umap, shape, 0, side, n, excluded);
    const auto want = oracle::greedy_windows(umap, shape, side, n, excluded);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].region == Region::square(0, want[k].y, want[k].x, side, want[k].z));
      CHECK(got[k].uncertainty == doctest::Approx(want[k].value / (side * side)));
    }
  }
}

TEST_CASE("ROI uncertainty ranking") {
  const std::vector<double> u{0.2, 0.9, 0.9, 0.1};
  const Region taken = Region::roi(0, 1);
  const auto picks = uncert_select_regions(u, ImageShape::rois(4), 0, 1, 2, std::span(&taken, 1));
  REQUIRE(picks.size() == 2);
  CHECK(picks[0].region.roi_area().index == 2);
  CHECK(picks[1].region.roi_area().index == 0);
}

TEST_CASE("region features and gradient embeddings") {
  const auto pred = PredictionField::from_probabilities(
      ImageShape::plane(1, 2), 2, {0.75f, 0.25f, 0.25f, 0.75f});
  const auto f = region_feature(pred, Region::square(0, 0, 0, 1));
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(0.75));
  CHECK(f[2] == 1.0);
  CHECK(f[3] == 0.0);
  const auto e = gradient_embedding(pred, Region::square(0, 0, 0, 1));
  REQUIRE(e.size() == 8);
  // Discrepancy (0.75 - 1, 0.25 - 0) = (-0.25, 0.25).
  CHECK(e[0] == doctest::Approx(-0.25 * 0.75));
  CHECK(e[4] == doctest::Approx(0.25 * 0.75));

  const auto onehot = PredictionField::from_probabilities(ImageShape::plane(2, 2), 2,
                                                          {1, 0, 0, 1, 1, 0, 1, 0});
  for (double v : gradient_embedding(onehot, Region::square(0, 0, 0, 2))) CHECK(v == 0.0);
}

TEST_CASE("divers candidate pools") {
  const auto shape = ImageShape::plane(12, 12);
  const auto pred = uniform_probs(shape, 3);
  std::mt19937_64 gen(2);
  const auto umap = oracle::dyadic_map(gen, shape.units());
  const auto cands = image_candidates(pred, umap, 0, 3, 3, 2, {});
  CHECK(cands.size() <= 6);
  CHECK(cands.size() == 6);
  std::vector<Region> regions;
  for (const auto& c : cands) regions.push_back(c.region);
  check_disjoint(regions);

  std::vector<Region> crowded;
  for (int y = 0; y < 12; y += 3) {
    for (int x = 0; x < 9; x += 3) crowded.push_back(Region::square(0, y, x, 3));
  }
  const auto few = image_candidates(pred, umap, 0, 3, 3, 2, crowded);
  CHECK(few.size() == oracle::greedy_windows(umap, shape, 3, 6, crowded).size());
  CHECK(few.size() >= 3);
  CHECK(few.size() <= 4);

  const CandidateSource sources[] = {{0, &pred, umap, {}}, {1, &pred, umap, crowded}};
  const auto pooled = divers_candidate_pool(sources, 3, 3, 2);
  CHECK(pooled.size() == cands.size() + few.size());
}

TEST_CASE("divers_cluster_select") {
  Rng rng(1);
  std::vector<Candidate> pool{candidate(0, 0, 0.2, {0, 0}), candidate(0, 1, 0.6, {0, 0}),
                              candidate(0, 2, 0.9, {10, 10}), candidate(0, 3, 0.1, {10, 10})};
  const auto picks = divers_cluster_select(pool, 2, rng);
  REQUIRE(picks.size() == 2);
  std::set<int> xs{picks[0].sq().x, picks[1].sq().x};
  CHECK(xs == std::set<int>{1, 2});
  CHECK(divers_cluster_select(pool, 4, rng).size() == 4);
  CHECK(divers_cluster_select(pool, 3, rng).size() <= 3);
}

TEST_CASE("divers_coreset_select") {
  std::vector<Candidate> line{candidate(0, 0, 0.9, {0}), candidate(0, 1, 0.1, {1}),
                              candidate(0, 2, 0.2, {10})};
  CHECK(divers_coreset_select(line, 1) == std::vector<Region>{line[0].region});
  const auto two = divers_coreset_select(line, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[1] == line[2].region);
  CHECK(divers_coreset_select(line, 3).size() == 3);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Candidate> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(candidate(0, i, u(gen), {u(gen), u(gen), u(gen)}));
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t b = 1; b < pool.size(); ++b) {
    const auto picks = divers_coreset_select(pool, b);
    double worst = 0;
    for (const auto& c : pool) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : picks) {
        for (const auto& d : pool) {
          if (d.region == p) best = std::min(best, squared_distance(c.feature, d.feature));
        }
      }
      worst = std::max(worst, best);
    }
    CHECK(worst <= last);
    last = worst;
  }
}

TEST_CASE("badge_select") {
  std::vector<Candidate> zeros;
  for (int i = 0; i < 6; ++i) zeros.push_back(candidate(0, i, 0.5, {}, {0, 0, 0}));
  Rng rng(2);
  std::map<int, int> first;
  for (int s = 0; s < 600; ++s) {
    Rng r(s);
    const auto picks = badge_select(zeros, 2, r);
    REQUIRE(picks.size() == 2);
    CHECK(picks[0] != picks[1]);
    ++first[picks[0].sq().x];
  }
  CHECK(first.size() == 6);
  CHECK(badge_select(zeros, 6, rng).size() == 6);

  std::vector<Candidate> blobs;
  for (int i = 0; i < 5; ++i) blobs.push_back(candidate(0, i, 0.5, {}, {0.01 * i, 0}));
  for (int i = 0; i < 5; ++i) blobs.push_back(candidate(0, 5 + i, 0.5, {}, {10 + 0.01 * i, 10}));
  int split = 0;
  for (int s = 0; s < 1000; ++s) {
    Rng r(s);
    const auto picks = badge_select(blobs, 2, r);
    split += (picks[0].sq().x < 5) != (picks[1].sq().x < 5);
  }
  CHECK(split >= 950);
}

TEST_CASE("random region and image selection") {
  const auto shape = ImageShape::plane(4, 4);
  std::vector<Region> almost{Region::square(0, 0, 0, 4)};
  Rng rng(3);
  const auto shape6 = ImageShape::plane(4, 6);
  const std::vector<Region> left{Region::square(0, 0, 0, 4)};
  for (int i = 0; i < 20; ++i) {
    const auto r = rand_select_regions(shape6, 0, 2, 2, left, rng);
    REQUIRE_FALSE(r.empty());
    CHECK(r.size() <= 2);
    check_disjoint(r);
    for (const auto& reg : r) CHECK(reg.sq().x == 4);
  }
  CHECK(rand_select_regions(shape, 0, 2, 3, almost, rng).empty());

  const std::vector<ImageId> ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    std::set<ImageId> visited;
    ++counts[select_random_images(ids, visited, 1, rng)[0]];
  }
  for (int c : counts) CHECK(std::abs(c / double(draws) - 0.1) <= 0.02 * 0.1 * 10);

  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = ImageShape::plane(5 + gen() % 10, 5 + gen() % 10);
    const auto annotated = oracle::random_exclusions(gen, s, 3);
    const auto r = rand_select_regions(s, 0, 1 + gen() % 4, 1 + gen() % 6, annotated, rng);
    std::vector<Region> all = annotated;
    all.insert(all.end(), r.begin(), r.end());
    check_disjoint(all);
  }
}

TEST_CASE("feasible region sampling is uniform and falls back to enumeration") {
  const auto shape = ImageShape::plane(3, 3);
  const std::vector<Region> none;
  std::map<std::pair<int, int>, int> hits;
  Rng rng(6);
  for (int i = 0; i < 40000; ++i) {
    const auto r = sample_feasible_region(shape, 0, 2, none, rng);
    ++hits[{r->sq().y, r->sq().x}];
  }
  CHECK(hits.size() == 4);
  for (const auto& [k, v] : hits) CHECK(std::abs(v / 40000.0 - 0.25) < 0.02);
  CHECK(count_feasible_regions(shape, 2, none) == 4);
  const std::vector<Region> block{Region::square(0, 1, 1, 1)};
  CHECK(count_feasible_regions(shape, 2, block) == 0);
  CHECK_FALSE(sample_feasible_region(shape, 0, 2, block, rng, 5));
  const std::vector<Region> corner{Region::square(0, 0, 0, 1)};
  const auto forced = sample_feasible_region(ImageShape::plane(3, 3), 0, 2, corner, rng, 0);
  REQUIRE(forced);
  CHECK_FALSE(regions_overlap(*forced, corner[0]));
}
