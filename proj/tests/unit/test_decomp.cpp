#include <doctest.h>

#include <map>
#include <random>

#include "decompal/decomp.hpp"
#include "decompal/region_space.hpp"
#include "oracles.hpp"

using namespace decompal;

namespace {

PredictionField labels_only(ImageShape shape, int classes, std::vector<ClassId> labels,
                            std::vector<float> max_prob = {}) {
  PredictionField p;
  p.shape = shape;
  p.num_classes = classes;
  p.pseudo_labels = std::move(labels);
  p.max_prob = max_prob.empty() ? std::vector<float>(p.pseudo_labels.size(), 1.0f) : max_prob;
  return p;
}

PredictionField random_prediction(std::mt19937_64& gen, ImageShape shape, int classes) {
  std::vector<float> probs(shape.units() * classes);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t j = 0; j < shape.units(); ++j) {
    float s = 0;
    for (int c = 0; c < classes; ++c) s += probs[j * classes + c] = u(gen) * u(gen);
    for (int c = 0; c < classes; ++c) probs[j * classes + c] /= s;
  }
  return PredictionField::from_probabilities(shape, classes, std::move(probs));
}

ClassConfidence conf(std::vector<double> sigma) {
  ClassConfidence c;
  c.sigma = std::move(sigma);
  return c;
}

}  // namespace

TEST_CASE("class_confidence uses a strict threshold") {
  const auto p = labels_only(ImageShape::plane(1, 4), 2, {1, 1, 1, 0}, {0.8f, 0.6f, 0.9f, 0.7f});
  const auto c = class_confidence(std::span(&p, 1), 0.7);
  CHECK(c.sigma[1] == doctest::Approx(2.0 / 3.0));
  CHECK(c.sigma[0] == 0.0);  // 0.7 is not > 0.7 (as float it is slightly below)
  const auto sure = labels_only(ImageShape::plane(1, 3), 3, {0, 0, 1});
  const auto s = class_confidence(std::span(&sure, 1), 0.7);
  CHECK(s.sigma[0] == 1.0);
  CHECK(s.sigma[2] == 0.0);
  CHECK(s.prediction_counts[2] == 0);
  CHECK_THROWS_AS(ConfidenceCounter(3, 1.0), ValidationError);
  CHECK_THROWS_AS(ConfidenceCounter(3, 0.0), ValidationError);
}

TEST_CASE("class_confidence matches the double-loop oracle; merge is order free") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int classes = 2 + gen() % 5;
    std::vector<PredictionField> pool;
    const int n = 1 + gen() % 10;
    for (int i = 0; i < n; ++i) pool.push_back(random_prediction(gen, ImageShape::plane(5, 7), classes));
    const double tau = 0.2 + 0.1 * (gen() % 6);
    const auto got = class_confidence(pool, tau);
    const auto want = oracle::class_confidence(pool, classes, tau);
    CHECK(got.sigma == want.sigma);
    CHECK(got.prediction_counts == want.predicted);
    CHECK(got.confident_counts == want.confident);

    ConfidenceCounter a(classes, tau), b(classes, tau);
    for (int i = 0; i < n; ++i) (i % 2 ? a : b).add(pool[i]);
    b.merge(a);
    CHECK(b.finish().sigma == want.sigma);
  }
}

TEST_CASE("sampling_weights examples and properties") {
  CHECK(sampling_weights(conf({0.5, 0.5})).w == std::vector<double>{0.5, 0.5});
  CHECK(sampling_weights(conf({1.0, 0.0})).w == std::vector<double>{0.0, 1.0});
  const auto uniform = sampling_weights(conf({1.0, 1.0, 1.0})).w;
  for (double w : uniform) CHECK(w == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> sigma(2 + gen() % 8);
    for (auto& s : sigma) s = u(gen);
    const auto w = sampling_weights(conf(sigma)).w;
    double sum = 0;
    for (double v : w) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t a = 0; a < sigma.size(); ++a) {
      for (std::size_t b = 0; b < sigma.size(); ++b) {
        if (sigma[a] < sigma[b]) CHECK(w[a] > w[b]);
      }
    }
  }
}

TEST_CASE("weight mask renormalizes") {
  const auto w = apply_weight_mask(SamplingWeights{{0.25, 0.25, 0.5}}, std::vector<double>{2, 0, 1});
  CHECK(w.w[0] == doctest::Approx(0.5));
  CHECK(w.w[1] == 0.0);
  CHECK(w.w[2] == doctest::Approx(0.5));
  const auto flat = apply_weight_mask(SamplingWeights{{1.0, 0.0}}, std::vector<double>{0, 1});
  CHECK(flat.w == std::vector<double>{0.5, 0.5});
}

TEST_CASE("image_score follows Eq. 3 with capping") {
  std::vector<ClassId> labels(150, 0);
  std::fill(labels.begin() + 100, labels.end(), 1);
  const auto p = labels_only(ImageShape::plane(10, 15), 2, labels);
  CHECK(image_score(p, SamplingWeights{{0.2, 0.8}}, 1000) == doctest::Approx(60.0));

  const auto single = labels_only(ImageShape::plane(20, 20), 4, std::vector<ClassId>(400, 2));
  const double cap = default_frequency_cap(single.shape);
  CHECK(cap == doctest::Approx(40.0));
  CHECK(image_score(single, SamplingWeights{{0.25, 0.25, 0.25, 0.25}}, cap) ==
        doctest::Approx(0.25 * 40.0));
  CHECK(default_frequency_cap(ImageShape::rois(9)) == 1.0);

  // count_c = cap and count_c = 10 cap score the same.
  std::vector<ClassId> at_cap(100, 0), ten_cap(1000, 0);
  std::fill(at_cap.begin(), at_cap.begin() + 10, 1);
  std::fill(ten_cap.begin(), ten_cap.begin() + 100, 1);
  std::fill(ten_cap.begin() + 100, ten_cap.begin() + 110, 0);
  const SamplingWeights w{{0.3, 0.7}};
  const double a = image_score(labels_only(ImageShape::plane(10, 10), 2, at_cap), w, 10.0);
  const double b = image_score(labels_only(ImageShape::plane(10, 100), 2, ten_cap), w, 10.0);
  CHECK(a == b);

  // Monotone in counts below the cap.
  std::vector<ClassId> grow(100, 0);
  double last = -1;
  for (int k = 0; k <= 30; ++k) {
    if (k > 0) grow[k - 1] = 1;
    const double s = image_score(labels_only(ImageShape::plane(10, 10), 2, grow), w, 50.0);
    CHECK(s >= last);
    last = s;
  }
}

TEST_CASE("image_score can skip annotated pixels") {
  const auto p = labels_only(ImageShape::plane(4, 4), 2, std::vector<ClassId>(16, 1));
  const Region r = Region::square(0, 0, 0, 2);
  CHECK(image_score(p, SamplingWeights{{0.5, 0.5}}, 100, std::span(&r, 1)) ==
        doctest::Approx(0.5 * 12));
}

TEST_CASE("sample_class examples") {
  Rng rng(1);
  const std::vector<ClassId> one{3};
  for (int i = 0; i < 20; ++i) CHECK(sample_class(SamplingWeights{{0.1, 0.2, 0.3, 0.4}}, one, rng) == 3);
  const std::vector<ClassId> second{1};
  CHECK(sample_class(SamplingWeights{{1.0, 0.0}}, second, rng) == 1);

  const std::vector<ClassId> both{0, 1};
  int zeros = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) zeros += sample_class(SamplingWeights{{0.5, 0.5}}, both, rng) == 0;
  CHECK(std::abs(zeros / double(draws) - 0.5) <= 0.01);

  const std::vector<ClassId> some{0, 2};
  int twos = 0;
  for (int i = 0; i < draws; ++i) twos += sample_class(SamplingWeights{{0.1, 0.6, 0.3}}, some, rng) == 2;
  CHECK(std::abs(twos / double(draws) - 0.75) <= 0.01);
}

TEST_CASE("select_region_for_class spec examples") {
  Rng rng(3);
  std::vector<ClassId> labels(12 * 12, 0);
  for (int y = 5; y < 9; ++y) {
    for (int x = 2; x < 6; ++x) labels[y * 12 + x] = 1;
  }
  const auto p = labels_only(ImageShape::plane(12, 12), 3, labels);
  const auto r = select_region_for_class(p, 7, 1, 4, {}, rng);
  REQUIRE(r);
  CHECK(*r == Region::square(7, 5, 2, 4));
  CHECK_FALSE(select_region_for_class(p, 7, 2, 4, {}, rng));

  auto rois = PredictionField::from_probabilities(ImageShape::rois(3), 2,
                                                  {0.9f, 0.1f, 0.1f, 0.9f, 0.1f, 0.9f});
  const auto roi = select_region_for_class(rois, 0, 1, 1, {}, rng);
  REQUIRE(roi);
  CHECK(roi->roi_area().index == 1);
  const Region taken = Region::roi(0, 1);
  CHECK(select_region_for_class(rois, 0, 1, 1, std::span(&taken, 1), rng)->roi_area().index == 2);

  // Without full probabilities only the pseudo-label/max-prob pair is used.
  rois.full_probs.clear();
  CHECK(select_region_for_class(rois, 0, 0, 1, {}, rng)->roi_area().index == 0);
}

TEST_CASE("select_region_for_class matches exhaustive scans, 3-D slice contains the class") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 80; ++trial) {
    const int depth = trial % 2 ? 1 + gen() % 4 : 1;
    const int h = 3 + gen() % 14, w = 3 + gen() % 14;
    const auto shape = depth == 1 ? ImageShape::plane(h, w) : ImageShape::volume(depth, h, w);
    std::vector<ClassId> labels;
    for (int z = 0; z < depth; ++z) {
      const auto slice = oracle::random_labels(gen, h, w, 4);
      labels.insert(labels.end(), slice.begin(), slice.end());
    }
    const auto p = labels_only(shape, 4, labels);
    const int side = 1 + gen() % std::min(h, w);
    const auto excluded = oracle::random_exclusions(gen, shape, 3);
    const ClassId c = gen() % 4;
    Rng rng(trial);
    const auto got = select_region_for_class(p, 0, c, side, excluded, rng);
    if (depth == 1) {
      const auto want = oracle::window_argmax(oracle::indicator(labels, c, 0, labels.size()), h, w,
                                              side, excluded, 0, true);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(*got == Region::square(0, want->y, want->x, side));
    } else {
      bool any = false;
      for (int z = 0; z < depth; ++z) {
        any = any || oracle::window_argmax(oracle::indicator(labels, c, z * h * w, h * w), h, w,
                                           side, excluded, z, true);
      }
      REQUIRE(got.has_value() == any);
      if (got) {
        const int z = got->sq().z;
        const auto want = oracle::window_argmax(oracle::indicator(labels, c, z * h * w, h * w), h,
                                                w, side, excluded, z, true);
        REQUIRE(want);
        CHECK(*got == Region::square(0, want->y, want->x, side, z));
      }
    }
  }
}

TEST_CASE("3-D slice choice is uniform over slices holding the class") {
  const auto shape = ImageShape::volume(4, 4, 4);
  std::vector<ClassId> labels(64, 0);
  labels[1 * 16 + 5] = 1;
  labels[3 * 16 + 10] = 1;
  const auto p = labels_only(shape, 2, labels);
  std::map<int, int> hits;
  for (int s = 0; s < 4000; ++s) {
    Rng rng(s);
    ++hits[select_region_for_class(p, 0, 1, 2, {}, rng)->sq().z];
  }
  CHECK(hits.size() == 2);
  CHECK(std::abs(hits[1] / 4000.0 - 0.5) < 0.05);
}

TEST_CASE("decomp_select two-class distribution") {
  std::vector<ClassId> labels(16 * 16, 0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 8; x < 16; ++x) labels[y * 16 + x] = 1;
  }
  const auto p = labels_only(ImageShape::plane(16, 16), 2, labels);
  int mixed = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(s);
    PickProvenance prov;
    const auto regions = decomp_select(p, 0, SamplingWeights{{0.5, 0.5}}, 2, 4, {}, rng, &prov);
    REQUIRE(regions.size() == 2);
    REQUIRE(prov.size() == 2);
    mixed += *prov[0] != *prov[1];
  }
  CHECK(std::abs(mixed / double(seeds) - 0.5) < 0.05);
}

TEST_CASE("decomp_select on single-class and fully annotated images") {
  const auto shape = ImageShape::plane(9, 9);
  std::vector<ClassId> labels(81, 1);
  labels[0] = 0;
  const auto p = labels_only(shape, 2, labels);
  Rng rng(8);
  const auto regions = decomp_select(p, 0, SamplingWeights{{0.0, 1.0}}, 3, 3, {}, rng);
  REQUIRE(regions.size() == 3);
  std::vector<Region> prior;
  for (const auto& r : regions) {
    const auto want = oracle::window_argmax(oracle::indicator(labels, 1, 0, 81), 9, 9, 3, prior);
    CHECK(r == Region::square(0, want->y, want->x, 3));
    prior.push_back(r);
  }

  std::vector<Region> full;
  for (int y = 0; y < 9; y += 3) {
    for (int x = 0; x < 9; x += 3) full.push_back(Region::square(0, y, x, 3));
  }
  CHECK(decomp_select(p, 0, SamplingWeights{{0.5, 0.5}}, 2, 3, full, rng).empty());
}

TEST_CASE("decomp_select invariants on random images") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 60; ++trial) {
    const int h = 6 + gen() % 20, w = 6 + gen() % 20;
    const auto shape = ImageShape::plane(h, w);
    const auto labels = oracle::random_labels(gen, h, w, 4);
    const auto p = labels_only(shape, 4, labels);
    const int side = 1 + gen() % 5;
    const auto annotated = oracle::random_exclusions(gen, shape, 3);
    Rng rng(trial);
    PickProvenance prov;
    const auto regions =
        decomp_select(p, 0, SamplingWeights{{0.1, 0.2, 0.3, 0.4}}, 1 + gen() % 6, side, annotated,
                      rng, &prov);
    std::vector<Region> all = annotated;
    for (std::size_t k = 0; k < regions.size(); ++k) {
      CHECK_NOTHROW(validate_region(regions[k], shape));
      for (const auto& e : all) CHECK_FALSE(regions_overlap(regions[k], e));
      all.push_back(regions[k]);
      if (prov[k]) {
        bool has = false;
        for (auto off : region_offsets(regions[k], shape)) has = has || labels[off] == *prov[k];
        CHECK(has);
      }
    }
  }
}
