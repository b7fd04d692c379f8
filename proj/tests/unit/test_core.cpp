#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "decompal/annotation.hpp"
#include "decompal/tensor_io.hpp"
#include "decompal/types.hpp"
#include "oracles.hpp"

using namespace decompal;

namespace {

ImageRecord labeled_image(ImageId id, ImageShape shape, std::vector<ClassId> labels) {
  ImageRecord r;
  r.id = id;
  r.shape = shape;
  r.feature_dim = 1;
  r.features.assign(shape.units(), 0.0f);
  r.hidden_labels = std::move(labels);
  return r;
}

}  // namespace

TEST_CASE("region_pixels corner and slice cases") {
  const auto shape = ImageShape::plane(4, 4);
  const auto px = region_pixels(Region::square(0, 0, 0, 2), shape);
  CHECK(px == std::vector<Voxel>{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}});
  CHECK_THROWS_AS(region_pixels(Region::square(0, 3, 3, 2), shape), BoundsError);

  const auto vol = ImageShape::volume(8, 4, 4);
  const auto slice = region_pixels(Region::square(0, 1, 1, 2, 5), vol);
  REQUIRE(slice.size() == 4);
  for (const auto& v : slice) CHECK(v.z == 5);

  const auto rois = ImageShape::rois(5);
  CHECK(region_pixels(Region::roi(0, 3), rois) == std::vector<Voxel>{{0, 0, 3}});
  CHECK_THROWS_AS(validate_region(Region::roi(0, 5), rois), BoundsError);
}

TEST_CASE("regions_overlap examples and symmetry") {
  CHECK_FALSE(regions_overlap(Region::square(0, 0, 0, 2), Region::square(0, 2, 2, 2)));
  CHECK(regions_overlap(Region::square(0, 0, 0, 2), Region::square(0, 1, 1, 2)));
  CHECK_FALSE(regions_overlap(Region::square(0, 0, 0, 2, 1), Region::square(0, 0, 0, 2, 2)));
  CHECK(regions_overlap(Region::roi(0, 2), Region::roi(0, 2)));
  CHECK_FALSE(regions_overlap(Region::roi(0, 2), Region::roi(0, 3)));

  std::mt19937_64 gen(7);
  const auto shape = ImageShape::plane(12, 12);
  for (int i = 0; i < 500; ++i) {
    const int sa = 1 + gen() % 5, sb = 1 + gen() % 5;
    const Region a = Region::square(0, gen() % (13 - sa), gen() % (13 - sa), sa);
    const Region b = Region::square(0, gen() % (13 - sb), gen() % (13 - sb), sb);
    std::set<Voxel> pa;
    for (auto v : region_pixels(a, shape)) pa.insert(v);
    bool shared = false;
    for (auto v : region_pixels(b, shape)) shared = shared || pa.contains(v);
    CHECK(regions_overlap(a, b) == shared);
    CHECK(regions_overlap(a, b) == regions_overlap(b, a));
    CHECK(regions_overlap(a, a));
  }
}

TEST_CASE("prediction field argmax ties go to the lowest class") {
  auto p = PredictionField::from_probabilities(ImageShape::plane(1, 2), 3,
                                               {0.4f, 0.4f, 0.2f, 0.1f, 0.2f, 0.7f});
  CHECK(p.pseudo_labels == std::vector<ClassId>{0, 2});
  CHECK(p.max_prob[0] == doctest::Approx(0.4));
  CHECK(p.max_prob[1] == doctest::Approx(0.7));
  CHECK_NOTHROW(p.validate());
  p.full_probs[0] = 0.9f;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("annotate reveals exactly the region and rejects overlap") {
  const auto shape = ImageShape::plane(8, 8);
  std::vector<ClassId> labels(64);
  for (int i = 0; i < 64; ++i) labels[i] = static_cast<ClassId>(i % 3);
  std::vector<ImageRecord> pool{labeled_image(0, shape, labels)};
  Oracle oracle(pool);
  AnnotationState state;

  state.annotate(Region::square(0, 0, 0, 2), oracle);
  CHECK(state.region_count() == 1);
  CHECK(state.revealed_count() == 4);
  CHECK_THROWS_AS(state.annotate(Region::square(0, 1, 1, 2), oracle), OverlapError);
  CHECK_THROWS_AS(state.annotate(Region::square(0, 7, 7, 2), oracle), BoundsError);
  CHECK_THROWS_AS(state.annotate(Region::square(0, 0, 0, 2), oracle), OverlapError);
}

TEST_CASE("ten disjoint regions reveal ten times l squared labels matching the hidden map") {
  const auto shape = ImageShape::plane(20, 20);
  std::mt19937_64 gen(3);
  std::vector<ClassId> labels(400);
  for (auto& l : labels) l = static_cast<ClassId>(gen() % 4);
  std::vector<ImageRecord> pool{labeled_image(0, shape, labels)};
  Oracle oracle(pool);
  AnnotationState state;
  std::multiset<ClassId> expected;
  for (int k = 0; k < 10; ++k) {
    const Region r = Region::square(0, (k / 5) * 4, (k % 5) * 4, 3);
    state.annotate(r, oracle);
    for (const auto& v : region_pixels(r, shape)) expected.insert(labels[flat_index(shape, v)]);
  }
  CHECK(state.revealed_count() == 10 * 9);
  std::multiset<ClassId> got;
  for (const auto& rev : state.revealed(0)) got.insert(rev.begin(), rev.end());
  CHECK(got == expected);
}

TEST_CASE("DTEN round trip and format errors") {
  DenseTensor labels{{2, 3}, std::vector<std::uint16_t>{1, 2, 3, 4, 5, 6}};
  DenseTensor probs{{3}, std::vector<float>{0.25f, 0.5f, -1.0f}};
  for (const auto& t : {labels, probs}) {
    std::stringstream ss;
    write_tensor(ss, t);
    CHECK(read_tensor(ss) == t);
  }
  std::stringstream ss;
  write_tensor(ss, labels);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "DTEN");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);
  // dims little-endian u32
  CHECK(static_cast<unsigned char>(bytes[5]) == 2);
  CHECK(static_cast<unsigned char>(bytes[9]) == 3);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0);
  CHECK(bytes.size() == 4 + 1 + 8 + 1 + 12);
  CHECK(static_cast<unsigned char>(bytes[14]) == 1);
  CHECK(static_cast<unsigned char>(bytes[15]) == 0);

  std::stringstream bad_magic("DTEX....");
  CHECK_THROWS_AS(read_tensor(bad_magic), ValidationError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_tensor(truncated), ValidationError);
}
