#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "decompal/annotation.hpp"
#include "decompal/image_selection.hpp"
#include "decompal/random.hpp"
#include "decompal/types.hpp"

namespace decompal {

inline constexpr double kDefaultTau = 0.7;
inline constexpr double kDefaultCapFraction = 0.10;

// Fraction of predictions of each class whose max probability exceeds tau.
// Never-predicted classes get sigma = 0.
struct ClassConfidence {
  std::vector<double> sigma;
  std::vector<std::uint64_t> prediction_counts;
  std::vector<std::uint64_t> confident_counts;
};

// Partial confidence counts; per-image tallies can be merged in any order.
class ConfidenceCounter {
 public:
  ConfidenceCounter(int num_classes, double tau);

  void add(const PredictionField& pred);
  void merge(const ConfidenceCounter& other);
  ClassConfidence finish() const;

 private:
  double tau_;
  std::vector<std::uint64_t> predicted_;
  std::vector<std::uint64_t> confident_;
};

ClassConfidence class_confidence(std::span<const PredictionField> pool, double tau);

struct SamplingWeights {
  std::vector<double> w;
};

// w_c proportional to 1 - sigma_c; uniform when every class is fully confident.
SamplingWeights sampling_weights(const ClassConfidence& confidence);

// Multiplies by a per-class mask and renormalizes (uniform if the result
// has no mass).
SamplingWeights apply_weight_mask(const SamplingWeights& weights, std::span<const double> mask);

// Frequency cap for image scoring: fraction of the image size for
// segmentation, one ROI for ROI images.
double default_frequency_cap(const ImageShape& shape, double fraction = kDefaultCapFraction);

// Sum over classes of w_c * min(count_c, cap).
double image_score(const PredictionField& pred, const SamplingWeights& weights, double cap);

// Same, counting only units outside `annotated`.
double image_score(const PredictionField& pred, const SamplingWeights& weights, double cap,
                   std::span<const Region> annotated);

// Draw from w restricted to `available`; uniform over `available` when the
// restricted mass is zero.
ClassId sample_class(const SamplingWeights& weights, std::span<const ClassId> available, Rng& rng);

// Region best representing class c given exclusions:
//  - planes: the window with the most pixels predicted as c (ties to
//    smallest y, x), nullopt if that count is 0;
//  - volumes: a uniformly chosen slice holding unexcluded c, then the plane
//    rule on that slice;
//  - ROIs: the unexcluded ROI with highest probability of c (ties to the
//    lowest index).
std::optional<Region> select_region_for_class(const PredictionField& pred, ImageId image, ClassId c,
                                              int side, std::span<const Region> excluded, Rng& rng);

// Sampled class behind each region picked by decomp_select, or nullopt for
// uniform fallback picks.
using PickProvenance = std::vector<std::optional<ClassId>>;

// Sequentially picks up to n_region regions: sample a class among those
// still present outside the exclusions, take its best region, and fall
// back to a uniformly random feasible region once no class yields one.
std::vector<Region> decomp_select(const PredictionField& pred, ImageId image,
                                  const SamplingWeights& weights, int n_region, int side,
                                  std::span<const Region> annotated, Rng& rng,
                                  PickProvenance* provenance = nullptr);

}  // namespace decompal
