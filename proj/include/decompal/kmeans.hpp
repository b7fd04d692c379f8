#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "decompal/random.hpp"

namespace decompal {

using FeatureVector = std::vector<double>;

double squared_distance(const FeatureVector& a, const FeatureVector& b);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<FeatureVector> centers;
  double inertia = 0.0;
  int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations; stops after
// max_iterations or once no center moves more than tolerance. Points go to
// the nearest center, ties to the lowest center index. Empty clusters keep
// their previous center. Throws ValidationError if k > points.size().
KMeansResult kmeans(std::span<const FeatureVector> points, std::size_t k, Rng& rng,
                    int max_iterations = 100, double tolerance = 1e-6);

// The k-means++ seeding step alone: indices of the chosen seeds. The first
// seed is drawn uniformly from `first_candidates` (all points if empty),
// later ones with probability proportional to squared distance to the
// nearest chosen seed; uniformly among unchosen points when every distance
// is zero.
std::vector<std::size_t> kmeanspp_seeds(std::span<const FeatureVector> points, std::size_t k,
                                        Rng& rng,
                                        std::span<const std::size_t> first_candidates = {});

}  // namespace decompal
