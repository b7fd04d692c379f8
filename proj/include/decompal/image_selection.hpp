#pragma once

#include <set>
#include <span>
#include <vector>

#include "decompal/annotation.hpp"
#include "decompal/random.hpp"
#include "decompal/types.hpp"

namespace decompal {

struct ImageScore {
  ImageId image = 0;
  double score = 0.0;
};

// Picks the n_image best-scoring images not yet visited in the current loop
// (ties to the lowest id). When the unvisited part of the pool runs out, a
// new loop starts: the visited set is reset to the images already picked in
// this call and selection continues over the rest of the pool. Picked ids
// are added to `visited`. Throws ValidationError on an empty pool.
std::vector<ImageId> select_top_images(std::span<const ImageScore> pool, std::set<ImageId>& visited,
                                       int n_image);

std::vector<ImageId> select_images(std::span<const ImageScore> pool, AnnotationState& state,
                                   int n_image);

// Same loop rule with a uniformly random pick order.
std::vector<ImageId> select_random_images(std::span<const ImageId> pool, std::set<ImageId>& visited,
                                          int n_image, Rng& rng);

}  // namespace decompal
