#pragma once

#include <optional>
#include <span>
#include <vector>

#include "decompal/random.hpp"
#include "decompal/types.hpp"

namespace decompal {

// Squares of `regions` lying on slice z.
std::vector<SquareArea> squares_on_slice(std::span<const Region> regions, int z);

bool roi_taken(std::span<const Region> regions, int index);

// Number of candidate regions (side x side squares on any slice, or ROIs)
// that are in bounds and disjoint from every excluded region.
std::size_t count_feasible_regions(const ImageShape& shape, int side,
                                   std::span<const Region> excluded);

bool has_feasible_region(const ImageShape& shape, int side, std::span<const Region> excluded);

// Uniform over all feasible candidates by exhaustive enumeration.
std::optional<Region> uniform_feasible_region(const ImageShape& shape, ImageId image, int side,
                                              std::span<const Region> excluded, Rng& rng);

// Uniform over feasible candidates by rejection sampling, switching to
// exhaustive enumeration after max_attempts misses.
std::optional<Region> sample_feasible_region(const ImageShape& shape, ImageId image, int side,
                                             std::span<const Region> excluded, Rng& rng,
                                             int max_attempts = 10000);

// Per-class pseudo-label counts over units not covered by `excluded`.
// Excluded regions must be pairwise disjoint.
std::vector<std::size_t> unexcluded_class_counts(std::span<const ClassId> labels,
                                                 const ImageShape& shape, int num_classes,
                                                 std::span<const Region> excluded);

}  // namespace decompal
