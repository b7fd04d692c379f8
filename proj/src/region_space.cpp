#include "decompal/region_space.hpp"

#include "decompal/integral.hpp"

namespace decompal {

std::vector<SquareArea> squares_on_slice(std::span<const Region> regions, int z) {
  std::vector<SquareArea> out;
  for (const Region& r : regions) {
    if (r.is_square() && r.sq().z == z) out.push_back(r.sq());
  }
  return out;
}

bool roi_taken(std::span<const Region> regions, int index) {
  for (const Region& r : regions) {
    if (!r.is_square() && r.roi_area().index == index) return true;
  }
  return false;
}

namespace {

// Visits feasible candidates in (z, y, x) or ROI-index order; fn returns
// false to stop.
template <typename Fn>
void visit_feasible(const ImageShape& shape, ImageId image, int side,
                    std::span<const Region> excluded, Fn&& fn) {
  if (shape.is_roi()) {
    for (int j = 0; j < shape.roi_count(); ++j) {
      if (!roi_taken(excluded, j) && !fn(Region::roi(image, j))) return;
    }
    return;
  }
  bool stop = false;
  for (int z = 0; z < shape.depth && !stop; ++z) {
    const auto squares = squares_on_slice(excluded, z);
    for_each_feasible_origin(shape.height, shape.width, side, squares, [&](int y, int x) {
      if (!stop && !fn(Region::square(image, y, x, side, z))) stop = true;
    });
  }
}

bool is_feasible(const Region& candidate, std::span<const Region> excluded) {
  for (const Region& r : excluded) {
    if (regions_overlap(candidate, r)) return false;
  }
  return true;
}

}  // namespace

std::size_t count_feasible_regions(const ImageShape& shape, int side,
                                   std::span<const Region> excluded) {
  std::size_t n = 0;
  visit_feasible(shape, 0, side, excluded, [&](const Region&) {
    ++n;
    return true;
  });
  return n;
}

bool has_feasible_region(const ImageShape& shape, int side, std::span<const Region> excluded) {
  bool found = false;
  visit_feasible(shape, 0, side, excluded, [&](const Region&) {
    found = true;
    return false;
  });
  return found;
}

std::optional<Region> uniform_feasible_region(const ImageShape& shape, ImageId image, int side,
                                              std::span<const Region> excluded, Rng& rng) {
  const std::size_t n = count_feasible_regions(shape, side, excluded);
  if (n == 0) return std::nullopt;
  std::size_t target = rng.index(n);
  std::optional<Region> chosen;
  visit_feasible(shape, image, side, excluded, [&](const Region& r) {
    if (target-- == 0) {
      chosen = r;
      return false;
    }
    return true;
  });
  return chosen;
}

std::optional<Region> sample_feasible_region(const ImageShape& shape, ImageId image, int side,
                                             std::span<const Region> excluded, Rng& rng,
                                             int max_attempts) {
  if (shape.is_roi()) {
    const int m = shape.roi_count();
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(m)));
      if (!roi_taken(excluded, j)) return Region::roi(image, j);
    }
    return uniform_feasible_region(shape, image, side, excluded, rng);
  }
  if (side > shape.height || side > shape.width) return std::nullopt;
  const auto ny = static_cast<std::uint64_t>(shape.height - side + 1);
  const auto nx = static_cast<std::uint64_t>(shape.width - side + 1);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const int z = static_cast<int>(rng.index(static_cast<std::uint64_t>(shape.depth)));
    const int y = static_cast<int>(rng.index(ny));
    const int x = static_cast<int>(rng.index(nx));
    Region candidate = Region::square(image, y, x, side, z);
    if (is_feasible(candidate, excluded)) return candidate;
  }
  return uniform_feasible_region(shape, image, side, excluded, rng);
}

std::vector<std::size_t> unexcluded_class_counts(std::span<const ClassId> labels,
                                                 const ImageShape& shape, int num_classes,
                                                 std::span<const Region> excluded) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (ClassId c : labels) ++counts[c];
  for (const Region& r : excluded) {
    for (std::size_t offset : region_offsets(r, shape)) --counts[labels[offset]];
  }
  return counts;
}

}  // namespace decompal
