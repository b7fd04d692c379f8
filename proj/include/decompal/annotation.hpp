#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "decompal/types.hpp"

namespace decompal {

// Reveals ground truth, and only inside requested regions.
class Oracle {
 public:
  explicit Oracle(std::span<const ImageRecord> pool);

  const ImageShape& shape(ImageId image) const;
  std::vector<ClassId> reveal(const Region& region) const;

 private:
  const ImageRecord& lookup(ImageId image) const;

  std::span<const ImageRecord> pool_;
  std::map<ImageId, std::size_t> index_;
};

// The labeled set: selected regions and their revealed labels, plus the
// set of images visited in the current image-selection loop.
class AnnotationState {
 public:
  struct ImageAnnotations {
    std::vector<Region> regions;
    std::vector<std::vector<ClassId>> revealed;
  };

  // Throws OverlapError if the region overlaps any earlier annotation of its
  // image, BoundsError if it does not fit.
  void annotate(const Region& region, const Oracle& oracle);

  bool overlaps_existing(const Region& region) const;

  // Empty span for images without annotations.
  std::span<const Region> regions(ImageId image) const;
  std::span<const std::vector<ClassId>> revealed(ImageId image) const;

  const std::map<ImageId, ImageAnnotations>& images() const { return images_; }

  std::size_t region_count() const;
  std::size_t revealed_count() const { return revealed_units_; }

  std::set<ImageId>& loop_visited() { return loop_visited_; }
  const std::set<ImageId>& loop_visited() const { return loop_visited_; }

 private:
  std::map<ImageId, ImageAnnotations> images_;
  std::set<ImageId> loop_visited_;
  std::size_t revealed_units_ = 0;
};

}  // namespace decompal
