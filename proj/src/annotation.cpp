#include "decompal/annotation.hpp"

#include <string>

namespace decompal {

Oracle::Oracle(std::span<const ImageRecord> pool) : pool_(pool) {
  for (std::size_t i = 0; i < pool_.size(); ++i) index_.emplace(pool_[i].id, i);
}

const ImageRecord& Oracle::lookup(ImageId image) const {
  auto it = index_.find(image);
  if (it == index_.end()) throw Error("oracle has no image " + std::to_string(image));
  return pool_[it->second];
}

const ImageShape& Oracle::shape(ImageId image) const { return lookup(image).shape; }

std::vector<ClassId> Oracle::reveal(const Region& region) const {
  const ImageRecord& record = lookup(region.image);
  std::vector<ClassId> labels;
  for (std::size_t offset : region_offsets(region, record.shape)) {
    labels.push_back(record.hidden_labels[offset]);
  }
  return labels;
}

bool AnnotationState::overlaps_existing(const Region& region) const {
  for (const Region& other : regions(region.image)) {
    if (regions_overlap(region, other)) return true;
  }
  return false;
}

void AnnotationState::annotate(const Region& region, const Oracle& oracle) {
  validate_region(region, oracle.shape(region.image));
  if (overlaps_existing(region)) {
    throw OverlapError("region overlaps an existing annotation of image " +
                       std::to_string(region.image));
  }
  auto labels = oracle.reveal(region);
  revealed_units_ += labels.size();
  auto& entry = images_[region.image];
  entry.regions.push_back(region);
  entry.revealed.push_back(std::move(labels));
}

std::span<const Region> AnnotationState::regions(ImageId image) const {
  auto it = images_.find(image);
  if (it == images_.end()) return {};
  return it->second.regions;
}

std::span<const std::vector<ClassId>> AnnotationState::revealed(ImageId image) const {
  auto it = images_.find(image);
  if (it == images_.end()) return {};
  return it->second.revealed;
}

std::size_t AnnotationState::region_count() const {
  std::size_t n = 0;
  for (const auto& [id, entry] : images_) n += entry.regions.size();
  return n;
}

}  // namespace decompal
