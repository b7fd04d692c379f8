#include "decompal/types.hpp"

#include <algorithm>
#include <cmath>

namespace decompal {

std::string to_string(TaskMode mode) {
  switch (mode) {
    case TaskMode::segmentation2d:
      return "segmentation2d";
    case TaskMode::segmentation3d:
      return "segmentation3d";
    case TaskMode::roi:
      return "roi";
  }
  return "unknown";
}

TaskMode parse_task_mode(const std::string& text) {
  if (text == "segmentation2d") return TaskMode::segmentation2d;
  if (text == "segmentation3d") return TaskMode::segmentation3d;
  if (text == "roi") return TaskMode::roi;
  throw ValidationError("unknown task mode '" + text + "'");
}

ImageShape ImageShape::plane(int height, int width) {
  return ImageShape{TaskMode::segmentation2d, 1, height, width};
}

ImageShape ImageShape::volume(int depth, int height, int width) {
  return ImageShape{TaskMode::segmentation3d, depth, height, width};
}

ImageShape ImageShape::rois(int count) { return ImageShape{TaskMode::roi, 1, 1, count}; }

void ImageShape::validate() const {
  if (depth < 1 || height < 1 || width < 1) {
    throw ValidationError("image shape components must be >= 1");
  }
  if (mode != TaskMode::segmentation3d && depth != 1) {
    throw ValidationError("only segmentation3d shapes may have depth > 1");
  }
  if (mode == TaskMode::roi && height != 1) {
    throw ValidationError("roi shapes are stored as 1 x M");
  }
}

void ImageRecord::validate(int num_classes) const {
  shape.validate();
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  if (features.size() != shape.units() * static_cast<std::size_t>(feature_dim)) {
    throw ValidationError("feature array does not match shape x feature_dim");
  }
  if (hidden_labels.size() != shape.units()) {
    throw ValidationError("label map does not match shape");
  }
  for (ClassId c : hidden_labels) {
    if (c >= num_classes) throw ValidationError("label outside class range");
  }
}

PredictionField PredictionField::from_probabilities(const ImageShape& shape, int num_classes,
                                                    std::vector<float> probs) {
  const std::size_t n = shape.units();
  if (num_classes < 1 || probs.size() != n * static_cast<std::size_t>(num_classes)) {
    throw ValidationError("probability array does not match shape x classes");
  }
  PredictionField field;
  field.shape = shape;
  field.num_classes = num_classes;
  field.pseudo_labels.resize(n);
  field.max_prob.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const float* row = probs.data() + j * num_classes;
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (row[c] > row[best]) best = c;
    }
    field.pseudo_labels[j] = static_cast<ClassId>(best);
    field.max_prob[j] = row[best];
  }
  field.full_probs = std::move(probs);
  return field;
}

void PredictionField::validate() const {
  shape.validate();
  const std::size_t n = shape.units();
  if (pseudo_labels.size() != n || max_prob.size() != n) {
    throw ValidationError("prediction maps do not match shape");
  }
  if (has_full_probs() && full_probs.size() != n * static_cast<std::size_t>(num_classes)) {
    throw ValidationError("probability map does not match shape x classes");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (pseudo_labels[j] >= num_classes) throw ValidationError("pseudo label outside class range");
    if (!(max_prob[j] >= 0.0f && max_prob[j] <= 1.0f)) {
      throw ValidationError("max_prob outside [0, 1]");
    }
  }
  if (!has_full_probs()) return;
  for (std::size_t j = 0; j < n; ++j) {
    const float* row = probs_row(j);
    double sum = 0.0;
    int best = 0;
    for (int c = 0; c < num_classes; ++c) {
      sum += row[c];
      if (row[c] > row[best]) best = c;
    }
    if (std::abs(sum - 1.0) > 1e-5) throw ValidationError("probabilities do not sum to 1");
    if (pseudo_labels[j] != best || max_prob[j] != row[best]) {
      throw ValidationError("pseudo labels inconsistent with probabilities");
    }
  }
}

std::tuple<ImageId, int, int, int> Region::key() const {
  if (is_square()) {
    const auto& s = sq();
    return {image, s.z, s.y, s.x};
  }
  return {image, 0, 0, roi_area().index};
}

void validate_region(const Region& region, const ImageShape& shape) {
  if (region.is_square()) {
    if (shape.is_roi()) throw BoundsError("square region on an roi image");
    const auto& s = region.sq();
    if (s.side < 1) throw BoundsError("region side must be >= 1");
    if (s.z < 0 || s.z >= shape.depth || s.y < 0 || s.x < 0 || s.y + s.side > shape.height ||
        s.x + s.side > shape.width) {
      throw BoundsError("region exceeds image bounds");
    }
    return;
  }
  if (!shape.is_roi()) throw BoundsError("roi region on a pixel image");
  const int j = region.roi_area().index;
  if (j < 0 || j >= shape.roi_count()) throw BoundsError("roi index out of range");
}

std::vector<Voxel> region_pixels(const Region& region, const ImageShape& shape) {
  validate_region(region, shape);
  if (!region.is_square()) return {Voxel{0, 0, region.roi_area().index}};
  const auto& s = region.sq();
  std::vector<Voxel> out;
  out.reserve(static_cast<std::size_t>(s.side) * s.side);
  for (int y = s.y; y < s.y + s.side; ++y) {
    for (int x = s.x; x < s.x + s.side; ++x) out.push_back(Voxel{s.z, y, x});
  }
  return out;
}

std::vector<std::size_t> region_offsets(const Region& region, const ImageShape& shape) {
  validate_region(region, shape);
  if (!region.is_square()) return {static_cast<std::size_t>(region.roi_area().index)};
  const auto& s = region.sq();
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(s.side) * s.side);
  for (int y = s.y; y < s.y + s.side; ++y) {
    const std::size_t row = flat_index(shape, Voxel{s.z, y, s.x});
    for (int dx = 0; dx < s.side; ++dx) out.push_back(row + dx);
  }
  return out;
}

std::size_t region_units(const Region& region) {
  if (!region.is_square()) return 1;
  return static_cast<std::size_t>(region.sq().side) * region.sq().side;
}

bool regions_overlap(const Region& a, const Region& b) {
  if (a.image != b.image) return false;
  if (a.is_square() != b.is_square()) return false;
  if (!a.is_square()) return a.roi_area().index == b.roi_area().index;
  const auto& p = a.sq();
  const auto& q = b.sq();
  if (p.z != q.z) return false;
  return p.y < q.y + q.side && q.y < p.y + p.side && p.x < q.x + q.side && q.x < p.x + p.side;
}

}  // namespace decompal
