#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace decompal {

// Class ids are zero-based in memory: a C-class problem uses 0..C-1.
// The DTEN exchange files store them one-based (see tensor_io.hpp).
using ClassId = std::uint16_t;
using ImageId = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or arguments; the CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class OverlapError : public Error {
 public:
  using Error::Error;
};

enum class TaskMode { segmentation2d, segmentation3d, roi };

std::string to_string(TaskMode mode);
TaskMode parse_task_mode(const std::string& text);

// Domain extent of one image. ROI images are stored as depth=1, height=1,
// width=M so that flat indices coincide with ROI indices.
struct ImageShape {
  TaskMode mode = TaskMode::segmentation2d;
  int depth = 1;
  int height = 1;
  int width = 1;

  static ImageShape plane(int height, int width);
  static ImageShape volume(int depth, int height, int width);
  static ImageShape rois(int count);

  std::size_t units() const {
    return static_cast<std::size_t>(depth) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::size_t slice_units() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool is_roi() const { return mode == TaskMode::roi; }
  int roi_count() const { return width; }

  void validate() const;

  bool operator==(const ImageShape&) const = default;
};

struct Voxel {
  int z = 0;
  int y = 0;
  int x = 0;

  bool operator==(const Voxel&) const = default;
  auto operator<=>(const Voxel&) const = default;
};

inline std::size_t flat_index(const ImageShape& shape, const Voxel& v) {
  return (static_cast<std::size_t>(v.z) * shape.height + v.y) * shape.width + v.x;
}

struct ImageRecord {
  ImageId id = 0;
  ImageShape shape;
  int feature_dim = 0;
  // units() x feature_dim, row-major.
  std::vector<float> features;
  // Ground truth, read through the Oracle during active learning.
  std::vector<ClassId> hidden_labels;

  const float* feature_row(std::size_t unit) const {
    return features.data() + unit * static_cast<std::size_t>(feature_dim);
  }

  void validate(int num_classes) const;
};

struct PredictionField {
  ImageShape shape;
  int num_classes = 0;
  std::vector<ClassId> pseudo_labels;
  std::vector<float> max_prob;
  // units() x num_classes, empty when only the label/max-prob pair is known.
  std::vector<float> full_probs;

  bool has_full_probs() const { return !full_probs.empty(); }
  const float* probs_row(std::size_t unit) const {
    return full_probs.data() + unit * static_cast<std::size_t>(num_classes);
  }

  // Derives pseudo labels (argmax, ties to the lowest class) and max_prob.
  static PredictionField from_probabilities(const ImageShape& shape, int num_classes,
                                            std::vector<float> probs);

  void validate() const;
};

struct SquareArea {
  int z = 0;
  int y = 0;
  int x = 0;
  int side = 1;

  bool operator==(const SquareArea&) const = default;
};

struct RoiArea {
  int index = 0;

  bool operator==(const RoiArea&) const = default;
};

struct Region {
  ImageId image = 0;
  std::variant<SquareArea, RoiArea> area;
  int cycle = 0;

  static Region square(ImageId image, int y, int x, int side, int z = 0, int cycle = 0) {
    return Region{image, SquareArea{z, y, x, side}, cycle};
  }
  static Region roi(ImageId image, int index, int cycle = 0) {
    return Region{image, RoiArea{index}, cycle};
  }

  bool is_square() const { return std::holds_alternative<SquareArea>(area); }
  const SquareArea& sq() const { return std::get<SquareArea>(area); }
  const RoiArea& roi_area() const { return std::get<RoiArea>(area); }

  // Sort key used for deterministic tie-breaks: (image, z, y, x) or (image, index).
  std::tuple<ImageId, int, int, int> key() const;

  bool operator==(const Region&) const = default;
};

// Throws BoundsError when the region does not fit inside the shape.
void validate_region(const Region& region, const ImageShape& shape);

// Every covered coordinate; for ROI regions the single voxel {0, 0, index}.
std::vector<Voxel> region_pixels(const Region& region, const ImageShape& shape);

// Flat offsets of region_pixels, in the same order.
std::vector<std::size_t> region_offsets(const Region& region, const ImageShape& shape);

std::size_t region_units(const Region& region);

bool regions_overlap(const Region& a, const Region& b);

}  // namespace decompal
