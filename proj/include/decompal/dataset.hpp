#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "decompal/types.hpp"

namespace decompal {

// Synthetic benchmark description. Label maps come from Voronoi partitions
// whose cells receive classes so that pixel frequencies follow
// `frequencies`; features are the class mean plus isotropic Gaussian noise.
struct DatasetSpec {
  TaskMode mode = TaskMode::segmentation2d;
  int n_images = 64;
  int n_test_images = 16;
  int depth = 1;
  int height = 128;
  int width = 128;
  int roi_count = 32;
  int num_classes = 5;
  std::vector<double> frequencies{0.70, 0.15, 0.10, 0.04, 0.01};
  int feature_dim = 6;
  // num_classes x feature_dim; drawn as N(0, mean_scale^2) when empty.
  std::vector<double> class_means;
  double mean_scale = 2.0;
  double noise = 1.0;
  // Voronoi seeds per image (per volume in 3-D).
  int voronoi_seeds = 64;
  // Per-slice seed drift in pixels (3-D).
  double drift = 1.5;
  std::uint64_t seed = 1;

  ImageShape shape() const;
  void validate() const;

  bool operator==(const DatasetSpec&) const = default;
};

struct Dataset {
  TaskMode mode = TaskMode::segmentation2d;
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<double> class_means;
  std::vector<ImageRecord> train;
  std::vector<ImageRecord> test;

  std::size_t train_units() const;
};

Dataset generate_dataset(const DatasetSpec& spec);

// Directory layout: meta.json plus DTEN tensors train_features, train_labels,
// test_features, test_labels (labels stored one-based).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace decompal
