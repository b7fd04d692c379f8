#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decompal/annotation.hpp"
#include "decompal/types.hpp"

namespace decompal {

struct TrainingOptions {
  // Step size as a fraction of 1/L, where L bounds the curvature of the
  // mean cross-entropy; values <= 1 give monotone loss.
  double learning_rate = 1.0;
  int epochs = 100;
  double init_scale = 0.01;
  std::uint64_t seed = 0;

  bool operator==(const TrainingOptions&) const = default;
};

struct TrainingSet {
  int feature_dim = 0;
  std::vector<float> features;  // size() x feature_dim
  std::vector<ClassId> labels;

  std::size_t size() const { return labels.size(); }
};

// (feature, label) pairs of every revealed unit, in annotation order.
TrainingSet collect_training_set(const AnnotationState& state, std::span<const ImageRecord> pool);

// Every unit of the pool with its true label.
TrainingSet full_training_set(std::span<const ImageRecord> pool);

// Linear softmax classifier over per-unit features plus a bias term.
class ToyModel {
 public:
  ToyModel(int feature_dim, int num_classes);

  static ToyModel initialized(int feature_dim, int num_classes, std::uint64_t seed, double scale);

  int feature_dim() const { return feature_dim_; }
  int num_classes() const { return num_classes_; }

  // (feature_dim + 1) x num_classes, row-major; the last row is the bias.
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }

  void probabilities(const float* features, double* probs) const;

  // One forward pass over every unit of the image.
  PredictionField predict(const ImageRecord& image) const;

 private:
  int feature_dim_;
  int num_classes_;
  std::vector<double> weights_;
};

// Mean cross-entropy over the set; fills `gradient` (same layout as the
// weights) when non-null.
double loss_and_gradient(const ToyModel& model, const TrainingSet& data,
                         std::vector<double>* gradient);

// Half the largest eigenvalue of the mean outer product of bias-augmented
// features: a bound on the loss curvature.
double curvature_bound(const TrainingSet& data);

// Full-batch gradient descent from a seeded initialization. `losses`
// receives the loss before every epoch plus the final loss.
ToyModel train(const TrainingSet& data, int num_classes, const TrainingOptions& options,
               std::vector<double>* losses = nullptr);

// Retrains from scratch on the revealed labels; throws ValidationError
// when nothing has been annotated.
ToyModel train(const AnnotationState& state, std::span<const ImageRecord> pool, int num_classes,
               const TrainingOptions& options);

}  // namespace decompal
