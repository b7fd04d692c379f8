#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decompal/annotation.hpp"
#include "decompal/types.hpp"

namespace decompal {

// Row = true class, column = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void add(std::span<const ClassId> predicted, std::span<const ClassId> truth);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return classes_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * classes_ + predicted];
  }
  std::uint64_t true_positives(int c) const { return at(c, c); }
  std::uint64_t false_positives(int c) const;
  std::uint64_t false_negatives(int c) const;
  std::uint64_t support(int c) const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

// Per-class scores in [0, 1]. Classes with an empty denominator are marked
// undefined, score 0, and left out of the macro mean. The weighted
// aggregate weights every class by its true-label support.
struct ClassReport {
  std::vector<double> per_class;
  std::vector<std::uint64_t> support;
  std::vector<bool> defined;
  double macro = 0.0;
  double weighted = 0.0;
};

ClassReport iou_report(const ConfusionMatrix& confusion);
ClassReport dice_report(const ConfusionMatrix& confusion);
ClassReport f1_report(const ConfusionMatrix& confusion);

// Shape mismatches throw ValidationError.
ClassReport iou(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes);
ClassReport dice(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes);
double weighted_f1(std::span<const ClassId> predicted, std::span<const ClassId> truth,
                   int num_classes);

// Annotated units of each true class over all units of that class in the
// pool (0 for classes absent from the pool).
std::vector<double> per_class_annotation_ratio(const AnnotationState& state,
                                               std::span<const ImageRecord> pool, int num_classes);

// Spearman rank correlation with average ranks for ties; NaN when either
// side is constant or shorter than two.
double spearman(std::span<const double> a, std::span<const double> b);

// Spearman between sigma and per-class test scores at each step, using only
// classes where both are finite.
std::vector<double> confidence_alignment(std::span<const std::vector<double>> sigma_history,
                                         std::span<const std::vector<double>> metric_history);

}  // namespace decompal
