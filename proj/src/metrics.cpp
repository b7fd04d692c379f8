#include "decompal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace decompal {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : classes_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
}

void ConfusionMatrix::add(std::span<const ClassId> predicted, std::span<const ClassId> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("label maps differ in shape");
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (predicted[j] >= classes_ || truth[j] >= classes_) {
      throw ValidationError("label outside class range");
    }
    ++counts_[static_cast<std::size_t>(truth[j]) * classes_ + predicted[j]];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ValidationError("confusion matrices differ in size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::false_positives(int c) const {
  std::uint64_t n = 0;
  for (int t = 0; t < classes_; ++t) {
    if (t != c) n += at(t, c);
  }
  return n;
}

std::uint64_t ConfusionMatrix::false_negatives(int c) const {
  std::uint64_t n = 0;
  for (int p = 0; p < classes_; ++p) {
    if (p != c) n += at(c, p);
  }
  return n;
}

std::uint64_t ConfusionMatrix::support(int c) const { return true_positives(c) + false_negatives(c); }

namespace {

// score(tp, fp, fn) -> {numerator, denominator}
template <typename Score>
ClassReport build_report(const ConfusionMatrix& m, Score&& score) {
  const int classes = m.num_classes();
  ClassReport r;
  r.per_class.assign(classes, 0.0);
  r.support.assign(classes, 0);
  r.defined.assign(classes, false);
  double macro_sum = 0.0;
  int macro_n = 0;
  std::uint64_t total_support = 0;
  for (int c = 0; c < classes; ++c) {
    const auto [num, den] = score(static_cast<double>(m.true_positives(c)),
                                  static_cast<double>(m.false_positives(c)),
                                  static_cast<double>(m.false_negatives(c)));
    r.support[c] = m.support(c);
    total_support += r.support[c];
    if (den > 0.0) {
      r.per_class[c] = num / den;
      r.defined[c] = true;
      macro_sum += r.per_class[c];
      ++macro_n;
    }
  }
  r.macro = macro_n > 0 ? macro_sum / macro_n : 0.0;
  if (total_support > 0) {
    for (int c = 0; c < classes; ++c) {
      r.weighted += static_cast<double>(r.support[c]) / static_cast<double>(total_support) *
                    r.per_class[c];
    }
  }
  return r;
}

}  // namespace

ClassReport iou_report(const ConfusionMatrix& confusion) {
  return build_report(confusion, [](double tp, double fp, double fn) {
    return std::pair{tp, tp + fp + fn};
  });
}

ClassReport dice_report(const ConfusionMatrix& confusion) {
  return build_report(confusion, [](double tp, double fp, double fn) {
    return std::pair{2.0 * tp, 2.0 * tp + fp + fn};
  });
}

ClassReport f1_report(const ConfusionMatrix& confusion) {
  // F1 from precision and recall; precision is taken as 0 when nothing was
  // predicted for the class.
  return build_report(confusion, [](double tp, double fp, double fn) {
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    const double den = tp + fp + fn > 0.0 ? 1.0 : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return std::pair{f1, den};
  });
}

namespace {

ConfusionMatrix confusion_of(std::span<const ClassId> predicted, std::span<const ClassId> truth,
                             int num_classes) {
  ConfusionMatrix m(num_classes);
  m.add(predicted, truth);
  return m;
}

}  // namespace

ClassReport iou(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes) {
  return iou_report(confusion_of(predicted, truth, num_classes));
}

ClassReport dice(std::span<const ClassId> predicted, std::span<const ClassId> truth, int num_classes) {
  return dice_report(confusion_of(predicted, truth, num_classes));
}

double weighted_f1(std::span<const ClassId> predicted, std::span<const ClassId> truth,
                   int num_classes) {
  return f1_report(confusion_of(predicted, truth, num_classes)).weighted;
}

std::vector<double> per_class_annotation_ratio(const AnnotationState& state,
                                               std::span<const ImageRecord> pool, int num_classes) {
  std::vector<double> annotated(num_classes, 0.0);
  std::vector<double> total(num_classes, 0.0);
  for (const auto& image : pool) {
    for (ClassId c : image.hidden_labels) total[c] += 1.0;
  }
  for (const auto& [id, entry] : state.images()) {
    for (const auto& labels : entry.revealed) {
      for (ClassId c : labels) annotated[c] += 1.0;
    }
  }
  std::vector<double> ratio(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    if (total[c] > 0.0) ratio[c] = annotated[c] / total[c];
  }
  return ratio;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("rank vectors differ in length");
  const std::size_t n = a.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

std::vector<double> confidence_alignment(std::span<const std::vector<double>> sigma_history,
                                         std::span<const std::vector<double>> metric_history) {
  if (sigma_history.size() != metric_history.size()) {
    throw ValidationError("histories differ in length");
  }
  std::vector<double> out;
  out.reserve(sigma_history.size());
  for (std::size_t t = 0; t < sigma_history.size(); ++t) {
    const auto& s = sigma_history[t];
    const auto& m = metric_history[t];
    if (s.size() != m.size()) throw ValidationError("per-class vectors differ in length");
    std::vector<double> xs, ys;
    for (std::size_t c = 0; c < s.size(); ++c) {
      if (std::isfinite(s[c]) && std::isfinite(m[c])) {
        xs.push_back(s[c]);
        ys.push_back(m[c]);
      }
    }
    out.push_back(spearman(xs, ys));
  }
  return out;
}

}  // namespace decompal
