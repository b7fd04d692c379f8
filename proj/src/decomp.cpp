#include "decompal/decomp.hpp"

#include <algorithm>
#include <numeric>

#include "decompal/integral.hpp"
#include "decompal/region_space.hpp"

namespace decompal {

ConfidenceCounter::ConfidenceCounter(int num_classes, double tau)
    : tau_(tau),
      predicted_(static_cast<std::size_t>(num_classes), 0),
      confident_(static_cast<std::size_t>(num_classes), 0) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
}

void ConfidenceCounter::add(const PredictionField& pred) {
  if (static_cast<std::size_t>(pred.num_classes) != predicted_.size()) {
    throw ValidationError("prediction class count mismatch");
  }
  const std::size_t n = pred.pseudo_labels.size();
  for (std::size_t j = 0; j < n; ++j) {
    const ClassId c = pred.pseudo_labels[j];
    ++predicted_[c];
    if (static_cast<double>(pred.max_prob[j]) > tau_) ++confident_[c];
  }
}

void ConfidenceCounter::merge(const ConfidenceCounter& other) {
  for (std::size_t c = 0; c < predicted_.size(); ++c) {
    predicted_[c] += other.predicted_[c];
    confident_[c] += other.confident_[c];
  }
}

ClassConfidence ConfidenceCounter::finish() const {
  ClassConfidence out;
  out.prediction_counts = predicted_;
  out.confident_counts = confident_;
  out.sigma.resize(predicted_.size(), 0.0);
  for (std::size_t c = 0; c < predicted_.size(); ++c) {
    if (predicted_[c] > 0) {
      out.sigma[c] = static_cast<double>(confident_[c]) / static_cast<double>(predicted_[c]);
    }
  }
  return out;
}

ClassConfidence class_confidence(std::span<const PredictionField> pool, double tau) {
  if (pool.empty()) throw ValidationError("prediction pool is empty");
  ConfidenceCounter counter(pool.front().num_classes, tau);
  for (const auto& pred : pool) counter.add(pred);
  return counter.finish();
}

namespace {

SamplingWeights normalized_or_uniform(std::vector<double> mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0)) {
    std::fill(mass.begin(), mass.end(), 1.0 / static_cast<double>(mass.size()));
  } else {
    for (double& m : mass) m /= total;
  }
  return SamplingWeights{std::move(mass)};
}

}  // namespace

SamplingWeights sampling_weights(const ClassConfidence& confidence) {
  if (confidence.sigma.empty()) throw ValidationError("empty class confidence");
  std::vector<double> mass;
  mass.reserve(confidence.sigma.size());
  for (double s : confidence.sigma) mass.push_back(1.0 - s);
  return normalized_or_uniform(std::move(mass));
}

SamplingWeights apply_weight_mask(const SamplingWeights& weights, std::span<const double> mask) {
  if (mask.size() != weights.w.size()) throw ValidationError("weight mask length mismatch");
  std::vector<double> mass(weights.w.size());
  for (std::size_t c = 0; c < mass.size(); ++c) {
    if (mask[c] < 0.0) throw ValidationError("weight mask entries must be >= 0");
    mass[c] = weights.w[c] * mask[c];
  }
  return normalized_or_uniform(std::move(mass));
}

double default_frequency_cap(const ImageShape& shape, double fraction) {
  if (shape.is_roi()) return 1.0;
  return fraction * static_cast<double>(shape.units());
}

namespace {

double weighted_capped_sum(const std::vector<std::size_t>& counts, const SamplingWeights& weights,
                           double cap) {
  if (!(cap > 0.0)) throw ValidationError("frequency cap must be > 0");
  if (counts.size() != weights.w.size()) throw ValidationError("weight vector length mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    s += weights.w[c] * std::min(static_cast<double>(counts[c]), cap);
  }
  return s;
}

}  // namespace

double image_score(const PredictionField& pred, const SamplingWeights& weights, double cap) {
  return image_score(pred, weights, cap, {});
}

double image_score(const PredictionField& pred, const SamplingWeights& weights, double cap,
                   std::span<const Region> annotated) {
  const auto counts =
      unexcluded_class_counts(pred.pseudo_labels, pred.shape, pred.num_classes, annotated);
  return weighted_capped_sum(counts, weights, cap);
}

ClassId sample_class(const SamplingWeights& weights, std::span<const ClassId> available, Rng& rng) {
  if (available.empty()) throw ValidationError("no class available for sampling");
  double mass = 0.0;
  for (ClassId c : available) mass += weights.w.at(c);
  if (!(mass > 0.0)) return available[rng.index(available.size())];
  const double target = rng.uniform() * mass;
  double running = 0.0;
  for (ClassId c : available) {
    running += weights.w[c];
    if (target < running) return c;
  }
  // Rounding at the top end: return the last class with nonzero weight.
  for (auto it = available.rbegin(); it != available.rend(); ++it) {
    if (weights.w[*it] > 0.0) return *it;
  }
  return available.back();
}

namespace {

std::optional<Region> best_window_on_slice(const PredictionField& pred, ImageId image, ClassId c,
                                           int side, int z, std::span<const Region> excluded,
                                           IndicatorTable& table) {
  const auto& shape = pred.shape;
  const std::span<const ClassId> slice(pred.pseudo_labels.data() + z * shape.slice_units(),
                                       shape.slice_units());
  fill_indicator_integral(table, slice, shape.height, shape.width, c);
  const auto squares = squares_on_slice(excluded, z);
  const auto hit = window_argmax(table, side, squares, /*require_positive=*/true);
  if (!hit) return std::nullopt;
  return Region::square(image, hit->y, hit->x, side, z);
}

std::optional<Region> best_roi(const PredictionField& pred, ImageId image, ClassId c,
                               std::span<const Region> excluded) {
  std::optional<Region> best;
  double best_prob = 0.0;
  for (int j = 0; j < pred.shape.roi_count(); ++j) {
    if (roi_taken(excluded, j)) continue;
    double p;
    if (pred.has_full_probs()) {
      p = pred.probs_row(static_cast<std::size_t>(j))[c];
    } else {
      p = pred.pseudo_labels[j] == c ? pred.max_prob[j] : 0.0;
    }
    if (p > best_prob) {
      best_prob = p;
      best = Region::roi(image, j);
    }
  }
  return best;
}

// `table` is scratch storage shared across calls.
std::optional<Region> region_for_class(const PredictionField& pred, ImageId image, ClassId c,
                                       int side, std::span<const Region> excluded, Rng& rng,
                                       IndicatorTable& table) {
  const auto& shape = pred.shape;
  if (shape.is_roi()) return best_roi(pred, image, c, excluded);
  if (side < 1 || side > shape.height || side > shape.width) {
    throw ValidationError("region side exceeds image plane");
  }
  if (shape.depth == 1) return best_window_on_slice(pred, image, c, side, 0, excluded, table);

  // Slices that still hold at least one unexcluded pixel of c.
  std::vector<int> slices;
  for (int z = 0; z < shape.depth; ++z) {
    const ClassId* base = pred.pseudo_labels.data() + z * shape.slice_units();
    std::size_t count = std::count(base, base + shape.slice_units(), c);
    for (const Region& r : excluded) {
      if (!r.is_square() || r.sq().z != z) continue;
      for (std::size_t offset : region_offsets(r, shape)) count -= pred.pseudo_labels[offset] == c;
    }
    if (count > 0) slices.push_back(z);
  }
  while (!slices.empty()) {
    const std::size_t pick = rng.index(slices.size());
    if (auto region = best_window_on_slice(pred, image, c, side, slices[pick], excluded, table)) {
      return region;
    }
    slices.erase(slices.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return std::nullopt;
}

}  // namespace

std::optional<Region> select_region_for_class(const PredictionField& pred, ImageId image, ClassId c,
                                              int side, std::span<const Region> excluded, Rng& rng) {
  IndicatorTable table;
  return region_for_class(pred, image, c, side, excluded, rng, table);
}

std::vector<Region> decomp_select(const PredictionField& pred, ImageId image,
                                  const SamplingWeights& weights, int n_region, int side,
                                  std::span<const Region> annotated, Rng& rng,
                                  PickProvenance* provenance) {
  if (n_region < 1) throw ValidationError("n_region must be >= 1");
  if (weights.w.size() != static_cast<std::size_t>(pred.num_classes)) {
    throw ValidationError("weight vector length mismatch");
  }
  std::vector<Region> excluded(annotated.begin(), annotated.end());
  auto remaining = unexcluded_class_counts(pred.pseudo_labels, pred.shape, pred.num_classes, excluded);
  // A class with no feasible positive region now never regains one, since
  // exclusions only grow.
  std::vector<bool> exhausted(static_cast<std::size_t>(pred.num_classes), false);

  std::vector<Region> picked;
  IndicatorTable table;
  if (provenance) provenance->clear();
  for (int k = 0; k < n_region; ++k) {
    std::vector<ClassId> available;
    for (int c = 0; c < pred.num_classes; ++c) {
      if (remaining[c] > 0 && !exhausted[c]) available.push_back(static_cast<ClassId>(c));
    }
    std::optional<Region> region;
    std::optional<ClassId> sampled;
    while (!region && !available.empty()) {
      const ClassId c = sample_class(weights, available, rng);
      region = region_for_class(pred, image, c, side, excluded, rng, table);
      if (region) {
        sampled = c;
      } else {
        exhausted[c] = true;
        available.erase(std::find(available.begin(), available.end(), c));
      }
    }
    if (!region) region = uniform_feasible_region(pred.shape, image, side, excluded, rng);
    if (!region) break;
    for (std::size_t offset : region_offsets(*region, pred.shape)) {
      --remaining[pred.pseudo_labels[offset]];
    }
    excluded.push_back(*region);
    picked.push_back(*region);
    if (provenance) provenance->push_back(sampled);
  }
  return picked;
}

}  // namespace decompal
