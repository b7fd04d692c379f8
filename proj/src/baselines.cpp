#include "decompal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "decompal/integral.hpp"
#include "decompal/region_space.hpp"

namespace decompal {

std::string to_string(UncertaintyMeasure measure) {
  return measure == UncertaintyMeasure::entropy ? "entropy" : "least_confidence";
}

UncertaintyMeasure parse_uncertainty_measure(const std::string& text) {
  if (text == "entropy") return UncertaintyMeasure::entropy;
  if (text == "least_confidence") return UncertaintyMeasure::least_confidence;
  throw ValidationError("unknown uncertainty measure '" + text + "'");
}

std::vector<double> entropy_map(const PredictionField& pred) {
  if (!pred.has_full_probs()) throw ValidationError("entropy needs full class probabilities");
  const std::size_t n = pred.shape.units();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const float* row = pred.probs_row(j);
    double h = 0.0;
    for (int c = 0; c < pred.num_classes; ++c) {
      const double p = row[c];
      if (p > 0.0) h -= p * std::log(p);
    }
    out[j] = h;
  }
  return out;
}

std::vector<double> least_confidence_map(const PredictionField& pred) {
  std::vector<double> out(pred.max_prob.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = 1.0 - static_cast<double>(pred.max_prob[j]);
  return out;
}

std::vector<double> uncertainty_map(const PredictionField& pred, UncertaintyMeasure measure) {
  return measure == UncertaintyMeasure::entropy ? entropy_map(pred) : least_confidence_map(pred);
}

double mean_uncertainty(std::span<const double> umap) {
  if (umap.empty()) return 0.0;
  return std::accumulate(umap.begin(), umap.end(), 0.0) / static_cast<double>(umap.size());
}

namespace {

constexpr double kQuantum = 4294967296.0;  // 2^32

std::vector<ScoredRegion> top_rois(std::span<const double> umap, const ImageShape& shape,
                                   ImageId image, int n_region, std::span<const Region> excluded) {
  std::vector<int> open;
  for (int j = 0; j < shape.roi_count(); ++j) {
    if (!roi_taken(excluded, j)) open.push_back(j);
  }
  std::stable_sort(open.begin(), open.end(), [&](int a, int b) { return umap[a] > umap[b]; });
  std::vector<ScoredRegion> out;
  for (int j : open) {
    if (static_cast<int>(out.size()) >= n_region) break;
    out.push_back({Region::roi(image, j), umap[j]});
  }
  return out;
}

}  // namespace

std::vector<ScoredRegion> uncert_select_regions(std::span<const double> umap,
                                                const ImageShape& shape, ImageId image, int side,
                                                int n_region, std::span<const Region> excluded) {
  if (umap.size() != shape.units()) throw ValidationError("uncertainty map does not match shape");
  if (shape.is_roi()) return top_rois(umap, shape, image, n_region, excluded);
  if (side < 1 || side > shape.height || side > shape.width) {
    throw ValidationError("region side exceeds image plane");
  }

  std::vector<CountTable> tables;
  tables.reserve(static_cast<std::size_t>(shape.depth));
  for (int z = 0; z < shape.depth; ++z) {
    const double* slice = umap.data() + z * shape.slice_units();
    tables.push_back(CountTable::build(shape.height, shape.width, [&](int y, int x) {
      return static_cast<std::int64_t>(std::llround(slice[y * shape.width + x] * kQuantum));
    }));
  }

  std::vector<Region> blocked(excluded.begin(), excluded.end());
  std::vector<ScoredRegion> out;
  const double area = static_cast<double>(side) * side;
  while (static_cast<int>(out.size()) < n_region) {
    std::optional<WindowHit<std::int64_t>> best;
    int best_z = 0;
    for (int z = 0; z < shape.depth; ++z) {
      const auto squares = squares_on_slice(blocked, z);
      auto hit = window_argmax(tables[z], side, squares, /*require_positive=*/false);
      if (hit && (!best || hit->value > best->value)) {
        best = hit;
        best_z = z;
      }
    }
    if (!best) break;
    Region r = Region::square(image, best->y, best->x, side, best_z);
    blocked.push_back(r);
    out.push_back({r, static_cast<double>(best->value) / kQuantum / area});
  }
  return out;
}

FeatureVector region_feature(const PredictionField& pred, const Region& region) {
  if (!pred.has_full_probs()) throw ValidationError("region features need full probabilities");
  const int classes = pred.num_classes;
  FeatureVector feature(2 * static_cast<std::size_t>(classes), 0.0);
  const auto offsets = region_offsets(region, pred.shape);
  for (std::size_t j : offsets) {
    const float* row = pred.probs_row(j);
    for (int c = 0; c < classes; ++c) feature[c] += row[c];
    feature[classes + pred.pseudo_labels[j]] += 1.0;
  }
  for (double& v : feature) v /= static_cast<double>(offsets.size());
  return feature;
}

FeatureVector gradient_embedding(const PredictionField& pred, const Region& region) {
  const FeatureVector feature = region_feature(pred, region);
  const int classes = pred.num_classes;
  // Mean discrepancy: mean probability minus the pseudo-label histogram.
  FeatureVector embedding;
  embedding.reserve(feature.size() * classes);
  for (int c = 0; c < classes; ++c) {
    const double discrepancy = feature[c] - feature[classes + c];
    for (double v : feature) embedding.push_back(v * discrepancy);
  }
  return embedding;
}

std::vector<Candidate> image_candidates(const PredictionField& pred, std::span<const double> umap,
                                        ImageId image, int side, int factor, int n_region,
                                        std::span<const Region> annotated) {
  if (factor < 1) throw ValidationError("candidate factor must be >= 1");
  const auto scored =
      uncert_select_regions(umap, pred.shape, image, side, factor * n_region, annotated);
  std::vector<Candidate> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    out.push_back(Candidate{s.region, s.uncertainty, region_feature(pred, s.region),
                            gradient_embedding(pred, s.region)});
  }
  return out;
}

std::vector<Candidate> divers_candidate_pool(std::span<const CandidateSource> sources, int side,
                                             int factor, int n_region) {
  std::vector<Candidate> pool;
  for (const auto& src : sources) {
    auto part = image_candidates(*src.pred, src.umap, src.image, side, factor, n_region, src.annotated);
    std::move(part.begin(), part.end(), std::back_inserter(pool));
  }
  return pool;
}

namespace {

std::vector<Region> regions_of(std::span<const Candidate> pool) {
  std::vector<Region> out;
  out.reserve(pool.size());
  for (const auto& c : pool) out.push_back(c.region);
  return out;
}

// True when a should be preferred over b: more uncertain, then smaller key.
bool more_uncertain(const Candidate& a, const Candidate& b) {
  if (a.uncertainty != b.uncertainty) return a.uncertainty > b.uncertainty;
  return a.region.key() < b.region.key();
}

}  // namespace

std::vector<Region> divers_cluster_select(std::span<const Candidate> pool, std::size_t budget,
                                          Rng& rng) {
  if (budget == 0 || pool.empty()) return {};
  if (budget >= pool.size()) return regions_of(pool);
  std::vector<FeatureVector> features;
  features.reserve(pool.size());
  for (const auto& c : pool) features.push_back(c.feature);
  const auto clusters = kmeans(features, budget, rng);

  std::vector<std::optional<std::size_t>> best(budget);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& slot = best[clusters.assignment[i]];
    if (!slot || more_uncertain(pool[i], pool[*slot])) slot = i;
  }
  std::vector<Region> out;
  for (const auto& slot : best) {
    if (slot) out.push_back(pool[*slot].region);
  }
  return out;
}

std::vector<Region> divers_coreset_select(std::span<const Candidate> pool, std::size_t budget) {
  if (budget == 0 || pool.empty()) return {};
  budget = std::min(budget, pool.size());
  std::size_t seed = 0;
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (more_uncertain(pool[i], pool[seed])) seed = i;
  }
  std::vector<bool> chosen(pool.size(), false);
  std::vector<double> nearest(pool.size(), std::numeric_limits<double>::infinity());
  std::vector<Region> out;
  std::size_t pick = seed;
  for (;;) {
    chosen[pick] = true;
    out.push_back(pool[pick].region);
    if (out.size() == budget) break;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(pool[i].feature, pool[pick].feature));
    }
    std::optional<std::size_t> next;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (chosen[i]) continue;
      if (!next || nearest[i] > nearest[*next] ||
          (nearest[i] == nearest[*next] && pool[i].region.key() < pool[*next].region.key())) {
        next = i;
      }
    }
    pick = *next;
  }
  return out;
}

std::vector<Region> badge_select(std::span<const Candidate> pool, std::size_t budget, Rng& rng) {
  if (budget == 0 || pool.empty()) return {};
  if (budget >= pool.size()) return regions_of(pool);
  std::vector<FeatureVector> embeddings;
  embeddings.reserve(pool.size());
  std::vector<double> norms;
  for (const auto& c : pool) {
    embeddings.push_back(c.embedding);
    norms.push_back(std::inner_product(c.embedding.begin(), c.embedding.end(), c.embedding.begin(), 0.0));
  }
  const double max_norm = *std::max_element(norms.begin(), norms.end());
  std::vector<std::size_t> largest;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] == max_norm) largest.push_back(i);
  }
  std::vector<Region> out;
  for (std::size_t i : kmeanspp_seeds(embeddings, budget, rng, largest)) out.push_back(pool[i].region);
  return out;
}

std::vector<Region> rand_select_regions(const ImageShape& shape, ImageId image, int side,
                                        int n_region, std::span<const Region> annotated, Rng& rng) {
  std::vector<Region> excluded(annotated.begin(), annotated.end());
  std::vector<Region> out;
  for (int k = 0; k < n_region; ++k) {
    auto r = sample_feasible_region(shape, image, side, excluded, rng);
    if (!r) break;
    excluded.push_back(*r);
    out.push_back(*r);
  }
  return out;
}

}  // namespace decompal
