#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "decompal/kmeans.hpp"
#include "decompal/random.hpp"
#include "decompal/types.hpp"

namespace decompal {

inline constexpr int kDefaultDiversFactor = 3;

enum class UncertaintyMeasure { entropy, least_confidence };

std::string to_string(UncertaintyMeasure measure);
UncertaintyMeasure parse_uncertainty_measure(const std::string& text);

// -sum_c p_c ln p_c per unit (0 ln 0 = 0). Requires full probabilities.
std::vector<double> entropy_map(const PredictionField& pred);

// 1 - max_prob per unit.
std::vector<double> least_confidence_map(const PredictionField& pred);

std::vector<double> uncertainty_map(const PredictionField& pred, UncertaintyMeasure measure);

double mean_uncertainty(std::span<const double> umap);

struct ScoredRegion {
  Region region;
  double uncertainty = 0.0;
};

// Greedy non-maximum suppression over stride-one windows: repeatedly takes
// the feasible window with the highest mean uncertainty (ties to the
// smallest (z, y, x)) until n_region picks or no feasible window remains.
// ROI images rank unexcluded ROIs directly (ties to the lowest index).
//
// Window sums run on a fixed-point copy of the map (2^-32 resolution) so
// that equal windows compare equal exactly.
std::vector<ScoredRegion> uncert_select_regions(std::span<const double> umap,
                                                const ImageShape& shape, ImageId image, int side,
                                                int n_region, std::span<const Region> excluded);

// Mean per-class probability over the region followed by its normalized
// pseudo-label histogram (length 2C).
FeatureVector region_feature(const PredictionField& pred, const Region& region);

// region_feature scaled by each component of the mean discrepancy
// (p - onehot(pseudo label)) over the region; length 2C * C, laid out as
// C consecutive copies of the feature, one per discrepancy component.
FeatureVector gradient_embedding(const PredictionField& pred, const Region& region);

struct Candidate {
  Region region;
  double uncertainty = 0.0;
  FeatureVector feature;
  FeatureVector embedding;
};

// The factor * n_region most uncertain non-overlapping regions of one image.
std::vector<Candidate> image_candidates(const PredictionField& pred, std::span<const double> umap,
                                        ImageId image, int side, int factor, int n_region,
                                        std::span<const Region> annotated);

struct CandidateSource {
  ImageId image = 0;
  const PredictionField* pred = nullptr;
  std::span<const double> umap;
  std::span<const Region> annotated;
};

// Pools image_candidates over all sources, in source order.
std::vector<Candidate> divers_candidate_pool(std::span<const CandidateSource> sources, int side,
                                             int factor, int n_region);

// k-means with k = budget over candidate features; from every non-empty
// cluster the most uncertain candidate (ties to the smallest region key).
std::vector<Region> divers_cluster_select(std::span<const Candidate> pool, std::size_t budget,
                                          Rng& rng);

// Greedy k-center from the most uncertain candidate.
std::vector<Region> divers_coreset_select(std::span<const Candidate> pool, std::size_t budget);

// k-means++ sampling over gradient embeddings; the first pick is uniform
// over the embeddings of maximal norm.
std::vector<Region> badge_select(std::span<const Candidate> pool, std::size_t budget, Rng& rng);

// Up to n_region uniformly random pairwise-disjoint feasible regions.
std::vector<Region> rand_select_regions(const ImageShape& shape, ImageId image, int side,
                                        int n_region, std::span<const Region> annotated, Rng& rng);

}  // namespace decompal
