#include "decompal/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decompal/types.hpp"

namespace decompal {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

std::vector<std::size_t> kmeanspp_seeds(std::span<const FeatureVector> points, std::size_t k,
                                        Rng& rng, std::span<const std::size_t> first_candidates) {
  const std::size_t n = points.size();
  if (k > n) throw ValidationError("more seeds requested than points");
  std::vector<std::size_t> seeds;
  if (k == 0) return seeds;
  std::vector<bool> chosen(n, false);
  const std::size_t first = first_candidates.empty()
                                ? static_cast<std::size_t>(rng.index(n))
                                : first_candidates[rng.index(first_candidates.size())];
  seeds.push_back(first);
  chosen[first] = true;

  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points[i], points[first]);
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || nearest[i] <= 0.0) continue;
        running += nearest[i];
        pick = i;
        if (target < running) break;
      }
    } else {
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) open.push_back(i);
      }
      pick = open[rng.index(open.size())];
    }
    seeds.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], points[pick]));
    }
  }
  return seeds;
}

namespace {

double assign(std::span<const FeatureVector> points, const std::vector<FeatureVector>& centers,
              std::vector<std::size_t>& assignment) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_center = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = squared_distance(points[i], centers[c]);
      if (d < best) {
        best = d;
        best_center = c;
      }
    }
    assignment[i] = best_center;
    inertia += best;
  }
  return inertia;
}

}  // namespace

KMeansResult kmeans(std::span<const FeatureVector> points, std::size_t k, Rng& rng,
                    int max_iterations, double tolerance) {
  if (k == 0) throw ValidationError("k must be >= 1");
  if (k > points.size()) throw ValidationError("k exceeds the number of points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("feature vectors differ in length");
  }

  KMeansResult result;
  for (std::size_t s : kmeanspp_seeds(points, k, rng)) result.centers.push_back(points[s]);
  result.assignment.assign(points.size(), 0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    assign(points, result.centers, result.assignment);
    std::vector<FeatureVector> sums(k, FeatureVector(dim, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& sum = sums[result.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) sum[d] += points[i][d];
      ++sizes[result.assignment[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (double& v : sums[c]) v /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(sums[c], result.centers[c])));
      result.centers[c] = std::move(sums[c]);
    }
    result.iterations = iter + 1;
    if (shift < tolerance) break;
  }
  result.inertia = assign(points, result.centers, result.assignment);
  return result;
}

}  // namespace decompal
