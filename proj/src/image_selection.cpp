#include "decompal/image_selection.hpp"

#include <algorithm>

namespace decompal {
namespace {

// Shared loop-restart driver. `order` lists the pool in preference order;
// `next_pick` chooses among the currently eligible candidates.
template <typename Pick>
std::vector<ImageId> run_loop(std::vector<ImageId> pool, std::set<ImageId>& visited, int n_image,
                              Pick&& next_pick) {
  if (pool.empty()) throw ValidationError("image pool is empty");
  if (n_image < 1) throw ValidationError("n_image must be >= 1");
  std::vector<ImageId> picked;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(n_image), pool.size());
  bool restarted = false;
  while (picked.size() < want) {
    std::vector<ImageId> eligible;
    for (ImageId id : pool) {
      if (!visited.contains(id)) eligible.push_back(id);
    }
    if (eligible.empty()) {
      if (restarted) break;
      visited.clear();
      visited.insert(picked.begin(), picked.end());
      restarted = true;
      continue;
    }
    const ImageId id = next_pick(eligible);
    picked.push_back(id);
    visited.insert(id);
  }
  return picked;
}

}  // namespace

std::vector<ImageId> select_top_images(std::span<const ImageScore> pool, std::set<ImageId>& visited,
                                       int n_image) {
  std::vector<ImageScore> ranked(pool.begin(), pool.end());
  std::sort(ranked.begin(), ranked.end(), [](const ImageScore& a, const ImageScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image < b.image;
  });
  std::vector<ImageId> order;
  order.reserve(ranked.size());
  for (const auto& s : ranked) order.push_back(s.image);
  // Eligible lists preserve the ranking, so the best candidate is first.
  return run_loop(std::move(order), visited, n_image,
                  [](const std::vector<ImageId>& eligible) { return eligible.front(); });
}

std::vector<ImageId> select_images(std::span<const ImageScore> pool, AnnotationState& state,
                                   int n_image) {
  return select_top_images(pool, state.loop_visited(), n_image);
}

std::vector<ImageId> select_random_images(std::span<const ImageId> pool, std::set<ImageId>& visited,
                                          int n_image, Rng& rng) {
  std::vector<ImageId> order(pool.begin(), pool.end());
  std::sort(order.begin(), order.end());
  return run_loop(std::move(order), visited, n_image, [&](const std::vector<ImageId>& eligible) {
    return eligible[rng.index(eligible.size())];
  });
}

}  // namespace decompal
