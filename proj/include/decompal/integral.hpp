#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "decompal/types.hpp"

namespace decompal {

// Summed-area table with a zero border: sum(y, x) holds the total of the
// source over [0, y) x [0, x).
template <typename T>
class IntegralTable {
 public:
  IntegralTable() = default;

  // value(y, x) supplies the source map.
  template <typename Source>
  static IntegralTable build(int height, int width, Source&& value) {
    IntegralTable table;
    table.assign(height, width, std::forward<Source>(value));
    return table;
  }

  // Rebuilds in place, reusing the existing storage.
  template <typename Source>
  void assign(int height, int width, Source&& value) {
    if (height < 1 || width < 1) throw ValidationError("integral table source map is empty");
    height_ = height;
    width_ = width;
    const std::size_t stride = static_cast<std::size_t>(width) + 1;
    sums_.resize((static_cast<std::size_t>(height) + 1) * stride);
    std::fill_n(sums_.begin(), stride, T{});
    for (int y = 0; y < height; ++y) {
      T row = T{};
      const T* above = sums_.data() + static_cast<std::size_t>(y) * stride;
      T* out = sums_.data() + static_cast<std::size_t>(y + 1) * stride;
      out[0] = T{};
      for (int x = 0; x < width; ++x) {
        row += static_cast<T>(value(y, x));
        out[x + 1] = above[x + 1] + row;
      }
    }
  }

  static IntegralTable from_values(std::span<const T> values, int height, int width) {
    if (values.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw ValidationError("source map does not match table dimensions");
    }
    return build(height, width, [&](int y, int x) {
      return values[static_cast<std::size_t>(y) * width + x];
    });
  }

  int height() const { return height_; }
  int width() const { return width_; }

  T at(int y, int x) const {
    return sums_[static_cast<std::size_t>(y) * (static_cast<std::size_t>(width_) + 1) + x];
  }

  T rect_sum(int y, int x, int h, int w) const {
    return at(y + h, x + w) - at(y, x + w) - at(y + h, x) + at(y, x);
  }

  T total() const { return at(height_, width_); }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> sums_;
};

using CountTable = IntegralTable<std::int64_t>;
// Pixel counts of one class; fits planes below 2^31 pixels.
using IndicatorTable = IntegralTable<std::int32_t>;
using ScalarTable = IntegralTable<double>;

// Indicator table of [labels == cls] over a height x width plane.
IndicatorTable build_indicator_integral(std::span<const ClassId> labels, int height, int width,
                                        ClassId cls);

// Same, rebuilt into an existing table.
void fill_indicator_integral(IndicatorTable& table, std::span<const ClassId> labels, int height,
                             int width, ClassId cls);

ScalarTable build_integral(std::span<const double> map, int height, int width);

// Calls fn(y, x) for every origin of a side x side window that lies inside
// a height x width plane and shares no pixel with any excluded square, in
// row-major order.
template <typename Fn>
void for_each_feasible_origin(int height, int width, int side, std::span<const SquareArea> excluded,
                              Fn&& fn) {
  if (side < 1 || side > height || side > width) return;
  std::vector<std::pair<int, int>> blocked;
  for (int y = 0; y + side <= height; ++y) {
    blocked.clear();
    for (const auto& e : excluded) {
      if (e.y < y + side && y < e.y + e.side) {
        // Origins x in [e.x - side + 1, e.x + e.side - 1] collide with e.
        blocked.emplace_back(std::max(0, e.x - side + 1), e.x + e.side - 1);
      }
    }
    std::sort(blocked.begin(), blocked.end());
    std::size_t next = 0;
    int x = 0;
    while (x + side <= width) {
      while (next < blocked.size() && blocked[next].second < x) ++next;
      if (next < blocked.size() && blocked[next].first <= x) {
        x = blocked[next].second + 1;
        continue;
      }
      const int stop = next < blocked.size() ? std::min(blocked[next].first, width - side + 1)
                                             : width - side + 1;
      for (; x < stop; ++x) fn(y, x);
    }
  }
}

template <typename T>
struct WindowHit {
  int y = 0;
  int x = 0;
  T value{};

  bool operator==(const WindowHit&) const = default;
};

// Feasible origin with the largest window sum; ties go to the smallest
// (y, x). With require_positive, a best sum <= 0 yields nullopt.
template <typename T>
std::optional<WindowHit<T>> window_argmax(const IntegralTable<T>& table, int side,
                                          std::span<const SquareArea> excluded,
                                          bool require_positive) {
  if (side < 1 || side > table.height() || side > table.width()) {
    throw ValidationError("window side exceeds the map");
  }
  std::optional<WindowHit<T>> best;
  for_each_feasible_origin(table.height(), table.width(), side, excluded, [&](int y, int x) {
    const T sum = table.rect_sum(y, x, side, side);
    if (!best || sum > best->value) best = WindowHit<T>{y, x, sum};
  });
  if (best && require_positive && !(best->value > T{})) return std::nullopt;
  return best;
}

// Mean over every stride-one side x side window; (H-side+1) x (W-side+1).
std::vector<double> window_mean_map(const ScalarTable& table, int side);

}  // namespace decompal
