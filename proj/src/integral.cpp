#include "decompal/integral.hpp"

namespace decompal {

IndicatorTable build_indicator_integral(std::span<const ClassId> labels, int height, int width,
                                        ClassId cls) {
  IndicatorTable table;
  fill_indicator_integral(table, labels, height, width, cls);
  return table;
}

void fill_indicator_integral(IndicatorTable& table, std::span<const ClassId> labels, int height,
                             int width, ClassId cls) {
  if (labels.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ValidationError("label map does not match table dimensions");
  }
  table.assign(height, width, [&](int y, int x) -> std::int32_t {
    return labels[static_cast<std::size_t>(y) * width + x] == cls ? 1 : 0;
  });
}

ScalarTable build_integral(std::span<const double> map, int height, int width) {
  return ScalarTable::from_values(map, height, width);
}

std::vector<double> window_mean_map(const ScalarTable& table, int side) {
  if (side < 1 || side > table.height() || side > table.width()) {
    throw ValidationError("window side exceeds the map");
  }
  const int out_h = table.height() - side + 1;
  const int out_w = table.width() - side + 1;
  const double area = static_cast<double>(side) * side;
  std::vector<double> means(static_cast<std::size_t>(out_h) * out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      means[static_cast<std::size_t>(y) * out_w + x] = table.rect_sum(y, x, side, side) / area;
    }
  }
  return means;
}

}  // namespace decompal
