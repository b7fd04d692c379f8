#include "decompal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "decompal/random.hpp"
#include "decompal/tensor_io.hpp"

namespace decompal {

ImageShape DatasetSpec::shape() const {
  switch (mode) {
    case TaskMode::segmentation2d:
      return ImageShape::plane(height, width);
    case TaskMode::segmentation3d:
      return ImageShape::volume(depth, height, width);
    case TaskMode::roi:
      return ImageShape::rois(roi_count);
  }
  return {};
}

void DatasetSpec::validate() const {
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  if (n_images < 1 || n_test_images < 1) throw ValidationError("dataset needs train and test images");
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  if (mode == TaskMode::roi ? roi_count < 1 : (height < 1 || width < 1 || depth < 1)) {
    throw ValidationError("image shape components must be >= 1");
  }
  if (mode == TaskMode::segmentation2d && depth != 1) {
    throw ValidationError("segmentation2d datasets must have depth 1");
  }
  if (frequencies.size() != static_cast<std::size_t>(num_classes)) {
    throw ValidationError("frequency vector length must equal num_classes");
  }
  double total = 0.0;
  for (double f : frequencies) {
    if (!(f > 0.0)) throw ValidationError("class frequencies must be > 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("class frequencies must sum to 1");
  if (!class_means.empty() &&
      class_means.size() != static_cast<std::size_t>(num_classes) * feature_dim) {
    throw ValidationError("class_means must hold num_classes x feature_dim values");
  }
  if (!(noise >= 0.0)) throw ValidationError("noise must be >= 0");
  if (mode != TaskMode::roi && voronoi_seeds < 1) throw ValidationError("voronoi_seeds must be >= 1");
  if (!(drift >= 0.0)) throw ValidationError("drift must be >= 0");
}

std::size_t Dataset::train_units() const {
  std::size_t n = 0;
  for (const auto& image : train) n += image.shape.units();
  return n;
}

namespace {

enum Salt : std::uint64_t { kMeans = 0, kGeometry = 1, kAssignment = 2, kFeatures = 3 };

struct Partition {
  std::vector<int> cell;         // per unit
  std::vector<std::size_t> area;  // per cell
};

Partition voronoi_partition(const ImageShape& shape, const DatasetSpec& spec, Rng& rng) {
  Partition p;
  p.cell.resize(shape.units());
  if (shape.is_roi()) {
    std::iota(p.cell.begin(), p.cell.end(), 0);
    p.area.assign(shape.units(), 1);
    return p;
  }
  const int k = spec.voronoi_seeds;
  std::vector<double> sy(k), sx(k);
  for (int s = 0; s < k; ++s) {
    sy[s] = rng.uniform() * shape.height;
    sx[s] = rng.uniform() * shape.width;
  }
  p.area.assign(k, 0);
  std::size_t unit = 0;
  for (int z = 0; z < shape.depth; ++z) {
    if (z > 0) {
      for (int s = 0; s < k; ++s) {
        sy[s] = std::clamp(sy[s] + spec.drift * rng.normal(), 0.0, static_cast<double>(shape.height));
        sx[s] = std::clamp(sx[s] + spec.drift * rng.normal(), 0.0, static_cast<double>(shape.width));
      }
    }
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x, ++unit) {
        const double py = y + 0.5, px = x + 0.5;
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int s = 0; s < k; ++s) {
          const double d = (py - sy[s]) * (py - sy[s]) + (px - sx[s]) * (px - sx[s]);
          if (d < best_d) {
            best_d = d;
            best = s;
          }
        }
        p.cell[unit] = best;
        ++p.area[best];
      }
    }
  }
  return p;
}

// Gives every cell a class so that pixel totals track frequencies * total:
// cells are visited in random order and each draws a class with
// probability proportional to that class's remaining pixel deficit.
std::vector<std::vector<ClassId>> assign_classes(const std::vector<Partition>& partitions,
                                                 const std::vector<double>& frequencies, Rng& rng) {
  struct CellRef {
    std::size_t image;
    std::size_t cell;
  };
  std::vector<CellRef> cells;
  double total = 0.0;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    for (std::size_t c = 0; c < partitions[i].area.size(); ++c) {
      if (partitions[i].area[c] == 0) continue;
      cells.push_back({i, c});
      total += static_cast<double>(partitions[i].area[c]);
    }
  }
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng.index(i)]);

  std::vector<double> deficit(frequencies.size());
  for (std::size_t c = 0; c < frequencies.size(); ++c) deficit[c] = frequencies[c] * total;

  std::vector<std::vector<ClassId>> classes(partitions.size());
  for (std::size_t i = 0; i < partitions.size(); ++i) classes[i].assign(partitions[i].area.size(), 0);
  std::vector<double> weight(frequencies.size());
  for (const auto& ref : cells) {
    double mass = 0.0;
    for (std::size_t c = 0; c < weight.size(); ++c) {
      weight[c] = std::max(deficit[c], 0.0);
      mass += weight[c];
    }
    if (!(mass > 0.0)) {
      weight = frequencies;
      mass = 1.0;
    }
    const double target = rng.uniform() * mass;
    double running = 0.0;
    std::size_t pick = weight.size() - 1;
    for (std::size_t c = 0; c < weight.size(); ++c) {
      running += weight[c];
      if (target < running && weight[c] > 0.0) {
        pick = c;
        break;
      }
    }
    classes[ref.image][ref.cell] = static_cast<ClassId>(pick);
    deficit[pick] -= static_cast<double>(partitions[ref.image].area[ref.cell]);
  }
  return classes;
}

std::vector<ImageRecord> generate_split(const DatasetSpec& spec, const std::vector<double>& means,
                                        int count, std::uint64_t split, std::uint64_t first_global) {
  const ImageShape shape = spec.shape();
  std::vector<Partition> partitions;
  partitions.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(stream_seed(spec.seed, kGeometry, first_global + i));
    partitions.push_back(voronoi_partition(shape, spec, rng));
  }
  Rng assign_rng(stream_seed(spec.seed, kAssignment, split));
  const auto classes = assign_classes(partitions, spec.frequencies, assign_rng);

  std::vector<ImageRecord> images;
  images.reserve(count);
  const int f_dim = spec.feature_dim;
  for (int i = 0; i < count; ++i) {
    Rng rng(stream_seed(spec.seed, kFeatures, first_global + i));
    ImageRecord record;
    record.id = static_cast<ImageId>(i);
    record.shape = shape;
    record.feature_dim = f_dim;
    record.hidden_labels.resize(shape.units());
    record.features.resize(shape.units() * f_dim);
    for (std::size_t u = 0; u < shape.units(); ++u) {
      const ClassId label = classes[i][partitions[i].cell[u]];
      record.hidden_labels[u] = label;
      for (int d = 0; d < f_dim; ++d) {
        record.features[u * f_dim + d] =
            static_cast<float>(means[label * f_dim + d] + spec.noise * rng.normal());
      }
    }
    images.push_back(std::move(record));
  }
  return images;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset data;
  data.mode = spec.mode;
  data.num_classes = spec.num_classes;
  data.feature_dim = spec.feature_dim;
  data.class_means = spec.class_means;
  if (data.class_means.empty()) {
    Rng rng(stream_seed(spec.seed, kMeans));
    data.class_means.resize(static_cast<std::size_t>(spec.num_classes) * spec.feature_dim);
    for (double& m : data.class_means) m = spec.mean_scale * rng.normal();
  }
  data.train = generate_split(spec, data.class_means, spec.n_images, 0, 0);
  data.test = generate_split(spec, data.class_means, spec.n_test_images, 1,
                             static_cast<std::uint64_t>(spec.n_images));
  return data;
}

namespace {

std::vector<std::uint32_t> tensor_dims(const ImageShape& shape, std::size_t count) {
  std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(count)};
  switch (shape.mode) {
    case TaskMode::segmentation2d:
      dims.push_back(shape.height);
      dims.push_back(shape.width);
      break;
    case TaskMode::segmentation3d:
      dims.push_back(shape.depth);
      dims.push_back(shape.height);
      dims.push_back(shape.width);
      break;
    case TaskMode::roi:
      dims.push_back(shape.roi_count());
      break;
  }
  return dims;
}

void save_split(const std::vector<ImageRecord>& images, const std::filesystem::path& dir,
                const std::string& prefix, int feature_dim) {
  if (images.empty()) throw ValidationError("cannot save an empty split");
  const auto dims = tensor_dims(images.front().shape, images.size());
  std::vector<std::uint16_t> labels;
  std::vector<float> features;
  for (const auto& image : images) {
    for (ClassId c : image.hidden_labels) labels.push_back(static_cast<std::uint16_t>(c + 1));
    features.insert(features.end(), image.features.begin(), image.features.end());
  }
  save_tensor(dir / (prefix + "_labels.dten"), DenseTensor{dims, std::move(labels)});
  auto feature_dims = dims;
  feature_dims.push_back(static_cast<std::uint32_t>(feature_dim));
  save_tensor(dir / (prefix + "_features.dten"), DenseTensor{feature_dims, std::move(features)});
}

ImageShape shape_from_dims(TaskMode mode, const std::vector<std::uint32_t>& dims) {
  const auto d = [&](std::size_t i) { return static_cast<int>(dims.at(i)); };
  switch (mode) {
    case TaskMode::segmentation2d:
      if (dims.size() != 3) break;
      return ImageShape::plane(d(1), d(2));
    case TaskMode::segmentation3d:
      if (dims.size() != 4) break;
      return ImageShape::volume(d(1), d(2), d(3));
    case TaskMode::roi:
      if (dims.size() != 2) break;
      return ImageShape::rois(d(1));
  }
  throw ValidationError("label tensor rank does not match the dataset mode");
}

std::vector<ImageRecord> load_split(const std::filesystem::path& dir, const std::string& prefix,
                                    TaskMode mode, int num_classes, int feature_dim) {
  const auto labels = load_tensor(dir / (prefix + "_labels.dten"));
  const auto features = load_tensor(dir / (prefix + "_features.dten"));
  if (labels.dtype() != DType::u16 || features.dtype() != DType::f32) {
    throw ValidationError("unexpected tensor dtypes in " + prefix);
  }
  const ImageShape shape = shape_from_dims(mode, labels.dims);
  auto expected = labels.dims;
  expected.push_back(static_cast<std::uint32_t>(feature_dim));
  if (features.dims != expected) throw ValidationError("feature tensor does not match labels");
  const std::size_t count = labels.dims.front();
  const std::size_t units = shape.units();
  std::vector<ImageRecord> images(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& record = images[i];
    record.id = static_cast<ImageId>(i);
    record.shape = shape;
    record.feature_dim = feature_dim;
    record.hidden_labels.resize(units);
    for (std::size_t u = 0; u < units; ++u) {
      const auto v = labels.u16()[i * units + u];
      if (v < 1 || v > num_classes) throw ValidationError("label tensor value outside 1..C");
      record.hidden_labels[u] = static_cast<ClassId>(v - 1);
    }
    const auto begin = features.f32().begin() + static_cast<std::ptrdiff_t>(i * units * feature_dim);
    record.features.assign(begin, begin + static_cast<std::ptrdiff_t>(units * feature_dim));
  }
  return images;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta{{"mode", to_string(dataset.mode)},
                      {"num_classes", dataset.num_classes},
                      {"feature_dim", dataset.feature_dim},
                      {"class_means", dataset.class_means}};
  std::ofstream out(dir / "meta.json");
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
  save_split(dataset.train, dir, "train", dataset.feature_dim);
  save_split(dataset.test, dir, "test", dataset.feature_dim);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw ValidationError("no meta.json in " + dir.string());
  nlohmann::json meta;
  try {
    in >> meta;
    Dataset data;
    data.mode = parse_task_mode(meta.at("mode").get<std::string>());
    data.num_classes = meta.at("num_classes").get<int>();
    data.feature_dim = meta.at("feature_dim").get<int>();
    data.class_means = meta.value("class_means", std::vector<double>{});
    data.train = load_split(dir, "train", data.mode, data.num_classes, data.feature_dim);
    data.test = load_split(dir, "test", data.mode, data.num_classes, data.feature_dim);
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed meta.json: ") + e.what());
  }
}

}  // namespace decompal
