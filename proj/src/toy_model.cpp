#include "decompal/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "decompal/random.hpp"

namespace decompal {

TrainingSet collect_training_set(const AnnotationState& state, std::span<const ImageRecord> pool) {
  std::map<ImageId, const ImageRecord*> by_id;
  for (const auto& image : pool) by_id.emplace(image.id, &image);
  TrainingSet set;
  set.feature_dim = pool.empty() ? 0 : pool.front().feature_dim;
  for (const auto& [id, entry] : state.images()) {
    const ImageRecord& image = *by_id.at(id);
    for (std::size_t r = 0; r < entry.regions.size(); ++r) {
      const auto offsets = region_offsets(entry.regions[r], image.shape);
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const float* row = image.feature_row(offsets[k]);
        set.features.insert(set.features.end(), row, row + set.feature_dim);
        set.labels.push_back(entry.revealed[r][k]);
      }
    }
  }
  return set;
}

TrainingSet full_training_set(std::span<const ImageRecord> pool) {
  TrainingSet set;
  set.feature_dim = pool.empty() ? 0 : pool.front().feature_dim;
  for (const auto& image : pool) {
    set.features.insert(set.features.end(), image.features.begin(), image.features.end());
    set.labels.insert(set.labels.end(), image.hidden_labels.begin(), image.hidden_labels.end());
  }
  return set;
}

ToyModel::ToyModel(int feature_dim, int num_classes)
    : feature_dim_(feature_dim),
      num_classes_(num_classes),
      weights_(static_cast<std::size_t>(feature_dim + 1) * num_classes, 0.0) {
  if (feature_dim < 1 || num_classes < 1) throw ValidationError("invalid model dimensions");
}

ToyModel ToyModel::initialized(int feature_dim, int num_classes, std::uint64_t seed, double scale) {
  ToyModel model(feature_dim, num_classes);
  Rng rng(seed);
  for (double& w : model.weights_) w = scale * rng.normal();
  return model;
}

namespace {

// Softmax of the linear scores; probs has num_classes entries.
inline void forward(const double* weights, int feature_dim, int classes, const float* x,
                    double* probs) {
  const double* bias = weights + static_cast<std::size_t>(feature_dim) * classes;
  for (int c = 0; c < classes; ++c) probs[c] = bias[c];
  for (int d = 0; d < feature_dim; ++d) {
    const double v = x[d];
    const double* row = weights + static_cast<std::size_t>(d) * classes;
    for (int c = 0; c < classes; ++c) probs[c] += v * row[c];
  }
  double top = probs[0];
  for (int c = 1; c < classes; ++c) top = std::max(top, probs[c]);
  double sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    probs[c] = std::exp(probs[c] - top);
    sum += probs[c];
  }
  for (int c = 0; c < classes; ++c) probs[c] /= sum;
}

}  // namespace

void ToyModel::probabilities(const float* features, double* probs) const {
  forward(weights_.data(), feature_dim_, num_classes_, features, probs);
}

PredictionField ToyModel::predict(const ImageRecord& image) const {
  if (image.feature_dim != feature_dim_) throw ValidationError("feature dimension mismatch");
  const std::size_t n = image.shape.units();
  std::vector<float> probs(n * num_classes_);
  std::vector<double> row(num_classes_);
  for (std::size_t j = 0; j < n; ++j) {
    probabilities(image.feature_row(j), row.data());
    for (int c = 0; c < num_classes_; ++c) probs[j * num_classes_ + c] = static_cast<float>(row[c]);
  }
  return PredictionField::from_probabilities(image.shape, num_classes_, std::move(probs));
}

namespace {

constexpr int kBlock = 256;

// Mean cross-entropy and, when g is non-null, its gradient (not yet
// divided by n). Samples are processed in blocks with class-major
// scratch so the inner loops run over contiguous samples.
double accumulate_loss(const double* w, int f_dim, int classes, const TrainingSet& data,
                       double* g, bool want_loss) {
  const std::size_t n = data.size();
  std::vector<double> xt(static_cast<std::size_t>(f_dim) * kBlock);
  std::vector<double> s(static_cast<std::size_t>(classes) * kBlock);
  std::vector<double> top(kBlock), sum(kBlock);
  const double* bias = w + static_cast<std::size_t>(f_dim) * classes;
  double loss = 0.0;
  for (std::size_t i0 = 0; i0 < n; i0 += kBlock) {
    const int m = static_cast<int>(std::min<std::size_t>(kBlock, n - i0));
    const float* x = data.features.data() + i0 * f_dim;
    const ClassId* y = data.labels.data() + i0;
    for (int k = 0; k < m; ++k) {
      for (int d = 0; d < f_dim; ++d) xt[d * kBlock + k] = x[k * f_dim + d];
    }
    for (int c = 0; c < classes; ++c) {
      double* sc = s.data() + c * kBlock;
      for (int k = 0; k < m; ++k) sc[k] = bias[c];
      for (int d = 0; d < f_dim; ++d) {
        const double wdc = w[d * classes + c];
        const double* xd = xt.data() + d * kBlock;
        for (int k = 0; k < m; ++k) sc[k] += wdc * xd[k];
      }
    }
    std::copy_n(s.begin(), m, top.begin());
    for (int c = 1; c < classes; ++c) {
      const double* sc = s.data() + c * kBlock;
      for (int k = 0; k < m; ++k) top[k] = std::max(top[k], sc[k]);
    }
    if (want_loss) {
      for (int k = 0; k < m; ++k) loss += top[k] - s[y[k] * kBlock + k];
    }
    std::fill_n(sum.begin(), m, 0.0);
    for (int c = 0; c < classes; ++c) {
      double* sc = s.data() + c * kBlock;
      for (int k = 0; k < m; ++k) {
        sc[k] = std::exp(sc[k] - top[k]);
        sum[k] += sc[k];
      }
    }
    if (want_loss) {
      for (int k = 0; k < m; ++k) loss += std::log(sum[k]);
    }
    if (!g) continue;
    for (int k = 0; k < m; ++k) sum[k] = 1.0 / sum[k];
    for (int c = 0; c < classes; ++c) {
      double* sc = s.data() + c * kBlock;
      for (int k = 0; k < m; ++k) sc[k] *= sum[k];
    }
    for (int k = 0; k < m; ++k) s[y[k] * kBlock + k] -= 1.0;
    for (int c = 0; c < classes; ++c) {
      const double* sc = s.data() + c * kBlock;
      for (int d = 0; d <= f_dim; ++d) {
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        int k = 0;
        if (d < f_dim) {
          const double* xd = xt.data() + d * kBlock;
          for (; k + 4 <= m; k += 4) {
            a0 += xd[k] * sc[k];
            a1 += xd[k + 1] * sc[k + 1];
            a2 += xd[k + 2] * sc[k + 2];
            a3 += xd[k + 3] * sc[k + 3];
          }
          for (; k < m; ++k) a0 += xd[k] * sc[k];
        } else {
          for (; k + 4 <= m; k += 4) {
            a0 += sc[k];
            a1 += sc[k + 1];
            a2 += sc[k + 2];
            a3 += sc[k + 3];
          }
          for (; k < m; ++k) a0 += sc[k];
        }
        g[d * classes + c] += (a0 + a1) + (a2 + a3);
      }
    }
  }
  return loss;
}

}  // namespace

double loss_and_gradient(const ToyModel& model, const TrainingSet& data,
                         std::vector<double>* gradient) {
  if (data.feature_dim != model.feature_dim()) throw ValidationError("feature dimension mismatch");
  const std::size_t n = data.size();
  if (n == 0) throw ValidationError("empty training set");
  if (gradient) gradient->assign(model.weights().size(), 0.0);
  const double loss =
      accumulate_loss(model.weights().data(), model.feature_dim(), model.num_classes(), data,
                      gradient ? gradient->data() : nullptr, true);
  const double inv = 1.0 / static_cast<double>(n);
  if (gradient) {
    for (double& v : *gradient) v *= inv;
  }
  return loss * inv;
}

double curvature_bound(const TrainingSet& data) {
  const int dim = data.feature_dim + 1;
  const std::size_t n = data.size();
  if (n == 0) throw ValidationError("empty training set");
  std::vector<double> moment(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> x(dim, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < data.feature_dim; ++d) x[d] = data.features[i * data.feature_dim + d];
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) moment[a * dim + b] += x[a] * x[b];
    }
  }
  for (double& m : moment) m /= static_cast<double>(n);
  // The trace bounds the top eigenvalue from above; power iteration refines it.
  double trace = 0.0;
  for (int a = 0; a < dim; ++a) trace += moment[a * dim + a];
  std::vector<double> v(dim, 1.0), next(dim);
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double norm = 0.0;
    for (int a = 0; a < dim; ++a) {
      next[a] = 0.0;
      for (int b = 0; b < dim; ++b) next[a] += moment[a * dim + b] * v[b];
      norm += next[a] * next[a];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (int a = 0; a < dim; ++a) v[a] = next[a] / norm;
    lambda = norm;
  }
  // Power iteration approaches the top eigenvalue from below; a small
  // margin keeps the bound safe, and it never needs to exceed the trace.
  return 0.5 * std::min(trace, lambda * 1.01);
}

ToyModel train(const TrainingSet& data, int num_classes, const TrainingOptions& options,
               std::vector<double>* losses) {
  if (data.size() == 0) throw ValidationError("cannot train on an empty annotation set");
  if (!(options.learning_rate > 0.0) || options.epochs < 0) {
    throw ValidationError("invalid training options");
  }
  ToyModel model =
      ToyModel::initialized(data.feature_dim, num_classes, options.seed, options.init_scale);
  const double step = options.learning_rate / curvature_bound(data);
  std::vector<double> gradient;
  if (losses) losses->clear();
  gradient.resize(model.weights().size());
  const double inv = 1.0 / static_cast<double>(data.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(gradient.begin(), gradient.end(), 0.0);
    const double loss = accumulate_loss(model.weights().data(), data.feature_dim, num_classes,
                                        data, gradient.data(), losses != nullptr);
    if (losses) losses->push_back(loss * inv);
    for (double& v : gradient) v *= inv;
    auto w = model.weights();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gradient[i];
  }
  if (losses) losses->push_back(loss_and_gradient(model, data, nullptr));
  return model;
}

ToyModel train(const AnnotationState& state, std::span<const ImageRecord> pool, int num_classes,
               const TrainingOptions& options) {
  return train(collect_training_set(state, pool), num_classes, options);
}

}  // namespace decompal
