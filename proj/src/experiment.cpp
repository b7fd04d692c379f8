#include "decompal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "decompal/image_selection.hpp"
#include "decompal/parallel.hpp"
#include "decompal/region_space.hpp"

namespace decompal {

Strategy parse_strategy(const std::string& name) {
  static const std::map<std::string, ImageSelectorKind> images{
      {"rand", ImageSelectorKind::rand},
      {"uncert", ImageSelectorKind::uncert},
      {"decomp", ImageSelectorKind::decomp}};
  static const std::map<std::string, RegionSelectorKind> regions{
      {"rand", RegionSelectorKind::rand},
      {"uncert", RegionSelectorKind::uncert},
      {"divers_cluster", RegionSelectorKind::divers_cluster},
      {"divers_coreset", RegionSelectorKind::divers_coreset},
      {"badge", RegionSelectorKind::badge},
      {"decomp", RegionSelectorKind::decomp}};

  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const auto image = images.find(name.substr(0, colon));
    const auto region = regions.find(name.substr(colon + 1));
    if (image == images.end() || region == regions.end()) {
      throw ValidationError("unknown strategy pair '" + name + "'");
    }
    return Strategy{name, image->second, region->second};
  }
  const auto region = regions.find(name);
  if (region == regions.end()) throw ValidationError("unknown strategy '" + name + "'");
  ImageSelectorKind image = ImageSelectorKind::uncert;
  if (name == "rand") image = ImageSelectorKind::rand;
  if (name == "decomp") image = ImageSelectorKind::decomp;
  return Strategy{name, image, region->second};
}

std::string to_string(CapMode mode) {
  switch (mode) {
    case CapMode::automatic:
      return "auto";
    case CapMode::fraction:
      return "fraction";
    case CapMode::roi:
      return "roi";
  }
  return "auto";
}

CapMode parse_cap_mode(const std::string& text) {
  if (text == "auto") return CapMode::automatic;
  if (text == "fraction") return CapMode::fraction;
  if (text == "roi") return CapMode::roi;
  throw ValidationError("unknown cap mode '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) {
    dataset.validate();
    if (dataset.mode != TaskMode::roi &&
        region_size > std::min(dataset.height, dataset.width)) {
      throw ValidationError("region_size exceeds the image plane");
    }
    if (n_image > dataset.n_images) throw ValidationError("n_image exceeds the pool size");
    if (!class_weight_mask.empty() &&
        class_weight_mask.size() != static_cast<std::size_t>(dataset.num_classes)) {
      throw ValidationError("class_weight_mask length must equal num_classes");
    }
  }
  if (n_image < 1 || n_region < 1 || region_size < 1) {
    throw ValidationError("n_image, n_region and region_size must be >= 1");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw ValidationError("target_fraction must lie in (0, 1]");
  }
  if (!(cap_fraction > 0.0)) throw ValidationError("cap_fraction must be > 0");
  if (divers_factor < 1) throw ValidationError("divers_factor must be >= 1");
  if (max_cycles < 1) throw ValidationError("max_cycles must be >= 1");
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (epochs < 1 || !(learning_rate > 0.0)) throw ValidationError("invalid training options");
  if (strategies.empty()) throw ValidationError("no strategies configured");
  for (const auto& s : strategies) parse_strategy(s);
  for (double m : class_weight_mask) {
    if (!(m >= 0.0)) throw ValidationError("class_weight_mask entries must be >= 0");
  }
}

Evaluation evaluate(const ToyModel& model, std::span<const ImageRecord> test, TaskMode mode,
                    int num_classes, int threads) {
  std::vector<ConfusionMatrix> parts(test.size(), ConfusionMatrix(num_classes));
  parallel_for(test.size(), threads, [&](std::size_t i) {
    const auto pred = model.predict(test[i]);
    parts[i].add(pred.pseudo_labels, test[i].hidden_labels);
  });
  ConfusionMatrix total(num_classes);
  for (const auto& part : parts) total.merge(part);

  ClassReport report;
  Evaluation out;
  switch (mode) {
    case TaskMode::segmentation2d:
      report = iou_report(total);
      out.metric = report.macro;
      break;
    case TaskMode::segmentation3d:
      report = dice_report(total);
      out.metric = report.macro;
      break;
    case TaskMode::roi:
      report = f1_report(total);
      out.metric = report.weighted;
      break;
  }
  out.per_class.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    out.per_class[c] = report.defined[c] ? report.per_class[c] : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double full_annotation_reference(const Dataset& data, const TrainingOptions& options, int threads) {
  const ToyModel model = train(full_training_set(data.train), data.num_classes, options);
  return evaluate(model, data.test, data.mode, data.num_classes, threads).metric;
}

std::uint64_t repeat_seed(std::uint64_t master, int repeat) {
  return stream_seed(master, static_cast<std::uint64_t>(repeat));
}

Dataset dataset_for_repeat(const ExperimentConfig& config, int repeat) {
  if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
  DatasetSpec spec = config.dataset;
  spec.seed = stream_seed(spec.seed, static_cast<std::uint64_t>(repeat));
  return generate_dataset(spec);
}

namespace {

// Stream keys outside the image-id range.
constexpr std::uint64_t kImagePickKey = 0xffffffff00000001ULL;
constexpr std::uint64_t kPooledKey = 0xffffffff00000002ULL;
constexpr std::uint64_t kModelKey = 0xffffffff00000003ULL;
constexpr std::uint64_t kReferenceKey = 0xffffffff00000004ULL;

bool needs_uncertainty(const Strategy& s) {
  return s.image == ImageSelectorKind::uncert ||
         (s.region != RegionSelectorKind::rand && s.region != RegionSelectorKind::decomp);
}

// Model-dependent state carried from one cycle to the next.
struct CycleContext {
  const ExperimentConfig& config;
  const Dataset& data;
  const Oracle& oracle;
  std::uint64_t seed;
  int threads;
  TrainingOptions training;
  std::uint64_t total_units;
};

struct ModelView {
  std::vector<PredictionField> predictions;
  ClassConfidence confidence;
  SamplingWeights weights;
};

ModelView view_of(const ToyModel& model, const CycleContext& ctx) {
  ModelView view;
  const auto& pool = ctx.data.train;
  view.predictions.resize(pool.size());
  parallel_for(pool.size(), ctx.threads,
               [&](std::size_t i) { view.predictions[i] = model.predict(pool[i]); });
  ConfidenceCounter counter(ctx.data.num_classes, ctx.config.tau);
  for (const auto& p : view.predictions) counter.add(p);
  view.confidence = counter.finish();
  view.weights = sampling_weights(view.confidence);
  if (!ctx.config.class_weight_mask.empty()) {
    view.weights = apply_weight_mask(view.weights, ctx.config.class_weight_mask);
  }
  return view;
}

double frequency_cap(const ExperimentConfig& config, const ImageShape& shape) {
  switch (config.cap_mode) {
    case CapMode::fraction:
      return config.cap_fraction * static_cast<double>(shape.units());
    case CapMode::roi:
      return 1.0;
    case CapMode::automatic:
      break;
  }
  return default_frequency_cap(shape, config.cap_fraction);
}

std::vector<Region> select_regions_for_cycle(const Strategy& strategy, const CycleContext& ctx,
                                             const AnnotationState& state, const ModelView& view,
                                             const std::vector<std::vector<double>>& umaps,
                                             const std::vector<ImageId>& images, int cycle) {
  const auto& cfg = ctx.config;
  const auto& pool = ctx.data.train;
  std::vector<std::vector<Region>> per_image(images.size());

  switch (strategy.region) {
    case RegionSelectorKind::rand:
    case RegionSelectorKind::uncert:
    case RegionSelectorKind::decomp:
      parallel_for(images.size(), ctx.threads, [&](std::size_t k) {
        const ImageId id = images[k];
        const auto& shape = pool[id].shape;
        const auto annotated = state.regions(id);
        Rng rng = image_stream(ctx.seed, cycle, id);
        if (strategy.region == RegionSelectorKind::rand) {
          per_image[k] = rand_select_regions(shape, id, cfg.region_size, cfg.n_region, annotated, rng);
        } else if (strategy.region == RegionSelectorKind::uncert) {
          for (auto& s : uncert_select_regions(umaps[id], shape, id, cfg.region_size, cfg.n_region,
                                               annotated)) {
            per_image[k].push_back(s.region);
          }
        } else {
          per_image[k] = decomp_select(view.predictions[id], id, view.weights, cfg.n_region,
                                       cfg.region_size, annotated, rng);
        }
      });
      break;
    case RegionSelectorKind::divers_cluster:
    case RegionSelectorKind::divers_coreset:
    case RegionSelectorKind::badge: {
      std::vector<std::vector<Candidate>> parts(images.size());
      parallel_for(images.size(), ctx.threads, [&](std::size_t k) {
        const ImageId id = images[k];
        parts[k] = image_candidates(view.predictions[id], umaps[id], id, cfg.region_size,
                                    cfg.divers_factor, cfg.n_region, state.regions(id));
      });
      std::vector<Candidate> candidates;
      for (auto& part : parts) std::move(part.begin(), part.end(), std::back_inserter(candidates));
      const std::size_t budget = images.size() * static_cast<std::size_t>(cfg.n_region);
      Rng rng(stream_seed(ctx.seed, static_cast<std::uint64_t>(cycle), kPooledKey));
      std::vector<Region> chosen;
      if (strategy.region == RegionSelectorKind::divers_cluster) {
        chosen = divers_cluster_select(candidates, budget, rng);
      } else if (strategy.region == RegionSelectorKind::divers_coreset) {
        chosen = divers_coreset_select(candidates, budget);
      } else {
        chosen = badge_select(candidates, budget, rng);
      }
      return chosen;
    }
  }
  std::vector<Region> out;
  for (auto& regions : per_image) out.insert(out.end(), regions.begin(), regions.end());
  return out;
}

std::vector<ImageId> select_images_for_cycle(const Strategy& strategy, const CycleContext& ctx,
                                             AnnotationState& state, const ModelView& view,
                                             const std::vector<std::vector<double>>& umaps,
                                             const std::vector<ImageId>& feasible, int cycle) {
  const auto& cfg = ctx.config;
  if (strategy.image == ImageSelectorKind::rand) {
    Rng rng(stream_seed(ctx.seed, static_cast<std::uint64_t>(cycle), kImagePickKey));
    return select_random_images(feasible, state.loop_visited(), cfg.n_image, rng);
  }
  std::vector<ImageScore> scores(feasible.size());
  parallel_for(feasible.size(), ctx.threads, [&](std::size_t k) {
    const ImageId id = feasible[k];
    double s;
    if (strategy.image == ImageSelectorKind::uncert) {
      s = mean_uncertainty(umaps[id]);
    } else {
      const auto& pred = view.predictions[id];
      const double cap = frequency_cap(cfg, pred.shape);
      s = cfg.score_unannotated_only ? image_score(pred, view.weights, cap, state.regions(id))
                                     : image_score(pred, view.weights, cap);
    }
    scores[k] = ImageScore{id, s};
  });
  return select_images(scores, state, cfg.n_image);
}

struct StrategyState {
  AnnotationState annotations;
  std::vector<std::uint64_t> per_class;
};

void annotate_all(StrategyState& st, const std::vector<Region>& regions, int cycle,
                  const Oracle& oracle) {
  for (Region r : regions) {
    r.cycle = cycle;
    st.annotations.annotate(r, oracle);
    const auto& labels = st.annotations.revealed(r.image).back();
    for (ClassId c : labels) ++st.per_class[c];
  }
}

CycleRecord make_record(const std::string& name, int cycle, const std::vector<ImageId>& images,
                        const std::vector<Region>& regions, const StrategyState& st,
                        const Evaluation& eval, const ModelView& view, const CycleContext& ctx,
                        double target, double seconds) {
  CycleRecord rec;
  rec.strategy = name;
  rec.cycle = cycle;
  rec.selected_images = images;
  rec.regions = regions;
  for (auto& r : rec.regions) r.cycle = cycle;
  rec.annotated_units = st.annotations.revealed_count();
  rec.annotated_fraction =
      static_cast<double>(rec.annotated_units) / static_cast<double>(ctx.total_units);
  rec.annotated_per_class = st.per_class;
  rec.metric = eval.metric;
  rec.per_class_metric = eval.per_class;
  rec.sigma = view.confidence.sigma;
  rec.weights = view.weights.w;
  rec.target_reached = eval.metric >= target;
  rec.wall_seconds = seconds;
  return rec;
}

TrainingOptions training_for_cycle(const CycleContext& ctx, int cycle) {
  TrainingOptions opts = ctx.training;
  opts.seed = stream_seed(ctx.seed, static_cast<std::uint64_t>(cycle), kModelKey);
  return opts;
}

}  // namespace

RepeatResult run_repeat(const ExperimentConfig& config, int repeat, int threads,
                        std::optional<double> reference) {
  config.validate();
  using clock = std::chrono::steady_clock;
  RepeatResult result;
  result.repeat = repeat;
  result.seed = repeat_seed(config.seed, repeat);

  const Dataset data = dataset_for_repeat(config, repeat);
  if (data.train.empty() || data.test.empty()) throw ValidationError("dataset has an empty split");
  if (config.n_image > static_cast<int>(data.train.size())) {
    throw ValidationError("n_image exceeds the pool size");
  }
  if (data.mode != TaskMode::roi) {
    const auto& shape = data.train.front().shape;
    if (config.region_size > std::min(shape.height, shape.width)) {
      throw ValidationError("region_size exceeds the image plane");
    }
  }
  if (!config.class_weight_mask.empty() &&
      config.class_weight_mask.size() != static_cast<std::size_t>(data.num_classes)) {
    throw ValidationError("class_weight_mask length must equal num_classes");
  }

  std::vector<Strategy> strategies;
  for (const auto& name : config.strategies) strategies.push_back(parse_strategy(name));

  const Oracle oracle(data.train);
  CycleContext ctx{config, data, oracle, result.seed, threads,
                   TrainingOptions{config.learning_rate, config.epochs}, data.train_units()};

  if (reference) {
    result.reference_metric = *reference;
  } else {
    TrainingOptions reference_opts = ctx.training;
    reference_opts.seed = stream_seed(result.seed, kReferenceKey);
    result.reference_metric = full_annotation_reference(data, reference_opts, threads);
  }
  result.target = config.target_fraction * result.reference_metric;

  // Cycle 1: random regions, shared by every strategy.
  const auto start = clock::now();
  StrategyState initial{AnnotationState{}, std::vector<std::uint64_t>(data.num_classes, 0)};
  std::vector<ImageId> all_ids;
  for (const auto& image : data.train) all_ids.push_back(image.id);
  Rng pick_rng(stream_seed(result.seed, 1, kImagePickKey));
  const auto first_images =
      select_random_images(all_ids, initial.annotations.loop_visited(), config.n_image, pick_rng);
  std::vector<Region> first_regions;
  for (ImageId id : first_images) {
    Rng rng = image_stream(result.seed, 1, id);
    auto picked = rand_select_regions(data.train[id].shape, id, config.region_size, config.n_region,
                                      initial.annotations.regions(id), rng);
    first_regions.insert(first_regions.end(), picked.begin(), picked.end());
  }
  annotate_all(initial, first_regions, 1, oracle);
  const ToyModel first_model = train(initial.annotations, data.train, data.num_classes,
                                     training_for_cycle(ctx, 1));
  const Evaluation first_eval = evaluate(first_model, data.test, data.mode, data.num_classes, threads);
  const ModelView first_view = view_of(first_model, ctx);
  const double first_seconds = std::chrono::duration<double>(clock::now() - start).count();

  for (const auto& strategy : strategies) {
    StrategyRun run;
    run.strategy = strategy;
    StrategyState st = initial;
    ModelView view = first_view;
    run.cycles.push_back(make_record(strategy.name, 1, first_images, first_regions, st, first_eval,
                                     view, ctx, result.target, first_seconds));
    const bool uses_uncertainty = needs_uncertainty(strategy);

    for (int cycle = 2; cycle <= config.max_cycles; ++cycle) {
      if (config.stop_at_target && run.cycles.back().target_reached) break;
      const auto cycle_start = clock::now();

      std::vector<ImageId> feasible;
      for (const auto& image : data.train) {
        if (has_feasible_region(image.shape, config.region_size, st.annotations.regions(image.id))) {
          feasible.push_back(image.id);
        }
      }
      if (feasible.empty()) break;

      std::vector<std::vector<double>> umaps;
      if (uses_uncertainty) {
        umaps.resize(data.train.size());
        parallel_for(data.train.size(), threads, [&](std::size_t i) {
          umaps[i] = uncertainty_map(view.predictions[i], config.uncertainty);
        });
      }

      const auto images = select_images_for_cycle(strategy, ctx, st.annotations, view, umaps,
                                                  feasible, cycle);
      const auto regions = select_regions_for_cycle(strategy, ctx, st.annotations, view, umaps,
                                                    images, cycle);
      annotate_all(st, regions, cycle, oracle);

      const ToyModel model =
          train(st.annotations, data.train, data.num_classes, training_for_cycle(ctx, cycle));
      const Evaluation eval = evaluate(model, data.test, data.mode, data.num_classes, threads);
      view = view_of(model, ctx);
      const double seconds = std::chrono::duration<double>(clock::now() - cycle_start).count();
      run.cycles.push_back(make_record(strategy.name, cycle, images, regions, st, eval, view, ctx,
                                       result.target, seconds));
    }
    for (const auto& rec : run.cycles) {
      if (rec.target_reached) {
        run.target_cycle = rec.cycle;
        break;
      }
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

std::vector<RepeatResult> run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  std::vector<RepeatResult> results(static_cast<std::size_t>(config.repeats));
  const int inner = config.repeats > 1 ? 1 : threads;
  parallel_for(results.size(), threads, [&](std::size_t r) {
    results[r] = run_repeat(config, static_cast<int>(r), inner);
  });
  return results;
}

}  // namespace decompal
