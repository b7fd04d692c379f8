#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decompal/annotation.hpp"
#include "decompal/baselines.hpp"
#include "decompal/dataset.hpp"
#include "decompal/decomp.hpp"
#include "decompal/metrics.hpp"
#include "decompal/toy_model.hpp"

namespace decompal {

enum class ImageSelectorKind { rand, uncert, decomp };
enum class RegionSelectorKind { rand, uncert, divers_cluster, divers_coreset, badge, decomp };

// An (image selector, region selector) pair. Named strategies map to their
// canonical pairs; "image:region" names any combination, e.g. "uncert:decomp".
struct Strategy {
  std::string name;
  ImageSelectorKind image = ImageSelectorKind::decomp;
  RegionSelectorKind region = RegionSelectorKind::decomp;
};

Strategy parse_strategy(const std::string& name);

enum class CapMode { automatic, fraction, roi };

std::string to_string(CapMode mode);
CapMode parse_cap_mode(const std::string& text);

struct ExperimentConfig {
  DatasetSpec dataset;
  // When set, the dataset is loaded from this directory instead of generated.
  std::string dataset_path;

  double learning_rate = 1.0;
  int epochs = 100;

  std::vector<std::string> strategies{"decomp"};
  int n_image = 8;
  int n_region = 4;
  int region_size = 16;
  double tau = kDefaultTau;
  CapMode cap_mode = CapMode::automatic;
  double cap_fraction = kDefaultCapFraction;
  int divers_factor = kDefaultDiversFactor;
  int max_cycles = 10;
  double target_fraction = 0.95;
  bool stop_at_target = true;
  std::uint64_t seed = 1;
  int repeats = 1;
  UncertaintyMeasure uncertainty = UncertaintyMeasure::entropy;
  // Multiplicative per-class adjustment of the sampling weights; empty = ones.
  std::vector<double> class_weight_mask;
  // Count only pixels outside earlier annotations when scoring images.
  bool score_unannotated_only = false;

  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct CycleRecord {
  std::string strategy;
  int cycle = 0;
  std::vector<ImageId> selected_images;
  std::vector<Region> regions;  // annotated in this cycle
  std::uint64_t annotated_units = 0;
  double annotated_fraction = 0.0;
  std::vector<std::uint64_t> annotated_per_class;  // by true class
  double metric = 0.0;
  std::vector<double> per_class_metric;  // NaN where undefined
  // Class confidence and sampling weights of this cycle's model on the
  // pool; they drive the next cycle's DECOMP selection.
  std::vector<double> sigma;
  std::vector<double> weights;
  bool target_reached = false;
  double wall_seconds = 0.0;
};

struct StrategyRun {
  Strategy strategy;
  std::vector<CycleRecord> cycles;
  std::optional<int> target_cycle;
};

struct RepeatResult {
  int repeat = 0;
  std::uint64_t seed = 0;
  double reference_metric = 0.0;
  double target = 0.0;
  std::vector<StrategyRun> runs;
};

struct Evaluation {
  double metric = 0.0;
  std::vector<double> per_class;
};

// Test metric per task: mIoU (2-D), class-averaged Dice (3-D), weighted F1
// (ROI), each over the pooled confusion matrix of the test set.
Evaluation evaluate(const ToyModel& model, std::span<const ImageRecord> test, TaskMode mode,
                    int num_classes, int threads = 1);

// Test metric of a model trained on the fully labeled pool.
double full_annotation_reference(const Dataset& data, const TrainingOptions& options,
                                 int threads = 1);

// Seed of repeat r.
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

Dataset dataset_for_repeat(const ExperimentConfig& config, int repeat);

// One repeat: shared random first cycle, then every configured strategy.
// A known full-annotation reference for this repeat's dataset may be passed
// in to skip recomputing it.
RepeatResult run_repeat(const ExperimentConfig& config, int repeat, int threads = 1,
                        std::optional<double> reference = std::nullopt);

// All repeats, in repeat order. Repeats run concurrently when threads > 1.
std::vector<RepeatResult> run_experiment(const ExperimentConfig& config, int threads = 1);

}  // namespace decompal
