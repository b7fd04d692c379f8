#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "decompal/experiment.hpp"

namespace decompal {

// Config files are YAML with three tables:
//
//   dataset:     mode, n_images, n_test_images, depth, height, width,
//                roi_count, num_classes, frequencies, feature_dim,
//                class_means, mean_scale, noise, voronoi_seeds, drift, seed,
//                path
//   model:       learning_rate, epochs
//   experiment:  strategies, n_image, n_region, region_size, tau, cap_mode,
//                cap_fraction, divers_factor, max_cycles, target_fraction,
//                stop_at_target, seed, repeats, uncertainty,
//                class_weight_mask, score_unannotated_only
//
// Missing keys keep their defaults; unknown keys are rejected. Overrides
// are "table.key=value" with value parsed as YAML (so lists work:
// "dataset.frequencies=[0.5,0.5]").
ExperimentConfig parse_config(const std::string& yaml_text,
                              std::span<const std::string> overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::span<const std::string> overrides = {});

// The dataset table alone, for `decompal gen`.
DatasetSpec parse_dataset_spec(const std::string& yaml_text,
                               std::span<const std::string> overrides = {});

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& json);

}  // namespace decompal
