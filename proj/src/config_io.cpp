#include "decompal/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace decompal {
namespace {

const std::set<std::string> kDatasetKeys{
    "mode",        "n_images",    "n_test_images", "depth",          "height", "width",
    "roi_count",   "num_classes", "frequencies",   "feature_dim",    "class_means",
    "mean_scale",  "noise",       "voronoi_seeds", "drift",          "seed",   "path"};
const std::set<std::string> kModelKeys{"learning_rate", "epochs"};
const std::set<std::string> kExperimentKeys{
    "strategies",   "n_image",      "n_region",        "region_size",       "tau",
    "cap_mode",     "cap_fraction", "divers_factor",   "max_cycles",        "target_fraction",
    "stop_at_target", "seed",       "repeats",         "uncertainty",       "class_weight_mask",
    "score_unannotated_only"};

const std::set<std::string>& keys_of(const std::string& table) {
  static const std::set<std::string> none;
  if (table == "dataset") return kDatasetKeys;
  if (table == "model") return kModelKeys;
  if (table == "experiment") return kExperimentKeys;
  return none;
}

void check_keys(const YAML::Node& root) {
  if (!root || root.IsNull()) return;
  if (!root.IsMap()) throw ValidationError("config must be a mapping of tables");
  for (const auto& table : root) {
    const auto name = table.first.as<std::string>();
    const auto& allowed = keys_of(name);
    if (allowed.empty()) throw ValidationError("unknown config table '" + name + "'");
    if (table.second.IsNull()) continue;
    if (!table.second.IsMap()) throw ValidationError("config table '" + name + "' must be a mapping");
    for (const auto& entry : table.second) {
      const auto key = entry.first.as<std::string>();
      if (!allowed.contains(key)) throw ValidationError("unknown config key '" + name + "." + key + "'");
    }
  }
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' lacks '='");
  const std::string path = assignment.substr(0, eq);
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    throw ValidationError("override key '" + path + "' must be table.key");
  }
  const std::string table = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  if (!keys_of(table).contains(key)) throw ValidationError("unknown config key '" + path + "'");
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ValidationError("bad override value for '" + path + "': " + e.what());
  }
  root[table][key] = value;
}

template <typename T>
void read(const YAML::Node& table, const char* key, T& target) {
  if (!table) return;
  const YAML::Node node = table[key];
  if (!node || node.IsNull()) return;
  try {
    target = node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

YAML::Node load_root(const std::string& text, std::span<const std::string> overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root);
  for (const auto& o : overrides) apply_override(root, o);
  return root;
}

DatasetSpec dataset_from(const YAML::Node& root) {
  DatasetSpec spec;
  const YAML::Node t = root["dataset"];
  std::string mode = to_string(spec.mode);
  read(t, "mode", mode);
  spec.mode = parse_task_mode(mode);
  read(t, "n_images", spec.n_images);
  read(t, "n_test_images", spec.n_test_images);
  read(t, "depth", spec.depth);
  read(t, "height", spec.height);
  read(t, "width", spec.width);
  read(t, "roi_count", spec.roi_count);
  read(t, "num_classes", spec.num_classes);
  read(t, "frequencies", spec.frequencies);
  read(t, "feature_dim", spec.feature_dim);
  read(t, "class_means", spec.class_means);
  read(t, "mean_scale", spec.mean_scale);
  read(t, "noise", spec.noise);
  read(t, "voronoi_seeds", spec.voronoi_seeds);
  read(t, "drift", spec.drift);
  read(t, "seed", spec.seed);
  return spec;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, std::span<const std::string> overrides) {
  const YAML::Node root = load_root(yaml_text, overrides);
  ExperimentConfig cfg;
  cfg.dataset = dataset_from(root);
  read(root["dataset"], "path", cfg.dataset_path);

  const YAML::Node model = root["model"];
  read(model, "learning_rate", cfg.learning_rate);
  read(model, "epochs", cfg.epochs);

  const YAML::Node e = root["experiment"];
  read(e, "strategies", cfg.strategies);
  read(e, "n_image", cfg.n_image);
  read(e, "n_region", cfg.n_region);
  read(e, "region_size", cfg.region_size);
  read(e, "tau", cfg.tau);
  std::string cap = to_string(cfg.cap_mode);
  read(e, "cap_mode", cap);
  cfg.cap_mode = parse_cap_mode(cap);
  read(e, "cap_fraction", cfg.cap_fraction);
  read(e, "divers_factor", cfg.divers_factor);
  read(e, "max_cycles", cfg.max_cycles);
  read(e, "target_fraction", cfg.target_fraction);
  read(e, "stop_at_target", cfg.stop_at_target);
  read(e, "seed", cfg.seed);
  read(e, "repeats", cfg.repeats);
  std::string measure = to_string(cfg.uncertainty);
  read(e, "uncertainty", measure);
  cfg.uncertainty = parse_uncertainty_measure(measure);
  read(e, "class_weight_mask", cfg.class_weight_mask);
  read(e, "score_unannotated_only", cfg.score_unannotated_only);
  cfg.validate();
  return cfg;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::span<const std::string> overrides) {
  return parse_config(slurp(path), overrides);
}

DatasetSpec parse_dataset_spec(const std::string& yaml_text, std::span<const std::string> overrides) {
  const DatasetSpec spec = dataset_from(load_root(yaml_text, overrides));
  spec.validate();
  return spec;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  nlohmann::json dataset{{"mode", to_string(d.mode)},
                         {"n_images", d.n_images},
                         {"n_test_images", d.n_test_images},
                         {"depth", d.depth},
                         {"height", d.height},
                         {"width", d.width},
                         {"roi_count", d.roi_count},
                         {"num_classes", d.num_classes},
                         {"frequencies", d.frequencies},
                         {"feature_dim", d.feature_dim},
                         {"class_means", d.class_means},
                         {"mean_scale", d.mean_scale},
                         {"noise", d.noise},
                         {"voronoi_seeds", d.voronoi_seeds},
                         {"drift", d.drift},
                         {"seed", d.seed},
                         {"path", c.dataset_path}};
  nlohmann::json model{{"learning_rate", c.learning_rate}, {"epochs", c.epochs}};
  nlohmann::json experiment{{"strategies", c.strategies},
                            {"n_image", c.n_image},
                            {"n_region", c.n_region},
                            {"region_size", c.region_size},
                            {"tau", c.tau},
                            {"cap_mode", to_string(c.cap_mode)},
                            {"cap_fraction", c.cap_fraction},
                            {"divers_factor", c.divers_factor},
                            {"max_cycles", c.max_cycles},
                            {"target_fraction", c.target_fraction},
                            {"stop_at_target", c.stop_at_target},
                            {"seed", c.seed},
                            {"repeats", c.repeats},
                            {"uncertainty", to_string(c.uncertainty)},
                            {"class_weight_mask", c.class_weight_mask},
                            {"score_unannotated_only", c.score_unannotated_only}};
  return {{"dataset", dataset}, {"model", model}, {"experiment", experiment}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    const auto& d = j.at("dataset");
    c.dataset.mode = parse_task_mode(d.at("mode").get<std::string>());
    d.at("n_images").get_to(c.dataset.n_images);
    d.at("n_test_images").get_to(c.dataset.n_test_images);
    d.at("depth").get_to(c.dataset.depth);
    d.at("height").get_to(c.dataset.height);
    d.at("width").get_to(c.dataset.width);
    d.at("roi_count").get_to(c.dataset.roi_count);
    d.at("num_classes").get_to(c.dataset.num_classes);
    d.at("frequencies").get_to(c.dataset.frequencies);
    d.at("feature_dim").get_to(c.dataset.feature_dim);
    d.at("class_means").get_to(c.dataset.class_means);
    d.at("mean_scale").get_to(c.dataset.mean_scale);
    d.at("noise").get_to(c.dataset.noise);
    d.at("voronoi_seeds").get_to(c.dataset.voronoi_seeds);
    d.at("drift").get_to(c.dataset.drift);
    d.at("seed").get_to(c.dataset.seed);
    d.at("path").get_to(c.dataset_path);
    const auto& m = j.at("model");
    m.at("learning_rate").get_to(c.learning_rate);
    m.at("epochs").get_to(c.epochs);
    const auto& e = j.at("experiment");
    e.at("strategies").get_to(c.strategies);
    e.at("n_image").get_to(c.n_image);
    e.at("n_region").get_to(c.n_region);
    e.at("region_size").get_to(c.region_size);
    e.at("tau").get_to(c.tau);
    c.cap_mode = parse_cap_mode(e.at("cap_mode").get<std::string>());
    e.at("cap_fraction").get_to(c.cap_fraction);
    e.at("divers_factor").get_to(c.divers_factor);
    e.at("max_cycles").get_to(c.max_cycles);
    e.at("target_fraction").get_to(c.target_fraction);
    e.at("stop_at_target").get_to(c.stop_at_target);
    e.at("seed").get_to(c.seed);
    e.at("repeats").get_to(c.repeats);
    c.uncertainty = parse_uncertainty_measure(e.at("uncertainty").get<std::string>());
    e.at("class_weight_mask").get_to(c.class_weight_mask);
    e.at("score_unannotated_only").get_to(c.score_unannotated_only);
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed config json: ") + ex.what());
  }
}

}  // namespace decompal
