#include "decompal/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "decompal/config_io.hpp"
#include "decompal/parallel.hpp"
#include "decompal/records_io.hpp"

namespace decompal {
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string cycles_text(std::span<const RepeatResult> results) {
  std::ostringstream out;
  write_cycles_csv(out, results);
  return out.str();
}

void cmd_gen(const fs::path& config, const fs::path& out, const std::vector<std::string>& sets) {
  const DatasetSpec spec = parse_dataset_spec(read_text(config), sets);
  save_dataset(generate_dataset(spec), out);
}

std::string cmd_run(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  const auto results = run_experiment(cfg, threads);
  const std::string csv = cycles_text(results);
  write_text(out / "cycles.csv", csv);
  write_text(out / "summary.json", run_summary(cfg, results).dump(2) + "\n");
  return csv;
}

void cmd_sweep(const fs::path& config, const std::vector<std::string>& sets, const std::string& axis,
               const fs::path& out, int threads) {
  const ExperimentConfig base = load_config(config, sets);
  const auto points = sweep_points(axis, base.n_image, base.n_region);
  std::ostringstream merged;
  bool header_done = false;
  for (const auto& point : points) {
    std::vector<std::string> all = sets;
    all.insert(all.end(), point.overrides.begin(), point.overrides.end());
    const ExperimentConfig cfg = load_config(config, all);
    const std::string csv = cmd_run(cfg, out / (axis + "_" + point.label), threads);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    if (!header_done) {
      merged << "axis,value," << line << '\n';
      header_done = true;
    }
    while (std::getline(lines, line)) {
      if (!line.empty()) merged << axis << ',' << point.label << ',' << line << '\n';
    }
  }
  write_text(out / "sweep.csv", merged.str());
}

void cmd_report(const std::vector<std::string>& inputs, const fs::path& out) {
  std::vector<ReportInput> docs;
  for (const auto& name : inputs) {
    fs::path path(name);
    if (fs::is_directory(path)) path /= "cycles.csv";
    docs.push_back({name, read_text(path)});
  }
  std::ostringstream text;
  write_report(text, docs);
  write_text(out, text.str());
}

}  // namespace

std::vector<SweepPoint> sweep_points(const std::string& axis, int k, int m) {
  auto budget = [](int images, int regions) {
    return SweepPoint{std::to_string(images) + "x" + std::to_string(regions),
                      {"experiment.n_image=" + std::to_string(images),
                       "experiment.n_region=" + std::to_string(regions)}};
  };
  if (axis == "tau") {
    std::vector<SweepPoint> points;
    for (const char* tau : {"0.3", "0.5", "0.7"}) {
      points.push_back({tau, {std::string("experiment.tau=") + tau}});
    }
    return points;
  }
  if (axis == "budget") return {budget(k, m), budget(2 * k, m), budget(k, 2 * m)};
  if (axis == "dense-sparse") return {budget(k, 2 * m), budget(2 * k, m)};
  throw ValidationError("unknown sweep axis '" + axis + "' (tau, budget, dense-sparse)");
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Region-based active learning simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string axis;
  std::vector<std::string> sets;
  std::vector<std::string> inputs;
  int threads = default_thread_count();

  auto add_common = [&](CLI::App* cmd, bool with_threads) {
    cmd->add_option("--config", config, "YAML configuration file")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--set", sets, "override table.key=value")->take_all()->allow_extra_args(false);
    if (with_threads) cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, false);
  auto* run = app.add_subcommand("run", "run an active learning experiment");
  add_common(run, true);
  auto* sweep = app.add_subcommand("sweep", "run an experiment across one axis");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "tau, budget or dense-sparse")->required();
  auto* report = app.add_subcommand("report", "merge cycles.csv files into long format");
  report->add_option("--out", out, "output csv")->required();
  report->add_option("inputs", inputs, "run directories or cycles.csv files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) {
      cmd_gen(config, out, sets);
    } else if (*run) {
      cmd_run(load_config(config, sets), out, threads);
    } else if (*sweep) {
      cmd_sweep(config, sets, axis, out, threads);
    } else if (*report) {
      cmd_report(inputs, out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace decompal
