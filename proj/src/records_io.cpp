#include "decompal/records_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "decompal/config_io.hpp"

namespace decompal {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string cycles_csv_header(int num_classes) {
  std::string h =
      "strategy,repeat,seed,cycle,n_images,n_regions,annotated_units,annotated_fraction,metric,"
      "target,target_reached";
  for (const char* prefix : {"metric_c", "annotated_c", "sigma_c", "w_c"}) {
    for (int c = 0; c < num_classes; ++c) h += "," + std::string(prefix) + std::to_string(c);
  }
  return h;
}

void write_cycles_csv(std::ostream& out, std::span<const RepeatResult> results) {
  int classes = 0;
  for (const auto& rr : results) {
    for (const auto& run : rr.runs) {
      if (!run.cycles.empty()) classes = static_cast<int>(run.cycles.front().sigma.size());
    }
  }
  out << cycles_csv_header(classes) << '\n';
  for (const auto& rr : results) {
    for (const auto& run : rr.runs) {
      for (const auto& rec : run.cycles) {
        out << rec.strategy << ',' << rr.repeat << ',' << rr.seed << ',' << rec.cycle << ','
            << rec.selected_images.size() << ',' << rec.regions.size() << ',' << rec.annotated_units
            << ',' << format_number(rec.annotated_fraction) << ',' << format_number(rec.metric) << ','
            << format_number(rr.target) << ',' << (rec.target_reached ? 1 : 0);
        for (double v : rec.per_class_metric) out << ',' << format_number(v);
        for (auto v : rec.annotated_per_class) out << ',' << v;
        for (double v : rec.sigma) out << ',' << format_number(v);
        for (double v : rec.weights) out << ',' << format_number(v);
        out << '\n';
      }
    }
  }
}

nlohmann::json run_summary(const ExperimentConfig& config, std::span<const RepeatResult> results) {
  nlohmann::json repeats = nlohmann::json::array();
  double wall = 0.0;
  for (const auto& rr : results) {
    nlohmann::json strategies = nlohmann::json::object();
    for (const auto& run : rr.runs) {
      const auto& last = run.cycles.back();
      for (const auto& rec : run.cycles) wall += rec.wall_seconds;
      strategies[run.strategy.name] = {
          {"cycles", run.cycles.size()},
          {"final_metric", last.metric},
          {"final_annotated_fraction", last.annotated_fraction},
          {"target_cycle", run.target_cycle ? nlohmann::json(*run.target_cycle) : nlohmann::json()}};
    }
    repeats.push_back({{"repeat", rr.repeat},
                       {"seed", rr.seed},
                       {"reference_metric", rr.reference_metric},
                       {"target", rr.target},
                       {"strategies", strategies}});
  }
  return {{"config", config_to_json(config)}, {"repeats", repeats}, {"wall_seconds", wall}};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

void check_number(const std::string& text, const std::string& source) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text == "nan") return;
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ValidationError(source + ": '" + text + "' is not a number");
  }
}

}  // namespace

void write_report(std::ostream& out, std::span<const ReportInput> inputs) {
  static const char* kColumns[] = {"strategy", "repeat", "cycle", "annotated_fraction", "metric"};
  out << "source,strategy,repeat,cycle,annotated_fraction,metric\n";
  for (const auto& input : inputs) {
    std::istringstream in(input.csv_text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(input.source + ": empty csv");
    const auto header = split_csv_line(line);
    std::vector<std::size_t> pick;
    for (const char* name : kColumns) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw ValidationError(input.source + ": missing column '" + name + "'");
      }
      pick.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty() || line == "\r") continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != header.size()) {
        throw ValidationError(input.source + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(header.size()));
      }
      for (std::size_t k = 1; k < pick.size(); ++k) check_number(cells[pick[k]], input.source);
      out << input.source;
      for (std::size_t k : pick) out << ',' << cells[k];
      out << '\n';
    }
  }
}

}  // namespace decompal
