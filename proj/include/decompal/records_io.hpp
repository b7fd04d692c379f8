#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "decompal/experiment.hpp"

namespace decompal {

// Locale-independent shortest-of-%g style text at 9 significant digits.
std::string format_number(double value);

// One row per (repeat, strategy, cycle). Wall-clock times are left out so
// identical runs produce identical bytes.
void write_cycles_csv(std::ostream& out, std::span<const RepeatResult> results);

// Column names of write_cycles_csv for a given class count.
std::string cycles_csv_header(int num_classes);

nlohmann::json run_summary(const ExperimentConfig& config, std::span<const RepeatResult> results);

struct ReportInput {
  std::string source;  // label written to the source column
  std::string csv_text;
};

// Long-format rows (source, strategy, repeat, cycle, annotated_fraction,
// metric) from cycles.csv texts. Columns are located by header name; a
// missing column, ragged row, or unparsable number throws ValidationError.
void write_report(std::ostream& out, std::span<const ReportInput> inputs);

}  // namespace decompal
