#pragma once

#include <string>
#include <vector>

#include "bhsse/operators.hpp"
#include "bhsse/sse.hpp"

namespace bhsse {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line(line) {}
  int line;
};

struct RunConfig {
  BoseHubbardParams model;
  MeasurementSpec measurement;
  SimConfig sim;
  MicroscopicParams micro;
  std::vector<double> sweep_grid;         // U/J points; required by the sweep command
  std::string initial_state = "ground";   // ground | mott
  std::string output_dir = "out";
  int n_trajectories = 1;
  bool dump_operators = false;
};

// Single TOML-style file: [section] headers, key = value lines, '#' comments.
// Values: numbers, booleans, quoted or bare strings, [a, b, c] numeric arrays.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Re-parseable echo of a RunConfig; parse_config_text(config_to_text(c))
// reproduces c.
std::string config_to_text(const RunConfig& cfg);

bool config_equivalent(const RunConfig& a, const RunConfig& b);

// locale-independent CSV cell: shortest round-trip decimal
std::string format_double(double v);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bhsse
