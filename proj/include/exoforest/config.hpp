#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "exoforest/model.hpp"

namespace exoforest {

// Raised on malformed config input; message carries line and field context.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key-value experiment configuration with [model], [grid], [run], and
// [output] sections. Named model configs "I" and "II" expand to the d=100,
// s=5, sigma0_sq=1.69, n=1000, B=100 settings with equal (0.5) and unequal
// (2, 1.8, 1.6, 1.4, 1.2) coefficients.
struct ExperimentConfig {
  ModelSpec spec;
  std::string config_name = "custom";

  std::vector<double> gammas;
  std::vector<int> depths;
  int B = 100;
  int n = 1000;
  int n_test = 256;

  int reps = 1000;
  std::uint64_t master_seed = 0;
  int workers = 1;

  std::string csv_path;
  int precision = 10;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace exoforest
