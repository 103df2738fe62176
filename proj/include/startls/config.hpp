#pragma once

#include <stdexcept>
#include <string>

#include "startls/star_sim.hpp"

namespace startls {

/// Shared hyperparameters for the adaptive estimators.
struct EstimatorConfig {
  int layers = 3;
  double mu = 0.05;
  double gamma = 1.0;
  double lambda_sigma = 0.98;
  int nw = 14;
  double c1 = 2.576;
  bool exclude_first_layer = false;
};

struct ExperimentConfig {
  StarScenario scenario;
  EstimatorConfig estimator;
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key, int line, const std::string& what)
      : std::runtime_error(line > 0
                               ? "config key '" + key + "' (line " +
                                     std::to_string(line) + "): " + what
                               : "config key '" + key + "': " + what),
        key(key),
        line(line) {}
  std::string key;
  int line;
};

/// Parse a line-oriented "key = value" config file. Omitted keys keep their
/// documented defaults; unknown keys are an error naming the key and line.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Apply one "key" = "value" override (CLI flags reuse config-key parsing).
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value, int line = 0);

/// Canonical echo of the effective config, one "key = value" line per key,
/// in the documented key order. Parsing the echo reproduces the config.
std::string echo_config(const ExperimentConfig& config);

}  // namespace startls
