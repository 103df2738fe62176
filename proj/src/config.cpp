#include "startls/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace startls {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_real(const std::string& key, const std::string& value, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, line, "cannot parse '" + value + "' as a number");
  }
  if (pos != value.size()) {
    throw ConfigError(key, line, "trailing characters in '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value, int line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, line, "cannot parse '" + value + "' as an integer");
  }
  if (pos != value.size()) {
    throw ConfigError(key, line, "trailing characters in '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value, int line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, line, "cannot parse '" + value + "' as an unsigned integer");
  }
  if (pos != value.size()) {
    throw ConfigError(key, line, "trailing characters in '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value, int line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, line, "expected true/false/1/0, got '" + value + "'");
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

}  // namespace

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value, int line) {
  StarScenario& sc = config.scenario;
  EstimatorConfig& est = config.estimator;
  if (key == "si_len") {
    const long long v = parse_int(key, value, line);
    if (v < 1) throw ConfigError(key, line, "must be >= 1");
    sc.si_len = static_cast<int>(v);
  } else if (key == "rt_len") {
    const long long v = parse_int(key, value, line);
    if (v < 1) throw ConfigError(key, line, "must be >= 1");
    sc.rt_len = static_cast<int>(v);
  } else if (key == "isr_db") {
    sc.isr_db = parse_real(key, value, line);
  } else if (key == "snr_db") {
    sc.snr_db = parse_real(key, value, line);
  } else if (key == "impulse_prob") {
    const double v = parse_real(key, value, line);
    if (v < 0.0 || v > 1.0) throw ConfigError(key, line, "must lie in [0, 1]");
    sc.impulse_prob = v;
  } else if (key == "impulse_var_ratio") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    sc.impulse_var_ratio = v;
  } else if (key == "ns") {
    const long long v = parse_int(key, value, line);
    if (v < 1) throw ConfigError(key, line, "must be >= 1");
    sc.ns = static_cast<int>(v);
  } else if (key == "sample_rate_hz") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    sc.sample_rate_hz = v;
  } else if (key == "bandwidth_hz") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    sc.bandwidth_hz = v;
  } else if (key == "seed") {
    sc.seed = parse_u64(key, value, line);
  } else if (key == "layers") {
    const long long v = parse_int(key, value, line);
    if (v < 1) throw ConfigError(key, line, "must be >= 1");
    est.layers = static_cast<int>(v);
  } else if (key == "mu") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    est.mu = v;
  } else if (key == "gamma") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    est.gamma = v;
  } else if (key == "lambda_sigma") {
    const double v = parse_real(key, value, line);
    if (!(v >= 0.9 && v < 1.0)) throw ConfigError(key, line, "must lie in [0.9, 1)");
    est.lambda_sigma = v;
  } else if (key == "nw") {
    const long long v = parse_int(key, value, line);
    if (v < 2) throw ConfigError(key, line, "must be >= 2");
    est.nw = static_cast<int>(v);
  } else if (key == "c1") {
    const double v = parse_real(key, value, line);
    if (!(v > 0.0)) throw ConfigError(key, line, "must be positive");
    est.c1 = v;
  } else if (key == "exclude_first_layer") {
    est.exclude_first_layer = parse_bool(key, value, line);
  } else {
    throw ConfigError(key, line, "unknown key");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(stripped, line_no, "expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(key, line_no, "empty key");
    if (value.empty()) throw ConfigError(key, line_no, "empty value");
    apply_override(config, key, value, line_no);
  }
  if (config.estimator.layers == 1 && config.estimator.exclude_first_layer) {
    throw ConfigError("exclude_first_layer", 0,
                      "cannot exclude the first layer of a single-layer stack");
  }
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path, 0, "cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string echo_config(const ExperimentConfig& config) {
  const StarScenario& sc = config.scenario;
  const EstimatorConfig& est = config.estimator;
  std::ostringstream out;
  out << "si_len = " << sc.si_len << '\n';
  out << "rt_len = " << sc.rt_len << '\n';
  out << "isr_db = " << format_real(sc.isr_db) << '\n';
  out << "snr_db = " << format_real(sc.snr_db) << '\n';
  out << "impulse_prob = " << format_real(sc.impulse_prob) << '\n';
  out << "impulse_var_ratio = " << format_real(sc.impulse_var_ratio) << '\n';
  out << "ns = " << sc.ns << '\n';
  out << "sample_rate_hz = " << format_real(sc.sample_rate_hz) << '\n';
  out << "bandwidth_hz = " << format_real(sc.bandwidth_hz) << '\n';
  out << "seed = " << sc.seed << '\n';
  out << "layers = " << est.layers << '\n';
  out << "mu = " << format_real(est.mu) << '\n';
  out << "gamma = " << format_real(est.gamma) << '\n';
  out << "lambda_sigma = " << format_real(est.lambda_sigma) << '\n';
  out << "nw = " << est.nw << '\n';
  out << "c1 = " << format_real(est.c1) << '\n';
  out << "exclude_first_layer = " << (est.exclude_first_layer ? "true" : "false")
      << '\n';
  return out.str();
}

}  // namespace startls
