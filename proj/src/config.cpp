#include "exoforest/config.hpp"

#include <fstream>
#include <sstream>

namespace exoforest {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string token;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

double parse_double(const std::string& value, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(line, "field '" + key + "': expected a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& value, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(line, "field '" + key + "': expected an integer, got '" + value + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  spec.validate();
  for (double g : gammas)
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("config: gamma values must lie in (0,1]");
  for (int l : depths)
    if (l < 0) throw ConfigError("config: depth values must be nonnegative");
  if (B < 1 || n < 1 || n_test < 1 || reps < 1)
    throw ConfigError("config: B, n, n_test, and reps must be positive");
  if (workers < 1) throw ConfigError("config: workers must be positive");
  if (precision < 1 || precision > 17) throw ConfigError("config: precision must lie in [1,17]");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  cfg.config_name = "I";
  bool named = true;
  FeatureKind kind = FeatureKind::BinaryBernoulliHalf;
  bool custom_beta = false;
  std::vector<double> beta;
  int custom_d = -1, custom_s = -1;
  double custom_sigma = -1.0;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "model" && section != "grid" && section != "run" && section != "output")
        fail(line, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) fail(line, "expected 'key = value'");
    if (section.empty()) fail(line, "key '" + key + "' outside any section");

    if (section == "model") {
      if (key == "config") {
        if (value != "I" && value != "II" && value != "custom")
          fail(line, "field 'config': expected 'I', 'II', or 'custom', got '" + value + "'");
        cfg.config_name = value;
        named = value != "custom";
      } else if (key == "feature_kind") {
        if (value == "binary")
          kind = FeatureKind::BinaryBernoulliHalf;
        else if (value == "uniform")
          kind = FeatureKind::UniformUnit;
        else
          fail(line, "field 'feature_kind': expected 'binary' or 'uniform'");
      } else if (key == "d") {
        custom_d = static_cast<int>(parse_int(value, line, key));
        named = false;
      } else if (key == "s") {
        custom_s = static_cast<int>(parse_int(value, line, key));
        named = false;
      } else if (key == "beta") {
        beta.clear();
        for (const auto& tok : split_list(value)) beta.push_back(parse_double(tok, line, key));
        custom_beta = true;
        named = false;
      } else if (key == "sigma0_sq") {
        custom_sigma = parse_double(value, line, key);
        named = false;
      } else {
        fail(line, "unknown [model] key '" + key + "'");
      }
    } else if (section == "grid") {
      if (key == "gamma") {
        cfg.gammas.clear();
        for (const auto& tok : split_list(value))
          cfg.gammas.push_back(parse_double(tok, line, key));
      } else if (key == "depth") {
        cfg.depths.clear();
        for (const auto& tok : split_list(value))
          cfg.depths.push_back(static_cast<int>(parse_int(tok, line, key)));
      } else if (key == "B") {
        cfg.B = static_cast<int>(parse_int(value, line, key));
      } else if (key == "n") {
        cfg.n = static_cast<int>(parse_int(value, line, key));
      } else if (key == "n_test") {
        cfg.n_test = static_cast<int>(parse_int(value, line, key));
      } else {
        fail(line, "unknown [grid] key '" + key + "'");
      }
    } else if (section == "run") {
      if (key == "reps") {
        cfg.reps = static_cast<int>(parse_int(value, line, key));
      } else if (key == "master_seed") {
        cfg.master_seed = static_cast<std::uint64_t>(parse_int(value, line, key));
      } else if (key == "workers") {
        cfg.workers = static_cast<int>(parse_int(value, line, key));
      } else {
        fail(line, "unknown [run] key '" + key + "'");
      }
    } else {  // output
      if (key == "csv") {
        cfg.csv_path = value;
      } else if (key == "precision") {
        cfg.precision = static_cast<int>(parse_int(value, line, key));
      } else {
        fail(line, "unknown [output] key '" + key + "'");
      }
    }
  }

  if (named) {
    cfg.spec = cfg.config_name == "II" ? ModelSpec::config_unequal(kind)
                                       : ModelSpec::config_equal(kind);
  } else {
    cfg.config_name = "custom";
    ModelSpec spec;
    spec.d = custom_d > 0 ? custom_d : 100;
    spec.s = custom_s >= 0 ? custom_s : static_cast<int>(beta.size());
    if (custom_beta) {
      spec.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                                    static_cast<Eigen::Index>(beta.size()));
    } else {
      spec.beta = Eigen::VectorXd::Constant(spec.s, 0.5);
    }
    spec.sigma0_sq = custom_sigma >= 0.0 ? custom_sigma : 1.69;
    spec.feature_kind = kind;
    cfg.spec = spec;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace exoforest
