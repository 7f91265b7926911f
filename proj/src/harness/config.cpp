#include "tmd/harness/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace tmd::harness {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

const std::regex& member_key_pattern() {
  static const std::regex pattern(R"(ensemble\.member\.(\d+)\.(geometry|weights|z0))");
  return pattern;
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

const std::map<std::string, std::string>& ExperimentConfig::default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"problem.name", "skew_bilinear"},
      {"problem.dim", "auto"},
      {"problem.shift", "2"},
      {"problem.costs", "1, 2"},
      {"problem.box_lower", "-1"},
      {"problem.box_upper", "1"},
      {"problem.seed", "7"},
      {"split.lower", "0"},
      {"split.upper", "1"},
      {"split.shift", "2"},
      {"geometry.name", "euclidean"},
      {"geometry.weights", "auto"},
      {"preset.name", "eg"},
      {"preset.base", "eg"},
      {"preset.eta", "0.1"},
      {"preset.eta1", "auto"},
      {"preset.eta2", "auto"},
      {"preset.alpha", "auto"},
      {"preset.beta", "auto"},
      {"preset.gamma", "1"},
      {"preset.gamma1", "1"},
      {"preset.gamma2", "1"},
      {"preset.case", "1"},
      {"preset.inner_tol", "1e-10"},
      {"preset.inner_max_iterations", "10000"},
      {"run.mode", "discrete"},
      {"run.integrator", "rk4"},
      {"run.dt", "0.01"},
      {"run.steps", "1000"},
      {"run.t_end", "10"},
      {"run.x0", "center"},
      {"run.seed", "0"},
      {"run.stop_residual", "1e-8"},
      {"run.reference", "known"},
      {"output.dir", "out"},
      {"output.prefix", "tmd"},
      {"output.stride", "auto"},
      {"compare.samples", "1000"},
      {"compare.tolerance", "auto"},
      {"check.samples", "200"},
      {"check.x_bar", "known"},
      {"ensemble.verify", "true"},
      {"ensemble.tolerance", "1e-8"},
  };
  return defaults;
}

bool ExperimentConfig::is_known_key(const std::string& key) {
  return default_values().count(key) > 0 || std::regex_match(key, member_key_pattern());
}

ExperimentConfig::ExperimentConfig() : values_(default_values()) {}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string content = line;
    const auto comment = content.find_first_of("#;");
    if (comment != std::string::npos) content.erase(comment);
    content = trim(content);
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']')
        throw ConfigParseError(where + ": unterminated section header '" + content + "'");
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) throw ConfigParseError(where + ": empty section name");
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError(where + ": expected 'key = value', got '" + content + "'");
    const std::string key_part = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key_part.empty()) throw ConfigParseError(where + ": missing key");
    const std::string key = section.empty() ? key_part : section + "." + key_part;
    if (!is_known_key(key)) throw ConfigParseError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigParseError(where + ": duplicate key '" + key + "'");
    config.values_[key] = value;
    config.origin_[key] = where;
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

ExperimentConfig ExperimentConfig::from_flat(const std::map<std::string, std::string>& values) {
  ExperimentConfig config;
  for (const auto& [key, value] : values) {
    if (!is_known_key(key)) throw ConfigParseError("unknown key '" + key + "'");
    config.values_[key] = value;
  }
  return config;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigParseError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string ExperimentConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigParseError("missing key '" + key + "'");
  return it->second;
}

void ExperimentConfig::fail_value(const std::string& key, const std::string& expected) const {
  const auto origin = origin_.find(key);
  const std::string where = origin == origin_.end() ? "" : origin->second + ": ";
  throw ConfigParseError(where + "key '" + key + "': expected " + expected + ", got '" +
                         raw(key) + "'");
}

std::string ExperimentConfig::get_string(const std::string& key) const { return raw(key); }

double ExperimentConfig::get_double(const std::string& key) const {
  double out = 0.0;
  if (!parse_double(raw(key), out)) fail_value(key, "a number");
  return out;
}

long ExperimentConfig::get_long(const std::string& key) const {
  const std::string t = trim(raw(key));
  long out = 0;
  const auto result = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || result.ec != std::errc() || result.ptr != t.data() + t.size())
    fail_value(key, "an integer");
  return out;
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string t = trim(raw(key));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail_value(key, "a boolean");
}

Vector ExperimentConfig::get_vector(const std::string& key) const {
  std::vector<double> entries;
  std::stringstream in(raw(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    if (!parse_double(item, v)) fail_value(key, "a comma-separated list of numbers");
    entries.push_back(v);
  }
  if (entries.empty()) fail_value(key, "a comma-separated list of numbers");
  return Eigen::Map<Vector>(entries.data(), static_cast<Eigen::Index>(entries.size()));
}

bool ExperimentConfig::is_auto(const std::string& key) const { return trim(raw(key)) == "auto"; }

std::vector<int> ExperimentConfig::ensemble_members() const {
  std::set<int> indices;
  std::smatch match;
  for (const auto& [key, value] : values_) {
    if (std::regex_match(key, match, member_key_pattern())) indices.insert(std::stoi(match[1]));
  }
  return {indices.begin(), indices.end()};
}

}  // namespace tmd::harness
