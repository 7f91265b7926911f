#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmd/types.hpp"

namespace tmd::harness {

/// Config parse/validation failure; the message carries line or key context.
class ConfigParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/**
 * Experiment configuration: a flat map of dotted keys, fully resolved.
 *
 * The file grammar is line based:
 *
 *   # comment            (also ';')
 *   [section]            prefixes following keys with "section."
 *   key = value          key may itself be dotted, e.g. member.0.z0
 *
 * Vectors are comma-separated numbers. Every known key has a default (see
 * default_values()); unknown keys and duplicates are errors. Ensemble members
 * use the dynamic keys ensemble.member.<i>.{geometry,weights,z0}.
 */
class ExperimentConfig {
 public:
  ExperimentConfig();

  static ExperimentConfig parse(const std::string& text, const std::string& source = "<config>");
  static ExperimentConfig load(const std::string& path);
  /// Rebuild from a resolved flat map (e.g. the summary echo).
  static ExperimentConfig from_flat(const std::map<std::string, std::string>& values);

  const std::map<std::string, std::string>& flat() const { return values_; }

  /// Serializes back to the file grammar (one dotted key per line).
  std::string to_text() const;

  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  Vector get_vector(const std::string& key) const;
  /// True when the value is the literal `auto` (resolved by the experiment builder).
  bool is_auto(const std::string& key) const;

  /// Ensemble member indices present, ascending.
  std::vector<int> ensemble_members() const;

  static const std::map<std::string, std::string>& default_values();
  static bool is_known_key(const std::string& key);

 private:
  std::string raw(const std::string& key) const;
  [[noreturn]] void fail_value(const std::string& key, const std::string& expected) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;  // key -> "source:line" when read from text
};

/// Formats with 17 significant digits (exact round trip for doubles).
std::string format_double(double value);
std::string format_vector(const Vector& v);

}  // namespace tmd::harness
