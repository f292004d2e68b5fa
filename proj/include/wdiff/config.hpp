#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wdiff/measure.hpp"

namespace wdiff {

/// Flat "key = value" file with [section] headers; keys are addressed as
/// "section.key". '#' starts a comment. Every accessor that fails throws
/// ConfigError naming the key.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_string(std::string_view text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  /// Comma-separated list of reals.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::uint64_t> get_uints(const std::string& key) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Throws ConfigError for the first key not in `allowed`.
  void require_known(std::initializer_list<std::string_view> allowed) const;

 private:
  std::map<std::string, std::string> values_;
};

/// SimParams from [model] (N, beta, seed) and [dynamics] (scheme, kernel,
/// epsilon, dt, delta_reg, horizon, max_rejection_tries). When [model] beta
/// lists several values, `beta_index` selects one. dt defaults to epsilon^2.
SimParams sim_params_from(const Config& cfg, std::size_t beta_index = 0);

/// Build version (git describe of the source tree).
std::string version_string();

}  // namespace wdiff
