#include "wdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "wdiff/errors.hpp"

#ifndef WDIFF_VERSION
#define WDIFF_VERSION "unknown"
#endif

namespace wdiff {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key, "expected a real number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    // Accept integral values written in scientific notation, e.g. 1e5.
    double d = 0.0;
    const auto [p2, ec2] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (!v.empty() && ec2 == std::errc() && p2 == v.data() + v.size() && d >= 0.0 && d < 1.8e19 &&
        d == static_cast<double>(static_cast<std::uint64_t>(d))) {
      return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(lineno), "empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value', got '" + body + "'");
    }
    const std::string k = trim(std::string_view(body).substr(0, eq));
    if (k.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
    const std::string key = section.empty() ? k : section + "." + k;
    if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
    cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return cfg;
}

Config Config::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  return parse(in);
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing required key");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const { return to_double(key, get_string(key)); }

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key) const { return to_uint(key, get_string(key)); }

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& v : split_list(get_string(key))) out.push_back(to_double(key, v));
  return out;
}

std::vector<std::uint64_t> Config::get_uints(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& v : split_list(get_string(key))) out.push_back(to_uint(key, v));
  return out;
}

void Config::require_known(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(key, "unknown key");
    }
  }
}

SimParams sim_params_from(const Config& cfg, std::size_t beta_index) {
  SimParams p;
  const auto N = cfg.get_uint("model.N");
  if (N < 1) throw ConfigError("model.N", "must be >= 1");
  p.N = static_cast<std::size_t>(N);
  const auto betas = cfg.get_doubles("model.beta");
  if (beta_index >= betas.size()) throw ConfigError("model.beta", "index out of range");
  p.beta = betas[beta_index];
  if (!(p.beta > 0.0)) throw ConfigError("model.beta", "must be > 0");
  p.seed = cfg.get_uint("model.seed", 0);
  p.epsilon = cfg.get_double("dynamics.epsilon", p.epsilon);
  if (!(p.epsilon > 0.0)) throw ConfigError("dynamics.epsilon", "must be > 0");
  p.dt = cfg.get_double("dynamics.dt", p.epsilon * p.epsilon);
  if (!(p.dt > 0.0)) throw ConfigError("dynamics.dt", "must be > 0");
  p.delta_reg = cfg.get_double("dynamics.delta_reg", p.delta_reg);
  if (!(p.delta_reg >= 0.0)) throw ConfigError("dynamics.delta_reg", "must be >= 0");
  p.horizon = cfg.get_double("dynamics.horizon", p.horizon);
  if (!(p.horizon >= 0.0)) throw ConfigError("dynamics.horizon", "must be >= 0");
  try {
    p.scheme = parse_scheme(cfg.get_string("dynamics.scheme", "BallWalk"));
  } catch (const InvalidArgument& e) {
    throw ConfigError("dynamics.scheme", e.what());
  }
  const auto kernel = cfg.get_string("dynamics.kernel", "Metropolis");
  if (kernel == "Metropolis") {
    p.kernel = BallWalkKernel::Metropolis;
  } else if (kernel == "ExactRejection") {
    p.kernel = BallWalkKernel::ExactRejection;
  } else {
    throw ConfigError("dynamics.kernel", "expected Metropolis or ExactRejection, got '" + kernel + "'");
  }
  p.max_rejection_tries = cfg.get_uint("dynamics.max_rejection_tries", p.max_rejection_tries);
  return p;
}

std::string version_string() { return WDIFF_VERSION; }

}  // namespace wdiff
