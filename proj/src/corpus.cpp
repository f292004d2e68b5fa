#include "wdiff/corpus.hpp"

#include <fstream>

#include "wdiff/errors.hpp"

#ifndef WDIFF_CORPUS_DIR
#define WDIFF_CORPUS_DIR "data/corpus"
#endif

namespace wdiff {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open corpus file " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line.substr(0, line.find('#')));
    if (!body.empty()) out.push_back(body);
  }
  return out;
}

template <class Fn>
auto parse_each(const std::string& path, Fn&& fn) {
  std::vector<decltype(fn(std::string{}))> out;
  int n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    try {
      out.push_back(fn(line));
    } catch (const std::exception& e) {
      throw InvalidArgument(path + ": entry " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string default_corpus_dir() { return WDIFF_CORPUS_DIR; }

std::vector<QuantileStep> load_quantiles(const std::string& path) {
  return parse_each(path, [](const std::string& s) { return parse_quantile(s); });
}

Corpus load_corpus(const std::string& dir) {
  Corpus c;
  c.quantiles = load_quantiles(dir + "/quantiles.txt");
  c.phis = parse_each(dir + "/phis.txt", [](const std::string& s) {
    auto phi = parse_test_function(s);
    VectorFieldSpec{CylinderFunctional{}, phi}.validate();
    return phi;
  });
  c.functionals = parse_each(dir + "/functionals.txt", [](const std::string& s) { return parse_cylinder(s); });
  c.ibp_pairs = parse_each(dir + "/ibp_pairs.txt", [](const std::string& s) {
    const auto a = s.find('|');
    const auto b = s.find('|', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) throw InvalidArgument("expected 'u | w | phi'");
    IbpPair p{parse_cylinder(trim(s.substr(0, a))),
              VectorFieldSpec{parse_cylinder(trim(s.substr(a + 1, b - a - 1))),
                              parse_test_function(trim(s.substr(b + 1)))}};
    p.zeta.validate();
    return p;
  });
  return c;
}

}  // namespace wdiff
