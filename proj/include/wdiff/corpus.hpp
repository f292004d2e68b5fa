#pragma once

#include <string>
#include <vector>

#include "wdiff/dirichlet_form.hpp"
#include "wdiff/measure.hpp"
#include "wdiff/test_function.hpp"

namespace wdiff {

/// Test data for the convergence sweeps and integration-by-parts checks.
struct Corpus {
  std::vector<QuantileStep> quantiles;        ///< quantiles.txt
  std::vector<TestFunction> phis;             ///< phis.txt
  std::vector<CylinderFunctional> functionals;  ///< functionals.txt
  std::vector<IbpPair> ibp_pairs;             ///< ibp_pairs.txt, "u | w | phi"
};

/// Directory shipped with the sources (set at build time).
std::string default_corpus_dir();

/// One quantile per line, as in quantiles.txt.
std::vector<QuantileStep> load_quantiles(const std::string& path);

/// Loads the four files from `dir`; blank lines and '#' comments are skipped.
Corpus load_corpus(const std::string& dir);

}  // namespace wdiff
