#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wdiff {

struct ReportRow {
  std::string replica;  ///< configuration label, e.g. "N=16,beta=1"
  std::string quantity;
  double value = 0.0;
  double std_error = 0.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;
  std::vector<ReportRow> rows;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20261014;
  unsigned jobs = 1;
  /// Reference laws use beta * tamper_beta while data are generated with beta.
  double tamper_beta = 1.0;
  std::string corpus_dir;
  /// Smaller sample counts for smoke runs; the acceptance suite never sets it.
  bool quick = false;
};

/// stationarity, generator, ibp, divergence, projection, martingale, all.
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);
/// Criterion ids (1..11) run by a suite.
std::vector<int> suite_criteria(std::string_view suite);

std::vector<CriterionResult> run_suite(std::string_view suite, const VerifyOptions& opt);
CriterionResult run_criterion(int id, const VerifyOptions& opt);

/// Criteria 3 (QV bound and ratio) and 4 (martingale increments) share paths.
std::vector<CriterionResult> run_martingale_criteria(const VerifyOptions& opt);

/// CSV "replica,quantity,value,stderr" with a comment line first.
void write_report_csv(std::ostream& out, const std::vector<CriterionResult>& results,
                      const std::string& comment);
/// One "PASS|FAIL <id> <name>: <summary>" line per criterion.
void write_summary(std::ostream& out, const std::vector<CriterionResult>& results);

}  // namespace wdiff
