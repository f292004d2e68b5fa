// Runs every acceptance criterion at full size and prints one line per criterion.
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>

#include "wdiff/verify.hpp"

int main(int argc, char** argv) {
  wdiff::VerifyOptions opt;
  std::string report;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) opt.jobs = static_cast<unsigned>(std::stoul(argv[++i]));
    else if (!std::strcmp(argv[i], "--report") && i + 1 < argc) report = argv[++i];
    else {
      std::cerr << "usage: acceptance [--jobs J] [--report FILE]\n";
      return 2;
    }
  }
  const auto results = wdiff::run_suite("all", opt);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS" : "FAIL") << "  criterion " << r.id << " (" << r.name << "): " << r.summary
              << '\n';
    failed += r.passed ? 0 : 1;
  }
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  if (!report.empty()) {
    std::ofstream out(report);
    wdiff::write_report_csv(out, results, "acceptance seed=" + std::to_string(opt.seed));
  }
  return failed ? EXIT_FAILURE : EXIT_SUCCESS;
}
