#pragma once

#include <ostream>

#include "nelsonlab/report.hpp"

namespace nelson {

struct VerifyOptions {
  bool full{true};       // acceptance-size ensembles; false: reduced quick pass
  std::string bin_path;  // CLI binary for the byte-reproducibility check; empty skips it
  int threads{0};        // worker count for the ensemble runs (0 = hardware)
  std::string scratch_dir{"."};  // where the reproducibility CSVs are written
};

struct CriterionResult {
  int index{};
  std::string name;
  bool pass{};
  std::string detail;  // the measured numbers backing the verdict
};

// The quantitative exit gate: runs every advertised numerical claim at its
// stated tolerance and prints one PASS/FAIL line per criterion.
std::vector<CriterionResult> run_verification(const VerifyOptions& opt, std::ostream& log);

int verification_exit_code(const std::vector<CriterionResult>& results);

}  // namespace nelson
