// Acceptance gate: every advertised numerical claim, one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails. `--quick` shrinks the
// ensembles for a fast smoke pass; the default sizes are the binding ones.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "nelsonlab/verify.hpp"

int main(int argc, char** argv) {
  nelson::VerifyOptions opt;
  opt.full = true;
  opt.scratch_dir = "acceptance_scratch";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) opt.full = false;
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) opt.threads = std::atoi(argv[++i]);
  }
  if (const char* bin = std::getenv("NELSON_LAB_BIN")) opt.bin_path = bin;
  if (const char* scratch = std::getenv("NELSON_LAB_SCRATCH")) opt.scratch_dir = scratch;

  const auto results = nelson::run_verification(opt, std::cout);
  return nelson::verification_exit_code(results);
}
