#pragma once

#include <iosfwd>
#include <string>

#include "nelsonlab/correlators.hpp"

namespace nelson {

enum class Verdict { Pass, Fail, NotApplicable };

struct LagRow {
  double lag{};         // requested lag (the record may sit up to dt/2 away)
  double estimate{};
  double stderr_{};
  double sm_reference{};  // NaN when the preset has no such prediction
  cplx qm_reference{};    // NaN when the preset has no such prediction
  double z_sm{};          // NaN when not computable
  double z_qm{};          // |estimate - Re qm| / stderr; NaN when not computable
  Verdict verdict{Verdict::NotApplicable};
};

struct RunReport {
  std::string preset;
  std::string config_line;  // canonical key=value list
  std::vector<LagRow> rows;
  std::string diag_line;    // deterministic run diagnostics
  bool all_applicable_pass{true};
};

// Shortest round-trip decimal form (to_chars); NaN prints as "nan".
std::string format_double(double v);

std::string_view verdict_label(Verdict v);

// CSV schema: title comment, `# config:` line, optional `# generated:` stamp,
// column header, one row per lag, trailing `# diag:` line. Deterministic
// except for the optional timestamp.
void write_csv(std::ostream& os, const RunReport& report, bool timestamp);
void write_csv_file(const std::string& path, const RunReport& report, bool timestamp);

// Human-readable verdict table for the terminal.
void print_report(std::ostream& os, const RunReport& report, int verbosity);

}  // namespace nelson
