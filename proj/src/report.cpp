#include "nelsonlab/report.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace nelson {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, p);
}

std::string_view verdict_label(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::NotApplicable:
      return "n/a";
  }
  return "n/a";
}

void write_csv(std::ostream& os, const RunReport& report, bool timestamp) {
  os << "# nelson-lab correlation report\n";
  os << "# config: " << report.config_line << "\n";
  if (timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated: " << buf << "\n";
  }
  os << "t,estimate,stderr,sm_reference,qm_reference_re,qm_reference_im,z_sm,z_qm,verdict\n";
  for (const LagRow& r : report.rows) {
    os << format_double(r.lag) << ',' << format_double(r.estimate) << ','
       << format_double(r.stderr_) << ',' << format_double(r.sm_reference) << ','
       << format_double(r.qm_reference.real()) << ',' << format_double(r.qm_reference.imag())
       << ',' << format_double(r.z_sm) << ',' << format_double(r.z_qm) << ','
       << verdict_label(r.verdict) << "\n";
  }
  os << "# diag: " << report.diag_line << "\n";
}

void write_csv_file(const std::string& path, const RunReport& report, bool timestamp) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io: cannot open output file " + path);
  write_csv(f, report, timestamp);
  f.flush();
  if (!f) throw Error("io: failed writing output file " + path);
}

void print_report(std::ostream& os, const RunReport& report, int verbosity) {
  if (verbosity <= 0) return;
  os << "preset " << report.preset << "\n";
  os << std::left << std::setw(10) << "t" << std::setw(13) << "estimate" << std::setw(11)
     << "stderr" << std::setw(13) << "sm_ref" << std::setw(13) << "qm_ref_re" << std::setw(9)
     << "z_sm" << std::setw(9) << "z_qm" << "verdict\n";
  auto cell = [](double v, int prec) {
    if (std::isnan(v)) return std::string("-");
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(prec) << v;
    return ss.str();
  };
  for (const LagRow& r : report.rows) {
    os << std::left << std::setw(10) << cell(r.lag, 4) << std::setw(13) << cell(r.estimate, 6)
       << std::setw(11) << cell(r.stderr_, 6) << std::setw(13) << cell(r.sm_reference, 6)
       << std::setw(13) << cell(r.qm_reference.real(), 6) << std::setw(9) << cell(r.z_sm, 2)
       << std::setw(9) << cell(r.z_qm, 2) << verdict_label(r.verdict) << "\n";
  }
  if (verbosity >= 2) os << "diag: " << report.diag_line << "\n";
}

}  // namespace nelson
