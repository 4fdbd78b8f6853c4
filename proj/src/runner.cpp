#include "nelsonlab/runner.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "nelsonlab/verify.hpp"

namespace nelson {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void attach_run_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("preset", cfg.preset, "experiment preset (see list-presets)")->required();
  app.add_option("--mass", cfg.mass, "particle mass")->check(CLI::PositiveNumber);
  app.add_option("--omega", cfg.omega, "oscillator angular frequency")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--hbar", cfg.hbar, "Planck constant (reduced)")->check(CLI::PositiveNumber);
  app.add_option("--n-traj", cfg.n_traj, "trajectory count")->check(CLI::PositiveNumber);
  app.add_option("--dt", cfg.dt, "integration step")->check(CLI::PositiveNumber);
  app.add_option("--t-end", cfg.t_end, "integration horizon")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "RNG seed")->envname("NELSON_LAB_SEED");
  app.add_option("--b-max", cfg.b_max, "drift clamp near nodes")->check(CLI::PositiveNumber);
  app.add_option("--collapse-width", cfg.collapse_width, "measurement collapse width")
      ->check(CLI::PositiveNumber);
  app.add_option("--lags", cfg.lags,
                 "comma list of correlation lags; entries may end in 'pi' (scaled by 1/omega)");
  app.add_option("--threads", cfg.threads, "worker threads (0 = available parallelism)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", cfg.out, "CSV output path (default <preset>.csv)");
  app.add_flag("--no-timestamp", cfg.no_timestamp, "omit the generated-at header line");
  app.add_option("--verbosity", cfg.verbosity, "0 silent, 1 table, 2 +diagnostics")
      ->check(CLI::Range(0, 2));
  app.set_config("--config", "", "flat key = value config file (flags take precedence)");
  app.allow_config_extras(false);
}

double parse_number(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(std::string("cli: non-numeric ") + what + " '" + tok + "'");
  }
}

std::string trimmed(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

}  // namespace

std::vector<double> parse_lag_list(const std::string& raw, double omega) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const auto comma = raw.find(',', pos);
    std::string tok =
        trimmed(raw.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (tok.empty()) throw Error("cli: empty entry in --lags");
    double v = 0.0;
    if (tok.size() >= 2 && tok.compare(tok.size() - 2, 2, "pi") == 0) {
      const std::string head = tok.substr(0, tok.size() - 2);
      const double mult = head.empty() ? 1.0 : parse_number(head, "--lags entry");
      if (!(omega > 0.0)) throw Error("cli: pi-valued --lags entries need a positive omega");
      v = mult * kPi / omega;
    } else {
      v = parse_number(tok, "--lags entry");
    }
    if (!(v >= 0.0)) throw Error("cli: --lags entries must be non-negative");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw Error("cli: --lags is empty");
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"nelson-lab run"};
  attach_run_options(app, cfg);
  std::vector<const char*> argv;
  argv.push_back("run");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw Error(std::string("cli: ") + e.what());
  }
  return cfg;
}

ResolvedRun resolve(const RunConfig& cfg) {
  ResolvedRun rr;
  rr.info = find_preset(cfg.preset);
  if (!rr.info)
    throw Error("cli: unknown preset '" + cfg.preset + "' (see list-presets)");
  const PresetInfo& info = *rr.info;
  rr.verbosity = cfg.verbosity;
  rr.no_timestamp = cfg.no_timestamp;

  if (!(cfg.mass > 0.0)) throw Error("cli: --mass must be positive");
  if (!(cfg.hbar > 0.0)) throw Error("cli: --hbar must be positive");
  double omega = cfg.omega;
  if (info.family == PresetInfo::Family::FreeSlit) {
    if (omega < 0.0) omega = 0.0;
    if (omega != 0.0)
      throw Error("cli: double-slit is a free-particle preset; omit --omega or pass 0");
  } else {
    if (omega < 0.0) omega = 1.0;
    if (!(omega > 0.0)) throw Error("cli: --omega must be positive for oscillator presets");
  }
  rr.ph.mass = {cfg.mass, cfg.mass};
  rr.ph.omega = {omega, omega};
  rr.ph.hbar = cfg.hbar;

  const bool osc = info.family != PresetInfo::Family::FreeSlit;
  rr.sigma2 = osc ? ground_sigma2(rr.ph, 0) : kNaN;
  if (info.measured) {
    rr.collapse_width =
        cfg.collapse_width > 0.0 ? cfg.collapse_width : 0.05 * std::sqrt(rr.sigma2);
    if (!(rr.collapse_width > 0.0)) throw Error("cli: --collapse-width must be positive");
  } else {
    rr.collapse_width = kNaN;
  }

  const double scale = info.scales_with_omega ? 1.0 / omega : 1.0;
  rr.sde.dt = cfg.dt > 0.0 ? cfg.dt : 1e-3 * scale;
  rr.sde.t_end = cfg.t_end > 0.0 ? cfg.t_end : info.default_t_end * scale;
  rr.sde.t0 = 0.0;
  if (!(rr.sde.dt < rr.sde.t_end))
    throw Error("cli: --dt must be smaller than --t-end");
  rr.sde.n_traj = cfg.n_traj;
  if (rr.sde.n_traj < 2) throw Error("cli: --n-traj must be at least 2");
  rr.sde.seed = cfg.seed;
  rr.sde.b_max = cfg.b_max;
  if (!(rr.sde.b_max > 0.0)) throw Error("cli: --b-max must be positive");
  rr.sde.threads = cfg.threads;
  if (rr.sde.threads < 0) throw Error("cli: --threads must be non-negative");

  if (cfg.lags.empty()) {
    rr.lags = info.default_lags;
    for (double& l : rr.lags) l *= scale;
  } else {
    rr.lags = parse_lag_list(cfg.lags, omega);
  }
  std::sort(rr.lags.begin(), rr.lags.end());
  rr.lags.erase(std::unique(rr.lags.begin(), rr.lags.end()), rr.lags.end());
  for (const double l : rr.lags)
    if (l < 0.0 || l > rr.sde.t_end + 1e-12)
      throw Error("cli: --lags entry " + format_double(l) + " outside [0, t-end]");

  rr.out = cfg.out.empty() ? cfg.preset + ".csv" : cfg.out;

  std::ostringstream cl;
  cl << "preset=" << cfg.preset << " mass=" << format_double(cfg.mass)
     << " omega=" << format_double(omega) << " hbar=" << format_double(cfg.hbar)
     << " n-traj=" << rr.sde.n_traj << " dt=" << format_double(rr.sde.dt)
     << " t-end=" << format_double(rr.sde.t_end) << " seed=" << rr.sde.seed
     << " b-max=" << format_double(rr.sde.b_max);
  if (info.measured) cl << " collapse-width=" << format_double(rr.collapse_width);
  cl << " lags=";
  for (std::size_t i = 0; i < rr.lags.size(); ++i)
    cl << (i ? "," : "") << format_double(rr.lags[i]);
  rr.config_line = cl.str();
  return rr;
}

RunReport execute(const ResolvedRun& rr) {
  const PresetInfo& info = *rr.info;
  const ExperimentSpec spec = build_spec(info, rr.ph, info.measured ? rr.collapse_width : 1.0);

  std::vector<double> records = rr.lags;
  if (records.empty() || records.front() != 0.0) records.insert(records.begin(), 0.0);
  Ensemble ens = run_experiment(spec, rr.sde, records);

  const double omega = rr.ph.omega[0];
  const double w_over_sigma =
      info.measured ? rr.collapse_width / std::sqrt(rr.sigma2) : 0.0;
  const double c12 = info.family == PresetInfo::Family::Pair ? kPairCorrelation * rr.sigma2 : kNaN;

  RunReport rep;
  rep.preset = std::string(info.name);
  rep.config_line = rr.config_line;

  for (const double lag : rr.lags) {
    LagRow row;
    row.lag = lag;
    const Estimate est = mc_two_time(ens, 0.0, lag, info.corr_c1(), info.corr_c2());
    row.estimate = est.value;
    row.stderr_ = est.stderr_;

    switch (info.family) {
      case PresetInfo::Family::Oscillator:
        row.sm_reference = sm_oscillator_correlator(rr.sigma2, omega, lag);
        row.qm_reference = qm_oscillator_correlator(rr.sigma2, omega, lag);
        break;
      case PresetInfo::Family::Pair:
        row.sm_reference = pair_mode_correlator(rr.sigma2, kPairCorrelation, rr.ph, lag);
        row.qm_reference = cplx(qm_pair_correlator(c12, omega, lag), 0.0);
        break;
      case PresetInfo::Family::FreeSlit:
        row.sm_reference = kNaN;
        row.qm_reference = cplx(kNaN, kNaN);
        break;
    }

    row.z_sm = std::isnan(row.sm_reference) ? kNaN : (est.value - row.sm_reference) / est.stderr_;
    row.z_qm = std::isnan(row.qm_reference.real())
                   ? kNaN
                   : (est.value - row.qm_reference.real()) / est.stderr_;

    if (info.sm_verdict) {
      row.verdict = std::abs(row.z_sm) <= 3.0 ? Verdict::Pass : Verdict::Fail;
    } else if (info.qm_tol_factor >= 0.0) {
      const double phase = omega * lag;
      const bool commuting = std::abs(phase - kPi * std::round(phase / kPi)) < 1e-9 || lag == 0.0;
      if (commuting) {
        const double tol = 3.0 * est.stderr_ + info.qm_tol_factor * w_over_sigma;
        row.verdict =
            std::abs(est.value - row.qm_reference.real()) <= tol ? Verdict::Pass : Verdict::Fail;
      } else {
        row.verdict = Verdict::NotApplicable;  // no quantum target away from commuting times
      }
    } else {
      row.verdict = Verdict::NotApplicable;
    }
    if (row.verdict == Verdict::Fail) rep.all_applicable_pass = false;
    rep.rows.push_back(row);
  }

  std::ostringstream diag;
  diag << "clamp_events=" << ens.clamp_events
       << " unresolved_branches=" << ens.unresolved_branches << " n_traj=" << ens.n_traj;
  rep.diag_line = diag.str();
  return rep;
}

int run_preset(const RunConfig& cfg, std::ostream& log) {
  const ResolvedRun rr = resolve(cfg);
  const RunReport rep = execute(rr);
  write_csv_file(rr.out, rep, !rr.no_timestamp);
  print_report(log, rep, rr.verbosity);
  if (rr.verbosity >= 1 && rr.info->measured) {
    // departure from the no-collapse prediction (largest over the lag table)
    double best = -1.0;
    const LagRow* at = nullptr;
    for (const LagRow& r : rep.rows)
      if (!std::isnan(r.z_sm) && std::abs(r.z_sm) > best) {
        best = std::abs(r.z_sm);
        at = &r;
      }
    if (at)
      log << "no-collapse prediction departs by |delta| = "
          << format_double(std::abs(at->estimate - at->sm_reference)) << " (z = "
          << format_double(at->z_sm) << ") at t = " << format_double(at->lag) << "\n";
  }
  if (rr.verbosity >= 1) log << "wrote " << rr.out << "\n";
  return rep.all_applicable_pass ? 0 : 1;
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"stochastic-mechanics oscillator lab: trajectories, collapse, correlators"};
  app.require_subcommand(1);

  RunConfig cfg;
  CLI::App* run_sub =
      app.add_subcommand("run", "run an experiment preset and write its CSV report");
  attach_run_options(*run_sub, cfg);

  CLI::App* list_sub = app.add_subcommand("list-presets", "list the built-in presets");

  bool full = false;
  CLI::App* check_sub = app.add_subcommand("check", "run the numerical invariant suite");
  check_sub->add_flag("--full", full, "acceptance-size ensembles (slower)");
  int check_threads = 0;
  check_sub->add_option("--threads", check_threads, "worker threads (0 = available parallelism)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (list_sub->parsed()) {
      for (const PresetInfo& p : all_presets())
        std::cout << p.name << "\n    " << p.blurb << "\n";
      return 0;
    }
    if (check_sub->parsed()) {
      VerifyOptions opt;
      opt.full = full;
      opt.threads = check_threads;
      char self[4096];
      const ssize_t n = ::readlink("/proc/self/exe", self, sizeof self - 1);
      if (n > 0) {
        self[n] = '\0';
        opt.bin_path = self;
      }
      const auto results = run_verification(opt, std::cout);
      return verification_exit_code(results);
    }
    return run_preset(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nelson
