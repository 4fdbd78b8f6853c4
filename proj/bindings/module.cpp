#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "nelsonlab/correlators.hpp"
#include "nelsonlab/equilibrium.hpp"
#include "nelsonlab/measurement.hpp"
#include "nelsonlab/presets.hpp"
#include "nelsonlab/runner.hpp"

namespace py = pybind11;
using namespace nelson;

namespace {

std::array<double, 2> as_point(const std::vector<double>& x, int dim) {
  if (int(x.size()) != dim) throw Error("invalid-state: point has wrong dimension");
  return {x[0], x.size() > 1 ? x[1] : 0.0};
}

std::vector<double> field(const Wavefunction& psi, const std::vector<double>& x,
                          VelocityKind kind) {
  const auto p = as_point(x, psi.dim());
  const FieldSample s = velocity_field(psi, p.data(), kind);
  return {s.v.begin(), s.v.begin() + psi.dim()};
}

}  // namespace

PYBIND11_MODULE(_nelsonlab, m) {
  m.doc() = "Stochastic-mechanics oscillator lab: Gaussian wavefunctions, "
            "diffusion-process trajectories, measurement collapse, correlators.";

  py::register_exception<Error>(m, "NelsonError");

  py::class_<Physical>(m, "Physical")
      .def(py::init<>())
      .def_readwrite("mass", &Physical::mass)
      .def_readwrite("omega", &Physical::omega)
      .def_readwrite("hbar", &Physical::hbar);

  py::class_<Wavefunction>(m, "Wavefunction")
      .def_property_readonly("dim", &Wavefunction::dim)
      .def_property_readonly("time", &Wavefunction::time)
      .def_property_readonly("n_branches",
                             [](const Wavefunction& w) { return w.branches().size(); })
      .def("log_value",
           [](const Wavefunction& w, const std::vector<double>& x) {
             return log_evaluate(w, as_point(x, w.dim()).data());
           })
      .def("density",
           [](const Wavefunction& w, const std::vector<double>& x) {
             return std::exp(2.0 * log_evaluate(w, as_point(x, w.dim()).data()).real());
           })
      .def("norm_squared", [](const Wavefunction& w) { return norm_squared(w); })
      .def("propagate", [](const Wavefunction& w, double tau) { return propagate(w, tau); },
           py::arg("duration"))
      .def("drift", [](const Wavefunction& w, const std::vector<double>& x) {
        return field(w, x, VelocityKind::ForwardDrift);
      })
      .def("backward_drift", [](const Wavefunction& w, const std::vector<double>& x) {
        return field(w, x, VelocityKind::BackwardDrift);
      })
      .def("current_velocity", [](const Wavefunction& w, const std::vector<double>& x) {
        return field(w, x, VelocityKind::Current);
      })
      .def("osmotic_velocity", [](const Wavefunction& w, const std::vector<double>& x) {
        return field(w, x, VelocityKind::Osmotic);
      })
      .def("measure",
           [](const Wavefunction& w, const std::vector<int>& coords,
              const std::vector<double>& outcome, double width) {
             return apply_position_measurement(w, coords, outcome, width);
           },
           py::arg("coords"), py::arg("outcome"), py::arg("width"));

  m.def("ground_state", &make_ground_state, py::arg("mass") = 1.0, py::arg("omega") = 1.0,
        py::arg("hbar") = 1.0);
  m.def("collapsed_state",
        [](const std::vector<double>& x0, double width, const Physical& ph, double time) {
          return make_collapsed_state(x0, width, ph, time);
        },
        py::arg("x0"), py::arg("width"), py::arg("physical") = Physical{}, py::arg("time") = 0.0);
  m.def("pair_state",
        [](double sigma2, double r, const Physical& ph) { return make_pair_state(sigma2, r, ph); },
        py::arg("sigma2"), py::arg("r"), py::arg("physical") = Physical{});

  py::class_<Ensemble>(m, "Ensemble")
      .def_property_readonly("dim", [](const Ensemble& e) { return e.dim; })
      .def_property_readonly("n_traj", [](const Ensemble& e) { return e.n_traj; })
      .def_property_readonly("record_times", [](const Ensemble& e) { return e.record_times; })
      .def_property_readonly("clamp_events", [](const Ensemble& e) { return e.clamp_events; })
      .def("positions", [](const Ensemble& e, double t, int coord) {
        const auto s = e.slice(e.record_index(t), coord);
        return std::vector<double>(s.begin(), s.end());
      }, py::arg("t"), py::arg("coord") = 0);

  m.def("simulate",
        [](const Wavefunction& psi0, std::vector<double> record_times, double dt, double t_end,
           std::size_t n_traj, std::uint64_t seed,
           const std::vector<std::tuple<double, std::vector<int>, double>>& measurements,
           int threads) {
          ExperimentSpec spec{psi0, {}, {}};
          for (const auto& [t, coords, width] : measurements)
            spec.measurements.push_back({t, coords, width});
          SdeConfig cfg;
          cfg.dt = dt;
          cfg.t_end = t_end;
          cfg.n_traj = n_traj;
          cfg.seed = seed;
          cfg.threads = threads;
          return run_experiment(spec, cfg, std::move(record_times));
        },
        py::arg("psi0"), py::arg("record_times"), py::arg("dt") = 1e-3, py::arg("t_end") = 1.0,
        py::arg("n_traj") = 10000, py::arg("seed") = 1,
        py::arg("measurements") = std::vector<std::tuple<double, std::vector<int>, double>>{},
        py::arg("threads") = 0);

  m.def("two_time",
        [](const Ensemble& e, double t1, double t2, int c1, int c2) {
          const Estimate est = mc_two_time(e, t1, t2, c1, c2);
          return py::make_tuple(est.value, est.stderr_);
        },
        py::arg("ensemble"), py::arg("t1"), py::arg("t2"), py::arg("coord1") = 0,
        py::arg("coord2") = 0);

  m.def("qm_oscillator_correlator", &qm_oscillator_correlator, py::arg("sigma2"),
        py::arg("omega0"), py::arg("t"));
  m.def("sm_oscillator_correlator", &sm_oscillator_correlator, py::arg("sigma2"),
        py::arg("omega0"), py::arg("t"));

  m.def("density_ks",
        [](const Ensemble& e, const Wavefunction& psi_t, double t, int coord) {
          return density_check(e, psi_t, t, coord).ks_statistic;
        },
        py::arg("ensemble"), py::arg("psi_t"), py::arg("t"), py::arg("coord") = 0);

  m.def("presets", [] {
    std::vector<py::dict> out;
    for (const PresetInfo& p : all_presets()) {
      py::dict d;
      d["name"] = std::string(p.name);
      d["blurb"] = std::string(p.blurb);
      d["measured"] = p.measured;
      d["dim"] = p.dim();
      out.push_back(std::move(d));
    }
    return out;
  });

  m.def("run_preset",
        [](const std::string& name, std::size_t n_traj, std::uint64_t seed, double dt,
           double t_end, const std::string& lags, int threads) {
          RunConfig cfg;
          cfg.preset = name;
          cfg.n_traj = n_traj;
          cfg.seed = seed;
          cfg.dt = dt;
          cfg.t_end = t_end;
          cfg.lags = lags;
          cfg.threads = threads;
          cfg.verbosity = 0;
          const RunReport rep = execute(resolve(cfg));
          py::list rows;
          for (const LagRow& r : rep.rows) {
            py::dict d;
            d["lag"] = r.lag;
            d["estimate"] = r.estimate;
            d["stderr"] = r.stderr_;
            d["sm_reference"] = r.sm_reference;
            d["qm_reference"] = r.qm_reference;
            d["z_sm"] = r.z_sm;
            d["z_qm"] = r.z_qm;
            d["verdict"] = std::string(verdict_label(r.verdict));
            rows.append(std::move(d));
          }
          py::dict out;
          out["preset"] = rep.preset;
          out["config"] = rep.config_line;
          out["rows"] = std::move(rows);
          out["diag"] = rep.diag_line;
          out["all_applicable_pass"] = rep.all_applicable_pass;
          return out;
        },
        py::arg("name"), py::arg("n_traj") = 20000, py::arg("seed") = 1, py::arg("dt") = -1.0,
        py::arg("t_end") = -1.0, py::arg("lags") = std::string(), py::arg("threads") = 0);
}
