#pragma once

#include "nelsonlab/dynamics.hpp"

namespace nelson {

// Effective collapse at a position measurement. Measuring every coordinate
// replaces psi by a width-w Gaussian centered on the outcome; measuring a
// subset multiplies psi by a width-w Gaussian in the measured coordinates
// and renormalizes (the branch family is closed under this product).
// Subsequent drift for ALL coordinates comes from the returned state.
Wavefunction apply_position_measurement(const Wavefunction& psi, std::span<const int> coords,
                                        std::span<const double> outcome, double width);

struct BranchSelection {
  Wavefunction psi;       // selected branch renormalized, or the input unchanged
  int branch{-1};         // -1: branches still overlapping at x
  double discarded{0.0};  // density fraction the other branches carry at x
};

// Keep the branch carrying >= (1 - eps) of |psi(x)|^2; otherwise return psi
// unchanged and report the overlap. Discarding empty branches perturbs drift
// along the trajectory only at O(eps).
BranchSelection select_branch(const Wavefunction& psi, const double* x, double eps = 1e-8);

struct PlannedMeasurement {
  double t{};
  std::vector<int> coords;  // measured coordinate indices, unique, ascending
  double width{};
};

struct BranchSelectionPlan {
  double t{-1.0};  // < 0: no selection step
  double eps{1e-8};
};

// A runnable scenario: initial state, measurement schedule (strictly
// increasing times), optional branch-selection instant for superpositions.
struct ExperimentSpec {
  Wavefunction psi0;
  std::vector<PlannedMeasurement> measurements;
  BranchSelectionPlan selection;
};

// Integrate cfg.n_traj trajectories of the scenario, storing positions at the
// record times. Record/measurement/selection times are snapped to the nearest
// dt grid point (they must lie inside [t0, t_end]). Measurement outcomes are
// each trajectory's own position; every trajectory carries its private
// conditional wavefunction afterwards (represented exactly via drift tables
// affine in the outcome). Threaded over trajectories; results are
// bit-identical for fixed (seed, n_traj) regardless of cfg.threads.
Ensemble run_experiment(const ExperimentSpec& spec, const SdeConfig& cfg,
                        std::vector<double> record_times);

}  // namespace nelson
