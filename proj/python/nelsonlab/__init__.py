"""Stochastic-mechanics oscillator lab (python face of the C++ core)."""

try:
    from ._nelsonlab import *  # noqa: F401,F403  (installed package layout)
    from ._nelsonlab import __doc__ as _core_doc
except ImportError:  # in-tree build: extension sits on PYTHONPATH as a top-level module
    from _nelsonlab import *  # noqa: F401,F403
    from _nelsonlab import __doc__ as _core_doc

__all__ = [
    "Physical",
    "Wavefunction",
    "Ensemble",
    "NelsonError",
    "ground_state",
    "collapsed_state",
    "pair_state",
    "simulate",
    "two_time",
    "qm_oscillator_correlator",
    "sm_oscillator_correlator",
    "density_ks",
    "presets",
    "run_preset",
]
