"""End-to-end smoke of the python face: states, fields, simulation, presets."""

import math

import pytest

import nelsonlab as nl


def test_ground_state_fields():
    g = nl.ground_state()
    assert g.dim == 1
    assert g.n_branches == 1
    assert g.norm_squared() == pytest.approx(1.0, abs=1e-12)
    # sigma^2 = 1/2: density N(0, 1/2), drift b = -x, osmotic u = -x, current 0
    assert g.density([0.0]) == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-12)
    assert g.drift([0.7])[0] == pytest.approx(-0.7, abs=1e-12)
    assert g.current_velocity([0.7])[0] == pytest.approx(0.0, abs=1e-12)
    assert g.osmotic_velocity([0.7])[0] == pytest.approx(-0.7, abs=1e-12)
    assert g.backward_drift([0.7])[0] == pytest.approx(0.7, abs=1e-12)


def test_propagation_and_measurement():
    x0 = 1.0
    c = nl.collapsed_state([x0], 0.1)
    moved = c.propagate(0.5)
    assert moved.time == pytest.approx(0.5)
    # the packet center follows the classical trajectory x0 cos(t)
    lo, hi = x0 * math.cos(0.5) - 1e-3, x0 * math.cos(0.5) + 1e-3
    assert moved.density([hi]) == pytest.approx(moved.density([lo]), rel=1e-4)

    pair = nl.pair_state(0.5, 0.99)
    post = pair.measure([0], [0.6], 0.05)
    assert post.dim == 2
    assert post.norm_squared() == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(nl.NelsonError):
        pair.measure([0], [0.6], -1.0)


def test_simulation_statistics():
    ens = nl.simulate(nl.ground_state(), [0.0, 0.5], dt=1e-3, t_end=0.5,
                      n_traj=4000, seed=3)
    assert ens.n_traj == 4000
    assert ens.record_times == [0.0, 0.5]
    value, stderr = nl.two_time(ens, 0.0, 0.5)
    ref = nl.sm_oscillator_correlator(0.5, 1.0, 0.5)
    assert abs(value - ref) < 4.0 * stderr
    xs = ens.positions(0.0)
    assert len(xs) == 4000
    assert abs(sum(xs) / len(xs)) < 0.05
    assert nl.density_ks(ens, nl.ground_state().propagate(0.5), 0.5) < 4.0 / math.sqrt(4000)


def test_measured_simulation_outcome_feedback():
    ens = nl.simulate(nl.ground_state(), [0.0, 0.2], dt=1e-3, t_end=0.2,
                      n_traj=500, seed=7, measurements=[(0.0, [0], 0.05)])
    v0, _ = nl.two_time(ens, 0.0, 0.0)
    assert v0 == pytest.approx(0.5, abs=0.15)  # E[X(0)^2] = sigma^2


def test_presets_roundtrip():
    names = {p["name"] for p in nl.presets()}
    assert "oscillator-unmeasured" in names
    assert "double-slit" in names
    assert len(names) == 5

    rep = nl.run_preset("oscillator-unmeasured", n_traj=2000, seed=1, lags="0,1")
    assert rep["preset"] == "oscillator-unmeasured"
    assert len(rep["rows"]) == 2
    row0 = rep["rows"][0]
    assert row0["lag"] == 0.0
    assert row0["sm_reference"] == pytest.approx(0.5)
    assert abs(row0["estimate"] - 0.5) < 5 * row0["stderr"]

    with pytest.raises(nl.NelsonError):
        nl.run_preset("no-such-preset")
