import json
import math

import numpy as np
import pytest

import rotorb


def test_normal_form_of_rotation_preset():
    Q = rotorb.matrix_from_preset("rotation:[1.0471975511965976]", 1)
    sr = rotorb.normal_form(Q)
    assert sr.theta[0] == pytest.approx(math.pi / 3, abs=1e-12)
    tilde = rotorb.tilde_angles(sr)
    assert tilde.values[0] == pytest.approx(math.pi / 3)

    rep = rotorb.validate_symplectic_orthogonal(Q)
    assert rep.passed()
    assert rep.orth_defect < 1e-12


def test_loop_round_trip_and_parseval():
    sr = rotorb.normal_form(rotorb.matrix_from_preset("rotation:[0.9,2.1]", 2))
    grid = rotorb.build_grid(sr, 2 * math.pi, 6)

    rng = np.random.default_rng(42)
    y = rotorb.RotatingLoop(grid)
    c = rng.normal(size=grid.size()) + 1j * rng.normal(size=grid.size())
    y.coeffs = c

    samples = rotorb.synthesize(y, 64)
    back = rotorb.analyze(samples, grid)
    assert np.max(np.abs(back.coeffs - c)) < 1e-12

    mean_square = np.mean(np.sum(samples**2, axis=1))
    assert mean_square == pytest.approx(2 * np.sum(np.abs(c) ** 2), rel=1e-10)


def test_gauge_legendre_matches_ellipsoid_closed_form():
    axes = np.array([1.0, 1.2, 1.0, 1.2])
    gp = rotorb.GaugeProblem(rotorb.make_ellipsoid(axes, 0.5), 4.0 / 3.0)
    p = gp.p
    rng = np.random.default_rng(0)
    for _ in range(5):
        y = rng.normal(size=4)
        closed = np.linalg.norm(axes * y) ** p / p
        val, grad = gp.legendre(y)
        assert val == pytest.approx(closed, rel=1e-10)
        # inverse pairing
        z = rng.normal(size=4)
        z /= np.linalg.norm(z)
        yz = gp.eval(z)[1]
        assert np.linalg.norm(gp.legendre(yz)[1] - z) < 1e-6


def test_end_to_end_round_solve(tmp_path):
    spec_json = {
        "schema_version": 1,
        "n": 1,
        "Q": "identity",
        "hamiltonian": {"preset": "ellipsoid", "axes": [1.0], "beta": 0.5},
        "T": 2 * math.pi,
        "discretization": {"K_max": 8, "N": 64},
    }
    spec = rotorb.parse_problem_json(json.dumps(spec_json))
    report_text, code = rotorb.run_solve(spec, str(tmp_path))
    assert code == 0
    report = json.loads(report_text)
    res = report["result"]
    assert res["certificate"]["count"] >= 1
    assert res["ledger"]["all_pass"]
    orbit = res["orbits"][0]
    assert orbit["polished"]["shooting_residual"] <= 1e-10
    assert (tmp_path / "report.json").exists()

    verify_text = rotorb.run_verify(str(tmp_path), spec)
    assert json.loads(verify_text)["pass"]


def test_descend_from_seed_converges():
    sr = rotorb.normal_form(rotorb.matrix_from_preset("identity", 1))
    grid = rotorb.build_grid(sr, 2 * math.pi, 8)
    gp = rotorb.GaugeProblem(rotorb.make_ellipsoid(np.ones(2), 0.5), 4.0 / 3.0)

    y0 = rotorb.seed_loop(gp, grid, 0)
    opts = rotorb.SolverOptions()
    opts.N = 64
    state = rotorb.descend(gp, y0, opts)
    assert state.converged
    p = gp.p
    closed = (1.0 / p - 0.5) * 2 * math.pi  # omega = 1 at T = 2 pi
    assert state.energy == pytest.approx(closed, abs=1e-9)
