import numpy as np
import pytest

import rlus


def test_noiseless_recovery():
    inst = rlus.generate(n=96, d=16, m=8, r=8, seed=1)
    out = rlus.depermute(inst["B"], inst["Y"], 8)
    assert rlus.fractional_hamming(out["pi_hat"], inst["pi_star"]) == 0.0
    assert rlus.relative_error(out["X_hat"], inst["X_star"]) < 1e-8
    assert out["X_hat"].shape == (16, 8)


def test_model_round_trip():
    inst = rlus.generate(n=32, d=8, m=3, r=4, seed=5)
    assert np.allclose(rlus.apply(inst["pi_star"], inst["B"] @ inst["X_star"]), inst["Y"])
    assert inst["sigma2"] == 0.0
    x = rlus.solve_for_permutation(inst["B"], inst["Y"], inst["pi_star"])
    assert np.allclose(x, inst["X_star"])


def test_baselines_and_metrics():
    inst = rlus.generate(n=64, d=16, m=16, r=4, seed=2, snr_db=30)
    pi = rlus.levsort(inst["B"], inst["Y"], 4)
    assert len(pi["blocks"]) == 16
    assert 0.0 <= rlus.fractional_hamming(pi, inst["pi_star"]) <= 1.0
    y = inst["Y_clean"]
    assert rlus.covariance_error(y, y) == pytest.approx(0.0, abs=1e-12)


def test_gw_match_planted():
    rng = np.random.default_rng(0)
    a = rng.permutation(np.arange(16.0)).reshape(4, 4)
    a = a + a.T
    p = np.array([2, 0, 3, 1])
    b = np.empty_like(a)
    b[np.ix_(p, p)] = a
    assignment, cost, coupling = rlus.gw_match(a, b)
    assert list(assignment) == list(p)
    assert cost == pytest.approx(0.0, abs=1e-9)
    assert coupling.shape == (4, 4)


def test_run_trial_and_options():
    opts = rlus.default_options()
    assert opts["polish"] is True
    rec = rlus.run_trial(n=32, d=8, m=2, r=4, seed=3, method="oracle", snr_db=30)
    assert rec["frac_hamming"] == 0.0 and not rec["failed"]
    bad = rlus.run_trial(n=32, d=8, m=2, r=4, seed=3, options={"epsilon": 1e-320, "absolute_epsilon": True})
    assert bad["failed"]


def test_invalid_config_raises():
    with pytest.raises(Exception):
        rlus.generate(n=30, d=8, m=2, r=4, seed=0)
