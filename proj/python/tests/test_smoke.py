import numpy as np
import pytest

import arcs


def test_methods_listed():
    names = arcs.methods()
    assert "CR" in names
    assert "ARCS-COV" in names


def test_simulate_summary_and_per_rep():
    out = arcs.simulate("1a", "arcs-cov", reps=8, seed=3)
    assert out["reps"] == 8
    assert out["failures"] == 0
    assert len(out["per_rep"]) == 8
    imb = np.mean([r["imb_m"] for r in out["per_rep"]])
    assert out["imb_m"] == pytest.approx(imb)
    assert 0.0 <= out["final_tpr"] <= 1.0


def test_simulate_is_reproducible_across_workers():
    a = arcs.simulate("1a", "arm", reps=6, seed=9, workers=1)
    b = arcs.simulate("1a", "arm", reps=6, seed=9, workers=3)
    assert a["per_rep"] == b["per_rep"]


def test_run_trial_balances_arms():
    t = arcs.run_trial("1a", "arcs-m", seed=5, rep=1)
    assign = np.asarray(t["assignments"])
    assert t["covariates"].shape == (120, 10)
    assert assign.sum() == 60
    assert len(t["selection_history"]) == 10
    assert t["true_set"] == [0, 1, 4]


def test_lasso_recovers_a_strong_signal():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((80, 6))
    y = 3.0 * X[:, 2] + 0.1 * rng.standard_normal(80)
    fit = arcs.lasso_fit(X, y, 0.1)
    assert fit["support"] == [2]
    lmax = arcs.lasso_lambda_max(X, y)
    assert not np.any(arcs.lasso_fit(X, y, lmax)["coefficients"])


def test_phi_and_mahalanobis():
    phi = arcs.phi_cov(np.array([1.0, 2.0]))
    c = np.sqrt(1.0 / 3.0)
    np.testing.assert_allclose(phi, c * np.array([1, 1, 2, 1, 2, 2, 4]))
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    assert arcs.mahalanobis_imb(X, [1, 1, 0, 0]) == pytest.approx(0.0)


def test_pinv_of_rank_deficient_matrix():
    A = np.array([[2.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(arcs.pinv(A), [[0.5, 0.0], [0.0, 0.0]])


def test_coin_and_threshold():
    assert arcs.coin_probability(-1.0, 0.85) == 0.85
    assert arcs.rr_threshold(10, 0.001) == pytest.approx(1.479, abs=1e-3)


def test_errors_carry_their_code():
    with pytest.raises(arcs.ArcsError, match="E_CONFIG"):
        arcs.simulate("1a", "nope")
    with pytest.raises(arcs.ArcsError, match="E_CONFIG"):
        arcs.simulate("1a", "rr", p=150, reps=1)
