import numpy as np
import pytest

from imaginarity import convex_roof as cr
from imaginarity import numerics, states
from imaginarity.errors import DimensionTooLarge, DomainError, RankDeficient

YP = states.projector(states.y_plus())
FAST = cr.RoofConfig(restarts=6)


def h2(x):
    x = np.clip(x, 1e-300, 1)
    y = np.clip(1 - x, 1e-300, 1)
    return float(-x * np.log2(x) - y * np.log2(y))


def qubit_roof_closed_forms(rho):
    """Roofs of a qubit with Bloch y-component y.

    Each pure state contributes a function of |y_i| only, convex and even in
    y_i, and a chord through rho perpendicular to the y axis reaches it.
    """
    y = 2 * rho[1, 0].imag
    s = np.sqrt(max(0.0, 1 - y * y))
    return {"l1": abs(y), "geometric": (1 - s) / 2, "r": h2((1 + s) / 2)}


def theta_sweep(rho, n=2001):
    """Two-state decompositions from real rotations of the eigenbasis, via LAPACK."""
    w, V = np.linalg.eigh(rho)
    basis = np.sqrt(np.clip(w, 0, None))[:, None] * V.T
    best = np.inf
    for th in np.linspace(0, np.pi, n):
        W = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        tilde = W @ basis
        # p_i * l1(psi_i) = 2 |Im psi~_i0 conj(psi~_i1)| for the unnormalized rows
        val = np.sum(2 * np.abs(np.imag(tilde[:, 0] * np.conj(tilde[:, 1]))))
        best = min(best, val)
    return best


def test_pure_measure_examples():
    yp = states.y_plus()[None]
    assert cr.pure_l1(yp)[0] == pytest.approx(1.0)
    assert cr.pure_geometric(yp)[0] == pytest.approx(0.5)
    assert cr.pure_relative_entropy(yp)[0] == pytest.approx(1.0)
    real = np.array([[0.6, 0.8]])
    for f in cr.PURE_MEASURES.values():
        assert f(real)[0] == pytest.approx(0.0, abs=1e-12)


def test_pure_measures_match_matrix_routes():
    psi = states.sample_haar_pure(3, 0, size=200)
    lam = np.linalg.eigvalsh(np.real(states.projector(psi)))[:, -1]
    assert np.allclose(cr.pure_geometric(psi), 1 - lam, atol=1e-12)
    lam_d = np.linalg.eigvalsh(states.delta(states.projector(psi)))
    lam_d = np.clip(lam_d, 1e-300, 1)
    assert np.allclose(cr.pure_relative_entropy(psi), -np.sum(lam_d * np.log2(lam_d), axis=1), atol=1e-9)


def test_unknown_pure_measure():
    with pytest.raises(DomainError):
        cr.convex_roof(YP, "nope")


def test_pure_states_are_exact():
    for seed in range(5):
        psi = states.sample_haar_pure(2 + seed % 2, seed)
        rho = states.projector(psi)
        for name in cr.PURE_MEASURES:
            value, _ = cr.convex_roof(rho, name, FAST)
            assert value == pytest.approx(cr.pure_value(psi, name), abs=1e-8)


def test_real_and_maximally_mixed_are_free():
    for rho in (np.eye(2) / 2, states.sample_real_mixed(2, 1), states.sample_real_mixed(3, 2)):
        for name in cr.PURE_MEASURES:
            assert cr.convex_roof(rho, name, FAST)[0] <= 1e-3


def test_qubit_roofs_match_closed_forms():
    rng = np.random.default_rng(3)
    for _ in range(6):
        rho = states.sample_mixed(2, rng)
        expected = qubit_roof_closed_forms(rho)
        for name, target in expected.items():
            value, dec = cr.convex_roof(rho, name, FAST)
            assert value >= target - 1e-9
            assert value == pytest.approx(target, abs=2e-3)
            assert np.max(np.abs(dec.reconstruct() - rho)) <= 1e-10


def test_l1_roof_against_theta_sweep():
    rng = np.random.default_rng(4)
    for _ in range(5):
        rho = states.sample_mixed(2, rng)
        assert cr.convex_roof(rho, "l1", FAST)[0] == pytest.approx(theta_sweep(rho), abs=2e-3)


def test_roof_never_exceeds_eigen_average():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        for _ in range(3):
            rho = states.sample_mixed(d, rng)
            for name in cr.PURE_MEASURES:
                assert cr.convex_roof(rho, name, FAST)[0] <= cr.eigen_average(rho, name) + 1e-12


def test_ensemble_from_isometry():
    rho = states.sample_mixed(3, 6)
    dec = cr.ensemble_from_isometry(rho, np.eye(3))
    w, _ = numerics.eigh(rho)
    assert np.allclose(dec.weights, w)
    assert np.max(np.abs(dec.reconstruct() - rho)) <= 1e-10
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(5, 3)) + 1j * np.random.default_rng(1).normal(size=(5, 3)))
    dec = cr.ensemble_from_isometry(rho, Q)
    assert dec.weights.shape == (5,)
    assert np.max(np.abs(dec.reconstruct() - rho)) <= 1e-10
    assert np.allclose(np.linalg.norm(dec.states, axis=1), 1)


def test_ensemble_from_isometry_errors():
    rho = states.sample_mixed(3, 7)
    with pytest.raises(RankDeficient):
        cr.ensemble_from_isometry(rho, np.eye(2), m=2)
    with pytest.raises(DomainError):
        cr.ensemble_from_isometry(rho, 2 * np.eye(3))


def test_roof_dimension_limit():
    with pytest.raises(DimensionTooLarge):
        cr.convex_roof(np.eye(5) / 5)


def test_roof_is_reproducible():
    rho = states.sample_mixed(3, 8)
    a = cr.convex_roof(rho, "geometric", FAST)
    b = cr.convex_roof(rho, "geometric", FAST)
    assert a[0] == b[0]
    assert np.array_equal(a[1].states, b[1].states)


def test_qubit_l1_roof_is_faithful():
    rng = np.random.default_rng(9)
    for _ in range(5):
        real = states.sample_real_mixed(2, rng)
        rho = states.sample_mixed(2, rng)
        assert cr.convex_roof(real, "l1", FAST)[0] <= 1e-9
        assert cr.convex_roof(rho, "l1", FAST)[0] > 1e-3


def test_probes_report_no_violations():
    conv = cr.convexity_probe("l1", trials=4, seed=1, cfg=FAST)
    mono = cr.monotonicity_probe("geometric", trials=4, seed=2, cfg=FAST)
    for rep in (conv, mono):
        assert rep.trials_run == 4 and rep.violations == 0 and rep.passed
