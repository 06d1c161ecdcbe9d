import numpy as np
import pytest

from imaginarity import bloch_order as bo
from imaginarity import channels, measures, states
from imaginarity.errors import DomainError
from imaginarity.reports import dumps

SMALL = bo.OrderScanConfig(trials=3000, p_grid=(0.0, 0.3, 0.7, 1.0))


def grid_4d(n=20):
    """Bloch directions and p on an n^4 grid, with t in [0, 1]."""
    t, th, ph, p = np.meshgrid(
        np.linspace(0, 1, n), np.linspace(0, np.pi, n), np.linspace(0, 2 * np.pi, n, endpoint=False), np.linspace(0, 1, n),
        indexing="ij",
    )
    t, th, ph, p = (a.ravel() for a in (t, th, ph, p))
    return t, np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th), p


def test_closed_form_examples():
    assert bo.m_l1_bloch(0.6, -0.5) == pytest.approx(0.3)
    assert bo.m_r_bloch(1.0, 1.0) == pytest.approx(1.0)
    assert bo.m_r_bloch(0.0, 0.7) == 0.0
    assert bo.m_r_bloch(0.9, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_closed_form_domain():
    with pytest.raises(DomainError):
        bo.m_l1_bloch(1.1, 0.0)
    with pytest.raises(DomainError):
        bo.m_r_bloch(0.5, 1.2)
    with pytest.raises(DomainError):
        bo.channel_measure_bloch("bitflip", "r", 0.5, 0.5, 0.5, 0.5, 0.3)
    with pytest.raises(DomainError):
        bo.channel_measure_bloch("bitflip", "r", 0.5, 1.0, 0.0, 0.0, 1.3)
    with pytest.raises(DomainError):
        bo.channel_measure_bloch("depolarize", "r", 0.5, 1.0, 0.0, 0.0, 0.3)


def test_bloch_forms_match_matrix_route():
    rng = np.random.default_rng(0)
    v = states.sample_bloch_vectors(rng, 2000)
    t = np.linalg.norm(v, axis=1)
    n = v / np.where(t > 0, t, 1)[:, None]
    rhos = states.bloch_vectors_to_density(v)
    assert np.allclose(bo.m_l1_bloch(t, n[:, 1]), measures.l1_values(rhos), atol=1e-12)
    assert np.allclose(bo.m_r_bloch(t, n[:, 1]), measures.relative_entropy_values(rhos), atol=1e-10)


@pytest.mark.parametrize("channel", ["bitflip", "phaseflip", "ampdamp"])
def test_channel_forms_match_matrix_route(channel):
    t, nx, ny, nz, p = grid_4d(20)
    vecs = t[:, None] * np.stack([nx, ny, nz], axis=1)
    rhos = states.bloch_vectors_to_density(vecs)
    l1_out = np.empty_like(t)
    r_out = np.empty_like(t)
    for pv in np.unique(p):
        sel = p == pv
        out = channels.apply_batch(channels.named_channel(channel, pv), rhos[sel])
        l1_out[sel] = measures.l1_values(out)
        r_out[sel] = measures.relative_entropy_values(out)
    assert np.max(np.abs(bo.channel_measure_bloch(channel, "l1", t, nx, ny, nz, p) - l1_out)) <= 1e-10
    assert np.max(np.abs(bo.channel_measure_bloch(channel, "r", t, nx, ny, nz, p) - r_out)) <= 1e-10


def test_phaseflip_at_one_is_identity():
    t, nx, ny, nz, _ = grid_4d(12)
    out = bo.channel_measure_bloch("phaseflip", "r", t, nx, ny, nz, 1.0)
    assert np.allclose(out, bo.m_r_bloch(t, ny), atol=1e-12)


@pytest.mark.parametrize("target", bo.CLAIMED_TARGETS)
def test_claimed_derivative_signs(target):
    rep = bo.derivative_sign_scan(target)
    assert rep.trials_run >= 10_000
    assert rep.violations == 0, rep.witness


def test_derivative_scan_example_grid():
    grid = {"t": np.array([0.5, 0.9]), "ny": np.array([0.2, 0.8])}
    rep = bo.derivative_sign_scan("r:t", grid)
    assert rep.trials_run == 2 and rep.violations == 0 and rep.worst_margin > 0


def test_derivative_scan_rejects_outside_region():
    with pytest.raises(DomainError):
        bo.derivative_sign_scan("ampdamp-r:nz", {"t": [0.5], "nx": [0.1], "nz": [0.3], "p": [0.2]})
    with pytest.raises(DomainError):
        bo.derivative_sign_scan("r:t", {"t": [1.0], "ny": [0.5]})
    with pytest.raises(DomainError):
        bo.derivative_sign_scan("bitflip-r:|nx|", {"t": [0.5], "nx": [0.9], "nz": [0.9], "p": [0.2]})
    with pytest.raises(DomainError):
        bo.derivative_sign_scan("no-such-target")


def test_exploratory_ampdamp_scan_reports():
    rep = bo.derivative_sign_scan("ampdamp-r:nz", exploratory=True)
    assert rep.exploratory
    assert rep.trials_run > 0
    cases = rep.notes["case_a_nonnegative"]["points"] + rep.notes["case_a_negative"]["points"]
    assert cases == rep.trials_run


def test_same_order_is_reflexive():
    rep = bo.same_order_scan("l1", "l1", SMALL)
    assert rep.violations == 0
    assert rep.worst_margin >= 0


def test_same_order_is_swap_symmetric():
    ab = bo.same_order_scan("l1", "r", SMALL)
    ba = bo.same_order_scan("r", "l1", SMALL)
    assert (ab.violations, ab.ties_skipped) == (ba.violations, ba.ties_skipped)
    assert ab.worst_margin == ba.worst_margin


@pytest.mark.parametrize("channel", ["bitflip", "phaseflip", "ampdamp"])
def test_l1_channel_scans_follow_rescaling(channel):
    # the channels multiply M_l1 by a p-dependent constant, so orders are kept
    rep = bo.channel_order_scan("l1", channel, SMALL)
    assert rep.violations == 0
    assert rep.trials_run == SMALL.trials * len(SMALL.p_grid)


def test_vanishing_scale_gives_only_ties():
    cfg = bo.OrderScanConfig(trials=500)
    rep = bo.channel_order_scan("l1", "bitflip:0.5", cfg)
    assert rep.ties_skipped == rep.trials_run
    rep = bo.channel_order_scan("l1", "ampdamp:1", cfg)
    assert rep.ties_skipped == rep.trials_run


def test_restricted_sampler_keeps_nz_nonpositive():
    v = bo.sample_qubits("bloch_restricted", np.random.default_rng(1), 500)
    assert np.all(v[:, 2] <= 0)
    for name in bo.SAMPLERS:
        v = bo.sample_qubits(name, np.random.default_rng(2), 50)
        assert v.shape == (50, 3) and np.all(np.linalg.norm(v, axis=1) <= 1 + 1e-12)


def test_scans_are_reproducible_and_worker_independent():
    cfg = bo.OrderScanConfig(trials=5000, p_grid=(0.2, 0.6))
    a = dumps(bo.channel_order_scan("r", "bitflip", cfg).to_dict())
    b = dumps(bo.channel_order_scan("r", "bitflip", cfg).to_dict())
    c = dumps(bo.channel_order_scan("r", "bitflip", bo.OrderScanConfig(trials=5000, p_grid=(0.2, 0.6), workers=3)).to_dict())
    assert a == b == c


def test_order_scan_config_validation():
    with pytest.raises(DomainError):
        bo.OrderScanConfig(sampler="uniform")
    with pytest.raises(DomainError):
        bo.OrderScanConfig(tie_epsilon=0)
    with pytest.raises(DomainError):
        bo.OrderScanConfig(p_grid=(1.5,))
    with pytest.raises(DomainError):
        bo.measure_values("bogus", np.eye(2)[None] / 2)


def test_measure_values_agree_with_measures():
    rhos = states.sample_mixed(2, 3, size=20)
    assert np.allclose(bo.measure_values("trace", rhos), [measures.m_trace(r).value for r in rhos], atol=1e-12)
    assert np.allclose(bo.measure_values("lp:2", rhos), [measures.m_lp(r, 2).value for r in rhos], atol=1e-12)
