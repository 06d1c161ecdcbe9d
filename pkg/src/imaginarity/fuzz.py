"""Random-channel fuzzing: monotonicity of measures and transpose covariance."""

import numpy as np

from . import channels
from .bloch_order import measure_values
from .errors import DomainError
from .reports import ScanReport, merge_all
from .states import delta, sample_mixed

MONOTONE_SLACK = 1e-9


def _trial_rngs(seed, d, trials):
    root = np.random.SeedSequence(seed, spawn_key=(d,))
    return [np.random.default_rng(s) for s in root.spawn(trials)]


def _random_pairs(d, trials, seed, kraus_count=None):
    """Per-trial (state, real channel) drawn from independent child seeds."""
    rhos = []
    ops = []
    for rng in _trial_rngs(seed, d, trials):
        rhos.append(sample_mixed(d, rng))
        ops.append(channels.random_real_channel(d, kraus_count, seed=rng).stacked())
    return np.stack(rhos), np.stack(ops)


def _apply_each(ops, rhos):
    return np.einsum("tkij,tjl,tkml->tim", ops, rhos, ops.conj())


def monotonicity_scan(measure: str, dims=(2, 3, 4), trials: int = 1000, seed: int = 0, kraus_count=None, slack: float = MONOTONE_SLACK) -> ScanReport:
    """Count trials with M(E(rho)) > M(rho) + slack for random real channels E.

    ``trials`` is per dimension. ``kraus_count`` defaults to d^2 operators.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    reports = []
    offset = 0
    for d in dims:
        rhos, ops = _random_pairs(d, trials, seed, kraus_count)
        before = measure_values(measure, rhos)
        after = measure_values(measure, _apply_each(ops, rhos))
        margin = before + slack - after
        bad = margin < 0
        witness = None
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            witness = {"trial": offset + i, "d": d, "rho": rhos[i], "kraus": ops[i], "before": before[i], "after": after[i]}
        reports.append(
            ScanReport(
                trials, 0, int(np.sum(bad)), float(np.min(margin - slack)), seed,
                scan_kind="monotonicity", measure_a=measure, channel="random-real",
                sampler="mixed", witness=witness, notes={"dims": list(dims)},
            )
        )
        offset += trials
    report = merge_all(reports)
    return report


def covariance_scan(dims=(2, 3), trials: int = 1000, seed: int = 0):
    """Largest max-entry deviation |E(Delta rho) - Delta(E rho)| over random real channels."""
    worst = 0.0
    for d in dims:
        rhos, ops = _random_pairs(d, trials, seed)
        lhs = _apply_each(ops, delta(rhos))
        rhs = delta(_apply_each(ops, rhos))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
