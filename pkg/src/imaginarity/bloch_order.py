"""Qubit measures in Bloch coordinates and state-order scans.

A qubit is rho = (I + t n.sigma)/2. The closed forms below give M_l1 and
M_r before and after the bit-flip, phase-flip and amplitude-damping
channels; the scans check order claims either by central finite
differences on grids or by Monte-Carlo over state pairs.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import channels, measures, numerics
from .errors import DomainError
from .reports import ScanReport, merge_all
from .states import bloch_vectors_to_density, density_to_bloch_vectors, sample_bloch_vectors, sample_haar_pure, sample_mixed

TIE_EPSILON = 1e-9
FD_STEP = 1e-5
FD_SLACK = 1e-7
T_CAP = 0.999
CHUNK = 2000
DEFAULT_P_GRID = tuple(np.round(np.linspace(0.0, 1.0, 21), 10))


def _H(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return numerics.shannon_bits(np.stack([x, 1.0 - x], axis=-1))


def _check_t_ny(t, n_y):
    t = np.asarray(t, dtype=float)
    n_y = np.asarray(n_y, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise DomainError("t must lie in [0, 1]")
    if np.any(~np.isfinite(n_y)) or np.any(np.abs(n_y) > 1):
        raise DomainError("|n_y| must be at most 1")
    return t, n_y


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def m_l1_bloch(t, n_y):
    t, n_y = _check_t_ny(t, n_y)
    return _scalar(t * np.abs(n_y))


def _r_base(t, n_y):
    return np.clip(_H(0.5 + t * np.sqrt(np.clip(1 - n_y**2, 0, None)) / 2) - _H((1 + t) / 2), 0.0, None)


def m_r_bloch(t, n_y):
    t, n_y = _check_t_ny(t, n_y)
    return _scalar(_r_base(t, n_y))


def _two_level(t, inner_out, inner_full):
    return _H((1 + t * np.sqrt(inner_out)) / 2) - _H((1 + t * np.sqrt(inner_full)) / 2)


def bitflip_r(t, nx, nz, p):
    s = (2 * p - 1) ** 2
    return _two_level(t, nx**2 + s * nz**2, nx**2 + s * (1 - nx**2))


def phaseflip_r(t, nx, nz, p):
    return _two_level(t, nz**2 + p**2 * nx**2, nz**2 + p**2 * (1 - nz**2))


def ampdamp_r(t, nx, nz, p):
    a = p + t * nz * (1 - p)
    out = np.sqrt(a**2 + (1 - p) * t**2 * nx**2)
    full = np.sqrt(a**2 + (1 - p) * t**2 * (1 - nz**2))
    return _H((1 + np.clip(out, 0, 1)) / 2) - _H((1 + np.clip(full, 0, 1)) / 2)


_R_FORMS = {"bitflip": bitflip_r, "phaseflip": phaseflip_r, "ampdamp": ampdamp_r}
_L1_SCALE = {
    "bitflip": lambda p: np.abs(2 * p - 1),
    "phaseflip": lambda p: p,
    "ampdamp": lambda p: np.sqrt(1 - p),
}


def channel_measure_bloch(channel: str, measure: str, t, nx, ny, nz, p):
    """Closed-form M_l1 or M_r of channel(p) applied to the Bloch qubit (t, n)."""
    if channel not in _R_FORMS:
        raise DomainError(f"unknown channel {channel!r}")
    t, ny = _check_t_ny(t, ny)
    nx = np.asarray(nx, dtype=float)
    nz = np.asarray(nz, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(nx**2 + ny**2 + nz**2 - 1) > 1e-9):
        raise DomainError("direction n must be a unit vector")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("channel parameter p must lie in [0, 1]")
    if measure == "l1":
        return _scalar(t * _L1_SCALE[channel](p) * np.abs(ny))
    if measure == "r":
        return _scalar(np.clip(_R_FORMS[channel](t, nx, nz, p), 0.0, None))
    raise DomainError(f"unknown measure {measure!r}; choose l1 or r")


# -- derivative signs ----------------------------------------------------------


@dataclass(frozen=True)
class DerivativeTarget:
    name: str
    func: object
    variables: tuple  # argument names of func, in order
    wrt: str
    sign: int  # +1: claimed nondecreasing, -1: claimed nonincreasing
    nz_nonpositive: bool = False


def _base_t_ny(t, ny):
    return _r_base(t, ny)


def _base_t_nx_nz(t, nx, nz):
    return _r_base(t, np.sqrt(np.clip(1 - nx**2 - nz**2, 0, None)))


TARGETS = {
    "r:t": DerivativeTarget("r:t", _base_t_ny, ("t", "ny"), "t", +1),
    "r:|ny|": DerivativeTarget("r:|ny|", _base_t_ny, ("t", "ny"), "ny", +1),
    "r:|nx|": DerivativeTarget("r:|nx|", _base_t_nx_nz, ("t", "nx", "nz"), "nx", -1),
    "r:|nz|": DerivativeTarget("r:|nz|", _base_t_nx_nz, ("t", "nx", "nz"), "nz", -1),
}
for _ch, _f in _R_FORMS.items():
    TARGETS[f"{_ch}-r:t"] = DerivativeTarget(f"{_ch}-r:t", _f, ("t", "nx", "nz", "p"), "t", +1, _ch == "ampdamp")
    TARGETS[f"{_ch}-r:|nx|"] = DerivativeTarget(f"{_ch}-r:|nx|", _f, ("t", "nx", "nz", "p"), "nx", -1, _ch == "ampdamp")
TARGETS["bitflip-r:|nz|"] = DerivativeTarget("bitflip-r:|nz|", bitflip_r, ("t", "nx", "nz", "p"), "nz", -1)
TARGETS["phaseflip-r:|nz|"] = DerivativeTarget("phaseflip-r:|nz|", phaseflip_r, ("t", "nx", "nz", "p"), "nz", -1)
TARGETS["ampdamp-r:nz"] = DerivativeTarget("ampdamp-r:nz", ampdamp_r, ("t", "nx", "nz", "p"), "nz", +1, True)

# the sign claims that are asserted by the acceptance suite
CLAIMED_TARGETS = (
    "r:t",
    "r:|ny|",
    "bitflip-r:t",
    "bitflip-r:|nx|",
    "bitflip-r:|nz|",
    "phaseflip-r:t",
    "phaseflip-r:|nx|",
    "phaseflip-r:|nz|",
    "ampdamp-r:t",
    "ampdamp-r:|nx|",
    "ampdamp-r:nz",
)


def default_grid(target: str, h: float = FD_STEP, exploratory: bool = False, n: Optional[int] = None) -> dict:
    """A grid of at least 10^4 stencil-safe points for ``target``.

    ``exploratory`` swaps the amplitude-damping n_z range to (0, 1].
    """
    tgt = TARGETS[target]
    if tgt.variables == ("t", "ny"):
        n = n or 101
        t, ny = np.meshgrid(np.linspace(h, T_CAP, n), np.linspace(0.0, 1.0 - h, n), indexing="ij")
        return {"t": t.ravel(), "ny": ny.ravel()}
    n = n or (16 if "p" in tgt.variables else 26)
    axes = {
        "t": np.linspace(h, T_CAP, n),
        "nx": np.linspace(0.0, 1.0, n),
        "nz": np.linspace(0.0, 1.0, n),
    }
    if tgt.nz_nonpositive:
        axes["nz"] = np.linspace(1e-3, 1.0, n) if exploratory else np.linspace(-1.0, -h, n)
    if "p" in tgt.variables:
        axes["p"] = np.linspace(0.0, 1.0, 11)
    mesh = np.meshgrid(*[axes[v] for v in tgt.variables], indexing="ij")
    grid = {v: m.ravel() for v, m in zip(tgt.variables, mesh)}
    # keep points whose whole stencil stays inside the Bloch ball
    pad = h if tgt.wrt in ("nx", "nz") else 0.0
    nx_reach = np.abs(grid["nx"]) + (pad if tgt.wrt == "nx" else 0.0)
    nz_reach = np.abs(grid["nz"]) + (pad if tgt.wrt == "nz" else 0.0)
    keep = nx_reach**2 + nz_reach**2 <= 1.0
    return {v: a[keep] for v, a in grid.items()}


def _check_grid(tgt: DerivativeTarget, grid: dict, h: float, exploratory: bool):
    missing = [v for v in tgt.variables if v not in grid]
    if missing:
        raise DomainError(f"grid for {tgt.name} is missing {missing}")
    arrs = {v: np.asarray(grid[v], dtype=float).ravel() for v in tgt.variables}
    sizes = {a.size for a in arrs.values()}
    if len(sizes) != 1:
        raise DomainError("grid arrays must have equal length")
    t = arrs["t"]
    lo = h if tgt.wrt == "t" else 0.0
    if np.any(t < lo) or np.any(t > T_CAP):
        raise DomainError(f"t must lie in [{lo}, {T_CAP}] for {tgt.name}")
    if "p" in arrs and (np.any(arrs["p"] < 0) or np.any(arrs["p"] > 1)):
        raise DomainError("p must lie in [0, 1]")
    if "ny" in arrs and (np.any(arrs["ny"] < 0) or np.any(arrs["ny"] + (h if tgt.wrt == "ny" else 0) > 1)):
        raise DomainError("|n_y| grid must lie in [0, 1 - h]")
    if "nx" in arrs:
        nx_reach = np.abs(arrs["nx"]) + (h if tgt.wrt == "nx" else 0.0)
        nz_reach = np.abs(arrs["nz"]) + (h if tgt.wrt == "nz" else 0.0)
        if np.any(nx_reach**2 + nz_reach**2 > 1.0):
            raise DomainError("grid stencil leaves the Bloch sphere (n_x^2 + n_z^2 > 1)")
    if tgt.nz_nonpositive and not exploratory and np.any(arrs["nz"] + (h if tgt.wrt == "nz" else 0) > 0):
        raise DomainError(f"{tgt.name} is claimed only for n_z <= 0; pass exploratory=True to scan outside")
    return arrs


def derivative_sign_scan(
    target: str,
    grid: Optional[dict] = None,
    h: float = FD_STEP,
    slack: float = FD_SLACK,
    exploratory: bool = False,
) -> ScanReport:
    """Central differences of a closed form at every grid point.

    The margin at a point is claimed_sign * derivative; a violation is a
    margin below -slack.
    """
    if target not in TARGETS:
        raise DomainError(f"unknown derivative target {target!r}; choose from {sorted(TARGETS)}")
    tgt = TARGETS[target]
    if grid is None:
        grid = default_grid(target, h, exploratory)
    arrs = _check_grid(tgt, grid, h, exploratory)
    for v in ("nx", "nz", "ny"):
        if v in arrs and not (tgt.nz_nonpositive and v == "nz"):
            arrs[v] = np.abs(arrs[v])
    up = dict(arrs)
    down = dict(arrs)
    up[tgt.wrt] = arrs[tgt.wrt] + h
    down[tgt.wrt] = arrs[tgt.wrt] - h
    args_up = [up[v] for v in tgt.variables]
    args_down = [down[v] for v in tgt.variables]
    deriv = (tgt.func(*args_up) - tgt.func(*args_down)) / (2 * h)
    margin = tgt.sign * deriv
    bad = margin < -slack
    n = margin.size
    witness = None
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        witness = {"trial": i, "point": {v: float(arrs[v][i]) for v in tgt.variables}, "derivative": float(deriv[i])}
    notes = {"h": h, "slack": slack, "claimed_sign": tgt.sign}
    if tgt.name.startswith("ampdamp"):
        a = arrs["p"] + arrs["t"] * arrs["nz"] * (1 - arrs["p"])
        notes["case_a_nonnegative"] = {"points": int(np.sum(a >= 0)), "violations": int(np.sum(bad & (a >= 0)))}
        notes["case_a_negative"] = {"points": int(np.sum(a < 0)), "violations": int(np.sum(bad & (a < 0)))}
    return ScanReport(
        trials_run=n,
        ties_skipped=0,
        violations=int(np.sum(bad)),
        worst_margin=float(np.min(margin)) if n else float("inf"),
        seed=0,
        scan_kind="derivative-signs",
        measure_a=target,
        witness=witness,
        exploratory=exploratory,
        notes=notes,
    )


# -- Monte-Carlo order scans ---------------------------------------------------

SAMPLERS = ("bloch", "bloch_grid", "bloch_restricted", "haar_pure", "mixed")


@dataclass(frozen=True)
class OrderScanConfig:
    sampler: str = "bloch"
    trials: int = 10_000
    tie_epsilon: float = TIE_EPSILON
    channel_spec: Optional[str] = None
    p_grid: Sequence[float] = DEFAULT_P_GRID
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not self.tie_epsilon > 0:
            raise DomainError("tie_epsilon must be positive")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"unknown sampler {self.sampler!r}; choose from {SAMPLERS}")
        if any(not 0 <= p <= 1 for p in self.p_grid):
            raise DomainError("p_grid values must lie in [0, 1]")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")


def _grid_points():
    t = np.linspace(0.0, 1.0, 21)
    theta = np.linspace(0.0, np.pi, 21)
    phi = np.linspace(0.0, 2 * np.pi, 40, endpoint=False)
    T, TH, PH = np.meshgrid(t, theta, phi, indexing="ij")
    n = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1)
    return (T[..., None] * n).reshape(-1, 3)


def sample_qubits(sampler: str, rng, size: int) -> np.ndarray:
    """Bloch vectors ``(size, 3)`` drawn from the named ensemble."""
    if sampler == "bloch":
        return sample_bloch_vectors(rng, size)
    if sampler == "bloch_restricted":
        return sample_bloch_vectors(rng, size, restrict_nz_nonpositive=True)
    if sampler == "bloch_grid":
        pts = _grid_points()
        return pts[rng.integers(0, len(pts), size=size)]
    if sampler == "haar_pure":
        psi = sample_haar_pure(2, rng, size=size)
        return density_to_bloch_vectors(np.einsum("ni,nj->nij", psi, psi.conj()))
    if sampler == "mixed":
        return density_to_bloch_vectors(sample_mixed(2, rng, size=size))
    raise DomainError(f"unknown sampler {sampler!r}")


def measure_values(spec: str, rhos) -> np.ndarray:
    """Evaluate a measure named by ``spec`` on a stack of states."""
    rhos = np.asarray(rhos, dtype=complex)
    name, _, arg = spec.partition(":")
    if name == "l1":
        return measures.l1_values(rhos)
    if name == "r":
        return measures.relative_entropy_values(rhos)
    if name == "trace":
        # rho - rho^T = 2i Im(rho) is Hermitian, so its singular values are |eigenvalues|
        diff = rhos - np.swapaxes(rhos, -1, -2)
        return 0.5 * np.sum(np.abs(numerics.eigvalsh(diff)), axis=-1)
    if name == "lp" and arg:
        return measures.lp_values(rhos, float(arg))
    if name == "pnorm" and arg:
        p = float(arg)
        flat = rhos.reshape((-1,) + rhos.shape[-2:])
        vals = [measures.m_schatten_p(r, p).value for r in flat]
        return np.array(vals).reshape(rhos.shape[:-2])
    raise DomainError(f"unsupported measure spec {spec!r} for scans")


def _chunk_rng(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunks(total: int):
    starts = range(0, total, CHUNK)
    return [(i, s, min(CHUNK, total - s)) for i, s in enumerate(starts)]


def _order_margin(da, db):
    return np.sign(da) * np.sign(db) * np.minimum(np.abs(da), np.abs(db))


def _same_order_chunk(args):
    measure_a, measure_b, cfg, index, offset, size = args
    rng = _chunk_rng(cfg.seed, index)
    b1 = sample_qubits(cfg.sampler, rng, size)
    b2 = sample_qubits(cfg.sampler, rng, size)
    r1, r2 = bloch_vectors_to_density(b1), bloch_vectors_to_density(b2)
    a1, a2 = measure_values(measure_a, r1), measure_values(measure_a, r2)
    c1, c2 = (a1, a2) if measure_b == measure_a else (measure_values(measure_b, r1), measure_values(measure_b, r2))
    da, db = a1 - a2, c1 - c2
    tie = (np.abs(da) < cfg.tie_epsilon) | (np.abs(db) < cfg.tie_epsilon)
    margin = np.where(tie, np.inf, _order_margin(da, db))
    bad = ~tie & (np.sign(da) != np.sign(db))
    witness = None
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        witness = {
            "trial": offset + i,
            "bloch1": b1[i],
            "bloch2": b2[i],
            measure_a: [a1[i], a2[i]],
            measure_b: [c1[i], c2[i]],
        }
    return ScanReport(
        size, int(np.sum(tie)), int(np.sum(bad)), float(np.min(margin)), cfg.seed,
        scan_kind="same-order", measure_a=measure_a, measure_b=measure_b, sampler=cfg.sampler, witness=witness,
    )


def _run(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def same_order_scan(measure_a: str, measure_b: str, cfg: OrderScanConfig = OrderScanConfig()) -> ScanReport:
    """Count pairs whose order under measure_a disagrees with that under measure_b."""
    jobs = [(measure_a, measure_b, cfg, i, s, n) for i, s, n in _chunks(cfg.trials)]
    return merge_all(_run(_same_order_chunk, jobs, cfg.workers))


def parse_sweep_spec(spec: str):
    """``bitflip`` sweeps the p grid; ``bitflip:0.3`` fixes p."""
    name, _, arg = spec.partition(":")
    if name not in _R_FORMS:
        raise DomainError(f"unknown channel {name!r}; choose from {sorted(_R_FORMS)}")
    if arg:
        p = float(arg)
        if not 0 <= p <= 1:
            raise DomainError(f"channel parameter p={p} outside [0, 1]")
        return name, (p,)
    return name, None


def _channel_order_chunk(args):
    measure, name, p_values, cfg, index, offset, size = args
    rng = _chunk_rng(cfg.seed, index)
    b1 = sample_qubits(cfg.sampler, rng, size)
    b2 = sample_qubits(cfg.sampler, rng, size)
    r1, r2 = bloch_vectors_to_density(b1), bloch_vectors_to_density(b2)
    a1, a2 = measure_values(measure, r1), measure_values(measure, r2)
    da = a1 - a2
    pre_tie = np.abs(da) < cfg.tie_epsilon
    n_p = len(p_values)
    ties = 0
    bad_total = 0
    worst = np.inf
    witness = None
    for k, p in enumerate(p_values):
        ch = channels.named_channel(name, p)
        o1, o2 = channels.apply_batch(ch, r1), channels.apply_batch(ch, r2)
        b_1, b_2 = measure_values(measure, o1), measure_values(measure, o2)
        db = b_1 - b_2
        tie = pre_tie | (np.abs(db) < cfg.tie_epsilon)
        bad = ~tie & (np.sign(da) != np.sign(db))
        ties += int(np.sum(tie))
        bad_total += int(np.sum(bad))
        worst = min(worst, float(np.min(np.where(tie, np.inf, _order_margin(da, db)))))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            trial = (offset + i) * n_p + k
            if witness is None or trial < witness["trial"]:
                witness = {
                    "trial": trial,
                    "p": p,
                    "bloch1": b1[i],
                    "bloch2": b2[i],
                    "before": [a1[i], a2[i]],
                    "after": [b_1[i], b_2[i]],
                }
    return ScanReport(
        size * n_p, ties, bad_total, worst, cfg.seed,
        scan_kind="channel-order", measure_a=measure, channel=name, sampler=cfg.sampler, witness=witness,
        notes={"p_grid": list(map(float, p_values))},
    )


def channel_order_scan(measure: str, channel_spec: str, cfg: OrderScanConfig = OrderScanConfig()) -> ScanReport:
    """Count (pair, p) items whose order flips when both states pass through the channel."""
    name, fixed = parse_sweep_spec(channel_spec)
    p_values = tuple(float(p) for p in (fixed or cfg.p_grid))
    if not p_values:
        raise DomainError("empty p grid")
    jobs = [(measure, name, p_values, cfg, i, s, n) for i, s, n in _chunks(cfg.trials)]
    report = merge_all(_run(_channel_order_chunk, jobs, cfg.workers))
    return report
