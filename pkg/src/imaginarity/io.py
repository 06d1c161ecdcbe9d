"""State and channel files.

Both are JSON documents. Complex numbers are ``[re, im]`` pairs and matrices
are flattened row-major:

    {"dim": 2, "matrix": [[0.5, 0], [0, -0.5], [0, 0.5], [0.5, 0]]}
    {"dim": 2, "amplitudes": [[0.7071, 0], [0, 0.7071]]}
    {"bloch": {"t": 1, "nx": 0, "ny": 1, "nz": 0}}
    {"d_in": 2, "d_out": 2, "kraus": [[[1, 0], [0, 0], [0, 0], [1, 0]]]}
"""

import json

import numpy as np

from .channels import KrausChannel, parse_channel_spec
from .errors import DomainError, ShapeMismatch
from .reports import atomic_write, dumps
from .states import DEFAULT_TOLERANCES, BlochQubit, bloch_to_density, projector, validate_density, validate_pure


def _complex_list(pairs, n, what):
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (n, 2):
        raise ShapeMismatch(f"{what}: expected {n} [re, im] pairs, got array of shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def _pairs(values):
    values = np.asarray(values, dtype=complex).ravel()
    return np.stack([values.real, values.imag], axis=-1)


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: not valid JSON ({exc})") from exc


def state_from_document(doc, tol=DEFAULT_TOLERANCES):
    """Returns ``(rho, psi)``; ``psi`` is None unless the document holds amplitudes."""
    if not isinstance(doc, dict):
        raise DomainError("state document must be a JSON object")
    if "bloch" in doc:
        b = doc["bloch"]
        q = BlochQubit(float(b["t"]), float(b["nx"]), float(b["ny"]), float(b["nz"]))
        return validate_density(bloch_to_density(q), tol), None
    if "dim" not in doc:
        raise DomainError("state document needs 'dim' (with 'matrix' or 'amplitudes') or 'bloch'")
    d = int(doc["dim"])
    if d < 1:
        raise DomainError("dim must be positive")
    if "amplitudes" in doc:
        psi = validate_pure(_complex_list(doc["amplitudes"], d, "amplitudes"), tol)
        return validate_density(projector(psi), tol), psi
    if "matrix" in doc:
        rho = _complex_list(doc["matrix"], d * d, "matrix").reshape(d, d)
        return validate_density(rho, tol), None
    raise DomainError("state document needs 'matrix' or 'amplitudes'")


def read_state(path, tol=DEFAULT_TOLERANCES):
    return state_from_document(_load(path), tol)


def state_document(rho=None, psi=None) -> dict:
    if psi is not None:
        psi = np.asarray(psi, dtype=complex)
        return {"dim": int(psi.size), "amplitudes": _pairs(psi)}
    rho = np.asarray(rho, dtype=complex)
    return {"dim": int(rho.shape[0]), "matrix": _pairs(rho)}


def write_state(path, rho=None, psi=None):
    atomic_write(path, dumps(state_document(rho, psi)) + "\n")


def channel_from_document(doc) -> KrausChannel:
    try:
        d_in, d_out = int(doc["d_in"]), int(doc["d_out"])
        ops = [_complex_list(K, d_in * d_out, "kraus").reshape(d_out, d_in) for K in doc["kraus"]]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"channel document needs d_in, d_out and kraus ({exc})") from exc
    return KrausChannel(d_in, d_out, tuple(ops), doc.get("label", "file"))


def read_channel(path) -> KrausChannel:
    return channel_from_document(_load(path))


def channel_document(ch: KrausChannel) -> dict:
    return {"d_in": ch.d_in, "d_out": ch.d_out, "label": ch.label, "kraus": [_pairs(K) for K in ch.kraus_ops]}


def write_channel(path, ch: KrausChannel):
    atomic_write(path, dumps(channel_document(ch)) + "\n")


def resolve_channel(spec: str) -> KrausChannel:
    """``file:<path>`` loads a channel document; anything else is a named channel."""
    if spec.startswith("file:"):
        return read_channel(spec[len("file:") :])
    return parse_channel_spec(spec)
