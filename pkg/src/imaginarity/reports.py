"""Scan reports and their serialization.

Floats are written with 17 significant digits so a report read back in
reproduces every number exactly; nothing time- or host-dependent is
embedded, so identical inputs give byte-identical files.
"""

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace
from functools import reduce
from typing import Optional

import numpy as np

CSV_COLUMNS = (
    "scan_kind",
    "measure_a",
    "measure_b",
    "channel",
    "sampler",
    "trials",
    "ties",
    "violations",
    "worst_margin",
    "seed",
)


@dataclass(frozen=True)
class ScanReport:
    """Outcome of a Monte-Carlo or grid scan.

    ``worst_margin`` is the smallest signed margin seen over compared items;
    negative values are violations (positive means the claim held with room
    to spare). It is ``inf`` when nothing was compared.
    """

    trials_run: int
    ties_skipped: int
    violations: int
    worst_margin: float
    seed: int
    scan_kind: str = ""
    measure_a: str = ""
    measure_b: str = ""
    channel: str = ""
    sampler: str = ""
    witness: Optional[dict] = None
    exploratory: bool = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.violations + self.ties_skipped > self.trials_run:
            raise ValueError("violations + ties_skipped exceeds trials_run")

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return (
            self.scan_kind,
            self.measure_a,
            self.measure_b,
            self.channel,
            self.sampler,
            self.trials_run,
            self.ties_skipped,
            self.violations,
            self.worst_margin,
            self.seed,
        )


def merge(a: ScanReport, b: ScanReport) -> ScanReport:
    """Associative merge: counts add, margins take the min, the earliest witness wins."""
    witness = a.witness
    if b.witness is not None and (witness is None or b.witness.get("trial", 0) < witness.get("trial", 0)):
        witness = b.witness
    return replace(
        a,
        trials_run=a.trials_run + b.trials_run,
        ties_skipped=a.ties_skipped + b.ties_skipped,
        violations=a.violations + b.violations,
        worst_margin=min(a.worst_margin, b.worst_margin),
        witness=witness,
    )


def merge_all(reports):
    return reduce(merge, reports)


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _plain(obj):
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return _plain(np.stack([obj.real, obj.imag], axis=-1))
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and non-finite floats as null."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def csv_text(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([_fmt_float(v) if isinstance(v, float) else v for v in r.csv_row()])
    return buf.getvalue()


def atomic_write(path, text: str):
    """Write to a temp file in the target directory, then rename over the target."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
