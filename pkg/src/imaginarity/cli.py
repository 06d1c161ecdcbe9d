"""Command-line interface.

Exit codes: 0 success, 1 scan found violations (or a counterexample did
not materialize), 2 invalid input or configuration, 3 unsupported
measure/dimension, 4 channel fails CPTP validation.
"""

import argparse
import os
import sys

from . import __version__, bloch_order, channels, convex_roof, fuzz, io, measures, numerics
from .errors import DimensionTooLarge, ImaginarityError, NoConvergence, ShapeMismatch
from .reports import atomic_write, csv_text, dumps
from .states import DEFAULT_TOLERANCES, Tolerances, is_real_state

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3
EXIT_NOT_CPTP = 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_tolerances(items):
    if not items:
        return DEFAULT_TOLERANCES
    values = DEFAULT_TOLERANCES.as_dict()
    for item in items:
        key, _, val = item.partition("=")
        if key not in values or not val:
            raise CliError(EXIT_INVALID, f"bad --tol {item!r}; use one of {sorted(values)}=<value>")
        try:
            values[key] = float(val)
        except ValueError:
            raise CliError(EXIT_INVALID, f"bad --tol value {val!r}") from None
    return Tolerances(**values)


def _envelope(args, tol, result):
    return {
        "tool": "imaginarity",
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "tolerances": tol.as_dict(),
        "result": result,
    }


def _emit(args, text):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _read_state(path, tol):
    try:
        return io.read_state(path, tol)
    except OSError as exc:
        raise CliError(EXIT_INVALID, f"cannot read state file: {exc}") from exc
    except (ImaginarityError, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"invalid state file {path}: {exc}") from exc


def _pure_vector(rho, psi):
    if psi is not None:
        return psi
    w, V = numerics.eigh(rho)
    if w[0] < 1 - 1e-8:
        return None
    return V[:, 0]


def evaluate_measure(spec, rho, psi=None, dim_limit=4, seed=0):
    """Dispatch a measure spec; raises CliError(3) for unsupported combinations."""
    d = rho.shape[0]
    name, _, arg = spec.partition(":")
    try:
        if name == "l1" and not arg:
            return measures.m_l1(rho)
        if name == "trace" and not arg:
            return measures.m_trace(rho)
        if name == "r" and not arg:
            return measures.m_relative_entropy(rho)
        if name == "lp" and arg:
            return measures.m_lp(rho, float(arg))
        if name == "pnorm" and arg:
            if d > dim_limit:
                raise CliError(EXIT_UNSUPPORTED, f"pnorm needs d <= --dim-limit ({dim_limit}), got d = {d}")
            return measures.m_schatten_p(rho, float(arg), measures.OptimizerConfig(seed=seed))
        if name == "geometric" and not arg:
            vec = _pure_vector(rho, psi)
            if vec is None:
                raise CliError(EXIT_UNSUPPORTED, "the geometric measure is implemented for pure states only")
            return measures.m_geometric_pure(vec)
        if name == "robustness" and not arg:
            return measures.robustness(rho)
    except DimensionTooLarge as exc:
        raise CliError(EXIT_UNSUPPORTED, str(exc)) from exc
    except ValueError as exc:
        raise CliError(EXIT_UNSUPPORTED, f"unsupported measure {spec!r}: {exc}") from exc
    raise CliError(EXIT_UNSUPPORTED, f"unsupported measure {spec!r}; use l1, trace, r, lp:<p>, pnorm:<p>, geometric or robustness")


def _result_dict(res):
    out = {"value": res.value, "method": res.method}
    if res.witness is not None:
        out["witness"] = res.witness
    return out


def cmd_measure(args, tol):
    rho, psi = _read_state(args.state, tol)
    res = evaluate_measure(args.measure, rho, psi, args.dim_limit, args.seed)
    result = {"measure": args.measure, "dim": rho.shape[0], **_result_dict(res)}
    if args.format == "csv":
        _emit(args, f"measure,value,method\n{args.measure},{res.value:.17g},{res.method}\n")
    else:
        _emit(args, dumps(_envelope(args, tol, result)) + "\n")
    return EXIT_OK


def cmd_channel(args, tol):
    try:
        ch = io.resolve_channel(args.channel)
    except OSError as exc:
        raise CliError(EXIT_INVALID, f"cannot read channel: {exc}") from exc
    except (ImaginarityError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"invalid channel spec {args.channel!r}: {exc}") from exc
    err = channels.completeness_error(ch)
    if err > channels.CPTP_TOL:
        raise CliError(EXIT_NOT_CPTP, f"channel is not trace preserving: max |sum K^dagger K - I| = {err:.3e}")
    rho, psi = _read_state(args.state, tol)
    try:
        out = channels.apply(ch, rho)
    except ShapeMismatch as exc:
        raise CliError(EXIT_UNSUPPORTED, str(exc)) from exc
    report = {"channel": ch.label, "real_operation": channels.is_real_operation(ch), "output": io.state_document(out)}
    if args.measure:
        report["measure"] = args.measure
        report["before"] = evaluate_measure(args.measure, rho, psi, seed=args.seed).value
        report["after"] = evaluate_measure(args.measure, out, seed=args.seed).value
    if args.out:
        io.write_state(args.out, out)
    sys.stdout.write(dumps(_envelope(args, tol, report)) + "\n")
    return EXIT_OK


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise CliError(EXIT_INVALID, f"bad integer list {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise CliError(EXIT_INVALID, f"bad number list {text!r}") from None


def _scan_reports(args):
    kind = args.scan_kind
    if kind == "same-order":
        cfg = bloch_order.OrderScanConfig(
            sampler=args.sampler, trials=args.trials, tie_epsilon=args.tie_epsilon, seed=args.seed, workers=args.workers
        )
        return [bloch_order.same_order_scan(args.a, args.b, cfg)]
    if kind == "channel-order":
        sampler = args.sampler
        if args.restrict:
            if args.restrict.replace(" ", "") != "nz<=0":
                raise CliError(EXIT_INVALID, f"unsupported restriction {args.restrict!r}; only nz<=0")
            sampler = "bloch_restricted"
        p_grid = _float_list(args.p_grid) if args.p_grid else bloch_order.DEFAULT_P_GRID
        cfg = bloch_order.OrderScanConfig(
            sampler=sampler, trials=args.trials, tie_epsilon=args.tie_epsilon, channel_spec=args.channel,
            p_grid=tuple(p_grid), seed=args.seed, workers=args.workers,
        )
        return [bloch_order.channel_order_scan(args.measure, args.channel, cfg)]
    if kind == "monotonicity":
        return [fuzz.monotonicity_scan(args.measure, _int_list(args.dims), args.trials, args.seed, args.kraus)]
    if kind == "derivative-signs":
        targets = args.target or list(bloch_order.CLAIMED_TARGETS)
        return [bloch_order.derivative_sign_scan(t, h=args.h, exploratory=args.exploratory) for t in targets]
    raise CliError(EXIT_INVALID, f"unknown scan kind {kind!r}")


def cmd_scan(args, tol):
    try:
        reports = _scan_reports(args)
    except CliError:
        raise
    except (ImaginarityError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"scan configuration error: {exc}") from exc
    if args.format == "csv":
        _emit(args, csv_text(reports))
        witnesses = [r.to_dict() for r in reports if r.witness is not None]
        if witnesses and args.out:
            atomic_write(args.out + ".witness.json", dumps(_envelope(args, tol, witnesses)) + "\n")
    else:
        payload = [r.to_dict() for r in reports]
        _emit(args, dumps(_envelope(args, tol, payload[0] if len(payload) == 1 else payload)) + "\n")
    counted = [r for r in reports if not r.exploratory]
    return EXIT_VIOLATION if any(r.violations > 0 for r in counted) else EXIT_OK


def cmd_counterexample(args, tol):
    if not args.p > 1:
        raise CliError(EXIT_INVALID, f"no violation exists at p = {args.p:g}; the measure is monotone there, choose p > 1")
    rho, _ = _read_state(args.state, tol)
    if is_real_state(rho, tol.hermitian):
        raise CliError(EXIT_INVALID, "the state is real, so no counterexample is possible")
    kind = "entrywise" if args.norm == "lp" else "schatten"
    d = args.d if args.d is not None else rho.shape[0]
    try:
        rep = channels.demonstrate_lp_violation(rho, args.p, kind, d, measures.OptimizerConfig(seed=args.seed))
    except DimensionTooLarge as exc:
        raise CliError(EXIT_UNSUPPORTED, str(exc)) from exc
    result = {
        "norm_kind": rep.norm_kind,
        "p": rep.p,
        "d": rep.d,
        "before": rep.before,
        "after": rep.after,
        "ratio": rep.ratio,
        "violated": rep.violated,
    }
    _emit(args, dumps(_envelope(args, tol, result)) + "\n")
    return EXIT_OK if rep.violated else EXIT_VIOLATION


def cmd_convex_roof(args, tol):
    rho, _ = _read_state(args.state, tol)
    if rho.shape[0] > convex_roof.MAX_DIM:
        raise CliError(EXIT_UNSUPPORTED, f"convex roof supports d <= {convex_roof.MAX_DIM}, got d = {rho.shape[0]}")
    cfg = convex_roof.RoofConfig(ensemble_size=args.ensemble_size, restarts=args.restarts, seed=args.seed)
    try:
        value, dec = convex_roof.convex_roof(rho, args.pure_measure, cfg)
    except NoConvergence as exc:
        raise CliError(EXIT_VIOLATION, str(exc)) from exc
    result = {
        "pure_measure": args.pure_measure,
        "value": value,
        "eigen_average": convex_roof.eigen_average(rho, args.pure_measure),
        "decomposition": {"weights": dec.weights, "states": [s for s in dec.states]},
    }
    _emit(args, dumps(_envelope(args, tol, result)) + "\n")
    return EXIT_OK


def _common(parser):
    parser.add_argument("--seed", type=int, default=0, help="seed for every sampler and optimizer")
    parser.add_argument("--tol", action="append", metavar="KEY=VALUE", help="validation tolerance override (hermitian, trace, psd, norm)")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="imaginarity", description="Imaginarity measures and qubit order scans.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="evaluate a measure on a state file")
    _common(p)
    p.add_argument("--state", required=True)
    p.add_argument("--measure", required=True, help="l1 | trace | r | lp:<p> | pnorm:<p> | geometric | robustness")
    p.add_argument("--dim-limit", type=int, default=4)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("channel", help="apply a channel to a state file")
    _common(p)
    p.add_argument("--channel", required=True, help="bitflip:p | phaseflip:p | ampdamp:p | collapse:d | file:<path>")
    p.add_argument("--state", required=True)
    p.add_argument("--measure")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("scan", help="order, monotonicity and derivative-sign scans")
    scans = p.add_subparsers(dest="scan_kind", required=True)
    s = scans.add_parser("same-order")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s = scans.add_parser("channel-order")
    s.add_argument("--measure", required=True)
    s.add_argument("--channel", required=True, help="bitflip | phaseflip | ampdamp, optionally :p")
    s.add_argument("--restrict", help="nz<=0")
    s.add_argument("--p-grid", help="comma-separated channel parameters")
    s = scans.add_parser("monotonicity")
    s.add_argument("--measure", required=True)
    s.add_argument("--dims", default="2,3,4")
    s.add_argument("--kraus", type=int, default=None, help="Kraus operators per random channel (default d^2)")
    s = scans.add_parser("derivative-signs")
    s.add_argument("--target", action="append", choices=sorted(bloch_order.TARGETS))
    s.add_argument("--h", type=float, default=bloch_order.FD_STEP)
    s.add_argument("--exploratory", action="store_true", help="allow points outside the claimed region; report only")
    for s in scans.choices.values():
        _common(s)
        s.add_argument("--trials", type=int, default=10_000)
        s.add_argument("--sampler", choices=bloch_order.SAMPLERS, default="bloch")
        s.add_argument("--tie-epsilon", type=float, default=bloch_order.TIE_EPSILON)
        s.add_argument("--workers", type=int, default=1)
        s.set_defaults(func=cmd_scan)

    p = sub.add_parser("counterexample", help="replay the p-norm monotonicity violation")
    _common(p)
    p.add_argument("norm", choices=("lp", "pnorm"))
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--d", type=int, default=None, help="dimension of the appended maximally mixed system")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("convex-roof", help="convex-roof value of a state")
    _common(p)
    p.add_argument("--state", required=True)
    p.add_argument("--pure-measure", choices=sorted(convex_roof.PURE_MEASURES), default="l1")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--ensemble-size", type=int, default=None)
    p.set_defaults(func=cmd_convex_roof)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _parse_tolerances(args.tol)
        if args.out:
            parent = os.path.dirname(os.path.abspath(args.out))
            if not os.path.isdir(parent):
                raise CliError(EXIT_INVALID, f"output directory {parent} does not exist")
        if getattr(args, "trials", 0) < 0:
            raise CliError(EXIT_INVALID, "--trials must be nonnegative")
        return args.func(args, tol)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
