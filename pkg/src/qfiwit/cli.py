"""Command-line front end.

Subcommands: ``qfi``, ``region``, ``table1``, ``open-system`` and
``fisher-protocol``.  Every command writes CSV or JSON (schema ``qfiwit/1``)
to ``--out`` or stdout.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (LindbladSpec, ParamChannelFamily, channel_from_descriptor, iid_extend,
                       lindblad_evolve)
from .errors import DomainError, QfiwitError
from .fisher import (Povm, divergence_curvature, f_divergence, fisher_from_divergence,
                     optimal_povm, povm_fisher, qfi)
from .optimize import open_system_gstar
from .qmat import PHI_PLUS, PSI_MINUS, PSI_PLUS, is_density, ket_to_dm
from .witness import (DELTA_MARGIN, ENTANGLED, FAMILIES, INCONCLUSIVE, INVALID, format_table1,
                      r_ent_interval, r_ent_union, table1, witness_value)

SCHEMA = "qfiwit/1"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(QfiwitError):
    pass


# ---------------------------------------------------------------- parsing

def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:count`` -> uniform grid (count >= 1)."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ConfigError(f"grid must look like lo:hi:count, got {text!r}") from exc
    if count < 1:
        raise ConfigError("grid count must be positive")
    return np.linspace(lo, hi, count)


def parse_gamma(value) -> tuple[float, float, float]:
    if isinstance(value, (list, tuple)):
        parts = [float(v) for v in value]
    else:
        parts = [float(v) for v in str(value).split(",")]
    if len(parts) == 1:
        parts *= 3
    if len(parts) != 3 or min(parts) < 0:
        raise ConfigError("gamma needs one or three non-negative rates")
    return tuple(parts)


def matrix_from_json(data) -> np.ndarray:
    """Dense complex matrix from nested ``[re, im]`` pairs."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("state must be nested [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"state must have shape (d, d, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


NAMED_STATES = {
    "phi_plus": lambda: ket_to_dm(PHI_PLUS),
    "psi_plus": lambda: ket_to_dm(PSI_PLUS),
    "psi_minus": lambda: ket_to_dm(PSI_MINUS),
    "mixed": lambda: np.eye(4, dtype=complex) / 4,
}


def _channel(args) -> ParamChannelFamily:
    if args.channel is None:
        raise ConfigError("--channel is required")
    desc = args.channel
    if isinstance(desc, str) and desc.lstrip().startswith("{"):
        try:
            desc = json.loads(desc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad channel descriptor: {exc}") from exc
    try:
        ch = channel_from_descriptor(desc)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad channel: {exc}") from exc
    if ch.copies != 1:
        raise ConfigError("give copies with --copies, not inside the channel descriptor")
    return ch


def _state(args, n: int) -> np.ndarray:
    D = 2 ** n
    if args.state_file:
        try:
            data = json.loads(Path(args.state_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read state file: {exc}") from exc
        m = matrix_from_json(data.get("matrix", data) if isinstance(data, dict) else data)
    elif args.state:
        if args.state not in NAMED_STATES:
            raise ConfigError(f"unknown state {args.state!r}; choose from {sorted(NAMED_STATES)}")
        m = NAMED_STATES[args.state]()
    elif args.family:
        if args.family not in FAMILIES:
            raise ConfigError(f"unknown family {args.family!r}")
        if args.lam is None:
            raise ConfigError("--lambda is required with --family")
        fam = FAMILIES[args.family]
        if not fam.domain[0] <= args.lam <= fam.domain[1]:
            raise ConfigError(f"lambda={args.lam} outside {fam.domain}")
        m = np.asarray(fam.builder(args.lam), dtype=complex)
    else:
        raise ConfigError("give --state-file, --state or --family with --lambda")
    if m.shape != (D, D):
        raise ConfigError(f"state must be {D}x{D} for {n} copies, got {m.shape}")
    if not is_density(m):
        raise ConfigError("input state is not a density matrix")
    return m


def _thetas(args, channel: ParamChannelFamily | None = None) -> np.ndarray:
    if args.theta is not None:
        return np.array([float(args.theta)])
    if args.theta_grid is not None:
        return parse_grid(args.theta_grid)
    raise ConfigError("give --theta or --theta-grid")


def _check_thetas(thetas, channel: ParamChannelFamily) -> None:
    for th in thetas:
        if not channel.in_domain(th, closed=False):
            raise ConfigError(f"theta={th} outside the open domain {channel.domain}")


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(payload: dict, fmt: str, columns: list[str] | None = None) -> str:
    if fmt == "json":
        return json.dumps(_clean({"schema": SCHEMA, **payload}), sort_keys=True, indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in payload["rows"]:
            w.writerow([_fmt(row.get(c)) for c in columns])
        return buf.getvalue()
    raise ConfigError(f"unknown format {fmt!r}")


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------- commands

QFI_COLUMNS = ["theta", "qfi", "gstar", "threshold", "margin", "verdict", "gstar_source", "note"]


def cmd_qfi(args) -> int:
    ch = _channel(args)
    n = args.copies
    rho = _state(args, n)
    thetas = _thetas(args)
    _check_thetas(thetas, ch)

    def row(th):
        try:
            rep = witness_value(ch, float(th), rho, n, gstar_mode=args.gstar_mode, seed=args.seed)
        except QfiwitError as exc:
            return {"theta": float(th), "verdict": "error", "note": f"{type(exc).__name__}: {exc}"}
        note = "output not a density matrix" if rep.verdict == INVALID else ""
        return {"theta": rep.theta, "qfi": rep.qfi_value, "gstar": rep.threshold / n,
                "threshold": rep.threshold, "margin": rep.margin, "verdict": rep.verdict,
                "gstar_source": rep.gstar_source, "note": note}

    rows = _pmap(row, thetas, args.workers)
    payload = {"command": "qfi", "channel": ch.descriptor(), "copies": n, "seed": args.seed,
               "delta_margin": DELTA_MARGIN, "rows": rows}
    emit(render(payload, args.format, QFI_COLUMNS), args.out)
    return EXIT_OK


REGION_COLUMNS = ["theta", "lower", "upper"]


def cmd_region(args) -> int:
    ch = _channel(args)
    fam = FAMILIES.get(args.family or "rho_plus")
    if fam is None:
        raise ConfigError(f"unknown family {args.family!r}")
    n = args.copies
    if args.theta is not None:
        th = float(args.theta)
        _check_thetas([th], ch)
        reg = r_ent_interval(ch, th, fam, n, args.gstar_mode)
        payload = {"command": "region", "kind": "EntRegion", "channel": ch.descriptor(),
                   "family": fam.label, "copies": n, **reg.to_dict()}
        rows = [{"theta": th, "lower": a, "upper": b} for a, b in reg.intervals]
    else:
        thetas = parse_grid(args.theta_grid) if args.theta_grid else None
        if thetas is not None:
            _check_thetas(thetas, ch)
        union = r_ent_union(ch, thetas, fam, n, args.gstar_mode, refine=args.refine)
        payload = {"command": "region", "kind": "RegionUnion", "channel": ch.descriptor(),
                   "family": fam.label, "copies": n, **union.to_dict(include_regions=args.verbose)}
        rows = [{"theta": "union", "lower": a, "upper": b} for a, b in union.union_intervals]
    payload["rows"] = rows
    if args.format == "json":
        payload.pop("rows")
    emit(render(payload, args.format, REGION_COLUMNS), args.out)
    return EXIT_OK


def cmd_table1(args) -> int:
    fam = FAMILIES.get(args.family or "rho_plus")
    if fam is None:
        raise ConfigError(f"unknown family {args.family!r}")
    grid = parse_grid(args.theta_grid) if args.theta_grid else None
    tab = table1(grid, fam)
    if args.format == "text":
        emit(format_table1(tab) + "\n", args.out)
    elif args.format == "json":
        emit(render({"command": "table1", **tab}, "json"), args.out)
    else:
        raise ConfigError("table1 supports --format text or json")
    return EXIT_OK


OPEN_COLUMNS = ["t", "qfi", "sharp_threshold", "weak_threshold", "sharp_margin", "weak_margin",
                "sharp_verdict", "weak_verdict", "note"]


def cmd_open_system(args) -> int:
    if args.gamma is None:
        raise ConfigError("--gamma is required")
    gamma = parse_gamma(args.gamma)
    theta = float(args.theta if args.theta is not None else 0.0)
    times = parse_grid(args.time_grid) if args.time_grid else None
    if times is None:
        raise ConfigError("--time-grid is required")
    if np.any(times < 0):
        raise ConfigError("times must be non-negative")
    n = args.copies
    rho = _state(args, n)

    def row(t):
        t = float(t)
        out = {"t": t}
        try:
            spec = LindbladSpec(theta, gamma, t, n)
            g_sharp = open_system_gstar(gamma, theta, t, seed=args.seed).value
            g_weak = t * t
            if t == 0:
                q = 0.0
            else:
                res = lindblad_evolve(spec, rho)
                q = qfi(res.state.matrix, res.derivative)
        except QfiwitError as exc:
            out.update(sharp_verdict="error", weak_verdict="error",
                       note=f"{type(exc).__name__}: {exc}")
            return out
        for label, g in (("sharp", g_sharp), ("weak", g_weak)):
            thr = n * g
            margin = q - thr
            out[f"{label}_threshold"] = thr
            out[f"{label}_margin"] = margin
            out[f"{label}_verdict"] = ENTANGLED if margin > DELTA_MARGIN else INCONCLUSIVE
        out["qfi"] = q
        out["note"] = ""
        return out

    rows = _pmap(row, times, args.workers)
    payload = {"command": "open-system", "gamma": list(gamma), "theta": theta, "copies": n,
               "seed": args.seed, "delta_margin": DELTA_MARGIN, "rows": rows}
    emit(render(payload, args.format, OPEN_COLUMNS), args.out)
    return EXIT_OK


PROTOCOL_COLUMNS = ["eps", "estimate", "symmetric", "reference", "qfi"]


def _povm(name: str, rho, drho, dim: int) -> Povm:
    if name == "optimal":
        return optimal_povm(rho, drho)
    if name == "identity":
        return Povm((np.eye(dim, dtype=complex),))
    if name == "computational":
        return Povm(tuple(np.diag(e).astype(complex) for e in np.eye(dim)))
    raise ConfigError(f"unknown POVM {name!r}")


def cmd_fisher_protocol(args) -> int:
    ch = _channel(args)
    n = args.copies
    ext = iid_extend(ch, n)
    rho = _state(args, n)
    if args.theta is None:
        raise ConfigError("--theta is required")
    th = float(args.theta)
    _check_thetas([th], ch)
    if args.eps <= 0:
        raise ConfigError("--eps must be positive")
    lo, hi = ch.domain
    if not (lo < th - args.eps and th + args.eps < hi):
        raise ConfigError("theta +- eps leaves the channel domain")
    out = ext.apply(th, rho)
    dout = ext.derivative(th, rho)
    povm = _povm(args.povm, out, dout, ext.dim)
    p0 = povm.probabilities(out)

    def curve(t):
        return f_divergence(p0, povm.probabilities(ext.apply(t, rho)), args.kind, args.alpha)

    curv = divergence_curvature(args.kind, args.alpha)
    ladder = fisher_from_divergence(curve, th, args.eps, curvature=curv, levels=args.levels)
    ref = povm_fisher(out, dout, povm)
    q = qfi(out, dout)
    rows = [{"eps": e, "estimate": f, "symmetric": s, "reference": ref, "qfi": q}
            for e, f, s in zip(ladder.eps, ladder.forward, ladder.symmetric)]
    payload = {"command": "fisher-protocol", "channel": ch.descriptor(), "copies": n,
               "theta": th, "kind": args.kind, "povm": args.povm,
               "richardson": ladder.richardson(), "rows": rows}
    emit(render(payload, args.format, PROTOCOL_COLUMNS), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for any option")
    common.add_argument("--channel", help="alias (ux, uz, dpc, tpc, ...) or JSON descriptor")
    common.add_argument("--family", choices=sorted(FAMILIES), default=None)
    common.add_argument("--lambda", dest="lam", type=float, default=None)
    common.add_argument("--state", default=None, help=f"named state: {', '.join(NAMED_STATES)}")
    common.add_argument("--state-file", default=None)
    common.add_argument("--theta", type=float, default=None)
    common.add_argument("--theta-grid", default=None, metavar="LO:HI:COUNT")
    common.add_argument("--copies", type=int, default=2)
    common.add_argument("--gamma", default=None, help="one rate or gx,gy,gz")
    common.add_argument("--time-grid", default=None, metavar="LO:HI:COUNT")
    common.add_argument("--mode", choices=["sharp", "weak"], default="sharp")
    common.add_argument("--gstar-mode", choices=["auto", "analytic", "optimizer"], default="auto")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["csv", "json", "text"], default=None)
    common.add_argument("--refine", type=int, default=0,
                        help="theta refinement depth for region unions")
    common.add_argument("--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qfiwit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("qfi", parents=[common], help="output QFI and witness verdict per theta")
    sub.add_parser("region", parents=[common], help="entangled region per theta or union")
    sub.add_parser("table1", parents=[common], help="summary table for the four channels")
    sub.add_parser("open-system", parents=[common], help="Lindblad witness over a time grid")
    fp = sub.add_parser("fisher-protocol", parents=[common],
                        help="Fisher information from divergence curves")
    fp.add_argument("--povm", choices=["optimal", "identity", "computational"], default="optimal")
    fp.add_argument("--kind", choices=["relative-entropy", "hellinger", "renyi"],
                    default="relative-entropy")
    fp.add_argument("--alpha", type=float, default=None)
    fp.add_argument("--eps", type=float, default=1e-2)
    fp.add_argument("--levels", type=int, default=6)
    return p


DEFAULT_FORMAT = {"qfi": "csv", "region": "json", "table1": "text", "open-system": "csv",
                  "fisher-protocol": "csv"}
COMMANDS = {"qfi": cmd_qfi, "region": cmd_region, "table1": cmd_table1,
            "open-system": cmd_open_system, "fisher-protocol": cmd_fisher_protocol}


def _apply_config(args, parser) -> None:
    if not args.config:
        return
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    defaults = vars(parser.parse_args([args.command]))
    for key, value in cfg.items():
        attr = {"lambda": "lam"}.get(key, key.replace("-", "_"))
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) == defaults.get(attr):
            if attr == "channel" and isinstance(value, dict):
                value = json.dumps(value)
            if attr == "state" and isinstance(value, list):
                # inline matrix
                raise ConfigError("use state-file for explicit matrices")
            setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        if args.format is None:
            args.format = DEFAULT_FORMAT[args.command]
        if args.copies < 1:
            raise ConfigError("--copies must be positive")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qfiwit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"qfiwit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QfiwitError as exc:
        print(f"qfiwit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
