"""Fisher-information entanglement criterion and entangled-region scans.

A state on N sites whose channel output carries more QFI than ``N * g*``
(``g*`` being the best single-site output QFI) cannot be separable.  This
module evaluates that test, scans one-parameter state families for the
region where it fires, and assembles the comparison table for the four
example channels.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channels import LindbladSpec, ParamChannelFamily, apply_superop, iid_extend, lindblad_evolve
from .errors import DomainError
from .fisher import qfi, qfi_batch
from .optimize import gstar, open_system_gstar
from .qmat import (PSI_MINUS, PSI_PLUS, TAU_HERM, TAU_PSD, TAU_TR, DensityMatrix, _as_matrix,
                   bell_diagonal, dag, haar_ket, is_density, ket_to_dm)

DELTA_MARGIN = 1e-7
BISECT_TOL = 1e-10
LAMBDA_GRID = 2048
SUBGRID = 257
TABLE_REFINE = 8
THETA_GRID = 512
THETA_SHRINK = 1e-4

ENTANGLED = "entangled"
INCONCLUSIVE = "inconclusive"
INVALID = "invalid-output"


@dataclass(frozen=True)
class WitnessReport:
    theta: float
    n_copies: int
    qfi_value: float | None
    threshold: float
    margin: float | None
    verdict: str
    gstar_source: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EntRegion:
    theta: float
    intervals: tuple[tuple[float, float], ...]

    @property
    def empty(self) -> bool:
        return not self.intervals

    def to_dict(self) -> dict:
        return {"theta": self.theta, "lambda_intervals": [list(iv) for iv in self.intervals]}


@dataclass(frozen=True)
class RegionUnion:
    theta_grid: tuple[float, ...]
    union_intervals: tuple[tuple[float, float], ...]
    regions: tuple[EntRegion, ...] = field(default=(), repr=False)

    def to_dict(self, include_regions: bool = False) -> dict:
        out = {"theta_grid": list(self.theta_grid),
               "union_intervals": [list(iv) for iv in self.union_intervals]}
        if include_regions:
            out["regions"] = [r.to_dict() for r in self.regions]
        return out


@dataclass(frozen=True)
class StateFamily:
    label: str
    builder: Callable[[float], np.ndarray] = field(repr=False)
    domain: tuple[float, float] = (-1 / 3, 1.0)

    def __call__(self, lam: float) -> DensityMatrix:
        return DensityMatrix(self.builder(lam), (2, 2), validate=False)

    def batch(self, lams: Sequence[float]) -> np.ndarray:
        return np.stack([np.asarray(self.builder(l), dtype=complex) for l in lams])


def _werner_like(vec: np.ndarray):
    proj = ket_to_dm(vec)
    eye = np.eye(4, dtype=complex)

    def build(lam):
        return lam * proj + (1 - lam) * eye / 4
    return build


RHO_PLUS = StateFamily("rho_plus", _werner_like(PSI_PLUS))
RHO_MINUS = StateFamily("rho_minus", _werner_like(PSI_MINUS))
FAMILIES = {"rho_plus": RHO_PLUS, "rho_minus": RHO_MINUS}


def rho_plus(lam: float) -> DensityMatrix:
    return bell_diagonal(lam, lam, -lam)


def rho_minus(lam: float) -> DensityMatrix:
    return bell_diagonal(-lam, -lam, -lam)


def single_copy_gstar(channel: ParamChannelFamily, theta: float, mode: str = "auto",
                      seed: int = 0) -> tuple[float, str]:
    """``(g*, source)`` for a single-site family.

    ``mode`` is ``"analytic"``, ``"optimizer"`` or ``"auto"`` (closed form
    when the family carries one).
    """
    if mode not in ("auto", "analytic", "optimizer"):
        raise DomainError(f"unknown gstar mode {mode!r}")
    if mode != "optimizer" and channel.gstar_closed_form is not None:
        return float(channel.gstar_closed_form(theta)), "analytic"
    if mode == "analytic":
        raise DomainError(f"{channel.kind} has no closed-form g*")
    return gstar(channel, theta, seed=seed).value, "optimizer"


def _extended(channel: ParamChannelFamily, n: int) -> ParamChannelFamily:
    if channel.copies != 1:
        raise DomainError("pass the single-site family; copies are added here")
    return iid_extend(channel, n)


def _margins_from_superops(s: np.ndarray, ds: np.ndarray, states: np.ndarray,
                           threshold: float) -> np.ndarray:
    out = apply_superop(s, states)
    q, min_eig = qfi_batch(out, apply_superop(ds, states), strict=False, return_min_eig=True)
    herm = np.max(np.abs(out - dag(out)), axis=(-2, -1))
    tr = np.abs(np.trace(out, axis1=-2, axis2=-1) - 1)
    valid = (herm <= TAU_HERM) & (min_eig >= -TAU_PSD) & (tr <= TAU_TR)
    return np.where(valid, q - threshold, np.nan)


def witness_value(channel: ParamChannelFamily, theta: float, rho, n: int,
                  gstar_mode: str = "auto", gstar_value: float | None = None,
                  seed: int = 0) -> WitnessReport:
    """Evaluate the criterion ``qfi(G_theta^n(rho)) > n g*`` for one state.

    ``gstar_value`` overrides the single-copy optimum (its source is then
    reported as ``"given"``).
    """
    ext = _extended(channel, n)
    m = _as_matrix(rho)
    if m.shape != (ext.dim, ext.dim):
        raise DomainError(f"state is {m.shape[0]}-dimensional, channel extension needs {ext.dim}")
    if gstar_value is None:
        g, src = single_copy_gstar(channel, theta, gstar_mode, seed)
    else:
        g, src = float(gstar_value), "given"
    threshold = n * g
    out = ext.apply(theta, m)
    if not is_density(out):
        return WitnessReport(theta, n, None, threshold, None, INVALID, src)
    q = qfi(out, ext.derivative(theta, m))
    margin = q - threshold
    verdict = ENTANGLED if margin > DELTA_MARGIN else INCONCLUSIVE
    return WitnessReport(theta, n, q, threshold, margin, verdict, src)


def margins(channel: ParamChannelFamily, theta: float, states: np.ndarray, n: int,
            threshold: float) -> np.ndarray:
    """Vectorized margins ``qfi - threshold`` for a stack of n-site states.

    Invalid outputs and rank-changing points come back as ``nan``.
    """
    s, ds = _extended(channel, n).full_superops(theta)
    return _margins_from_superops(s, ds, np.asarray(states, dtype=complex), threshold)


def _positive(margin) -> np.ndarray:
    m = np.asarray(margin, dtype=float)
    return np.where(np.isnan(m), False, m > DELTA_MARGIN)


def _bisect(status, a: float, b: float, sa: bool, tol: float) -> float:
    """Locate the switch of ``status`` between ``a`` (value ``sa``) and ``b``."""
    while b - a > tol:
        mid = 0.5 * (a + b)
        if status(mid) == sa:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def r_ent_interval(channel: ParamChannelFamily, theta: float, family: StateFamily = RHO_PLUS,
                   n: int = 2, gstar_mode: str = "auto", grid: int = LAMBDA_GRID,
                   tol: float = BISECT_TOL, gstar_value: float | None = None,
                   _states: np.ndarray | None = None) -> EntRegion:
    """Entangled region in the family parameter at fixed ``theta``.

    The margin sign is scanned on a uniform grid over the family domain and
    every switch is refined by bisection.  Points whose channel output is not
    a density matrix count as outside the region.
    """
    if gstar_value is None:
        g, _ = single_copy_gstar(channel, theta, gstar_mode)
    else:
        g = gstar_value
    threshold = n * g
    lo, hi = family.domain
    lams = np.linspace(lo, hi, grid)
    states = family.batch(lams) if _states is None else _states
    s, ds = _extended(channel, n).full_superops(theta)
    m = _margins_from_superops(s, ds, states, threshold)

    def status(lam: float) -> bool:
        one = np.asarray(family.builder(lam), dtype=complex)[None]
        return bool(_positive(_margins_from_superops(s, ds, one, threshold))[0])

    intervals = _scan(lams, _positive(m), status, tol)
    # regions narrower than the grid spacing hide next to local maxima of the
    # margin, including maxima at the edge of the invalid-output zone
    for k in _hidden_peaks(m):
        sub = np.linspace(lams[max(k - 1, 0)], lams[min(k + 1, grid - 1)], SUBGRID)
        sm = _margins_from_superops(s, ds, family.batch(sub), threshold)
        intervals += _scan(sub, _positive(sm), status, tol)
    return EntRegion(float(theta), merge_intervals(intervals))


def _scan(lams: np.ndarray, pos: np.ndarray, status, tol: float) -> list[tuple[float, float]]:
    intervals = []
    start = lams[0] if pos[0] else None
    for k in np.flatnonzero(pos[1:] != pos[:-1]):
        x = _bisect(status, lams[k], lams[k + 1], bool(pos[k]), tol)
        if pos[k + 1]:
            start = x
        else:
            intervals.append((float(start), float(x)))
            start = None
    if start is not None:
        intervals.append((float(start), float(lams[-1])))
    return intervals


def _hidden_peaks(m: np.ndarray) -> np.ndarray:
    """Indices of finite, non-positive local maxima of a margin curve."""
    fin = np.isfinite(m)
    pad = np.concatenate([[-np.inf], np.where(fin, m, -np.inf), [-np.inf]])
    mid, nb = pad[1:-1], np.minimum(pad[:-2], pad[2:])
    peak = fin & (mid >= pad[:-2]) & (mid >= pad[2:]) & (m <= DELTA_MARGIN)
    # plateaus and rounding wiggles are not peaks
    with np.errstate(invalid="ignore"):
        peak &= mid - nb > 1e-12 * np.maximum(1.0, np.abs(mid))
    return np.flatnonzero(peak)


def merge_intervals(intervals, gap: float = 0.0) -> tuple[tuple[float, float], ...]:
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1] + gap:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def default_theta_grid(channel: ParamChannelFamily, count: int = THETA_GRID) -> np.ndarray:
    lo, hi = channel.domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("default theta grid needs a bounded domain")
    return np.linspace(lo + THETA_SHRINK, hi - THETA_SHRINK, count)


def _splits(a: EntRegion, b: EntRegion) -> bool:
    """True when two neighbouring regions are both nonempty but leave a gap."""
    if not (a.intervals and b.intervals):
        return False
    joined = merge_intervals(a.intervals + b.intervals)
    return len(joined) > max(len(a.intervals), len(b.intervals))


def r_ent_union(channel: ParamChannelFamily, theta_grid=None, family: StateFamily = RHO_PLUS,
                n: int = 2, gstar_mode: str = "auto", grid: int = LAMBDA_GRID,
                refine: int = 0) -> RegionUnion:
    """Union of the per-theta entangled regions over ``theta_grid``.

    With ``refine > 0``, midpoints are inserted between neighbouring grid
    points whose regions do not touch, at most ``refine`` levels deep and at
    most ``refine * len(grid)`` extra points.  Every interval in the union is
    still certified at an evaluated theta; refinement only adds points.
    """
    thetas = default_theta_grid(channel) if theta_grid is None else np.asarray(theta_grid, float)
    lo, hi = family.domain
    states = family.batch(np.linspace(lo, hi, grid))

    def region(th):
        return r_ent_interval(channel, float(th), family, n, gstar_mode, grid, _states=states)

    regions = {float(th): region(th) for th in thetas}
    if refine > 0:
        budget = refine * len(thetas)
        order = sorted(regions)
        todo = [(a, b, 1) for a, b in zip(order[:-1], order[1:])]
        while todo and budget > 0:
            a, b, depth = todo.pop(0)
            if depth > refine or not _splits(regions[a], regions[b]):
                continue
            mid = 0.5 * (a + b)
            regions[mid] = region(mid)
            budget -= 1
            todo += [(a, mid, depth + 1), (mid, b, depth + 1)]
    order = sorted(regions)
    union = merge_intervals(iv for t in order for iv in regions[t].intervals)
    return RegionUnion(tuple(order), union, tuple(regions[t] for t in order))


# ------------------------------------------------------------- open system

def open_system_witness(rho0, spec: LindbladSpec, mode: str = "sharp", restarts: int = 32,
                        steps: int | None = None) -> WitnessReport:
    """Criterion for the N-qubit Lindblad dynamics at ``(spec.theta, spec.t)``.

    ``sharp`` compares against ``N`` times the numerically optimized
    single-qubit QFI; ``weak`` against ``N t^2``, the noiseless optimum.
    """
    if mode not in ("sharp", "weak"):
        raise DomainError(f"unknown mode {mode!r}")
    n = spec.n
    if mode == "weak":
        g, src = spec.t ** 2, "analytic"
    else:
        g, src = open_system_gstar(spec.gamma, spec.theta, spec.t, restarts=restarts).value, "optimizer"
    threshold = n * g
    if spec.t == 0:
        return WitnessReport(spec.theta, n, 0.0, threshold, -threshold, INCONCLUSIVE, src)
    res = lindblad_evolve(spec, rho0, steps=steps)
    q = qfi(res.state.matrix, res.derivative)
    margin = q - threshold
    verdict = ENTANGLED if margin > DELTA_MARGIN else INCONCLUSIVE
    return WitnessReport(spec.theta, n, q, threshold, margin, verdict, src)


# ------------------------------------------------------- convexity, sampling

def convexity_gap(axis, s1, s2, lam: float) -> float:
    """Convexity defect ``lam(1-lam)|n x (s1 - s2)|^2`` of the qubit rotation QFI."""
    n = np.asarray(axis, dtype=float)
    d = np.asarray(s1, dtype=float) - np.asarray(s2, dtype=float)
    if not 0 <= lam <= 1:
        raise DomainError("mixing weight must lie in [0, 1]")
    return float(lam * (1 - lam) * np.sum(np.cross(n, d) ** 2))


def random_separable_states(n: int, count: int, rng: np.random.Generator, d: int = 2,
                            max_terms: int = 8) -> np.ndarray:
    """Random mixtures of Haar-random pure product states, shape (count, d^n, d^n).

    Each mixture has a uniform number of terms in ``1..max_terms`` and
    Dirichlet(1) weights.
    """
    D = d ** n
    out = np.zeros((count, D, D), dtype=complex)
    for c in range(count):
        k = int(rng.integers(1, max_terms + 1))
        w = rng.dirichlet(np.ones(k))
        for wi in w:
            ket = haar_ket(d, rng)
            for _ in range(n - 1):
                ket = np.kron(ket, haar_ket(d, rng))
            out[c] += wi * ket_to_dm(ket)
    return out


@dataclass(frozen=True)
class SamplerResult:
    max_margin: float
    samples: int
    threshold: float
    invalid: int


def separable_sampler_check(channel: ParamChannelFamily, theta: float, n: int, samples: int,
                            seed: int = 0, gstar_mode: str = "auto",
                            max_terms: int = 8) -> SamplerResult:
    """Largest margin over random separable inputs; never above 1e-7 if sound."""
    rng = np.random.default_rng(seed)
    g, _ = single_copy_gstar(channel, theta, gstar_mode, seed)
    states = random_separable_states(n, samples, rng, channel.local_dim, max_terms)
    m = margins(channel, theta, states, n, n * g)
    invalid = int(np.sum(np.isnan(m)))
    return SamplerResult(float(np.nanmax(m)) if invalid < samples else -math.inf, samples,
                         n * g, invalid)


# ------------------------------------------------------------------ table

# published reference values, reported next to the computed ones; the DPC
# entries disagree with the exact boundary and are not used for verdicts
REFERENCE_VALUES = {
    "ux": {"R_ent_lower": (1 + math.sqrt(17)) / 8},
    "dpc": {"R_ent_lower": 0.837, "theta_c": 0.551},
    "tpc": {"R_ent_lower": 0.5},
}


def dpc_quadratic_root(theta: float) -> float:
    """Positive root of ``3 t^2 (2 - t^2) l^2 - 2 t^2 l - 1 = 0``."""
    a = 3 * theta ** 2 * (2 - theta ** 2)
    b = -2 * theta ** 2
    return (-b + math.sqrt(b * b + 4 * a)) / (2 * a)


def tpc_quartic_coefficients(theta: float) -> np.ndarray:
    """Coefficients (highest power first) of the quartic whose sign decides the TPC test."""
    f = (1 - 2 * theta) ** 2
    return np.array([4 * f * (1 - f), f * (f * f - 2 * f + 4), f * f - 2 * f - 4, f, 1.0])


def tpc_quartic_roots(theta: float) -> np.ndarray:
    r = np.roots(tpc_quartic_coefficients(theta))
    return np.sort(np.real(r[np.abs(np.imag(r)) < 1e-9]))


def _row(name: str, channel: ParamChannelFamily, thetas, family, grid: int,
         refine: int) -> dict:
    union = r_ent_union(channel, thetas, family, 2, "auto", grid, refine)
    nonempty = [r for r in union.regions if r.intervals]
    dep = False
    if nonempty:
        ref = nonempty[0].intervals
        dep = len(nonempty) != len(union.regions) or any(
            len(r.intervals) != len(ref)
            or any(abs(a - c) > 1e-6 or abs(b - e) > 1e-6 for (a, b), (c, e) in zip(r.intervals, ref))
            for r in nonempty)
    row = {"channel": name, "theta_dependence": "Yes" if dep else "No"}
    if not nonempty:
        row["r_ent"] = "No"
        row["R_ent"] = "No"
    else:
        # representative: the theta with the widest region
        best = max(nonempty, key=lambda r: sum(b - a for a, b in r.intervals))
        row["r_ent"] = best.to_dict()
        row["R_ent"] = [list(iv) for iv in union.union_intervals]
        row["R_ent_lower"] = union.union_intervals[0][0]
    row["reference"] = REFERENCE_VALUES.get(name, {})
    return row


def table1(theta_grid=None, family: StateFamily = RHO_PLUS, grid: int = LAMBDA_GRID,
           refine: int = TABLE_REFINE) -> dict:
    """Entanglement-detection summary for U_z, U_x, DPC and TPC on a state family."""
    from .channels import depolarizing_channel, rotation_channel, transpose_channel
    channels = {
        "uz": rotation_channel([0, 0, 1]),
        "ux": rotation_channel([1, 0, 0]),
        "dpc": depolarizing_channel(),
        "tpc": transpose_channel(),
    }
    rows = []
    for name, ch in channels.items():
        thetas = default_theta_grid(ch) if theta_grid is None else theta_grid
        rows.append(_row(name, ch, thetas, family, grid, refine))
    return {"family": family.label, "rows": rows}


def format_table1(table: dict) -> str:
    """Aligned plain-text rendering of :func:`table1`."""
    def fmt_iv(v):
        if v == "No":
            return "No"
        if isinstance(v, dict):
            ivs = v["lambda_intervals"]
            return " u ".join(f"({a:.6f}, {b:.6f})" for a, b in ivs) + f" @ theta={v['theta']:.4f}"
        return " u ".join(f"({a:.6f}, {b:.6f})" for a, b in v)

    header = ("channel", "theta dependence", "r_ent(theta)", "R_ent")
    body = [(r["channel"].upper(), r["theta_dependence"], fmt_iv(r["r_ent"]), fmt_iv(r["R_ent"]))
            for r in table["rows"]]
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(4)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)),
             "-+-".join("-" * w for w in widths)]
    lines += [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines)
