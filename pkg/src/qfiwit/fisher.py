"""SLD operators, quantum and classical Fisher information, f-divergences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InfiniteDivergenceError, RankChangeError, UnboundedInformationError
from .qmat import TAU_HERM, TAU_PSD, TAU_TR, _as_matrix, dag, hermitize

EPS_RANK = 1e-12
EPS_PROB = 1e-14
# null-null weight of the derivative tolerated before a rank change is reported
TAU_NULL = 1e-8


@dataclass(frozen=True)
class SldResult:
    sld: np.ndarray
    qfi: float
    support_rank: int
    dropped_weight: float


def _sld_eigenbasis(rho: np.ndarray, drho: np.ndarray):
    """Batched core: returns (evals, evecs, drho in eigenbasis, keep mask, null mask).

    ``rho`` and ``drho`` have shape (..., d, d).
    """
    d = rho.shape[-1]
    # eigh reads one triangle only, which symmetrizes rho implicitly
    evals, evecs = np.linalg.eigh(rho)
    lam_max = np.max(np.abs(evals), axis=-1, keepdims=True)
    cutoff = EPS_RANK * d * lam_max
    dr = dag(evecs) @ hermitize(drho) @ evecs
    denom = evals[..., :, None] + evals[..., None, :]
    keep = denom > cutoff[..., None]
    null = (evals <= 0.5 * cutoff)[..., :, None] & (evals <= 0.5 * cutoff)[..., None, :]
    return evals, evecs, dr, denom, keep, null


def _check_null_weight(dr, null, drho):
    scale = np.maximum(1.0, np.max(np.abs(drho), axis=(-2, -1)))
    weight = np.max(np.where(null, np.abs(dr), 0.0), axis=(-2, -1))
    return weight, weight > TAU_NULL * scale


def qfi_batch(rho: np.ndarray, drho: np.ndarray, strict: bool = True,
              return_min_eig: bool = False):
    """Vectorized SLD quantum Fisher information over leading axes.

    With ``strict=False`` entries whose derivative leaks into the null space
    come back as ``nan`` instead of raising.  ``return_min_eig`` also returns
    the smallest eigenvalue of each state.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    evals, evecs, dr, denom, keep, null = _sld_eigenbasis(rho, drho)
    safe = np.where(keep, denom, 1.0)
    terms = np.where(keep, 2.0 * (dr.real ** 2 + dr.imag ** 2) / safe, 0.0)
    q = np.sum(terms, axis=(-2, -1))
    _, bad = _check_null_weight(dr, null, drho)
    if np.any(bad):
        if strict:
            raise RankChangeError("derivative has weight in the null space of the state")
        q = np.where(bad, np.nan, q)
    if return_min_eig:
        return q, evals[..., 0]
    return q


def sld_operator(rho, drho) -> SldResult:
    """Symmetric logarithmic derivative of a one-parameter family at a point.

    Solves ``drho = (rho L + L rho)/2`` in the eigenbasis of ``rho``.  Matrix
    elements between eigenvectors whose eigenvalue sum falls below the support
    cutoff are set to zero; if the derivative itself is non-zero there the
    family changes rank and :class:`RankChangeError` is raised.

    Returns
    -------
    SldResult
        ``qfi`` is ``tr(L drho)``.
    """
    rho = _as_matrix(rho)
    drho = _as_matrix(drho)
    if rho.shape != drho.shape or rho.ndim != 2:
        raise DomainError(f"shape mismatch: {rho.shape} vs {drho.shape}")
    evals, evecs, dr, denom, keep, null = _sld_eigenbasis(rho, drho)
    weight, bad = _check_null_weight(dr, null, drho)
    if bad:
        raise RankChangeError(f"derivative has null-space weight {weight:.3e}")
    lk = np.where(keep, 2.0 * dr / np.where(keep, denom, 1.0), 0.0)
    sld = hermitize(evecs @ lk @ dag(evecs))
    qfi = float(np.real(np.sum(lk * dr.T)))
    cutoff = EPS_RANK * rho.shape[0] * np.max(np.abs(evals))
    support = evals > 0.5 * cutoff
    dropped = float(np.sum(np.abs(evals[~support])))
    return SldResult(sld, max(qfi, 0.0), int(np.sum(support)), dropped)


def qfi(rho, drho) -> float:
    """SLD quantum Fisher information ``sum_ij 2|drho_ij|^2/(l_i+l_j)``."""
    return sld_operator(rho, drho).qfi


@dataclass(frozen=True)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = tuple(np.asarray(e, dtype=complex) for e in self.effects)
        if not effects:
            raise DomainError("POVM needs at least one effect")
        d = effects[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in effects:
            if e.shape != (d, d):
                raise DomainError("POVM effects must share one square shape")
            if np.max(np.abs(e - dag(e))) > TAU_HERM:
                raise DomainError("POVM effect is not Hermitian")
            if np.linalg.eigvalsh(hermitize(e))[0] < -TAU_PSD:
                raise DomainError("POVM effect is not positive")
            total += e
        if np.max(np.abs(total - np.eye(d))) > TAU_HERM * max(1, len(effects)):
            raise DomainError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    def __len__(self):
        return len(self.effects)

    def probabilities(self, rho) -> np.ndarray:
        m = _as_matrix(rho)
        return np.array([np.real(np.trace(m @ e)) for e in self.effects])


def classical_fisher(p: Sequence[float], dp: Sequence[float]) -> float:
    """Fisher information ``sum_x dp_x^2 / p_x`` of a discrete family.

    Outcomes with ``p_x <= EPS_PROB`` are skipped when their derivative is
    at most ``sqrt(EPS_PROB)``; otherwise :class:`UnboundedInformationError`.
    """
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    if p.shape != dp.shape:
        raise DomainError("p and dp must have the same length")
    if np.any(p < -TAU_PSD) or abs(p.sum() - 1) > max(TAU_TR, 1e-9):
        raise DomainError("p is not a probability vector")
    if abs(dp.sum()) > max(TAU_TR, 1e-9):
        raise DomainError(f"derivative does not sum to zero ({dp.sum():.3e})")
    small = p <= EPS_PROB
    if np.any(np.abs(dp[small]) > np.sqrt(EPS_PROB)):
        raise UnboundedInformationError("vanishing outcome probability with non-zero derivative")
    big = ~small
    return float(np.sum(dp[big] ** 2 / p[big]))


def povm_fisher(rho, drho, povm: Povm) -> float:
    """Classical Fisher information of the outcome distribution of ``povm``."""
    p = povm.probabilities(rho)
    dp = povm.probabilities(drho)
    return classical_fisher(p, dp)


def optimal_povm(rho, drho, tol: float = 1e-9) -> Povm:
    """Projective measurement onto the eigenspaces of the SLD.

    Eigenvalues closer than ``tol`` (scaled by the spectral radius) are merged
    into one effect.
    """
    res = sld_operator(rho, drho)
    evals, evecs = np.linalg.eigh(res.sld)
    scale = max(1.0, float(np.max(np.abs(evals))))
    groups: list[list[int]] = [[0]]
    for k in range(1, len(evals)):
        if evals[k] - evals[groups[-1][0]] <= tol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    effects = []
    for g in groups:
        v = evecs[:, g]
        effects.append(v @ dag(v))
    return Povm(tuple(effects))


# f-divergences: (f(t), lim_{t->inf} f(t)/t, f''(1))
def _divergence_kind(kind: str, alpha: float | None):
    if kind in ("relative-entropy", "kl"):
        return (lambda t: -np.log(t)), 0.0, 1.0, False
    if kind == "hellinger":
        return (lambda t: 1.0 - np.sqrt(t)), 0.0, 0.25, True
    if kind == "renyi":
        if alpha is None or not (0 < alpha < 1 or 1 < alpha <= 2):
            raise DomainError("renyi divergence needs alpha in (0,1) or (1,2]")
        a = alpha
        # standard alpha-divergence scaling keeps f convex with f''(1) = 1
        f = lambda t: (t ** a - 1.0) / (a * (a - 1.0))
        slope = 0.0 if a < 1 else np.inf
        return f, slope, 1.0, True
    raise DomainError(f"unsupported divergence kind {kind!r}")


def divergence_curvature(kind: str, alpha: float | None = None) -> float:
    """Second derivative f''(1) of the generator of ``kind``."""
    return _divergence_kind(kind, alpha)[2]


def f_divergence(p, q, kind: str = "relative-entropy", alpha: float | None = None) -> float:
    """``D_f(p||q) = sum_x p(x) f(q(x)/p(x))``.

    Terms with ``p(x) = 0`` contribute ``q(x) * lim f(t)/t``.  A divergence
    that is infinite raises :class:`InfiniteDivergenceError`.  Inputs must
    sum to one within ``TAU_TR``; they are renormalized so that rounding in
    the sums does not leak into the result.
    """
    f, slope, _, finite_at_zero = _divergence_kind(kind, alpha)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError("p and q must be defined on the same outcomes")
    for v in (p, q):
        if np.any(v < -EPS_PROB) or abs(v.sum() - 1) > TAU_TR:
            raise DomainError("f_divergence needs probability vectors")
    p = np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()
    q = np.clip(q, 0.0, None) / np.clip(q, 0.0, None).sum()
    pz = p <= 0
    qz = q <= 0
    total = 0.0
    both = ~pz & ~qz
    if np.any(both):
        total += float(np.sum(p[both] * f(q[both] / p[both])))
    only_p = ~pz & qz
    if np.any(only_p):
        if not finite_at_zero:
            raise InfiniteDivergenceError(f"{kind}: q vanishes where p does not")
        total += float(np.sum(p[only_p] * f(0.0)))
    only_q = pz & ~qz
    if np.any(only_q):
        if np.isinf(slope):
            raise InfiniteDivergenceError(f"{kind}: p vanishes where q does not")
        total += float(np.sum(q[only_q]) * slope)
    # nonnegative for normalized inputs; clip rounding
    return max(total, 0.0)


@dataclass(frozen=True)
class DivergenceLadder:
    """Fisher estimates ``2 D_f / (f''(1) eps^2)`` along a ladder of steps."""

    eps: np.ndarray
    forward: np.ndarray
    symmetric: np.ndarray

    def richardson(self) -> float:
        """First-order Richardson extrapolation of the forward estimates."""
        if len(self.eps) < 2:
            return float(self.forward[-1])
        e1, e2 = self.eps[-2], self.eps[-1]
        f1, f2 = self.forward[-2], self.forward[-1]
        return float((e1 * f2 - e2 * f1) / (e1 - e2))

    def error_ratios(self, reference: float) -> np.ndarray:
        err = np.abs(self.forward - reference)
        return err[:-1] / err[1:]


def fisher_from_divergence(curve: Callable[[float], float], theta: float,
                           eps: float | Sequence[float], curvature: float = 1.0,
                           levels: int = 5) -> DivergenceLadder:
    """Estimate Fisher information from a divergence curve.

    ``curve(theta')`` must return ``D_f(p_theta || p_theta')``.  A scalar
    ``eps`` expands into the ladder ``eps, eps/2, ..., eps/2**(levels-1)``.
    """
    steps = np.atleast_1d(np.asarray(eps, dtype=float))
    if steps.size == 1:
        steps = steps[0] / 2.0 ** np.arange(levels)
    if np.any(steps <= 0):
        raise DomainError("eps must be positive")
    fwd = np.array([2 * curve(theta + e) / (curvature * e * e) for e in steps])
    bwd = np.array([2 * curve(theta - e) / (curvature * e * e) for e in steps])
    return DivergenceLadder(steps, fwd, 0.5 * (fwd + bwd))


def commutation_superop(rho, x) -> np.ndarray:
    """Solve ``rho D + D rho = -i [rho, x]`` on the support of ``rho``."""
    rho = _as_matrix(rho)
    x = _as_matrix(x)
    evals, evecs = np.linalg.eigh(hermitize(rho))
    cutoff = EPS_RANK * rho.shape[0] * np.max(np.abs(evals))
    xe = dag(evecs) @ x @ evecs
    denom = evals[:, None] + evals[None, :]
    keep = denom > cutoff
    diff = evals[:, None] - evals[None, :]
    de = np.where(keep, -1j * diff * xe / np.where(keep, denom, 1.0), 0.0)
    return evecs @ de @ dag(evecs)
