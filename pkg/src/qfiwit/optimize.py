"""Single-copy optimum of the output QFI over pure input states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ParamChannelFamily, lindblad_channel
from .errors import DomainError
from .fisher import qfi, qfi_batch
from .qmat import DensityMatrix, _as_matrix, hermitize, ket_to_dm

GRAD_STEP = 1e-6
ARMIJO = 1e-4
# smallest gradient the central difference can resolve, relative to the cost
GRAD_FLOOR = 10 * np.finfo(float).eps / GRAD_STEP


@dataclass(frozen=True)
class GStarResult:
    value: float
    argmax_state: DensityMatrix
    restarts_used: int
    converged: bool
    gradient_norm: float


def _to_kets(x: np.ndarray, d: int) -> np.ndarray:
    z = x[..., :d] + 1j * x[..., d:]
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _pure_cost(channel: ParamChannelFamily, theta: float):
    d = channel.dim

    def cost(x: np.ndarray) -> np.ndarray:
        rho = ket_to_dm(_to_kets(x, d))
        q = qfi_batch(channel.apply(theta, rho), channel.derivative(theta, rho), strict=False)
        return np.where(np.isnan(q), -np.inf, q)
    return cost


def _num_grad(cost, x: np.ndarray) -> np.ndarray:
    r, m = x.shape
    eye = np.eye(m) * GRAD_STEP
    pts = np.concatenate([x[:, None, :] + eye, x[:, None, :] - eye], axis=1)
    vals = cost(_normalize(pts.reshape(-1, m))).reshape(r, 2, m)
    g = (vals[:, 0] - vals[:, 1]) / (2 * GRAD_STEP)
    # tangent projection on the unit sphere
    return g - np.sum(g * x, axis=1, keepdims=True) * x


def maximize_on_sphere(cost, x0: np.ndarray, tol: float, max_iter: int):
    """Projected gradient ascent with Barzilai-Borwein steps and backtracking.

    ``cost`` maps an (R, m) batch of unit vectors to R values.  Returns
    ``(x, values, grad_norms, converged)``.
    """
    x = _normalize(np.array(x0, dtype=float))
    r = x.shape[0]
    f = cost(x)
    g = _num_grad(cost, x)
    gn = np.linalg.norm(g, axis=1)
    step = np.ones(r)
    active = gn > tol * np.maximum(1.0, np.abs(f))
    prev_x = prev_g = None
    for _ in range(max_iter):
        if not active.any():
            break
        if prev_x is not None:
            sx = x - prev_x
            yg = g - prev_g
            syy = -np.sum(sx * yg, axis=1)
            ok = syy > 1e-300
            bb = np.where(ok, np.sum(sx * sx, axis=1) / np.where(ok, syy, 1.0), 2 * step)
            step = np.where(active, np.clip(bb, 1e-10, 1e6), step)
        trial = step.copy()
        accepted = ~active
        new_x = x.copy()
        new_f = f.copy()
        for _ in range(60):
            todo = ~accepted
            if not todo.any():
                break
            cand = _normalize(x[todo] + trial[todo, None] * g[todo])
            fc = cost(cand)
            good = fc >= f[todo] + ARMIJO * trial[todo] * gn[todo] ** 2
            idx = np.flatnonzero(todo)
            new_x[idx[good]] = cand[good]
            new_f[idx[good]] = fc[good]
            accepted[idx[good]] = True
            trial[idx[~good]] *= 0.5
        # no measurable progress means the restart sits at the noise floor
        flat = new_f - f <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(f))
        stalled = ~accepted | (active & flat)
        step = trial
        prev_x, prev_g = x, g
        x, f = new_x, new_f
        g = _num_grad(cost, x)
        gn = np.linalg.norm(g, axis=1)
        active = active & ~stalled & (gn > tol * np.maximum(1.0, np.abs(f)))
    conv = gn <= np.maximum(tol, GRAD_FLOOR * np.abs(f)) * np.maximum(1.0, np.abs(f))
    return x, f, gn, conv


def gstar(channel: ParamChannelFamily, theta: float, restarts: int = 32, tol: float = 1e-9,
          seed: int = 0, max_iter: int = 5000) -> GStarResult:
    """Maximum output QFI of a single-site channel over pure input states.

    Each restart starts from a Haar-random pure state; the best restart is
    returned.  ``converged`` means the tangent gradient at the best point is
    below ``tol`` relative to ``max(1, value)``, or below what the finite
    difference can resolve at that value.
    """
    if not channel.in_domain(theta, closed=False):
        raise DomainError(f"theta={theta} outside the open domain {channel.domain}")
    d = channel.dim
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=(restarts, 2 * d))
    cost = _pure_cost(channel, theta)
    x, f, gn, conv = maximize_on_sphere(cost, x0, tol, max_iter)
    best = int(np.argmax(f))
    psi = _to_kets(x[best], d)
    state = DensityMatrix(ket_to_dm(psi), (channel.local_dim,) * channel.copies, validate=False)
    return GStarResult(float(max(f[best], 0.0)), state, restarts, bool(conv[best]), float(gn[best]))


def gstar_unitary(generator) -> tuple[float, DensityMatrix]:
    """Closed-form optimum ``(a_max - a_min)^2`` of a shift model.

    The optimal input is the equal superposition of the first eigenvectors
    of the extreme eigenvalues.
    """
    a = hermitize(_as_matrix(generator))
    w, v = np.linalg.eigh(a)
    lo = int(np.flatnonzero(np.isclose(w, w[0], rtol=0, atol=1e-12))[0])
    hi = int(np.flatnonzero(np.isclose(w, w[-1], rtol=0, atol=1e-12))[0])
    if hi == lo:
        psi = v[:, 0]
    else:
        psi = (v[:, lo] + v[:, hi]) / np.sqrt(2)
    return float((w[-1] - w[0]) ** 2), DensityMatrix(ket_to_dm(psi), validate=False)


def variance(rho, a) -> float:
    """``tr(rho A^2) - tr(rho A)^2``."""
    rho = _as_matrix(rho)
    a = _as_matrix(a)
    if rho.shape != a.shape:
        raise DomainError("state and observable dimensions differ")
    m1 = np.real(np.trace(rho @ a))
    m2 = np.real(np.trace(rho @ a @ a))
    return float(max(m2 - m1 * m1, 0.0))


def shift_model_qfi(rho0, a) -> float:
    """QFI of ``exp(i theta A) rho0 exp(-i theta A)`` (theta independent)."""
    rho0 = _as_matrix(rho0)
    a = _as_matrix(a)
    return qfi(rho0, 1j * (a @ rho0 - rho0 @ a))


@dataclass(frozen=True)
class EqualityCheck:
    holds: bool
    residual: float

    def __bool__(self):
        return self.holds


def lemma1_equality_check(rho0, a, tol: float = 1e-9) -> EqualityCheck:
    """Test ``rho0 A rho0 == tr(rho0 A) rho0^2``, the condition for QFI = 4 Var(A)."""
    rho0 = _as_matrix(rho0)
    a = _as_matrix(a)
    mean = np.trace(rho0 @ a)
    resid = float(np.linalg.norm(rho0 @ a @ rho0 - mean * rho0 @ rho0))
    return EqualityCheck(resid <= tol, resid)


def open_system_gstar(gamma, theta: float, t: float, restarts: int = 32, tol: float = 1e-9,
                      seed: int = 0) -> GStarResult:
    """Single-qubit optimum of the Lindblad model over pure initial states."""
    if t < 0:
        raise DomainError("evolution time must be non-negative")
    if t == 0:
        return GStarResult(0.0, DensityMatrix(np.diag([1.0, 0.0]).astype(complex), validate=False),
                           0, True, 0.0)
    ch = lindblad_channel(gamma, t)
    return gstar(ch, theta, restarts=restarts, tol=tol, seed=seed)
