"""One-parameter channel families and their i.i.d. extensions.

Every family here is linear in the state, so it is stored as a single-site
superoperator ``S(theta)`` acting on row-major vectorized matrices,
``vec(G(rho)) = S vec(rho)``.  An i.i.d. extension applies ``S`` on every
site.  All ``apply``/``derivative`` calls accept stacks of matrices with
shape ``(..., D, D)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, IntegratorError
from .qmat import I2, PAULI, SX, SY, SZ, DensityMatrix, _as_matrix, dag, hermitize, kron

SuperopFn = Callable[[float], np.ndarray]
MAX_DIM = 64


def _vec_identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1)


def apply_superop(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a full superoperator to a stack of matrices."""
    D = rho.shape[-1]
    flat = rho.reshape(rho.shape[:-2] + (D * D,))
    return (flat @ s.T).reshape(rho.shape)


def unitary_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> U rho U^dagger`` (row-major vec)."""
    return np.kron(u, np.conj(u))


def kraus_superop(kraus) -> np.ndarray:
    return sum(np.kron(k, np.conj(k)) for k in kraus)


def random_kraus(d: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Kraus operators of a random TP-CP map on dimension ``d`` with ``k`` terms.

    Cut from a Haar-like isometry ``C^d -> C^(k d)``, so ``sum K^dag K = I``.
    """
    z = rng.normal(size=(k * d, d)) + 1j * rng.normal(size=(k * d, d))
    v, _ = np.linalg.qr(z)
    return [v[i * d:(i + 1) * d] for i in range(k)]


def swap_superop(d: int) -> np.ndarray:
    """Superoperator of the transpose map."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def apply_site_superop(s: np.ndarray, rho: np.ndarray, site: int, d: int, n: int) -> np.ndarray:
    """Apply a one-site superoperator to site ``site`` (0-based) of an n-site stack."""
    batch = rho.shape[:-2]
    nb = len(batch)
    t = rho.reshape(batch + (d,) * (2 * n))
    s4 = s.reshape(d, d, d, d)
    out = np.tensordot(t, s4, axes=([nb + site, nb + n + site], [2, 3]))
    # tensordot puts the two new axes last; put them back in place
    out = np.moveaxis(out, [-2, -1], [nb + site, nb + n + site])
    D = d ** n
    return out.reshape(batch + (D, D))


@dataclass(frozen=True)
class ParamChannelFamily:
    """Differentiable one-parameter family of linear maps.

    ``superop(theta)`` is the single-site superoperator and ``dsuperop`` its
    analytic theta-derivative, when known.  ``copies`` counts i.i.d. sites.
    ``gstar_closed_form`` optionally gives the single-copy optimum in closed
    form; it is used by the witness module as the analytic threshold.
    """

    kind: str
    local_dim: int
    domain: tuple[float, float]
    superop: SuperopFn = field(repr=False)
    dsuperop: SuperopFn | None = field(default=None, repr=False)
    parameters: dict = field(default_factory=dict)
    trace_preserving: bool = True
    completely_positive: bool = True
    one_positive: bool = True
    copies: int = 1
    gstar_closed_form: Callable[[float], float] | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.local_dim ** self.copies

    @property
    def flags(self) -> dict:
        return {
            "trace_preserving": self.trace_preserving,
            "completely_positive": self.completely_positive,
            "one_positive": self.one_positive,
        }

    def in_domain(self, theta: float, closed: bool = True) -> bool:
        lo, hi = self.domain
        if closed:
            return lo <= theta <= hi
        return lo < theta < hi

    def _check(self, theta: float) -> None:
        if not self.in_domain(theta):
            raise DomainError(f"theta={theta} outside domain {self.domain} of {self.kind}")

    def _prep(self, rho) -> np.ndarray:
        m = _as_matrix(rho)
        if m.shape[-2:] != (self.dim, self.dim):
            raise DomainError(f"{self.kind}: expected {self.dim}x{self.dim} states, got {m.shape[-2:]}")
        return m

    def apply(self, theta: float, rho) -> np.ndarray:
        self._check(theta)
        m = self._prep(rho)
        s = self.superop(theta)
        for k in range(self.copies):
            m = apply_site_superop(s, m, k, self.local_dim, self.copies)
        return m

    def derivative(self, theta: float, rho) -> np.ndarray:
        """Theta-derivative of the output; finite differences if no analytic form."""
        if self.dsuperop is None:
            return finite_difference_derivative(self, theta, rho)
        self._check(theta)
        m = self._prep(rho)
        s = self.superop(theta)
        ds = self.dsuperop(theta)
        total = np.zeros_like(m)
        for k in range(self.copies):
            t = m
            for j in range(self.copies):
                t = apply_site_superop(ds if j == k else s, t, j, self.local_dim, self.copies)
            total = total + t
        return total

    def full_superops(self, theta: float) -> tuple[np.ndarray, np.ndarray]:
        """Superoperators ``(S, dS)`` of the whole extended map on D x D matrices."""
        D = self.dim
        basis = np.eye(D * D, dtype=complex).reshape(D * D, D, D)
        s = self.apply(theta, basis).reshape(D * D, D * D).T
        ds = self.derivative(theta, basis).reshape(D * D, D * D).T
        return s, ds

    def descriptor(self) -> dict:
        """JSON-serializable description ``{kind, parameters, domain, flags}``."""
        params = dict(self.parameters)
        if self.copies != 1:
            params["copies"] = self.copies
        return {"kind": self.kind, "parameters": params,
                "domain": [float(self.domain[0]), float(self.domain[1])], "flags": self.flags}


def shift_channel(generator, domain=(-math.pi, math.pi), kind: str = "shift",
                  parameters: dict | None = None) -> ParamChannelFamily:
    """Unitary family ``rho -> exp(i theta A) rho exp(-i theta A)``."""
    a = np.asarray(generator, dtype=complex)
    if np.max(np.abs(a - dag(a))) > 1e-10:
        raise DomainError("generator must be Hermitian")
    a = hermitize(a)
    w = np.linalg.eigvalsh(a)

    def u(theta):
        return expm(1j * theta * a)

    def superop(theta):
        return unitary_superop(u(theta))

    def dsuperop(theta):
        uu = u(theta)
        du = 1j * a @ uu
        return np.kron(du, np.conj(uu)) + np.kron(uu, np.conj(du))

    spread = float(w[-1] - w[0])
    if parameters is None:
        parameters = {"generator": np.stack([a.real, a.imag], axis=-1).tolist()}
    params = parameters
    return ParamChannelFamily(kind, a.shape[0], tuple(domain), superop, dsuperop, params,
                              gstar_closed_form=lambda theta: spread ** 2)


def rotation_channel(axis) -> ParamChannelFamily:
    """Qubit rotation ``exp(i theta n.sigma/2)`` about the unit vector ``axis``."""
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-12:
        raise DomainError(f"rotation axis must be a unit 3-vector, got {axis}")
    gen = 0.5 * (n[0] * SX + n[1] * SY + n[2] * SZ)
    return shift_channel(gen, kind="rotation", parameters={"axis": n.tolist()})


def depolarizing_channel() -> ParamChannelFamily:
    """``rho -> theta rho + (1 - theta) tr(rho) I/2`` on a qubit."""
    vi = _vec_identity(2)
    reset = np.outer(vi / 2, vi)
    eye = np.eye(4, dtype=complex)
    return ParamChannelFamily(
        "depolarizing", 2, (0.0, 1.0),
        superop=lambda th: th * eye + (1 - th) * reset,
        dsuperop=lambda th: eye - reset,
        gstar_closed_form=lambda th: 1.0 / (1.0 - th * th),
    )


def transpose_channel() -> ParamChannelFamily:
    """``rho -> theta rho + (1 - theta) rho^T``; positive but not CP."""
    eye = np.eye(4, dtype=complex)
    sw = swap_superop(2)
    return ParamChannelFamily(
        "transpose", 2, (0.0, 1.0),
        superop=lambda th: th * eye + (1 - th) * sw,
        dsuperop=lambda th: eye - sw,
        completely_positive=False,
        gstar_closed_form=lambda th: 1.0 / (th * (1.0 - th)),
    )


def iid_extend(base: ParamChannelFamily, n: int) -> ParamChannelFamily:
    """n-fold tensor power of a single-site family."""
    if n < 1:
        raise DomainError("number of copies must be positive")
    if base.copies != 1:
        raise DomainError("iid_extend expects a single-site family")
    if base.local_dim ** n > MAX_DIM:
        raise DomainError(f"extension dimension {base.local_dim ** n} exceeds {MAX_DIM}")
    return replace(base, copies=n)


def ptm(channel: ParamChannelFamily, theta: float) -> np.ndarray:
    """Pauli transfer matrix ``M_ab = tr(s_a G(s_b))/2`` of a qubit family."""
    if channel.dim != 2:
        raise DomainError("Pauli transfer matrix needs a single-qubit channel")
    out = channel.apply(theta, np.stack(PAULI))
    return np.real(np.einsum("aij,bji->ab", np.stack(PAULI), out)) / 2


def finite_difference_derivative(channel: ParamChannelFamily, theta: float, rho) -> np.ndarray:
    """Central-difference derivative of the channel output in theta."""
    h = np.cbrt(np.finfo(float).eps) * max(1.0, abs(theta))
    lo, hi = channel.domain
    if not (lo <= theta - h and theta + h <= hi):
        raise DomainError(f"theta={theta} within {h:.2e} of the domain boundary")
    m = channel._prep(rho)
    d = (channel.apply(theta + h, m) - channel.apply(theta - h, m)) / (2 * h)
    d = hermitize(d)
    if channel.trace_preserving:
        D = d.shape[-1]
        tr = np.trace(d, axis1=-2, axis2=-1)
        d = d - (tr / D)[..., None, None] * np.eye(D)
    return d


# ---------------------------------------------------------------- Lindblad

@dataclass(frozen=True)
class LindbladSpec:
    """Rotation rate ``theta``, damping rates ``gamma`` (3,), time ``t``, qubits ``n``."""

    theta: float
    gamma: tuple[float, float, float]
    t: float
    n: int = 1

    def __post_init__(self):
        g = tuple(float(x) for x in np.broadcast_to(np.asarray(self.gamma, dtype=float), (3,)))
        if min(g) < 0:
            raise DomainError("damping rates must be non-negative")
        if self.t < 0:
            raise DomainError("evolution time must be non-negative")
        if self.n < 1:
            raise DomainError("need at least one qubit")
        object.__setattr__(self, "gamma", g)

    def default_steps(self) -> int:
        return max(200, math.ceil(1000 * self.t * (abs(self.theta) + sum(self.gamma))))


def lindblad_generator(theta: float, gamma) -> np.ndarray:
    """Single-qubit Liouvillian (row-major vec) of
    ``d rho/dt = i[rho, theta s_z/2] - 1/4 sum_j g_j [[rho, s_j], s_j]``."""
    h = 0.5 * theta * SZ
    eye = np.eye(2)
    # vec(A rho B) = (A kron B^T) vec(rho)
    gen = 1j * (np.kron(eye, h.T) - np.kron(h, eye))
    for g, s in zip(gamma, (SX, SY, SZ)):
        # [[rho,s],s] = 2 rho - 2 s rho s for Pauli s
        gen = gen - 0.5 * g * (np.eye(4) - np.kron(s, s.T))
    return gen


def _lindblad_superop(theta: float, gamma, t: float) -> np.ndarray:
    return expm(t * lindblad_generator(theta, gamma))


def _lindblad_dsuperop(theta: float, gamma, t: float) -> np.ndarray:
    # d/dtheta expm(t G(theta)) from the block-triangular exponential
    g = lindblad_generator(theta, gamma)
    dg = lindblad_generator(1.0, (0, 0, 0))
    block = np.zeros((8, 8), dtype=complex)
    block[:4, :4] = t * g
    block[4:, 4:] = t * g
    block[:4, 4:] = t * dg
    return expm(block)[:4, 4:]


def lindblad_channel(gamma, t: float) -> ParamChannelFamily:
    """Single-qubit Lindblad evolution for time ``t`` as a family in the rotation rate.

    Extend with :func:`iid_extend` for the N-qubit dynamics; the generator is
    a sum of single-site terms, so the N-qubit map is the tensor power.
    """
    spec = LindbladSpec(0.0, gamma, t)
    g = spec.gamma
    return ParamChannelFamily(
        "lindblad", 2, (-math.inf, math.inf),
        superop=lambda th: _lindblad_superop(th, g, t),
        dsuperop=lambda th: _lindblad_dsuperop(th, g, t),
        parameters={"gamma": list(g), "t": float(t)},
    )


def _site_paulis(n: int) -> list[list[np.ndarray]]:
    ops = []
    for i in range(n):
        row = []
        for s in (SX, SY, SZ):
            factors = [I2] * n
            factors[i] = s
            row.append(kron(*factors))
        ops.append(row)
    return ops


@dataclass(frozen=True)
class LindbladResult:
    state: DensityMatrix
    derivative: np.ndarray
    steps: int


def _rk4(rhs, rho: np.ndarray, t: float, steps: int) -> np.ndarray:
    if t == 0:
        return rho.copy()
    dt = t / steps
    for _ in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def lindblad_evolve(spec: LindbladSpec, rho0, steps: int | None = None,
                    with_derivative: bool = True) -> LindbladResult:
    """Integrate the N-qubit master equation with fixed-step RK4.

    The theta-derivative is a central difference of two integrations using
    the same step count.  Raises :class:`IntegratorError` when the estimated
    local error per step exceeds 1e-8.
    """
    n = spec.n
    D = 2 ** n
    m = _as_matrix(rho0)
    if m.shape != (D, D):
        raise DomainError(f"initial state must be {D}x{D} for {n} qubits")
    steps = spec.default_steps() if steps is None else int(steps)
    if steps < 1:
        raise IntegratorError("need at least one step")
    paulis = _site_paulis(n)
    # local RK4 error for a linear ODE ~ (h |L|)^5 / 120; |L| bounded by the site sum
    site_norm = np.linalg.norm(lindblad_generator(spec.theta, spec.gamma), 2)
    h = spec.t / steps
    if (h * n * site_norm) ** 5 / 120 > 1e-8:
        raise IntegratorError(f"{steps} steps too coarse for t={spec.t}; refine")

    def make_rhs(theta):
        ham = 0.5 * theta * sum(row[2] for row in paulis)

        def rhs(r):
            out = 1j * (r @ ham - ham @ r)
            for row in paulis:
                for g, s in zip(spec.gamma, row):
                    if g:
                        out = out - 0.5 * g * (r - s @ r @ s)
            return out
        return rhs

    final = _rk4(make_rhs(spec.theta), m, spec.t, steps)
    if with_derivative:
        hd = np.cbrt(np.finfo(float).eps) * max(1.0, abs(spec.theta))
        up = _rk4(make_rhs(spec.theta + hd), m, spec.t, steps)
        dn = _rk4(make_rhs(spec.theta - hd), m, spec.t, steps)
        deriv = hermitize((up - dn) / (2 * hd))
        deriv = deriv - np.trace(deriv) / D * np.eye(D)
    else:
        deriv = np.zeros_like(final)
    dims = (2,) * n
    return LindbladResult(DensityMatrix(final, dims, validate=False), deriv, steps)


def bloch_decay_solution(theta: float, gamma, t: float, s0) -> np.ndarray:
    """Closed-form Bloch vector of the single-qubit master equation.

    ``ds_k/dt = -(sum_{j != k} g_j) s_k`` plus a rotation about z at rate
    ``theta``; in the rotating frame the transverse components decay with
    their own rates, which only combine cleanly when g_x == g_y.
    """
    gx, gy, gz = gamma
    if abs(gx - gy) > 1e-15:
        raise DomainError("closed form implemented for g_x == g_y")
    s0 = np.asarray(s0, dtype=float)
    perp = math.exp(-(gx + gz) * t)  # rate for s_x and s_y: g_y+g_z == g_x+g_z
    par = math.exp(-(gx + gy) * t)
    c, s = math.cos(theta * t), math.sin(theta * t)
    # i[rho, theta s_z/2] rotates (s_x, s_y) by +theta t
    x = perp * (c * s0[0] - s * s0[1])
    y = perp * (s * s0[0] + c * s0[1])
    return np.array([x, y, par * s0[2]])


# ----------------------------------------------------------- descriptors

_ALIASES = {"ux": ("rotation", [1, 0, 0]), "uy": ("rotation", [0, 1, 0]),
            "uz": ("rotation", [0, 0, 1]), "dpc": ("depolarizing", None),
            "tpc": ("transpose", None)}


def channel_from_descriptor(desc: dict | str) -> ParamChannelFamily:
    """Build a family from a JSON descriptor (or a short alias like ``"ux"``)."""
    if isinstance(desc, str):
        desc = {"kind": desc}
    if not isinstance(desc, dict):
        raise DomainError("channel descriptor must be a JSON object or an alias")
    kind = desc.get("kind")
    params = dict(desc.get("parameters", {}))
    if kind in _ALIASES:
        kind, axis = _ALIASES[kind]
        if axis is not None:
            params.setdefault("axis", axis)
    copies = int(params.pop("copies", 1))
    if kind == "rotation":
        ch = rotation_channel(params.get("axis", [0, 0, 1]))
    elif kind == "shift":
        gen = np.asarray(params["generator"], dtype=float)
        if gen.ndim == 3 and gen.shape[-1] == 2:
            gen = gen[..., 0] + 1j * gen[..., 1]
        ch = shift_channel(gen)
    elif kind == "depolarizing":
        ch = depolarizing_channel()
    elif kind == "transpose":
        ch = transpose_channel()
    elif kind == "lindblad":
        ch = lindblad_channel(params.get("gamma", [0, 0, 0]), float(params.get("t", 0.0)))
    else:
        raise DomainError(f"unknown channel kind {kind!r}")
    if "domain" in desc:
        lo, hi = desc["domain"]
        ch = replace(ch, domain=(float(lo), float(hi)))
    if copies != 1:
        ch = iid_extend(ch, copies)
    return ch
