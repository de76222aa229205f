"""Half-range moments of 1D Maxwellians and the boundary-matched Maxwellian.

Moments are taken against m(v) = (1, v, v^2/2) with Lebesgue measure dv.  The
incoming half line is v > 0 for ``Side.PLUS`` and v < 0 for ``Side.MINUS``;
MINUS quantities are obtained from PLUS ones by the mirror v -> -v.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfcx, ndtr, roots_laguerre

from .velocity import Side

_SQRT_2PI = np.sqrt(2.0 * np.pi)


class InversionError(ValueError):
    """Half moments that no Maxwellian reproduces (or Newton could not find it)."""

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class MaxwellParams1D:
    rho: float
    u: float
    T: float

    def __post_init__(self):
        if not (self.rho > 0 and self.T > 0 and np.isfinite(self.u)):
            raise ValueError(f"need rho > 0 and T > 0, got {self}")

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self.rho / np.sqrt(2 * np.pi * self.T) * np.exp(-((v - self.u) ** 2) / (2 * self.T))

    def mirrored(self) -> "MaxwellParams1D":
        return MaxwellParams1D(self.rho, -self.u, self.T)

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.u, self.T])


@dataclass(frozen=True)
class MomentVector:
    m0: float
    m1: float
    m2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m0, self.m1, self.m2])

    def __add__(self, other: "MomentVector") -> "MomentVector":
        return MomentVector(*(self.as_array() + other.as_array()))

    def to_params(self) -> MaxwellParams1D:
        """Invert full-range moments (rho, rho u, rho u^2/2 + rho T/2)."""
        rho = self.m0
        u = self.m1 / rho
        return MaxwellParams1D(rho, u, 2.0 * self.m2 / rho - u * u)


@dataclass(frozen=True)
class HalfMoments:
    moments: MomentVector
    side: Side

    def check(self) -> None:
        m0, m1, m2 = self.moments.as_array()
        sign = 1.0 if self.side is Side.PLUS else -1.0
        if not (m0 > 0 and m2 > 0 and sign * m1 > 0):
            raise InversionError(
                f"half moments {self.moments} violate m0 > 0, m2 > 0, sign(m1) = {self.side.name}"
            )


def full_moments(p: MaxwellParams1D) -> MomentVector:
    return MomentVector(p.rho, p.rho * p.u, 0.5 * p.rho * p.u**2 + 0.5 * p.rho * p.T)


_LAG_NODES, _LAG_WEIGHTS = roots_laguerre(80)
_TAIL_SWITCH = -2.0


def _partial_moments(z: float) -> tuple[float, float, float]:
    """(Phi, z Phi + phi, (z^2+1) Phi + z phi) at z.

    These are int_{-inf}^z (z - t)^n phi(t) dt / n!-free forms of the standard
    normal tail.  For z < -2 the closed forms cancel badly, so they are
    rewritten as phi(z) int_0^inf s^n exp(-y s - s^2/2) ds with y = -z and
    evaluated by Gauss-Laguerre.
    """
    phi = np.exp(-0.5 * z * z) / _SQRT_2PI
    if z >= _TAIL_SWITCH:
        cdf = ndtr(z)
        return cdf, z * cdf + phi, (z * z + 1.0) * cdf + z * phi
    y = -z
    damp = _LAG_WEIGHTS * np.exp(-(_LAG_NODES**2) / (2.0 * y * y))
    j0 = np.sum(damp) / y
    j1 = np.sum(damp * _LAG_NODES) / y**2
    j2 = np.sum(damp * _LAG_NODES**2) / y**3
    return phi * j0, phi * j1, phi * j2


def _mills(z):
    """phi(z) / Phi(z), stable for large negative z."""
    return np.sqrt(2.0 / np.pi) / erfcx(-np.asarray(z) / np.sqrt(2.0))


def half_line_integrals(p: MaxwellParams1D, side: Side, order: int = 4) -> np.ndarray:
    """I_n = int_{V-} v^n M dv for n = 0..order.

    On v > 0, integrating v^{n-1} (v - u) M = -T v^{n-1} M' by parts gives
    I_n = u I_{n-1} + (n-1) T I_{n-2}, plus T M(0) when n = 1.
    """
    q = p if side is Side.PLUS else p.mirrored()
    s = np.sqrt(q.T)
    z = q.u / s
    out = np.empty(order + 1)
    out[0] = q.rho * ndtr(z)
    m_at_0 = q.rho * np.exp(-0.5 * z * z) / (_SQRT_2PI * s)
    if order >= 1:
        out[1] = q.u * out[0] + q.T * m_at_0
    for n in range(2, order + 1):
        out[n] = q.u * out[n - 1] + (n - 1) * q.T * out[n - 2]
    if side is Side.MINUS:
        out *= (-1.0) ** np.arange(order + 1)
    return out


def half_moments(p: MaxwellParams1D, side: Side) -> HalfMoments:
    q = p if side is Side.PLUS else p.mirrored()
    s = np.sqrt(q.T)
    k0, k1, k2 = _partial_moments(q.u / s)
    sign = 1.0 if side is Side.PLUS else -1.0
    return HalfMoments(MomentVector(q.rho * k0, sign * q.rho * s * k1, 0.5 * q.rho * q.T * k2), side)


def _ratios(z: float, T: float) -> tuple[np.ndarray, np.ndarray]:
    """(m1/m0, m2/m0) of a PLUS half Maxwellian and their Jacobian in (z, T)."""
    k0, k1, k2 = _partial_moments(z)
    m = float(_mills(z))
    a = k1 / k0
    b = k2 / k0
    da = 1.0 - m * a
    db = 2.0 * z + m - z * m * a
    s = np.sqrt(T)
    r = np.array([s * a, 0.5 * T * b])
    jac = np.array([[s * da, 0.5 * a / s], [0.5 * T * db, 0.5 * b]])
    return r, jac


def invert_half_moments(hm: HalfMoments, tol: float = 1e-13, max_iter: int = 50) -> MaxwellParams1D:
    """Maxwellian whose half-range moments on ``hm.side`` equal ``hm``.

    Newton on (z, T), z = u / sqrt(T), for the density-free ratios m1/m0 and
    m2/m0; rho follows from m0.  Steps are halved until T stays positive and
    the relative residual decreases.
    """
    hm.check()
    m0, m1, m2 = hm.moments.as_array()
    if hm.side is Side.MINUS:
        m1 = -m1
    target = np.array([m1 / m0, m2 / m0])

    # full-range inversion of the doubled half moments as a starting point
    u0 = target[0]
    T0 = 2.0 * target[1] - u0 * u0
    if T0 <= 0:
        T0 = 0.5 * target[1]
    x = np.array([u0 / np.sqrt(T0), T0])

    def resid(x):
        r, jac = _ratios(*x)
        return (r - target) / target, jac / target[:, None]

    F, J = resid(x)
    norm = np.max(np.abs(F))
    trace = [(x.copy(), norm)]
    for _ in range(max_iter):
        if norm <= tol:
            break
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise InversionError("singular Newton Jacobian", trace) from exc
        alpha = 1.0
        while True:
            trial = x + alpha * dx
            if trial[1] > 0 and np.all(np.isfinite(trial)):
                Ft, Jt = resid(trial)
                if np.max(np.abs(Ft)) < norm or alpha < 1e-12:
                    break
            alpha *= 0.5
            if alpha < 1e-12:
                raise InversionError("Newton step cannot keep T > 0", trace)
        x, F, J = trial, Ft, Jt
        norm = np.max(np.abs(F))
        trace.append((x.copy(), norm))
    if norm > tol:
        raise InversionError(
            f"half-moment inversion did not converge (residual {norm:.3e})", trace
        )
    z, T = x
    rho = m0 / _partial_moments(z)[0]
    u = z * np.sqrt(T)
    return MaxwellParams1D(rho, u if hm.side is Side.PLUS else -u, T)


def half_line_quadrature(p: MaxwellParams1D, side: Side, n: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights (measure dv) covering the mass of M on the half line."""
    q = p if side is Side.PLUS else p.mirrored()
    upper = max(q.u, 0.0) + 40.0 * np.sqrt(q.T)
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * upper * (x + 1.0)
    weights = 0.5 * upper * w
    if side is Side.MINUS:
        nodes = -nodes
    return nodes, weights


@dataclass(frozen=True)
class Projection:
    coefficients: np.ndarray  # c0 + c1 v + c2 v^2 multiplies M
    values: np.ndarray  # projected function on the supplied nodes
    gram: np.ndarray = field(repr=False)


def gram_matrix(p: MaxwellParams1D, side: Side) -> np.ndarray:
    """G_kl = int_{V-} v^{k+l} M dv, k, l = 0, 1, 2."""
    i = half_line_integrals(p, side, 4)
    return np.array([[i[k + l] for l in range(3)] for k in range(3)])


def project_half(phi, nodes, weights, p: MaxwellParams1D, side: Side) -> Projection:
    """Orthogonal projection onto span{M, vM, v^2 M} in L^2(M^{-1} 1_{V-}).

    ``phi`` is sampled on a quadrature (``nodes``, ``weights``) of the side's
    half line.  The Gram matrix uses exact half-line integrals.
    """
    phi = np.asarray(phi, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    G = gram_matrix(p, side)
    if np.linalg.cond(G) > 1e14:
        raise np.linalg.LinAlgError("numerically singular Gram matrix")
    powers = np.vstack([np.ones_like(nodes), nodes, nodes**2])
    b = powers @ (weights * phi)
    c = np.linalg.solve(G, b)
    return Projection(c, (c @ powers) * p(nodes), G)


def euler_flux_of_maxwellian(p: MaxwellParams1D) -> MomentVector:
    """int v m(v) M dv over the whole line: the 1D Euler flux."""
    r, u, T = p.rho, p.u, p.T
    return MomentVector(r * u, r * u * u + r * T, 0.5 * r * u**3 + 1.5 * r * u * T)


def half_flux(p: MaxwellParams1D, side: Side) -> MomentVector:
    """int_{V-} v m(v) M dv."""
    i = half_line_integrals(p, side, 3)
    return MomentVector(i[1], i[2], 0.5 * i[3])


def sample_moments(f, nodes, weights, side: Side) -> HalfMoments:
    """Half moments of sampled data on a half-line quadrature."""
    f = np.asarray(f, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    wf = np.asarray(weights) * f
    return HalfMoments(MomentVector(wf.sum(), wf @ nodes, 0.5 * (wf @ nodes**2)), side)


def boundary_maxwellian(f_b, nodes, weights, side: Side) -> MaxwellParams1D:
    """Maxwellian matching the incoming half moments of wall data ``f_b``."""
    return invert_half_moments(sample_moments(f_b, nodes, weights, side))
