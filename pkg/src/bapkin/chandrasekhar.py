"""Chandrasekhar H-function for conservative isotropic scattering.

H solves H(mu) = 1 + (mu/2) H(mu) int_0^1 H(mu') / (mu + mu') dmu'.  The
diffusion-limit wall value produced by inflow f_b on a half space is

    rho(0) = (sqrt(3)/2) int_0^1 mu H(mu) f_b(mu) dmu,

which is 0.71043... for f_b(mu) = mu.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

SQRT3_2 = np.sqrt(3.0) / 2.0


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class HTable:
    mu_nodes: np.ndarray
    mu_weights: np.ndarray
    h_values: np.ndarray
    residual: float
    iterations: int
    tol: float

    @property
    def converged(self) -> bool:
        return self.residual <= self.tol

    def moment(self, k: int) -> float:
        """alpha_k = int_0^1 mu^k H(mu) dmu."""
        return float(np.sum(self.mu_weights * self.mu_nodes**k * self.h_values))

    def __call__(self, mu):
        """H at arbitrary mu in [0, 1] via the Nystrom extension of the equation."""
        mu = np.asarray(mu, dtype=float)
        s = np.sum(
            self.mu_weights * self.h_values / (mu[..., None] + self.mu_nodes), axis=-1
        )
        return 1.0 / (1.0 - 0.5 * mu * s)


def reciprocal_residual(h: np.ndarray, mu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """1/H(mu) - [1 - (mu/2) int_0^1 H(mu') / (mu + mu') dmu'] on the nodes."""
    kernel = w[None, :] / (mu[:, None] + mu[None, :])
    return 1.0 / h - (1.0 - 0.5 * mu * (kernel @ h))


def solve_h(n_nodes: int = 64, tol: float = 1e-10, max_iter: int = 1000, damping: float = 0.5) -> HTable:
    """Damped fixed-point iteration for 1/H on Gauss-Legendre nodes of (0, 1).

    With unit albedo the plain map 1/H = 1 - (mu/2) int H/(mu + mu') has a
    neutral direction and stalls.  Subtracting the zeroth-moment identity
    int_0^1 H = 2 gives the equivalent map 1/H = (1/2) int mu' H/(mu + mu'),
    which contracts.  Convergence is still judged on the original equation.
    """
    if n_nodes < 16:
        raise ValueError(f"n_nodes must be >= 16, got {n_nodes}")
    if tol < 1e-12:
        raise ValueError(f"tol must be >= 1e-12, got {tol}")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    mu = 0.5 * (x + 1.0)
    w = 0.5 * w
    kernel = w[None, :] / (mu[:, None] + mu[None, :])
    recip = np.ones(n_nodes)
    residual = np.inf
    for it in range(1, max_iter + 1):
        recip = (1.0 - damping) * recip + damping * 0.5 * (kernel @ (mu / recip))
        residual = float(np.max(np.abs(reciprocal_residual(1.0 / recip, mu, w))))
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f"H iteration did not converge in {max_iter} steps (residual {residual:.3e})",
            residual,
        )
    log.debug("H-function converged in %d iterations, residual %.2e", it, residual)
    return HTable(mu, w, 1.0 / recip, residual, it, tol)


def milne_boundary_value(table: HTable, incoming: Callable[[np.ndarray], np.ndarray]) -> float:
    """(sqrt(3)/2) int_0^1 mu H(mu) incoming(mu) dmu."""
    if not table.converged:
        raise ValueError(f"H table not converged (residual {table.residual:.3e})")
    mu = table.mu_nodes
    f = np.broadcast_to(np.asarray(incoming(mu), dtype=float), mu.shape)
    return float(SQRT3_2 * np.sum(table.mu_weights * mu * table.h_values * f))
