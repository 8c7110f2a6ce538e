"""Fundamental solutions of J f' + B f = lambda H f, with running H-Gram.

The matrix IVP ``Phi' = J^{-1}(lambda H - B) Phi, Phi(x0) = I`` is integrated
with an embedded adaptive Runge-Kutta scheme (dense output).  The Gram
``G(x) = int_{x0}^{x} Phi* H Phi`` is accumulated jointly as an augmented ODE
so that Phi and its Gram share one error control.  Piece boundaries of the
coefficients are forced step points, which preserves the integrator's order
across kinks.

All objects here are immutable after construction; distinct spectral
parameters can be propagated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import linalg
from .dsl import Interval
from .system import SymmetricSystem

__all__ = ["FundamentalSolution", "PropagationError", "propagate", "gram_matrix", "h_norm_sq"]

_METHOD = "DOP853"


class PropagationError(RuntimeError):
    """Integration failed (step-size underflow, overflow, or singular J)."""

    def __init__(self, message: str, x: float | None = None):
        if x is not None:
            message = f"{message} (near x={x!r})"
        super().__init__(message)
        self.x = x


def _rhs(system: SymmetricSystem, lam: complex, n: int):
    nn = n * n

    def rhs(x, y):
        phi = y[:nn].reshape(n, n)
        J = system.J.evaluate(x)
        B = system.B.evaluate(x)
        H = system.H.evaluate(x)
        try:
            dphi = np.linalg.solve(J, (lam * H - B) @ phi)
        except np.linalg.LinAlgError:
            raise PropagationError("J(x) is singular, hypothesis violated", x) from None
        dgram = phi.conj().T @ H @ phi
        return np.concatenate([dphi.ravel(), dgram.ravel()])

    return rhs


def _segment_cuts(system: SymmetricSystem, a: float, b: float) -> list[float]:
    lo, hi = min(a, b), max(a, b)
    inner = [p for p in system.breakpoints() if lo < p < hi]
    inner.sort(reverse=a > b)
    return [a] + inner + [b]


def _integrate_span(system, lam, a, b, y0, reltol, keep_sol):
    """Integrate the augmented state across [a, b], splitting at piece cuts."""
    n = system.n
    rhs = _rhs(system, lam, n)
    sols = []
    y = y0
    cuts = _segment_cuts(system, a, b)
    for lo, hi in zip(cuts, cuts[1:]):
        if hi == lo:
            continue
        res = solve_ivp(
            rhs,
            (lo, hi),
            y,
            method=_METHOD,
            rtol=reltol,
            atol=reltol * 1e-2,
            dense_output=True,
        )
        if not res.success:
            raise PropagationError(f"integrator failed: {res.message}", float(res.t[-1]))
        y = res.y[:, -1]
        if not np.all(np.isfinite(y.view(float))):
            raise PropagationError("solution overflowed", hi)
        if keep_sol:
            sols.append((lo, hi, res.sol))
    return y, sols


@dataclass(frozen=True)
class FundamentalSolution:
    """Phi(x, lambda) sampled on a grid, with the running H-Gram from x0.

    ``signed_gram[k]`` is the oriented integral ``int_{x0}^{grid[k]}``, so the
    difference of two signed values is always the Gram over the interval
    between them.  The ``gram`` property exposes the positive-semidefinite
    per-point version ``int over [min(x, x0), max(x, x0)]``.
    """

    system: SymmetricSystem
    lam: complex
    x0: float
    grid: np.ndarray
    values: tuple
    signed_gram: tuple
    reltol: float
    dense_segments: tuple = ()

    @property
    def gram(self) -> tuple:
        out = []
        for x, g in zip(self.grid, self.signed_gram):
            out.append(g if x >= self.x0 else -g)
        return tuple(out)

    def index_of(self, x: float) -> int:
        k = int(np.argmin(np.abs(self.grid - x)))
        if not math.isclose(self.grid[k], x, rel_tol=0.0, abs_tol=1e-12 * (1 + abs(x))):
            raise KeyError(f"x={x} is not a grid point of this solution")
        return k

    def value_at(self, x: float) -> np.ndarray:
        """Phi at an arbitrary point (requires dense output)."""
        n = self.system.n
        if x == self.x0:
            return np.eye(n, dtype=complex)
        for lo, hi, sol in self.dense_segments:
            if min(lo, hi) <= x <= max(lo, hi):
                y = sol(x)
                return y[: n * n].reshape(n, n)
        try:
            return self.values[self.index_of(x)]
        except KeyError:
            raise ValueError(
                f"x={x} is outside the propagated range; re-run propagate with dense=True"
            ) from None

    def signed_gram_at(self, x: float) -> np.ndarray:
        n = self.system.n
        if x == self.x0:
            return np.zeros((n, n), dtype=complex)
        for lo, hi, sol in self.dense_segments:
            if min(lo, hi) <= x <= max(lo, hi):
                y = sol(x)
                g = y[n * n:].reshape(n, n)
                return linalg.hermitian_part(g)
        return self.signed_gram[self.index_of(x)]


def propagate(system: SymmetricSystem, lam: complex, targets, reltol: float = 1e-10,
              dense: bool = False) -> FundamentalSolution:
    """Fundamental solution with Phi(x0) = I, evaluated at the target points.

    Args:
        system: a validated symmetric system.
        lam: the spectral parameter (complex).
        targets: points inside the system interval; x0 itself is always
            included in the output grid.
        reltol: local error target for the embedded RK pair.
        dense: keep the integrator's dense output so ``value_at`` works at
            arbitrary points of the covered range.
    """
    n = system.n
    x0 = system.x0
    pts = sorted(set(float(t) for t in targets) | {x0})
    for t in pts:
        if not system.interval.contains(t):
            raise ValueError(f"target {t} lies outside the system interval {system.interval}")
    nn = n * n
    values = {x0: np.eye(n, dtype=complex)}
    grams = {x0: np.zeros((n, n), dtype=complex)}
    segments = []
    for side in (+1, -1):
        side_targets = [t for t in pts if (t - x0) * side > 0]
        side_targets.sort(reverse=side < 0)
        if not side_targets:
            continue
        y = np.concatenate([np.eye(n, dtype=complex).ravel(), np.zeros(nn, dtype=complex)])
        a = x0
        for t in side_targets:
            y, sols = _integrate_span(system, lam, a, t, y, reltol, dense)
            segments.extend(sols)
            values[t] = y[:nn].reshape(n, n).copy()
            grams[t] = linalg.hermitian_part(y[nn:].reshape(n, n))
            a = t
    grid = np.array(pts)
    return FundamentalSolution(
        system=system,
        lam=lam,
        x0=x0,
        grid=grid,
        values=tuple(values[t] for t in pts),
        signed_gram=tuple(grams[t] for t in pts),
        reltol=reltol,
        dense_segments=tuple(segments),
    )


def _interval_endpoints(I0) -> tuple[float, float]:
    if isinstance(I0, Interval):
        return I0.left, I0.right
    a, b = I0
    return float(a), float(b)


def gram_matrix(fs: FundamentalSolution, I0, reltol: float | None = None) -> np.ndarray:
    """The H-Gram ``int_{I0} Phi* H Phi`` over a compact subinterval.

    Computed by differencing the running Gram; the quadrature is re-run at a
    tighter tolerance and refined once more if the two estimates disagree by
    more than ``reltol * |G|``.
    """
    a, b = _interval_endpoints(I0)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("the Gram interval must be compact")
    lo, hi = float(fs.grid[0]), float(fs.grid[-1])
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError(f"[{a}, {b}] is outside the computed range [{lo}, {hi}]")
    reltol = fs.reltol if reltol is None else reltol

    def compute(rt):
        f = propagate(fs.system, fs.lam, [a, b], reltol=rt)
        return f.signed_gram_at(b) - f.signed_gram_at(a)

    g = compute(reltol)
    g_fine = compute(reltol * 1e-2)
    scale = max(1.0, linalg.operator_norm(g_fine))
    if linalg.operator_norm(g - g_fine) > reltol * scale:
        g = g_fine
        g_fine = compute(reltol * 1e-4)
    return linalg.hermitian_part(g_fine)


def h_norm_sq(fs: FundamentalSolution, coeffs, I0) -> float:
    """``int_{I0} (Phi c)* H (Phi c) = c* G(I0) c`` for a coefficient vector c."""
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    if c.size != fs.system.n:
        raise ValueError(f"coefficient vector must have length {fs.system.n}")
    g = gram_matrix(fs, I0)
    val = float(np.real(c.conj() @ g @ c))
    return max(val, 0.0)
