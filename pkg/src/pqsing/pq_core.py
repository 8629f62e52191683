"""Scalar algebra of the (p,q) gradient map.

The building block everywhere else is the strictly increasing odd map

    L_{p,q}(t) = |t|^{p-2} t + |t|^{q-2} t,       1 < p < q,

its weighted variant  alpha|t|^{p-2}t + beta|t|^{q-2}t, their inverses,
and the two-point monotonicity gaps that serve as numerical ground truth
for the vector-field inequalities.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import ConvergenceFailure, DegenerateInput, InfeasibleGeometry

__all__ = [
    "Params",
    "lpq_scalar",
    "lpq_derivative",
    "lpq_inverse",
    "simon_constant",
    "simon_gap",
    "simon_gap_sum",
]


@dataclasses.dataclass(frozen=True)
class Params:
    """Problem constants: exponents, singularity, geometry, and load.

    lam >= 0 is admitted (lam = 0 is a useful zero-load sanity case even
    though the multiplicity theory itself needs lam > 0).
    """

    p: float
    q: float
    gamma: float
    dim: int
    radius: float
    lam: float

    def __post_init__(self) -> None:
        if not (1.0 < self.p < self.q < np.inf):
            raise ValueError(f"need 1 < p < q, got p={self.p}, q={self.q}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"need gamma in (0,1), got {self.gamma}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"need integer dim >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if not (self.radius > 0.0):
            raise ValueError(f"need radius > 0, got {self.radius}")
        if not (self.lam >= 0.0):
            raise ValueError(f"need lambda >= 0, got {self.lam}")
        # the radial cutoff construction needs the collar [eps, R] to be
        # narrower than 1; equivalently R <= 1 + N/(q-1)
        rmax = 1.0 + self.dim / (self.q - 1.0)
        if self.radius > rmax * (1.0 + 1e-12):
            raise InfeasibleGeometry(
                f"radius {self.radius} exceeds 1 + N/(q-1) = {rmax}"
            )

    def with_lam(self, lam: float) -> "Params":
        return dataclasses.replace(self, lam=lam)


def lpq_scalar(t, params: Params, alpha: float = 1.0, beta: float = 1.0):
    """alpha|t|^{p-2}t + beta|t|^{q-2}t, continued by 0 at t = 0.

    Since p-1 > 0 the map has no singularity at the origin even for
    p < 2; sign(t)|t|^{p-1} realizes the continuous continuation.
    Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    at = np.abs(t_arr)
    out = np.sign(t_arr) * (alpha * at ** (params.p - 1.0) + beta * at ** (params.q - 1.0))
    return float(out) if t_arr.ndim == 0 else out


def lpq_derivative(t, params: Params, alpha: float = 1.0, beta: float = 1.0, floor: float = 0.0):
    """d/dt of lpq_scalar.  `floor` clips |t| from below (Jacobian regularization
    for p < 2; the residual itself is never clipped)."""
    at = np.maximum(np.abs(np.asarray(t, dtype=float)), floor)
    out = alpha * (params.p - 1.0) * at ** (params.p - 2.0) + beta * (params.q - 1.0) * at ** (
        params.q - 2.0
    )
    return float(out) if np.ndim(t) == 0 else out


def _inverse_positive(s: np.ndarray, params: Params, alpha: float, beta: float,
                      rtol: float, max_iter: int) -> np.ndarray:
    """Solve alpha t^{p-1} + beta t^{q-1} = s elementwise for s > 0, t > 0."""
    p1 = params.p - 1.0
    q1 = params.q - 1.0
    # bracket: with t1 = (s/2a)^{1/(p-1)}, t2 = (s/2b)^{1/(q-1)}, the root lies in
    # [min(t1,t2), max(t1,t2)] because each endpoint contributes exactly s/2
    # through its own term and the map is strictly increasing.
    t1 = (s / (2.0 * alpha)) ** (1.0 / p1)
    t2 = (s / (2.0 * beta)) ** (1.0 / q1)
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)

    def F(t):
        return alpha * t ** p1 + beta * t ** q1

    # geometric bisection: the bracket ratio can be astronomically wide for
    # extreme s, but its logarithm shrinks by half each step
    for _ in range(90):
        mid = np.sqrt(lo * hi)
        high = F(mid) > s
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
        if np.max((hi - lo) / np.maximum(hi, 1e-300)) < 1e-3:
            break
    # safeguarded Newton polish inside the bracket
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = F(t) - s
        high = f > 0
        hi = np.where(high, t, hi)
        lo = np.where(high, lo, t)
        df = alpha * p1 * t ** (p1 - 1.0) + beta * q1 * t ** (q1 - 1.0)
        step = f / df
        t_new = t - step
        bad = (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        if np.max(np.abs(t_new - t) / np.maximum(t_new, 1e-300)) < rtol:
            t = t_new
            break
        t = t_new
    resid = np.abs(F(t) - s) / np.maximum(1.0, np.abs(s))
    if np.max(resid) > 1e-8:
        raise ConvergenceFailure(
            f"scalar inverse stalled: worst relative residual {np.max(resid):.3e}"
        )
    return t


def lpq_inverse(s, params: Params, alpha: float = 1.0, beta: float = 1.0,
                rtol: float = 1e-12, max_iter: int = 60):
    """Inverse of the (weighted) scalar map; odd, strictly increasing.

    Bracketed geometric bisection refined by safeguarded Newton.  For
    s >= 0 the result also satisfies lpq_inverse(s) <= (s/beta)^{1/(q-1)}
    (the q-term alone already overshoots s at that point).
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("weights must be positive")
    s_arr = np.asarray(s, dtype=float)
    scalar_in = s_arr.ndim == 0
    s_flat = np.atleast_1d(s_arr).astype(float)
    out = np.zeros_like(s_flat)
    pos = s_flat > 0.0
    neg = s_flat < 0.0
    if np.any(pos):
        out[pos] = _inverse_positive(s_flat[pos], params, alpha, beta, rtol, max_iter)
    if np.any(neg):
        out[neg] = -_inverse_positive(-s_flat[neg], params, alpha, beta, rtol, max_iter)
    if scalar_in:
        return float(out[0])
    return out.reshape(s_arr.shape)


def simon_constant(q: float) -> float:
    """The monotonicity-gap constant c(q): 2^{2-q} for q >= 2, q-1 below."""
    if q <= 1.0:
        raise ValueError("need q > 1")
    return 2.0 ** (2.0 - q) if q >= 2.0 else q - 1.0


def _phi(w: np.ndarray, q: float) -> np.ndarray:
    """|w|^{q-2} w for row vectors w (norm taken along the last axis)."""
    nw = np.linalg.norm(w, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(nw > 0.0, nw ** (q - 2.0), 0.0)
    # q > 1 so |w|^{q-2} w -> 0 as w -> 0 even when q < 2
    return w * scale


def simon_gap(u, v, q: float):
    """Two-sided data for the vector monotonicity inequality.

    Returns (lhs, rhs) with
        lhs = <|u|^{q-2}u - |v|^{q-2}v, u - v>,
        rhs = c(q)|u-v|^q                      for q >= 2,
        rhs = c(q)|u-v|^2 / (|u|+|v|)^{2-q}    for 1 < q < 2.
    The contract under test everywhere is lhs >= rhs.  Accepts a single
    pair (1-D arrays) or batches (2-D arrays, one pair per row).

    Raises DegenerateInput when q < 2 and some pair has u = v = 0: the
    right-hand side is 0/0 there and only the convention 0 >= 0 applies.
    """
    if q <= 1.0:
        raise ValueError("need q > 1")
    u_arr = np.asarray(u, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    single = u_arr.ndim == 1
    U = np.atleast_2d(u_arr)
    V = np.atleast_2d(v_arr)
    if U.shape != V.shape:
        raise ValueError("u and v must have matching shapes")
    diff = U - V
    lhs = np.sum((_phi(U, q) - _phi(V, q)) * diff, axis=-1)
    d = np.linalg.norm(diff, axis=-1)
    c = simon_constant(q)
    if q >= 2.0:
        rhs = c * d ** q
    else:
        nsum = np.linalg.norm(U, axis=-1) + np.linalg.norm(V, axis=-1)
        degenerate = nsum == 0.0
        if np.any(degenerate):
            raise DegenerateInput(
                "u = v = 0 with q < 2: gap undefined (convention 0 >= 0 applies)"
            )
        rhs = c * d ** 2 / nsum ** (2.0 - q)
    if single:
        return float(lhs[0]), float(rhs[0])
    return lhs, rhs


def simon_gap_sum(u, v, q: float):
    """Aggregated (integral-form) monotonicity gap over a batch of pairs.

    For 1 < q < 2 a Hoelder step with splitting exponent q(2-q)/2 turns the
    pointwise bound into

        sum lhs_i >= c(q) * (sum |u_i-v_i|^q)^{2/q} / (sum (|u_i|+|v_i|)^q)^{(2-q)/q},

    which is the two-point specialization of the gradient-integral
    inequality.  For q >= 2 the pointwise bound simply sums.  Returns the
    aggregated (lhs, rhs).
    """
    if q <= 1.0:
        raise ValueError("need q > 1")
    U = np.atleast_2d(np.asarray(u, dtype=float))
    V = np.atleast_2d(np.asarray(v, dtype=float))
    if U.shape != V.shape:
        raise ValueError("u and v must have matching shapes")
    diff = U - V
    lhs = float(np.sum((_phi(U, q) - _phi(V, q)) * diff))
    d = np.linalg.norm(diff, axis=-1)
    c = simon_constant(q)
    if q >= 2.0:
        return lhs, float(c * np.sum(d ** q))
    nsum = np.linalg.norm(U, axis=-1) + np.linalg.norm(V, axis=-1)
    denom = float(np.sum(nsum ** q))
    if denom == 0.0:
        raise DegenerateInput(
            "all pairs are (0,0) with q < 2: aggregated gap undefined"
        )
    num = float(np.sum(d ** q))
    rhs = c * num ** (2.0 / q) / denom ** ((2.0 - q) / q)
    return lhs, rhs
