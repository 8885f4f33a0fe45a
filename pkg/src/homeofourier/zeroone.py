"""The averaging equation p(x, y) = avg_{t in [x, y]} p(x, t) p(t, y) on a grid.

p lives on the upper triangle of an (M+1) x (M+1) array with x_a = a / M.
The diagonal stores the convention p(x, x) = 1.  The trapezoid average of
p(x, t) p(t, y) needs the integrand at t = x and t = y, where p(x, t) and
p(t, y) are evaluated as one-sided limits along the row or column (linear
extrapolation from the two nearest off-diagonal nodes), not as the diagonal
value.  With that choice a constant c averages to exactly c^2 and multiplicative
grids are fixed points up to O(h^2).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .homeo import DomainError
from .rng import RandomSource


@dataclass(frozen=True, eq=False)
class GridBivariate:
    values: np.ndarray  # (M+1, M+1); entries below the diagonal are unused and zero

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
            raise ValueError("values must be a square array of side M+1 >= 2")
        v = np.triu(v)
        up = v[np.triu_indices(v.shape[0])]
        if np.any(~np.isfinite(up)) or np.any(up < 0.0) or np.any(up > 1.0):
            raise ValueError("p must lie in [0, 1]")
        if np.any(np.diag(v) != 1.0):
            raise ValueError("p(x, x) must equal 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.shape[0] - 1

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M

    def to_csv(self, header_lines: list[str] | None = None) -> str:
        buf = io.StringIO()
        for line in header_lines or []:
            buf.write(f"# {line}\n")
        buf.write("a,b,x,y,p\n")
        M = self.M
        a, b = np.triu_indices(M + 1)
        for ai, bi in zip(a, b):
            buf.write(f"{ai},{bi},{ai / M:.17g},{bi / M:.17g},{self.values[ai, bi]:.17g}\n")
        return buf.getvalue()


def _from_function(M: int, fn) -> GridBivariate:
    x = np.arange(M + 1) / M
    v = np.triu(fn(x[:, None], x[None, :]))
    np.fill_diagonal(v, 1.0)
    return GridBivariate(v)


def constant(M: int, c: float) -> GridBivariate:
    if not 0.0 <= c <= 1.0:
        raise ValueError("constant must lie in [0, 1]")
    return _from_function(M, lambda x, y: np.full(np.broadcast(x, y).shape, c))


def make_multiplicative(q) -> GridBivariate:
    """p(x_a, x_b) = q_b / q_a for a positive non-increasing grid function q."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.size < 2:
        raise ValueError("q must be a 1-d grid function with M+1 >= 2 values")
    if np.any(q <= 0.0) or np.any(~np.isfinite(q)):
        raise DomainError("q must be positive")
    if np.any(np.diff(q) > 0.0):
        raise DomainError("q must be non-increasing")
    v = np.triu(q[None, :] / q[:, None])
    np.fill_diagonal(v, 1.0)
    return GridBivariate(np.minimum(v, 1.0))


def exponential(M: int, rate: float = 1.0) -> GridBivariate:
    return make_multiplicative(np.exp(-rate * np.arange(M + 1) / M))


def half_line_example(M: int) -> GridBivariate:
    """p = 1 except p(x, 1/2) = 0 for x < 1/2; solves the equation off a null set."""
    if M % 2:
        raise ValueError("M must be even so that 1/2 is a grid point")
    v = np.triu(np.ones((M + 1, M + 1)))
    v[: M // 2, M // 2] = 0.0
    return GridBivariate(v)


def random_monotone(M: int, seed: int = 0) -> GridBivariate:
    """p(x, y) = F(y - x) with F random, decreasing, F(0) = 1; not multiplicative."""
    u = RandomSource(seed).child(0x2E).uniform(M + 1)
    drops = u[1:] / u[1:].sum() * (1.0 - u[0])
    F = np.concatenate([[1.0], 1.0 - np.cumsum(drops)])
    F = np.clip(F, 0.0, 1.0)
    idx = np.arange(M + 1)
    d = np.clip(idx[None, :] - idx[:, None], 0, M)
    return GridBivariate(np.triu(F[d]))


def _edge_limits(P: np.ndarray):
    """One-sided limits p(x_a, x_a+) per row and p(x_b-, x_b) per column."""
    M = P.shape[0] - 1
    L = np.ones(M + 1)
    R = np.ones(M + 1)
    a = np.arange(M - 1)
    L[a] = 2.0 * P[a, a + 1] - P[a, a + 2]
    b = np.arange(2, M + 1)
    R[b] = 2.0 * P[b - 1, b] - P[b - 2, b]
    # the last row and first column have a single off-diagonal neighbour;
    # continue the limits themselves linearly instead
    if M >= 3:
        L[M - 1] = 2.0 * L[M - 2] - L[M - 3]
        R[1] = 2.0 * R[2] - R[3]
    else:
        L[M - 1] = P[M - 1, M]
        R[1] = P[0, 1]
    return np.clip(L, 0.0, 1.0), np.clip(R, 0.0, 1.0)


def average(p: GridBivariate) -> np.ndarray:
    """Trapezoid average of p(x, t) p(t, y) over t in [x, y] for all a < b."""
    P = p.values
    M = p.M
    S = np.triu(P, 1)
    interior = S @ S  # sum over a < c < b of p(a, c) p(c, b)
    L, R = _edge_limits(P)
    idx = np.arange(M + 1)
    gap = (idx[None, :] - idx[:, None]).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = (interior + 0.5 * P * (L[:, None] + R[None, :])) / gap
    avg = np.triu(np.nan_to_num(avg), 1)
    return avg


def residual(p: GridBivariate, min_gap: float = 0.0) -> float:
    """max over a < b with x_b - x_a >= min_gap of |p - trapezoid average|."""
    M = p.M
    idx = np.arange(M + 1)
    gap = idx[None, :] - idx[:, None]
    mask = (gap >= 1) & (gap * p.h >= min_gap - 1e-12)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(p.values - average(p))[mask]))


def iterate(p: GridBivariate) -> GridBivariate:
    v = np.clip(average(p), 0.0, 1.0)
    np.fill_diagonal(v, 1.0)
    return GridBivariate(v)


def defect(p: GridBivariate) -> float:
    """max over a <= b <= c of |p(a, c) - p(a, b) p(b, c)|."""
    P = p.values
    M = p.M
    worst = 0.0
    for b in range(M + 1):
        left = P[: b + 1, b]
        right = P[b, b:]
        d = np.abs(P[: b + 1, b:] - left[:, None] * right[None, :])
        worst = max(worst, float(d.max()))
    return worst


@dataclass
class MonotonicityReport:
    y_violations: int  # p(a, b+1) > p(a, b)
    x_violations: int  # p(a+1, b) < p(a, b)
    comparisons: int
    y_lines: list[int]  # columns b with p(a, b) < p(a, b+1) for some a

    @property
    def violations(self) -> int:
        return self.y_violations + self.x_violations

    @property
    def fraction(self) -> float:
        return self.violations / self.comparisons if self.comparisons else 0.0


def monotonicity_check(p: GridBivariate, tol: float = 0.0) -> MonotonicityReport:
    """Count grid violations of 'decreasing in y' and 'increasing in x'."""
    P = p.values
    M = p.M
    a, b = np.triu_indices(M + 1)
    ys = b < M
    dy = P[a[ys], b[ys] + 1] - P[a[ys], b[ys]]
    ybad = dy > tol
    xs = a < b
    dx = P[a[xs] + 1, b[xs]] - P[a[xs], b[xs]]
    xbad = dx < -tol
    lines = sorted({int(c) for c in b[ys][ybad]})
    return MonotonicityReport(int(ybad.sum()), int(xbad.sum()), int(ys.sum() + xs.sum()), lines)


def trace(p: GridBivariate, iters: int, min_gap: float = 0.0):
    """Iterate and record {iter, residual, defect, violations, mean} before each step and at the end."""
    out = []
    for k in range(iters + 1):
        mono = monotonicity_check(p)
        iu = np.triu_indices(p.M + 1, 1)
        out.append({"iter": k, "residual": residual(p, min_gap), "defect": defect(p),
                    "violations": mono.violations, "mean": float(p.values[iu].mean())})
        if k < iters:
            p = iterate(p)
    return out, p


def parse_init(spec: str, M: int, seed: int = 0) -> GridBivariate:
    """const:c | exp[:rate] | halfline | random[:seed]."""
    name, _, arg = spec.partition(":")
    if name == "const":
        return constant(M, float(arg))
    if name == "exp":
        return exponential(M, float(arg) if arg else 1.0)
    if name == "halfline":
        return half_line_example(M)
    if name == "random":
        return random_monotone(M, int(arg) if arg else seed)
    raise ValueError(f"unknown initial grid {spec!r}")
