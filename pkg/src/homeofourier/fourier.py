"""Dirichlet kernel quadrature.

S_n(f; x) = int_0^1 D_n(x - t) f(t) dt with D_n(x) = sin((2n+1) pi x) / sin(pi x),
computed by composite Simpson.  Node counts are tied to the kernel: at least
``points_per_oscillation`` nodes per lobe of sin((2n+1) pi x), i.e. at least
ppo * (2n+1) nodes over a period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .homeo import DyadicMap
from .testfn import ConstructionError, Oscillatory


class QuadratureConfigError(ValueError):
    pass


def dirichlet(n: int, x):
    """D_n(x), 1-periodic, with the removable value 2n+1 at the integers."""
    if n < 0:
        raise ValueError("kernel order must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    u = x - np.rint(x)  # (2n+1) is odd so D_n has period 1
    m = 2 * n + 1
    den = np.sin(np.pi * u)
    # below |m u| = 1e-8 the limit m is exact to ~1.6e-16 relative; subnormal u loses all digits
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.abs(u) * m < 1e-8, float(m), np.sin(m * np.pi * u) / den)
    return out if out.ndim else float(out)


dirichlet_eval = dirichlet


@dataclass(frozen=True)
class QuadratureSpec:
    points_per_oscillation: int = 8
    scheme: str = "composite-simpson"

    def __post_init__(self):
        if self.points_per_oscillation < 8:
            raise QuadratureConfigError("points_per_oscillation must be >= 8")
        if self.scheme != "composite-simpson":
            raise QuadratureConfigError(f"unsupported scheme {self.scheme!r}")

    def panels(self, length: float, frequency: float) -> int:
        """Even number of Simpson intervals for a segment.

        ``frequency`` counts lobes per unit length (2n+1 for the kernel alone).
        """
        m = int(math.ceil(self.points_per_oscillation * frequency * length))
        m = max(m, 2)
        return m + (m & 1)

    def tol(self, n: int, sup_norm: float = 1.0) -> float:
        """A priori error scale for a unit-period integrand resolved like the kernel."""
        return sup_norm * (2 * n + 1) * (math.pi / self.points_per_oscillation) ** 4 / 180.0


def simpson_uniform(y: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    y = np.moveaxis(np.asarray(y), axis, -1)
    if (y.shape[-1] - 1) % 2:
        raise QuadratureConfigError("Simpson needs an even number of intervals")
    return h / 3.0 * (y[..., 0] + y[..., -1] + 4.0 * y[..., 1:-1:2].sum(-1)
                      + 2.0 * y[..., 2:-1:2].sum(-1))


def _local_frequency(f, a: float, b: float) -> float:
    freq = getattr(f, "frequency_on", None)
    if freq is not None:
        return float(freq(a, b))
    return float(getattr(f, "degree", 0))


def segment_rule(edges: np.ndarray, panels_per_segment):
    """Nodes and weights of composite Simpson over consecutive segments.

    Shared segment ends appear once per segment, so nodes may repeat.
    """
    edges = np.asarray(edges, dtype=np.float64)
    m = np.broadcast_to(np.asarray(panels_per_segment, dtype=np.int64), (len(edges) - 1,))
    keep = edges[1:] > edges[:-1]
    a, b, m = edges[:-1][keep], edges[1:][keep], m[keep]
    if a.size == 0:
        return np.empty(0), np.empty(0)
    if np.all(m == m[0]):
        u = np.arange(m[0] + 1) / m[0]
        t = (a[:, None] + (b - a)[:, None] * u[None, :]).ravel()
        w = np.full(m[0] + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w = ((b - a)[:, None] / m[0] / 3.0 * w[None, :]).ravel()
        return t, w
    nodes, weights = [], []
    for lo, hi, mm in zip(a, b, m):
        t = np.linspace(lo, hi, mm + 1)
        w = np.full(mm + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        nodes.append(t)
        weights.append(w * (hi - lo) / mm / 3.0)
    return np.concatenate(nodes), np.concatenate(weights)


def _edges(f, a: float, b: float) -> np.ndarray:
    bp = np.asarray(f.breakpoints(), dtype=np.float64) if hasattr(f, "breakpoints") else np.empty(0)
    bp = bp[(bp > a) & (bp < b)]
    return np.unique(np.concatenate([[a], bp, [b]]))


def interval_integral(f, a: float, b: float, n: int, q: QuadratureSpec = QuadratureSpec(),
                      x: float = 0.0) -> float:
    """int_a^b f(t) D_n(x - t) dt."""
    if a > b:
        raise ValueError(f"interval [{a}, {b}] is reversed")
    if a == b:
        return 0.0
    edges = _edges(f, a, b)
    m = [q.panels(hi - lo, 2 * n + 1 + 2 * _local_frequency(f, lo, hi))
         for lo, hi in zip(edges[:-1], edges[1:])]
    t, w = segment_rule(edges, np.array(m))
    return float(np.sum(w * dirichlet(n, x - t) * np.asarray(f(t))))


def partial_sum(f, n: int, x: float = 0.0, q: QuadratureSpec = QuadratureSpec(),
                min_nodes: int | None = None) -> float:
    """S_n(f; x) by quadrature over one period."""
    if n < 0:
        raise ValueError("kernel order must be >= 0")
    total = _edges(f, 0.0, 1.0)
    m = [q.panels(hi - lo, 2 * n + 1 + 2 * _local_frequency(f, lo, hi))
         for lo, hi in zip(total[:-1], total[1:])]
    if min_nodes is not None and sum(m) + 1 < min_nodes:
        raise QuadratureConfigError(f"{sum(m) + 1} nodes is below the minimum {min_nodes}")
    t, w = segment_rule(total, np.array(m))
    return float(np.sum(w * dirichlet(n, x - t) * np.asarray(f(t))))


def cycle_profile(f):
    """Breakpoints B of f on [0, 1], the frequency on each gap, and cumulative cycles at B."""
    bp = np.asarray(f.breakpoints(), dtype=np.float64) if hasattr(f, "breakpoints") else np.empty(0)
    B = np.unique(np.concatenate([[0.0, 1.0], bp[(bp > 0.0) & (bp < 1.0)]]))
    mid = 0.5 * (B[:-1] + B[1:])
    freq = np.array([_local_frequency(f, m, m) for m in mid])
    C = np.concatenate([[0.0], np.cumsum(freq * np.diff(B))])
    return B, freq, C


class ComposedRule:
    """Quadrature of int D_m(x - t) f(phi(t)) dt over [a, b] for phis of one depth.

    Every dyadic point of the grid is a node and each dyadic cell carries
    ``2 sub`` Simpson panels, enough for the kernel of the largest order.
    Kernel weights are computed once and reused across Monte Carlo samples.
    Cells on which f(phi) oscillates faster than that (phi stretches the
    cell over many cycles of f), or whose image holds a breakpoint of f, are
    re-integrated per sample with a finer rule split at the preimages of f's
    breakpoints.
    """

    def __init__(self, n: int, depth: int, a: float = 0.0, b: float = 1.0, x: float = 0.0,
                 q: QuadratureSpec = QuadratureSpec(), sub: int | None = None, orders=None):
        if a > b:
            raise ValueError("interval is reversed")
        self.orders = tuple(int(m) for m in orders) if orders is not None else (int(n),)
        if min(self.orders) < 0:
            raise ValueError("kernel order must be >= 0")
        n = max(self.orders)
        self.n, self.depth, self.a, self.b, self.x, self.q = n, depth, a, b, x, q
        cells = 1 << depth
        if sub is None:
            sub = max(1, math.ceil(q.points_per_oscillation * (2 * n + 1) / (2 * cells)))
        self.sub = sub
        grid = np.arange(cells + 1) / cells
        inner = grid[(grid > a) & (grid < b)]
        edges = np.concatenate([[a], inner, [b]]) if b > a else np.array([a, b])
        self.t, self.base = segment_rule(edges, 2 * sub)
        self.kernels = np.stack([dirichlet(m, x - self.t) for m in self.orders])
        self._edges = edges if b > a else np.array([a])
        self._per = 2 * sub + 1
        self._ecell, self._efrac = self._locate(self._edges)
        self._cell, self._frac = self._locate(self.t)

    def _locate(self, t):
        cells = 1 << self.depth
        scaled = t * float(cells)
        cell = np.minimum(np.floor(scaled).astype(np.int64), cells - 1)
        return cell, scaled - cell

    @property
    def weights(self) -> np.ndarray:
        """Simpson weights times the kernel of the first order."""
        return self.base * self.kernels[0]

    @property
    def segments(self) -> int:
        return max(len(self._edges) - 1, 0)

    def segment_mask(self, intervals) -> np.ndarray:
        """Segments inside a union of [lo, hi] windows whose ends are grid points of the rule."""
        e = self._edges
        mask = np.zeros(self.segments, dtype=bool)
        for lo, hi in intervals:
            if lo not in e or hi not in e:
                raise ValueError("window ends must be dyadic grid points of the rule")
            mask |= (e[:-1] >= lo) & (e[1:] <= hi)
        return mask

    def window(self, a: float, b: float) -> np.ndarray:
        """Weights (first order) restricted to [a, b]."""
        m = self.segment_mask([(a, b)])
        return np.where(np.repeat(m, self._per), self.weights, 0.0)

    def phi_at_nodes(self, values: np.ndarray) -> np.ndarray:
        """phi at the nodes for one grid (1-d) or many grids (2-d, one per row)."""
        if self.segments == 1 << self.depth:
            # segments are the cells: broadcast instead of gathering
            lo, hi = values[..., :-1, None], values[..., 1:, None]
            u = np.linspace(0.0, 1.0, self._per)
            out = np.minimum(lo + u * (hi - lo), hi)
            return out.reshape(values.shape[:-1] + (-1,))
        return self._interp(values, self._cell, self._frac)

    @staticmethod
    def _interp(values, cell, frac):
        lo = values[..., cell]
        hi = values[..., cell + 1]
        return np.clip(lo + frac * (hi - lo), lo, hi)

    def _refine(self, f, values, profile):
        """Segments needing more panels and their fine integrals, shape (orders, bad)."""
        B, freq, C = profile
        e = self._edges
        pe = self._interp(values, self._ecell, self._efrac)
        length = np.diff(e)
        cyc = np.interp(pe[1:], B, C) - np.interp(pe[:-1], B, C)
        ppo = self.q.points_per_oscillation
        need = ppo * ((2 * self.n + 1) * length + 2.0 * cyc)
        # cells whose image contains a kink of f are split there as well
        kinked = np.searchsorted(B, pe[1:], side="left") > np.searchsorted(B, pe[:-1], side="right")
        bad = np.flatnonzero((need > 2 * self.sub) | kinked)
        if bad.size == 0:
            return bad, None
        u0, u1 = pe[bad], pe[bad + 1]
        t0, tl = e[bad], length[bad]
        k0 = np.searchsorted(B, u0, side="right")
        k1 = np.searchsorted(B, u1, side="left")
        count = np.maximum(k1 - k0, 0) + 1  # pieces per bad segment
        first = np.repeat(np.cumsum(count) - count, count)
        j = np.arange(count.sum()) - first
        seg = np.repeat(np.arange(bad.size), count)
        last = j == count[seg] - 1
        lo_u = np.where(j == 0, u0[seg], B[np.minimum(k0[seg] + j - 1, B.size - 1)])
        hi_u = np.where(last, u1[seg], B[np.minimum(k0[seg] + j, B.size - 1)])
        du = u1 - u0
        scale = np.where(du > 0, tl / np.where(du > 0, du, 1.0), 0.0)[seg]
        lo_t = t0[seg] + (lo_u - u0[seg]) * scale
        hi_t = np.where(last, (t0 + tl)[seg], t0[seg] + (hi_u - u0[seg]) * scale)
        fr = freq[np.clip(k0[seg] - 1 + j, 0, freq.size - 1)]
        m = np.ceil(ppo * ((2 * self.n + 1) * (hi_t - lo_t) + 2.0 * fr * (hi_u - lo_u)))
        m = np.maximum(m.astype(np.int64), 2)
        m += m & 1
        total = int((m + 1).sum())
        if total > 50_000_000:
            raise QuadratureConfigError(f"refinement needs {total} nodes; lower ppo or depth")
        piece = np.repeat(np.arange(m.size), m + 1)
        i = np.arange(total) - np.repeat(np.cumsum(m + 1) - (m + 1), m + 1)
        frac = i / m[piece]
        t = lo_t[piece] + frac * (hi_t - lo_t)[piece]
        u = np.clip(lo_u[piece] + frac * (hi_u - lo_u)[piece], 0.0, 1.0)
        w = np.where((i == 0) | (i == m[piece]), 1.0, np.where(i % 2 == 1, 4.0, 2.0))
        w = w * ((hi_t - lo_t) / m / 3.0)[piece]
        g = w * np.asarray(f(u), dtype=np.float64)
        starts = np.searchsorted(seg[piece], np.arange(bad.size))
        fine = np.stack([np.add.reduceat(dirichlet(o, self.x - t) * g, starts)
                         for o in self.orders])
        return bad, fine

    def integrals(self, f, values: np.ndarray, masks: np.ndarray | None = None,
                  profile=None) -> np.ndarray:
        """Integrals per (order, window) for one grid; ``masks`` is (windows, segments)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != ((1 << self.depth) + 1,):
            raise ValueError("grid length does not match the rule")
        if masks is None:
            masks = np.ones((1, self.segments), dtype=bool)
        masks = np.atleast_2d(masks).astype(np.float64)
        if self.segments == 0:
            return np.zeros((len(self.orders), masks.shape[0]))
        G = self.base * np.asarray(f(self.phi_at_nodes(values)), dtype=np.float64)
        if np.all(masks == 1.0):
            out = np.repeat((self.kernels @ G)[:, None], masks.shape[0], axis=1)
        else:
            # every segment carries the same number of nodes
            per_seg = (self.kernels * G).reshape(len(self.orders), self.segments, self._per).sum(-1)
            out = per_seg @ masks.T
        bad, fine = self._refine(f, values, cycle_profile(f) if profile is None else profile)
        if bad.size:
            idx = (bad[:, None] * self._per + np.arange(self._per)[None, :])
            coarse = np.einsum("jbk,bk->jb", self.kernels[:, idx], G[idx])
            out += (fine - coarse) @ masks[:, bad].T
        return out

    def __call__(self, f, phi: DyadicMap) -> float:
        if phi.depth != self.depth:
            raise ValueError("phi depth does not match the rule")
        return float(self.integrals(f, phi.values)[0, 0])

    def batch(self, f, values: np.ndarray) -> np.ndarray:
        """First-order integrals for a stack of grids, shape (m, 2^depth + 1) -> (m,)."""
        values = np.atleast_2d(values)
        profile = cycle_profile(f)
        return np.array([self.integrals(f, v, profile=profile)[0, 0] for v in values])


def composed_integral(f, phi: DyadicMap, n: int, a: float = 0.0, b: float = 1.0,
                      x: float = 0.0, q: QuadratureSpec = QuadratureSpec()) -> float:
    return ComposedRule(n, phi.depth, a, b, x, q)(f, phi)


def composed_partial_sum(f, phi: DyadicMap, n: int, x: float = 0.0,
                         q: QuadratureSpec = QuadratureSpec()) -> float:
    """S_n(f o phi; x)."""
    return composed_integral(f, phi, n, 0.0, 1.0, x, q)


def composed_partial_sums(f, phi: DyadicMap, ns, x: float = 0.0,
                          q: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """S_n(f o phi; x) for every n in ``ns`` on one node set sized for max(ns)."""
    rule = ComposedRule(0, phi.depth, 0.0, 1.0, x, q, orders=ns)
    return rule.integrals(f, phi.values)[:, 0]


def kernel_diff_max(m1: int, m2: int, grid: int = 100_000) -> float:
    """max over a uniform grid of [0, 1] of |D_m1 - D_m2|; at most 2 (m1 - m2)."""
    if not m1 >= m2 >= 0:
        raise ValueError("need m1 >= m2 >= 0")
    x = np.linspace(0.0, 1.0, grid + 1)
    return float(np.max(np.abs(dirichlet(m1, x) - dirichlet(m2, x))))


def kernel_diff_identity(m1: int, m2: int, x):
    """2 cos((m1+m2+1) pi x) sin((m1-m2) pi x) / sin(pi x)."""
    x = np.asarray(x, dtype=np.float64)
    u = x - np.rint(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(u == 0.0, 2.0 * (m1 - m2),
                        2 * np.cos((m1 + m2 + 1) * np.pi * u) * np.sin((m1 - m2) * np.pi * u)
                        / np.sin(np.pi * u))


@dataclass(frozen=True)
class PiecewiseLinear:
    xs: np.ndarray
    ys: np.ndarray

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=np.float64), self.xs, self.ys)
        return out if np.ndim(out) else float(out)

    @property
    def slopes(self) -> np.ndarray:
        dx = np.diff(self.xs)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(dx > 0, np.diff(self.ys) / np.where(dx > 0, dx, 1.0), 0.0)


@dataclass(frozen=True)
class AlignedScene:
    """A piecewise-linear tau on [2^-i, 2^-j] with g(tau(x)) = sin((2r+1) pi x) on [alpha, beta]."""

    n: int
    r: int
    i: int
    j: int
    phi_i: float
    phi_j: float
    s0: float
    k: int
    alpha: float
    beta: float
    tau: PiecewiseLinear
    g: Oscillatory = field(repr=False)

    def identity_error(self, points: int = 100_001) -> float:
        if self.beta <= self.alpha:
            return 0.0
        x = np.linspace(self.alpha, self.beta, points)
        return float(np.max(np.abs(self.g(self.tau(x)) - np.sin((2 * self.r + 1) * np.pi * x))))


def build_aligned_scene(n: int, k: int | None, s0: float, i: int, j: int,
                        phi_i: float, phi_j: float, *, K1: float = 6.0,
                        ratio_exponent: float = 4.0, depth_K: int | None = None) -> AlignedScene:
    """Alignment construction on [2^-i, 2^-j] for the oscillatory g = f_n(. / s0).

    ``ratio_exponent`` is the upper exponent e in n^2 < phi_j / phi_i < n^e.
    """
    def fail(msg):
        raise ConstructionError(msg)

    if n < 4:
        fail("alpha <= beta requires n >= 4")
    if not i > j >= 0:
        fail("need i > j >= 0")
    if not 4 * n < 2 ** (i - j) < n ** K1:
        fail(f"need 4n < 2^(i-j) < n^K1, got 2^(i-j) = {2 ** (i - j)}")
    if not 0.0 < phi_i < phi_j <= 1.0:
        fail("need 0 < phi_i < phi_j <= 1")
    if not n ** 2 < phi_j / phi_i < n ** ratio_exponent:
        fail(f"need n^2 < phi_j/phi_i < n^{ratio_exponent}, got {phi_j / phi_i:.6g}")
    if not 0.0 < s0 <= 1.0:
        fail("s0 must lie in (0, 1]")

    def inside(kk):
        return phi_i <= s0 * float(n) ** (-kk) and s0 * float(n) ** (-kk + 1) <= phi_j

    if k is None:
        cand = [kk for kk in range(1, 2048) if inside(kk)]
        if not cand:
            fail("no piece [s0 n^-k, s0 n^-k+1] lies inside [phi_i, phi_j]")
        k = cand[0]
    elif not inside(k):
        fail(f"[s0 n^-{k}, s0 n^-{k - 1}] is not inside [phi_i, phi_j]")

    g = Oscillatory(n, max(k, depth_K or 0), s0)
    psi = g.psi[k - 1]
    r = 2 * n * 2 ** j
    alpha = 4.0 / (2 * r + 1)
    beta = (2 * n - 4.0) / (2 * r + 1)
    base = s0 * float(n) ** (-k)
    xs = np.array([2.0 ** -i, alpha, beta, 2.0 ** -j])
    ys = np.array([phi_i, (3 - psi) * base, (n - 1 - psi) * base, phi_j])
    if not (np.all(np.diff(xs) >= 0) and np.all(np.diff(ys) >= 0)):
        fail("tau nodes are not ordered")
    return AlignedScene(n, r, i, j, phi_i, phi_j, s0, k, alpha, beta,
                        PiecewiseLinear(xs, ys), g)


def default_scene(n: int, s0: float = 1.0) -> AlignedScene:
    """An admissible scene with j = 1, phi_j = 1/2 and phi_i = 0.4 n^-2 s0."""
    j = 1
    i = j + int(math.floor(math.log2(4 * n))) + 1
    return build_aligned_scene(n, None, s0, i, j, 0.4 * s0 * n ** -2.0, 0.5)


def aligned_integral(scene: AlignedScene, q: QuadratureSpec = QuadratureSpec()) -> float:
    """int_alpha^beta g(tau(x)) D_r(x) dx, i.e. int sin((2r+1) pi x) D_r over [alpha, beta]."""
    a, b = scene.alpha, scene.beta
    if b <= a:
        return 0.0
    m = q.panels(b - a, 2 * scene.r + 1)
    t, w = segment_rule(np.array([a, b]), np.array([m]))
    return float(np.sum(w * scene.g(scene.tau(t)) * dirichlet(scene.r, t)))
