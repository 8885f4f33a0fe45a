"""Dubins-Freedman random homeomorphism with base measure uniform on {x = 1/2}.

phi(0) = 0, phi(1) = 1 and, level by level,

    phi(k 2^-n) = phi((k-1) 2^-n) + X_{n,k} * (phi((k+1) 2^-n) - phi((k-1) 2^-n))

for odd k, with X_{n,k} independent uniforms.  X_{n,k} is read from lane ``n``,
position ``(k-1)/2`` of a :class:`~homeofourier.rng.RandomSource`, so a grid of
any depth, a refinement of it, and a single root-to-leaf path all see the same
variables.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .rng import KeyedStream, RandomSource, uniforms_at

MAX_RETRIES = 8


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DyadicMap:
    """Increasing grid values on {k 2^-depth}, linearly interpolated between."""

    depth: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != ((1 << self.depth) + 1,):
            raise ValueError(f"expected {(1 << self.depth) + 1} values, got {vals.shape}")
        if np.any(np.diff(vals) < 0):
            raise ValueError("grid values must be non-decreasing")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(len(self.values)) / float(1 << self.depth)

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def __call__(self, x):
        return evaluate(self, x)

    def inverse(self, y):
        return invert(self, y)

    def __eq__(self, other):
        return (type(self) is type(other) and self.depth == other.depth
                and np.array_equal(self.values, other.values))

    def to_csv(self, header_lines: list[str] | None = None) -> str:
        buf = io.StringIO()
        for line in header_lines or []:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "x", "phi_x"])
        for k, (x, v) in enumerate(zip(self.grid, self.values)):
            w.writerow([k, f"{x:.17g}", f"{v:.17g}"])
        return buf.getvalue()


class DyadicHomeomorphism(DyadicMap):
    """Sampled phi on the dyadic grid of a given depth; values[0]=0, values[-1]=1."""

    def __post_init__(self):
        super().__post_init__()
        if self.values[0] != 0.0 or self.values[-1] != 1.0:
            raise ValueError("a homeomorphism of [0,1] must fix 0 and 1")

    @classmethod
    def from_csv(cls, text: str) -> "DyadicHomeomorphism":
        rows = [r for r in csv.reader(l for l in text.splitlines() if l and not l.startswith("#"))]
        if rows[0] != ["k", "x", "phi_x"]:
            raise ValueError("bad homeomorphism CSV header")
        vals = np.array([float(r[2]) for r in rows[1:]])
        depth = int(round(math.log2(len(vals) - 1)))
        return cls(depth, vals)


class DyadicSegment(DyadicMap):
    """Affine copy a + (b - a) phi of a fresh homeomorphism."""

    @property
    def a(self) -> float:
        return float(self.values[0])

    @property
    def b(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class DyadicChain:
    """chain[m-1] = phi(2^-m), m = 1..i."""

    i: int
    chain: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.chain, dtype=np.float64)
        if c.shape != (self.i,):
            raise ValueError("chain length must equal i")
        if np.any((c <= 0.0) | (c >= 1.0)):
            raise ValueError("chain values must lie in (0, 1)")
        if np.any(np.diff(c) > 0.0):
            raise ValueError("chain must be decreasing")
        c.setflags(write=False)
        object.__setattr__(self, "chain", c)


@dataclass(frozen=True)
class HolderEnvelope:
    """P{r^K1 < phi(r) < r^K2} > 1 - C r^2, with K2 < 1 < K1."""

    K1: float = 6.0
    K2: float = 0.15
    C: float = 2.0

    def __post_init__(self):
        if not self.K2 < 1.0 < self.K1:
            raise ValueError("need K2 < 1 < K1")
        if not 0.0 < self.K2:
            raise ValueError("K2 must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")

    def inside(self, r, phi_r):
        r = np.asarray(r, dtype=float)
        return (r ** self.K1 < phi_r) & (phi_r < r ** self.K2)


def _split(lo, hi, x):
    mid = lo + x * (hi - lo)
    return mid, (mid <= lo) | (mid >= hi)


def _resolvable(lo, hi):
    return np.nextafter(lo, hi) < hi


def _retry_draws(rand, n, positions, attempt):
    if isinstance(rand, RandomSource):  # includes KeyedStream
        keys = np.array(rand.key, dtype=np.uint64)
        return uniforms_at(keys, n, positions, attempt)
    return np.array([rand.level_uniforms(n, int(p), 1, attempt)[0] for p in positions])


def _fill_levels(values: np.ndarray, depth: int, first: int, rand) -> None:
    """Fill levels first..depth of a grid whose coarser levels are set."""
    for n in range(first, depth + 1):
        step = 1 << (depth - n)
        lo = values[0:-1:2 * step]
        hi = values[2 * step::2 * step]
        mid, bad = _split(lo, hi, rand.level_uniforms(n))
        for attempt in range(1, MAX_RETRIES + 1):
            redo = np.flatnonzero(bad & _resolvable(lo, hi))
            if redo.size == 0:
                break
            m2, b2 = _split(lo[redo], hi[redo], _retry_draws(rand, n, redo, attempt))
            mid[redo] = m2
            bad[redo] = b2
        # no float strictly between lo and hi: keep the rounded point
        values[step::2 * step] = np.clip(mid, lo, hi)


def sample(depth: int, rand) -> DyadicHomeomorphism:
    if depth < 0:
        raise DomainError("depth must be >= 0")
    values = np.empty((1 << depth) + 1)
    values[0], values[-1] = 0.0, 1.0
    _fill_levels(values, depth, 1, rand)
    return DyadicHomeomorphism(depth, values)


def refine(phi: DyadicHomeomorphism, extra_depth: int, rand) -> DyadicHomeomorphism:
    if extra_depth < 0:
        raise DomainError("extra_depth must be >= 0")
    if extra_depth == 0:
        return phi
    depth = phi.depth + extra_depth
    values = np.empty((1 << depth) + 1)
    values[::1 << extra_depth] = phi.values
    _fill_levels(values, depth, phi.depth + 1, rand)
    return DyadicHomeomorphism(depth, values)


def evaluate(phi: DyadicMap, x):
    """Piecewise-linear interpolation of the grid values; exact at grid points."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    v = phi.values
    scaled = x * float(1 << phi.depth)
    k = np.minimum(np.floor(scaled).astype(np.int64), len(v) - 2)
    frac = scaled - k
    lo, hi = v[k], v[k + 1]
    out = np.clip(lo + frac * (hi - lo), lo, hi)
    return out if out.ndim else float(out)


def invert(phi: DyadicMap, y):
    """Generalised inverse: the x with evaluate(phi, x) = y (right end of flats)."""
    v = phi.values
    y = np.clip(np.asarray(y, dtype=np.float64), v[0], v[-1])
    k = np.clip(np.searchsorted(v, y, side="right") - 1, 0, len(v) - 2)
    lo, hi = v[k], v[k + 1]
    width = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(width > 0, (y - lo) / np.where(width > 0, width, 1.0), 0.0)
    frac = np.where(y == lo, 0.0, np.where(y == hi, 1.0, np.clip(frac, 0.0, 1.0)))
    out = (k + frac) / float(1 << phi.depth)
    return out if out.ndim else float(out)


def conditional_restrict(a: float, b: float, depth: int, rand) -> DyadicSegment:
    """phi restricted to a dyadic interval, given its end values a and b."""
    if not (0.0 <= a < b <= 1.0):
        raise DomainError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    base = sample(depth, rand)
    vals = np.clip(a + (b - a) * base.values, a, b)
    vals[0], vals[-1] = a, b
    return DyadicSegment(depth, vals)


def conditional_chain_sample(i: int, y: float, rand) -> DyadicChain:
    """(phi(1/2), ..., phi(2^-i)) conditioned on phi(2^-i) = y.

    -log phi(2^-m) are partial sums of i unit exponentials; given their total
    s = -log y, the first i-1 partial sums are s times uniform order statistics.
    """
    if i < 1:
        raise DomainError("i must be >= 1")
    if not 0.0 < y < 1.0:
        raise DomainError("y must lie in (0, 1)")
    u = np.sort(rand.uniform(i - 1)) if i > 1 else np.empty(0)
    return DyadicChain(i, _chain_from_uniforms(u, y))


def _chain_from_uniforms(u_sorted, y):
    s = -np.log(y)
    head = np.exp(-s * u_sorted)
    return np.concatenate([head, np.broadcast_to(y, head.shape[:-1] + (1,))], axis=-1)


# ---- batched routes: one key per Monte Carlo sample -------------------------

def sample_batch(depth: int, keys: np.ndarray) -> np.ndarray:
    """Grid values for many samples at once; row s equals sample(depth, child s)."""
    keys = np.asarray(keys, dtype=np.uint64)
    values = np.empty((keys.shape[0], (1 << depth) + 1))
    for s, key in enumerate(keys):
        values[s] = sample(depth, KeyedStream(key)).values
    return values


def _split_keyed(lo, hi, keys, n, j):
    """Split [lo, hi] with X_{n, 2j+1} of every key, applying the retry rule."""
    mid, bad = _split(lo, hi, uniforms_at(keys, n, np.uint64(j)))
    for attempt in range(1, MAX_RETRIES + 1):
        redo = np.flatnonzero(bad & _resolvable(lo, hi))
        if redo.size == 0:
            break
        m2, b2 = _split(lo[redo], hi[redo], uniforms_at(keys[redo], n, np.uint64(j), attempt))
        mid[redo] = m2
        bad[redo] = b2
    return np.clip(mid, lo, hi)


def bracket_batch(x: float, depth: int, keys: np.ndarray):
    """phi at the ends of the depth-level dyadic interval containing x.

    Walks a single root-to-leaf path per sample, so the cost is O(depth) draws.
    Returns (x_lo, x_hi, phi_lo, phi_hi); the phi arrays have one entry per key
    and agree bitwise with the corresponding full-grid sample.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    m = keys.shape[0]
    lo_v = np.zeros(m)
    hi_v = np.ones(m)
    k_lo, k_hi = 0, 1  # at the current level, in units of 2^-level
    for n in range(1, depth + 1):
        k_lo, k_hi = 2 * k_lo, 2 * k_hi
        k_mid = k_lo + 1
        j = (k_mid - 1) // 2
        mid = _split_keyed(lo_v, hi_v, keys, n, j)
        if x < k_mid / 2.0**n:
            k_hi, hi_v = k_mid, mid
        else:
            k_lo, lo_v = k_mid, mid
    return k_lo / 2.0**depth, k_hi / 2.0**depth, lo_v, hi_v


def point_batch(x: float, depth: int, keys: np.ndarray) -> np.ndarray:
    """evaluate(sample(depth, child s), x) for every sample key, via brackets."""
    x_lo, x_hi, lo_v, hi_v = bracket_batch(x, depth, keys)
    frac = (x - x_lo) / (x_hi - x_lo)
    return np.clip(lo_v + frac * (hi_v - lo_v), lo_v, hi_v)


def dyadic_chain_batch(i: int, keys: np.ndarray) -> np.ndarray:
    """Unconditional (phi(2^-1), ..., phi(2^-i)) per key, shape (m, i)."""
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.empty((keys.shape[0], i))
    zero = np.zeros(keys.shape[0])
    v = np.ones(keys.shape[0])
    for m in range(1, i + 1):
        v = _split_keyed(zero, v, keys, m, 0)
        out[:, m - 1] = v
    return out


def conditional_chain_batch(i: int, y, keys: np.ndarray) -> np.ndarray:
    """conditional_chain_sample for many keys (and optionally many y), shape (m, i)."""
    keys = np.asarray(keys, dtype=np.uint64)
    y = np.broadcast_to(np.asarray(y, dtype=np.float64), (keys.shape[0],))
    if np.any((y <= 0) | (y >= 1)):
        raise DomainError("y must lie in (0, 1)")
    if i < 1:
        raise DomainError("i must be >= 1")
    if i == 1:
        return y[:, None].copy()
    pos = np.arange(i - 1, dtype=np.uint64)[None, :]
    u = np.sort(uniforms_at(keys[:, None, :], 0, pos), axis=1)
    s = -np.log(y)[:, None]
    return np.concatenate([np.exp(-s * u), y[:, None]], axis=1)


def dyadic_law_cdf(i: int, y):
    """F_i(y) = y * sum_{m<i} (-log y)^m / m!, the law of phi(2^-i)."""
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros_like(y)
    pos = y > 0
    yy = np.clip(y[pos], 0.0, 1.0)
    L = -np.log(yy)
    term = np.ones_like(yy)
    acc = np.ones_like(yy)
    for m in range(1, i):
        term = term * L / m
        acc = acc + term
    out[pos] = yy * acc
    return out if out.ndim else float(out)


def dyadic_law_density(i: int, y):
    y = np.asarray(y, dtype=np.float64)
    return np.abs(np.log(y)) ** (i - 1) / math.factorial(i - 1)


__all__ = [
    "DomainError", "DyadicMap", "DyadicHomeomorphism", "DyadicSegment", "DyadicChain",
    "HolderEnvelope", "sample", "refine", "evaluate", "invert", "conditional_restrict",
    "conditional_chain_sample", "sample_batch", "bracket_batch", "point_batch",
    "dyadic_chain_batch", "conditional_chain_batch", "dyadic_law_cdf", "dyadic_law_density",
]
