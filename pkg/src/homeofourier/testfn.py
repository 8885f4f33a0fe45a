"""Test functions on the circle [0, 1) and pointwise moduli of continuity.

The oscillatory family is

    f_n(t) = sin 2 pi (t n^k + psi_k)   on [n^-k, n^-k+1],  k = 1..K,

and 0 below n^-K.  A range of k growing like e^{n^4} is not representable in
double precision, so K (``depth_K``) is a parameter and the ladder spacing
uses n^-K as well.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ConstructionError(ValueError):
    pass


def _as_array(t):
    return np.asarray(t, dtype=np.float64)


def _wrap(t):
    # periodic extension; [0, 1] itself is left alone so f(1) is evaluated as given
    t = _as_array(t)
    return np.where((t < 0.0) | (t > 1.0), t - np.floor(t), t)


def _scalar_or(out):
    return out if np.ndim(out) else float(out)


class TestFunction:
    """Base class: a bounded, evaluatable function on [0, 1]."""

    __test__ = False  # keep pytest from collecting this class
    variant = "abstract"

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        return _scalar_or(self._eval(_wrap(t)))

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def critical_points(self, lo: float, hi: float) -> np.ndarray:
        """Breakpoints and local extrema inside [lo, hi] (in [0, 1] coordinates)."""
        b = self.breakpoints()
        return b[(b >= lo) & (b <= hi)]

    def to_dict(self) -> dict:
        raise NotImplementedError

    def frequency_on(self, a: float, b: float) -> float:
        """Largest oscillation frequency (cycles per unit) on [a, b]; drives node counts."""
        return 0.0

    def scaled(self, factor: float) -> "Scaled":
        return Scaled(self, factor)


@dataclass(frozen=True)
class Constant(TestFunction):
    c: float = 0.0
    variant = "constant"

    def _eval(self, t):
        return np.full_like(t, self.c, dtype=np.float64)

    @property
    def sup_norm(self):
        return abs(self.c)

    def to_dict(self):
        return {"variant": self.variant, "c": self.c}


@dataclass(frozen=True)
class Identity(TestFunction):
    variant = "identity"

    def _eval(self, t):
        return t.astype(np.float64, copy=True)

    @property
    def sup_norm(self):
        return 1.0

    def to_dict(self):
        return {"variant": self.variant}


@dataclass(frozen=True)
class TrigPolynomial(TestFunction):
    """sum of amplitude * sin 2 pi (k t + phase); phases in cycles."""

    terms: tuple[tuple[int, float, float], ...] = ()
    variant = "trig"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((int(k), float(a), float(p)) for k, a, p in self.terms))

    @classmethod
    def sine(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPolynomial":
        return cls(((k, amplitude, 0.0),))

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPolynomial":
        return cls(((k, amplitude, 0.25),))

    def _eval(self, t):
        out = np.zeros_like(t, dtype=np.float64)
        for k, a, p in self.terms:
            out += a * np.sin(TWO_PI * (k * t + p))
        return out

    @property
    def degree(self) -> int:
        return max((abs(k) for k, _, _ in self.terms), default=0)

    @property
    def sup_norm(self):
        return float(sum(abs(a) for _, a, _ in self.terms))

    def critical_points(self, lo, hi):
        if self.degree == 0:
            return np.empty(0)
        # extrema of a degree-d polynomial are separated by at least ~1/(2d); sample finely
        m = max(16, int(math.ceil((hi - lo) * 64 * self.degree)))
        return np.linspace(lo, hi, m + 1)

    def frequency_on(self, a, b):
        return float(self.degree)

    def fourier_truncation(self, n: int) -> "TrigPolynomial":
        return TrigPolynomial(tuple(term for term in self.terms if abs(term[0]) <= n))

    def to_dict(self):
        return {"variant": self.variant, "terms": [list(t) for t in self.terms]}


@dataclass(frozen=True)
class Oscillatory(TestFunction):
    """f_n(t / s0) on [s0 n^-K, s0], zero elsewhere."""

    n: int
    depth_K: int = 6
    s0: float = 1.0
    psi: tuple[float, ...] | None = None
    variant = "oscillatory"

    def __post_init__(self):
        if self.n < 2:
            raise ConstructionError("n must be >= 2")
        if self.depth_K < 1:
            raise ConstructionError("depth_K must be >= 1")
        if not 0.0 < self.s0 <= 1.0:
            raise ConstructionError("s0 must lie in (0, 1]")
        psi = continuity_phases(self.n, self.depth_K) if self.psi is None else self.psi
        psi = tuple(float(p) for p in psi)
        if len(psi) != self.depth_K:
            raise ConstructionError("need one phase per piece")
        object.__setattr__(self, "psi", psi)
        if self.s0 * float(self.n) ** (-self.depth_K) <= 1e-300:
            raise ConstructionError("support underflows double precision")

    @property
    def edges(self) -> np.ndarray:
        """Piece edges s0 n^-k, k = K..0, ascending."""
        return np.array([self.s0 / float(self.n) ** k for k in range(self.depth_K, -1, -1)])

    def piece_of(self, t) -> np.ndarray:
        """k such that t lies in [s0 n^-k, s0 n^-k+1]; 0 outside the support."""
        t = _as_array(t)
        e = self.edges
        idx = np.searchsorted(e, t, side="right")  # e[idx-1] <= t < e[idx]
        k = self.depth_K - idx + 1
        k = np.where(t == e[-1], 1, k)
        return np.where((t < e[0]) | (t > e[-1]), 0, k)

    def _eval(self, t):
        k = self.piece_of(t)
        out = np.zeros_like(t, dtype=np.float64)
        on = k > 0
        if np.any(on):
            kk = k[on]
            psi = np.asarray(self.psi)[kk - 1]
            scale = float(self.n) ** kk.astype(np.float64) / self.s0
            out[on] = np.sin(TWO_PI * (t[on] * scale + psi))
        return out

    @property
    def sup_norm(self):
        return 1.0

    def breakpoints(self):
        return self.edges

    def frequency_on(self, a, b):
        e = self.edges
        if b < e[0] or a > e[-1]:
            return 0.0
        # pieces get faster towards 0, so the leftmost point in the support decides
        k = int(self.piece_of(np.array([max(a, e[0])]))[0])
        return float(self.n) ** k / self.s0

    def critical_points(self, lo, hi):
        pts = [super().critical_points(lo, hi)]
        for k in range(1, self.depth_K + 1):
            a, b = self.s0 / float(self.n) ** k, self.s0 / float(self.n) ** (k - 1)
            a2, b2 = max(a, lo), min(b, hi)
            if a2 > b2:
                continue
            scale = float(self.n) ** k / self.s0
            psi = self.psi[k - 1]
            # sin 2pi u is extremal at u = 1/4 + m/2
            m0 = math.ceil(2 * (a2 * scale + psi - 0.25))
            m1 = math.floor(2 * (b2 * scale + psi - 0.25))
            if m1 >= m0:
                m = np.arange(m0, m1 + 1)
                pts.append((0.25 + m / 2.0 - psi) / scale)
        return np.concatenate(pts)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "depth_K": self.depth_K,
                "s0": self.s0, "psi": list(self.psi)}


@dataclass(frozen=True)
class Ladder(TestFunction):
    """g_n: f_n(x / s_n) on (4 s_next, s_n), linear bridges to 0 at 2 s_next and 2 s_n."""

    n: int
    s_n: float
    s_next: float
    depth_K: int = 6
    psi: tuple[float, ...] | None = None
    variant = "ladder"

    def __post_init__(self):
        if not 0.0 < 4 * self.s_next < self.s_n:
            raise ConstructionError("need 0 < 4 s_next < s_n")
        if 2 * self.s_n > 1.0:
            raise ConstructionError("support [2 s_next, 2 s_n] must fit in [0, 1]")
        osc = Oscillatory(self.n, self.depth_K, 1.0, self.psi)
        object.__setattr__(self, "psi", osc.psi)
        object.__setattr__(self, "_osc", osc)

    @property
    def support(self) -> tuple[float, float]:
        return 2 * self.s_next, 2 * self.s_n

    def _eval(self, t):
        osc = self._osc
        lo_in, hi_in = 4 * self.s_next, self.s_n
        out = np.zeros_like(t, dtype=np.float64)
        mid = (t > lo_in) & (t < hi_in)
        out[mid] = osc._eval(t[mid] / self.s_n)
        left = (t >= 2 * self.s_next) & (t <= lo_in)
        if np.any(left):
            v = osc._eval(np.array([lo_in / self.s_n]))[0]
            out[left] = v * (t[left] - 2 * self.s_next) / (2 * self.s_next)
        right = (t >= hi_in) & (t <= 2 * self.s_n)
        if np.any(right):
            v = osc._eval(np.array([1.0]))[0]
            out[right] = v * (2 * self.s_n - t[right]) / self.s_n
        return out

    @property
    def sup_norm(self):
        return 1.0

    def breakpoints(self):
        inner = self._osc.edges * self.s_n
        return np.concatenate([[2 * self.s_next], inner, [2 * self.s_n]])

    def frequency_on(self, a, b):
        lo, hi = 4 * self.s_next, self.s_n
        if b <= lo or a >= hi:
            return 0.0
        return self._osc.frequency_on(max(a, lo) / self.s_n, min(b, hi) / self.s_n) / self.s_n

    def critical_points(self, lo, hi):
        inner = self._osc.critical_points(lo / self.s_n, hi / self.s_n) * self.s_n
        b = self.breakpoints()
        pts = np.concatenate([b, inner])
        return pts[(pts >= lo) & (pts <= hi)]

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "s_n": self.s_n, "s_next": self.s_next,
                "depth_K": self.depth_K, "psi": list(self.psi)}


@dataclass(frozen=True)
class CounterexampleSum(TestFunction):
    """sum of weight * ladder, ladders with disjoint supports."""

    terms: tuple[tuple[Ladder, float], ...] = field(default_factory=tuple)
    variant = "counterexample"

    def _eval(self, t):
        out = np.zeros_like(t, dtype=np.float64)
        for g, w in self.terms:
            lo, hi = g.support
            on = (t >= lo) & (t <= hi)
            if np.any(on):
                out[on] += w * g._eval(t[on])
        return out

    @property
    def sup_norm(self):
        # supports only touch at zeros of both neighbours
        return max((abs(w) for _, w in self.terms), default=0.0)

    @property
    def n_list(self) -> list[int]:
        return [g.n for g, _ in self.terms]

    @property
    def scales(self) -> list[float]:
        """s_{n_k} for each term, then the final s."""
        return [g.s_n for g, _ in self.terms] + [self.terms[-1][0].s_next]

    def breakpoints(self):
        if not self.terms:
            return np.empty(0)
        return np.unique(np.concatenate([g.breakpoints() for g, _ in self.terms]))

    def frequency_on(self, a, b):
        return max((g.frequency_on(a, b) for g, _ in self.terms), default=0.0)

    def critical_points(self, lo, hi):
        if not self.terms:
            return np.empty(0)
        return np.concatenate([g.critical_points(lo, hi) for g, _ in self.terms])

    def to_dict(self):
        g0 = self.terms[0][0]
        return {"variant": self.variant, "n_list": self.n_list, "depth_K": g0.depth_K,
                "s0": g0.s_n}


@dataclass(frozen=True)
class Scaled(TestFunction):
    base: TestFunction
    factor: float
    variant = "scaled"

    def _eval(self, t):
        return self.factor * self.base._eval(t)

    @property
    def sup_norm(self):
        return abs(self.factor) * self.base.sup_norm

    def breakpoints(self):
        return self.base.breakpoints()

    def frequency_on(self, a, b):
        return self.base.frequency_on(a, b)

    def critical_points(self, lo, hi):
        return self.base.critical_points(lo, hi)

    def to_dict(self):
        return {"variant": self.variant, "factor": self.factor, "base": self.base.to_dict()}


def continuity_phases(n: int, depth_K: int) -> tuple[float, ...]:
    """Phases making f_n continuous.

    At t = n^-k the two neighbouring pieces evaluate sine at 2 pi * 1 and
    2 pi * n, both zero, so psi = 0 works for every n.
    """
    if n < 2:
        raise ConstructionError("n must be >= 2")
    return (0.0,) * depth_K


def build_counterexample(n_list: Sequence[int], depth_K: int = 6, s0: float = 0.25) -> CounterexampleSum:
    """f = sum_k g_{n_k} / log n_k with s_{k+1} = s_k n_k^-K / 4."""
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ConstructionError("n_list is empty")
    if any(n < 3 for n in n_list):
        raise ConstructionError("every n must be >= 3")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConstructionError("n_list must be strictly increasing")
    if not 0.0 < s0 <= 0.5:
        raise ConstructionError("s0 must lie in (0, 1/2]")
    terms = []
    s = s0
    prev_lo = None
    for n in n_list:
        s_next = s * 0.25 * float(n) ** (-depth_K)
        if s_next <= 1e-300:
            raise ConstructionError(f"scale for n={n} underflows; reduce depth_K or n_list")
        g = Ladder(n, s, s_next, depth_K)
        lo, hi = g.support
        if prev_lo is not None and hi > prev_lo:
            raise ConstructionError("ladder supports overlap")
        prev_lo = lo
        terms.append((g, 1.0 / math.log(n)))
        s = s_next
    return CounterexampleSum(tuple(terms))


@dataclass(frozen=True)
class ModulusReport:
    x: float
    deltas: np.ndarray
    omega: np.ndarray


def modulus_at(f: TestFunction, x: float, deltas, grid_resolution: int = 1000) -> ModulusReport:
    """omega_f(x; delta) = sup over 0 < |mu| < delta of |f(x + mu) - f(x)|.

    The sup is taken over a uniform grid of offsets plus every breakpoint and
    sine extremum of ``f`` inside the window, with periodic wraparound.
    """
    if grid_resolution < 1000:
        raise ValueError("grid_resolution must be >= 1000")
    deltas = np.asarray(deltas, dtype=np.float64)
    dmax = float(deltas.max())
    u = np.linspace(0.0, dmax, grid_resolution + 1)[1:]
    mus = [u, -u]
    span = min(dmax, 0.5)
    for shift in (-1.0, 0.0, 1.0):
        cp = f.critical_points(x + shift - span, x + shift + span)
        mus.append(np.asarray(cp) - x - shift)
    mu = np.concatenate(mus)
    mu = mu[(mu != 0.0) & (np.abs(mu) < dmax)]
    a = np.abs(mu)
    order = np.argsort(a, kind="stable")
    a = a[order]
    diff = np.abs(np.asarray(f(x + mu[order])) - f(x))
    running = np.maximum.accumulate(diff) if diff.size else diff
    cnt = np.searchsorted(a, deltas, side="left")
    omega = np.where(cnt > 0, running[np.maximum(cnt - 1, 0)] if running.size else 0.0, 0.0)
    return ModulusReport(float(x), deltas, omega)


def from_dict(d: dict) -> TestFunction:
    v = d["variant"]
    if v == "constant":
        return Constant(float(d["c"]))
    if v == "identity":
        return Identity()
    if v == "trig":
        return TrigPolynomial(tuple(tuple(t) for t in d["terms"]))
    if v == "oscillatory":
        return Oscillatory(int(d["n"]), int(d["depth_K"]), float(d["s0"]), tuple(d.get("psi") or ()) or None)
    if v == "ladder":
        return Ladder(int(d["n"]), float(d["s_n"]), float(d["s_next"]), int(d["depth_K"]),
                      tuple(d.get("psi") or ()) or None)
    if v == "counterexample":
        return build_counterexample(d["n_list"], int(d["depth_K"]), float(d["s0"]))
    if v == "scaled":
        return Scaled(from_dict(d["base"]), float(d["factor"]))
    raise ValueError(f"unknown test function variant {v!r}")


def parse_spec(text: str) -> TestFunction:
    """Short CLI form: ``sin:k``, ``cos:k``, ``const:c``, ``identity``,
    ``osc:n[:K[:s0]]``, ``counter:n1,n2,...[:K]``, ``<factor>*<spec>``, or a
    JSON object."""
    text = text.strip()
    if "*" in text and not text.startswith("{"):
        factor, _, base = text.partition("*")
        return Scaled(parse_spec(base), float(factor))
    if text.startswith("{"):
        return from_dict(json.loads(text))
    head, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    if head == "sin":
        return TrigPolynomial.sine(int(args[0]) if args else 1)
    if head == "cos":
        return TrigPolynomial.cosine(int(args[0]) if args else 1)
    if head == "const":
        return Constant(float(args[0]))
    if head == "identity":
        return Identity()
    if head == "osc":
        n = int(args[0])
        K = int(args[1]) if len(args) > 1 else 6
        s0 = float(args[2]) if len(args) > 2 else 1.0
        return Oscillatory(n, K, s0)
    if head == "counter":
        ns = [int(v) for v in args[0].split(",")]
        K = int(args[1]) if len(args) > 1 else 6
        return build_counterexample(ns, K)
    raise ValueError(f"cannot parse test function {text!r}")
