"""Monte Carlo checks of the distributional laws of the random homeomorphism.

Every check draws sample ``s`` from the stream ``rand.child(s)`` (or, for the
bulk tube check, chunk ``c`` from ``rand.child(c)`` with a fixed chunk size),
so reports depend only on the seed and the parameters, never on how many
worker processes were used.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .fourier import ComposedRule, cycle_profile
from .homeo import (
    DomainError,
    HolderEnvelope,
    bracket_batch,
    conditional_chain_batch,
    dyadic_chain_batch,
    dyadic_law_cdf,
    point_batch,
    sample_batch,
    _split_keyed,
)
from .rng import RandomSource, to_unit_open

KS_COEFF = 1.63  # asymptotic 1% critical value of sqrt(N) * D_N
CHUNK = 2000
SWEEP_CHUNK = 4


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray
    count: int

    @classmethod
    def of(cls, values) -> "EmpiricalDistribution":
        s = np.sort(np.asarray(values, dtype=np.float64).ravel())
        s.setflags(write=False)
        return cls(s, int(s.size))

    def __post_init__(self):
        if self.count != len(self.samples):
            raise ValueError("count must equal the number of samples")
        if np.any(np.diff(self.samples) < 0):
            raise ValueError("samples must be sorted")

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.count

    def quantile(self, q):
        return np.quantile(self.samples, q)


def ks_statistic(emp: EmpiricalDistribution, cdf: Callable) -> float:
    """sup over the sample points of |F_emp - cdf|, both one-sided limits included."""
    if emp.count < 100:
        raise ValueError("KS statistic needs at least 100 samples")
    F = np.asarray(cdf(emp.samples), dtype=np.float64)
    if np.any(~np.isfinite(F)) or np.any(F < 0.0) or np.any(F > 1.0):
        raise DomainError("reference cdf left [0, 1]")
    n = emp.count
    s = emp.samples
    # ties: F_emp jumps once per distinct value
    hi = np.searchsorted(s, s, side="right") / n
    lo = np.searchsorted(s, s, side="left") / n
    return float(max(np.max(hi - F), np.max(F - lo)))


def ks_two_sample(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """sup |F_a - F_b| over the pooled sample points."""
    pts = np.concatenate([a.samples, b.samples])
    return float(np.max(np.abs(a.cdf(pts) - b.cdf(pts))))


def ks_threshold(n: int) -> float:
    return KS_COEFF / math.sqrt(n)


@dataclass
class CheckReport:
    name: str
    statistic: float
    threshold: float
    passed: bool
    sample_count: int
    seed: int
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"name": self.name, "statistic": self.statistic, "threshold": self.threshold,
               "pass": bool(self.passed), "seed": self.seed, "n_samples": self.sample_count}
        out.update(_jsonable(self.details))
        return out

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name}: statistic={self.statistic:.6g} "
                f"threshold={self.threshold:.6g} N={self.sample_count}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ---- worker plumbing ---------------------------------------------------------

def run_chunks(func: Callable, n: int, workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Concatenate func(start, stop) over fixed chunks of range(n), in order."""
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        parts = [func(a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_call, [(func, a, b) for a, b in bounds]))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)


def _call(args):
    func, a, b = args
    return func(a, b)


def _keys(rand: RandomSource, a: int, b: int) -> np.ndarray:
    return rand.child_keys(np.arange(a, b))


# ---- samplers used by the checks (module level so they pickle) ----------------

def _dyadic_values(rand, i, a, b):
    return dyadic_chain_batch(i, _keys(rand, a, b))[:, i - 1]


def _point_values(rand, x, depth, a, b):
    _, _, lo, hi = bracket_batch(x, depth, _keys(rand, a, b))
    v = point_batch(x, depth, _keys(rand, a, b))
    return np.stack([v, hi - lo], axis=1)


def _first_passage(rand, x, y, a, b):
    keys = _keys(rand, a, b)
    m = keys.shape[0]
    v = np.ones(m)
    hit = np.zeros(m, dtype=bool)
    done = np.zeros(m, dtype=bool)
    level = 0
    while not np.all(done):
        level += 1
        if level > 1100:  # 2^-1100 underflows; every chain has passed long before
            raise RuntimeError("first passage did not terminate")
        live = np.flatnonzero(~done)
        v[live] = _split_keyed(np.zeros(live.size), v[live], keys[live], level, 0)
        new = live[v[live] <= y]
        hit[new] = v[new] <= x
        done[new] = True
    return hit.astype(np.float64)


def _conditional_first(rand, i, y, a, b):
    return conditional_chain_batch(i, y, _keys(rand, a, b))[:, 0]


# ---- checks -------------------------------------------------------------------

def check_dyadic_law(i: int, N: int, rand: RandomSource, workers: int = 1,
                     threshold: float | None = None) -> CheckReport:
    """KS of phi(2^-i) against F_i(y) = y sum_{m<i} (-log y)^m / m!."""
    if not 1 <= i <= 8:
        raise ValueError("i must lie in 1..8")
    vals = run_chunks(partial(_dyadic_values, rand, i), N, workers)
    emp = EmpiricalDistribution.of(vals)
    stat = ks_statistic(emp, lambda y: dyadic_law_cdf(i, y))
    thr = ks_threshold(N) if threshold is None else threshold
    return CheckReport(f"dyadic-law[i={i}]", stat, thr, stat < thr, N, rand.master_seed,
                       {"i": i, "median": float(np.median(vals))})


def check_first_passage(x: float, y: float, N: int, rand: RandomSource,
                        workers: int = 1) -> CheckReport:
    """Rate of phi(2^-i) <= x at the first i with phi(2^-i) <= y, against x / y."""
    if not 0.0 < x <= y < 1.0:
        raise ValueError("need 0 < x <= y < 1")
    hits = run_chunks(partial(_first_passage, rand, x, y), N, workers)
    rate = float(hits.mean())
    p = x / y
    stat = abs(rate - p)
    thr = 3.0 * math.sqrt(p * (1.0 - p) / N)
    return CheckReport(f"first-passage[x={x:g},y={y:g}]", stat, thr, stat <= thr, N,
                       rand.master_seed, {"x": x, "y": y, "rate": rate, "expected": p})


def conditional_first_cdf(i: int, y: float, t):
    """CDF of phi(1/2) given phi(2^-i) = y; for i = 2 it is 1 - log t / log y."""
    t = np.asarray(t, dtype=np.float64)
    w = np.clip(np.log(np.clip(t, y, 1.0)) / math.log(y), 0.0, 1.0)
    return (1.0 - w) ** (i - 1)


def check_conditional_chain(i: int, y: float, N: int, rand: RandomSource,
                            workers: int = 1, threshold: float | None = None) -> CheckReport:
    """KS of phi(1/2) from the conditional chain sampler against its exact law."""
    if i < 2:
        raise ValueError("need i >= 2")
    vals = run_chunks(partial(_conditional_first, rand, i, y), N, workers)
    emp = EmpiricalDistribution.of(vals)
    stat = ks_statistic(emp, lambda t: conditional_first_cdf(i, y, t))
    thr = ks_threshold(N) if threshold is None else threshold
    return CheckReport(f"conditional-chain[i={i},y={y:.6g}]", stat, thr, stat < thr, N,
                       rand.master_seed, {"i": i, "y": y})


def third_cdf(x):
    """CDF of the normalised density 2(1 - x)."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return 2.0 * x - x * x


def third_cdf_unnormalised(x):
    """Antiderivative of 1 - x; totals 1/2 on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return x - x * x / 2.0


def check_third_density(N: int, depth: int, rand: RandomSource, workers: int = 1,
                        threshold: float = 0.02) -> CheckReport:
    """KS of phi(1/3) against the CDF 2x - x^2, plus bracket widths."""
    if depth < 16:
        raise ValueError("depth must be >= 16")
    out = run_chunks(partial(_point_values, rand, 1.0 / 3.0, depth), N, workers)
    vals, width = out[:, 0], out[:, 1]
    emp = EmpiricalDistribution.of(vals)
    stat = ks_statistic(emp, third_cdf)
    alt = ks_statistic(emp, third_cdf_unnormalised)
    w99 = float(np.quantile(width, 0.99))
    ok = stat < threshold and w99 < 1e-3
    return CheckReport("third-density", stat, threshold, ok, N, rand.master_seed,
                       {"depth": depth, "ks_density_1_minus_x": alt,
                        "bracket_width_p99": w99, "median": float(np.median(vals)),
                        "median_expected": 1.0 - math.sqrt(2.0) / 2.0})


def holder_failure_exact(envelope: HolderEnvelope, i: int) -> float:
    """P(phi(2^-i) outside (r^K1, r^K2)) from the dyadic law."""
    r = 2.0 ** -i
    return float(dyadic_law_cdf(i, r ** envelope.K1) + 1.0 - dyadic_law_cdf(i, r ** envelope.K2))


def check_holder(envelope: HolderEnvelope, r_values: Sequence[float], N: int, rand: RandomSource,
                 depth: int | None = None, workers: int = 1) -> CheckReport:
    """Failure fraction of r^K1 < phi(r) < r^K2 per r, against C r^2."""
    r_values = np.asarray(r_values, dtype=np.float64)
    if np.any((r_values <= 0) | (r_values > 0.5)):
        raise ValueError("r values must lie in (0, 1/2]")
    if depth is None:
        depth = max(1, int(math.ceil(-math.log2(r_values.min()))))
    cells = r_values * 2.0 ** depth
    if np.any(cells != np.rint(cells)):
        raise ValueError("r values must be grid points at the sampling depth")
    fails, bound = [], []
    for idx, r in enumerate(r_values):
        sub = rand.child(idx)
        vals = run_chunks(partial(_point_values, sub, float(r), depth), N, workers)[:, 0]
        fails.append(float(np.mean(~envelope.inside(r, vals))))
        bound.append(envelope.C * r * r)
    fails, bound = np.array(fails), np.array(bound)
    worst = float(np.max(fails - bound))
    details = {"r": r_values, "failure": fails, "bound": bound, "depth": depth,
               "K1": envelope.K1, "K2": envelope.K2, "C": envelope.C}
    dyadic = -np.log2(r_values)
    if np.all(dyadic == np.rint(dyadic)):
        details["failure_exact"] = [holder_failure_exact(envelope, int(i)) for i in dyadic]
    return CheckReport("holder", worst, 0.0, bool(np.all(fails <= bound)), N, rand.master_seed,
                       details)


def exceedance(stat: np.ndarray, K_values) -> np.ndarray:
    """P(stat > K) for each K; non-increasing in K whenever K is sorted."""
    s = np.sort(np.asarray(stat))
    return 1.0 - np.searchsorted(s, np.asarray(K_values, dtype=np.float64), side="right") / s.size


def _log_curve(K, ex, n, median, min_count):
    keep = (K >= median) & (ex * n >= min_count)
    return K[keep], np.log(ex[keep])


def _fit_slope(K, L):
    if K.size < 2:
        return float("nan")
    return float(np.polyfit(K, L, 1)[0])


def _mean_second_difference(K, L):
    if K.size < 3:
        return float("nan")
    h = np.diff(K)
    d1 = np.diff(L) / h
    return float(np.mean(np.diff(d1) / (0.5 * (h[1:] + h[:-1]))))


def _composed_stats(rand, f, n, depth, windows, a, b):
    rule = ComposedRule(n, depth)
    masks = np.stack([rule.segment_mask(w) for w in windows])
    profile = cycle_profile(f)
    grids = sample_batch(depth, _keys(rand, a, b))
    out = np.empty((grids.shape[0], len(windows)))
    for s, v in enumerate(grids):
        out[s] = np.abs(rule.integrals(f, v, masks, profile)[0])
    return out


def composed_depth(n: int) -> int:
    return max(int(math.ceil(math.log2(max(n, 1)))), 0) + 10


def default_K_grid(stat: np.ndarray, sup_norm: float, points: int = 33) -> np.ndarray:
    """K from 0 to 8 medians, in units of the sup norm."""
    med = float(np.median(stat)) / sup_norm
    return np.linspace(0.0, 8.0 * med, points)


def _decay_report(name, stat, f, K_values, N, rand, min_count, extra):
    norm = f.sup_norm if f.sup_norm > 0 else 1.0
    if K_values is None:
        K_values = default_K_grid(stat, norm)
    K = np.sort(np.asarray(K_values, dtype=np.float64))
    ex = exceedance(stat / norm, K)
    med = float(np.median(stat)) / norm
    Kf, L = _log_curve(K, ex, N, med, min_count)
    details = {"K": K, "exceedance": ex, "median": med,
               "monotone": bool(np.all(np.diff(ex) <= 0)),
               "slope": _fit_slope(Kf, L), "curvature": _mean_second_difference(Kf, L),
               "fit_points": int(Kf.size)}
    details.update(extra)
    return details


def tail_report(stat: np.ndarray, f, n: int, r: float, K_values=None, seed: int = 0,
                depth: int = 0, min_count: int = 10) -> CheckReport:
    N = stat.size
    d = _decay_report("tail", stat, f, K_values, N, None, min_count,
                      {"n": n, "r": r, "depth": depth})
    ok = d["monotone"] and d["slope"] < 0
    return CheckReport(f"tail-decay[n={n},r={r:g}]", d["slope"], 0.0, ok, N, seed, d)


def check_tail_decay(f, n: int, r: float, K_values=None, N: int = 10_000,
                     rand: RandomSource | None = None, depth: int | None = None,
                     workers: int = 1, min_count: int = 10) -> CheckReport:
    """Exceedance of |int_r^{1-r} (f o phi) D_n| / ||f|| over K; pass if the fitted
    log-exceedance slope beyond the median is negative."""
    if not r > 2.0 / n:
        raise ValueError("need r > 2/n")
    rand = rand or RandomSource(0)
    depth = depth or composed_depth(n)
    stat = run_chunks(partial(_composed_stats, rand, f, n, depth, [[(r, 1.0 - r)]]),
                      N, workers, chunk=500)[:, 0]
    return tail_report(stat, f, n, r, K_values, rand.master_seed, depth, min_count)


def _head_windows(interval):
    a, b = interval
    if a < 0.0:  # a neighbourhood of 0 on the circle
        return [(0.0, b), (1.0 + a, 1.0)]
    return [(a, b)]


def head_report(stat: np.ndarray, f, interval, n: int, K_values=None, seed: int = 0,
                depth: int = 0, min_count: int = 10) -> CheckReport:
    N = stat.size
    a, b = interval
    d = _decay_report("head", stat, f, K_values, N, None, min_count,
                      {"n": n, "interval": [a, b], "depth": depth})
    ok = d["monotone"] and d["curvature"] < 0
    return CheckReport(f"head-decay[n={n},I=[{a:g},{b:g}]]", d["curvature"], 0.0, ok, N, seed, d)


def check_head_decay(f, interval: tuple[float, float], n: int, K_values=None, N: int = 10_000,
                     rand: RandomSource | None = None, depth: int | None = None,
                     workers: int = 1, min_count: int = 10) -> CheckReport:
    """Exceedance of |int_I (f o phi) D_n| / ||f|| over K; pass if log-exceedance is
    concave beyond the median (mean second difference < 0), i.e. faster than
    exponential.  ``interval`` may start below 0 to mean [-r, r] on the circle."""
    a, b = interval
    if not -1.0 < a <= b <= 1.0:
        raise ValueError("interval must lie in the circle")
    rand = rand or RandomSource(0)
    depth = depth or composed_depth(n)
    stat = run_chunks(partial(_composed_stats, rand, f, n, depth, [_head_windows(interval)]),
                      N, workers, chunk=500)[:, 0]
    return head_report(stat, f, interval, n, K_values, rand.master_seed, depth, min_count)


def head_tail_samples(f, n: int, r: float, N: int, rand: RandomSource,
                      depth: int | None = None, workers: int = 1) -> np.ndarray:
    """(N, 2) array of |int_r^{1-r}| and |int_{-r}^{r}| of (f o phi) D_n on shared phis."""
    if not r > 2.0 / n:
        raise ValueError("need r > 2/n")
    depth = depth or composed_depth(n)
    windows = [[(r, 1.0 - r)], _head_windows((-r, r))]
    return run_chunks(partial(_composed_stats, rand, f, n, depth, windows), N, workers, chunk=500)


def head_vs_tail_report(stats: np.ndarray, n: int, r: float, seed: int = 0, depth: int = 0,
                        min_count: int = 10, kappa=None) -> CheckReport:
    """Each statistic is measured in units of its own median (the constants in
    the bounds are unspecified) on a common grid kappa.  The head decays faster
    when the curvature of its log-exceedance is below the tail's."""
    N = stats.shape[0]
    kappa = np.arange(1.0, 8.01, 0.5) if kappa is None else np.asarray(kappa, dtype=np.float64)
    curves, curv, slope = {}, {}, {}
    for j, name in enumerate(["tail", "head"]):
        s = stats[:, j]
        med = float(np.median(s))
        ex = exceedance(s / med, kappa)
        K, L = _log_curve(kappa, ex, N, 1.0, min_count)
        curves[name] = ex
        curv[name] = _mean_second_difference(K, L)
        slope[name] = _fit_slope(K, L)
    stat = curv["head"] - curv["tail"]
    ok = bool(np.isfinite(stat) and stat < 0)
    return CheckReport(f"head-vs-tail[n={n},r={r:g}]", stat, 0.0, ok, N, seed,
                       {"kappa": kappa, "tail_exceedance": curves["tail"],
                        "head_exceedance": curves["head"], "tail_curvature": curv["tail"],
                        "head_curvature": curv["head"], "tail_slope": slope["tail"],
                        "head_slope": slope["head"], "depth": depth,
                        "tail_median": float(np.median(stats[:, 0])),
                        "head_median": float(np.median(stats[:, 1]))})


def check_head_vs_tail(f, n: int, r: float, N: int = 10_000, rand: RandomSource | None = None,
                       depth: int | None = None, workers: int = 1, min_count: int = 10,
                       kappa=None) -> CheckReport:
    """Head |int_{-r}^{r}| against tail |int_r^{1-r}| on the same phi samples."""
    rand = rand or RandomSource(0)
    depth = depth or composed_depth(n)
    stats = head_tail_samples(f, n, r, N, rand, depth, workers)
    return head_vs_tail_report(stats, n, r, rand.master_seed, depth, min_count, kappa)


def decay_reports(f, n: int, r: float, N: int, rand: RandomSource, depth: int | None = None,
                  workers: int = 1, K_values=None, min_count: int = 10):
    """Tail, head and head-vs-tail reports from one shared set of samples."""
    depth = depth or composed_depth(n)
    stats = head_tail_samples(f, n, r, N, rand, depth, workers)
    seed = rand.master_seed
    return (tail_report(stats[:, 0], f, n, r, K_values, seed, depth, min_count),
            head_report(stats[:, 1], f, (-r, r), n, K_values, seed, depth, min_count),
            head_vs_tail_report(stats, n, r, seed, depth, min_count))


# ---- tube around a Lipschitz map ---------------------------------------------------

def _fill_from_uniforms(values: np.ndarray, depth: int, U: np.ndarray) -> None:
    """Subdivide rows of ``values`` (ends set) level by level with uniforms U."""
    used = 0
    for lvl in range(1, depth + 1):
        step = 1 << (depth - lvl)
        cnt = 1 << (lvl - 1)
        lo = values[:, 0:-1:2 * step]
        hi = values[:, 2 * step::2 * step]
        x = U[:, used:used + cnt]
        used += cnt
        values[:, step::2 * step] = np.clip(lo + x * (hi - lo), lo, hi)


def _tube_chunk(rand, i, phi_i, tau, eps_values, depth, a, b):
    m = b - a
    src = rand.child(a // CHUNK)
    if i > 1:
        u = to_unit_open(src.raw_block(0, 0, m * (i - 1))).reshape(m, i - 1)
        s = -math.log(phi_i)
        chain = np.concatenate([np.exp(-s * np.sort(u, axis=1)), np.full((m, 1), phi_i)], axis=1)
    else:
        chain = np.full((m, 1), phi_i)
    ends = np.concatenate([np.ones((m, 1)), chain], axis=1)  # phi(2^-(lvl)) for lvl = 0..i
    per = (1 << depth) - 1
    worst = np.zeros(m)
    for lvl in range(1, i + 1):
        x0, x1 = 2.0 ** -lvl, 2.0 ** -(lvl - 1)
        vals = np.empty((m, (1 << depth) + 1))
        vals[:, 0], vals[:, -1] = ends[:, lvl], ends[:, lvl - 1]
        U = to_unit_open(src.raw_block(lvl, 0, m * per)).reshape(m, per)
        _fill_from_uniforms(vals, depth, U)
        x = np.linspace(x0, x1, (1 << depth) + 1)
        worst = np.maximum(worst, np.max(np.abs(vals - tau(x)[None, :]), axis=1))
    return (worst[:, None] < np.asarray(eps_values)[None, :]).astype(np.float64)


@dataclass(frozen=True)
class LinearTau:
    """The line from (2^-i, phi_i) to (1, 1)."""

    i: int
    phi_i: float

    def __call__(self, x):
        x0 = 2.0 ** -self.i
        return self.phi_i + (np.asarray(x) - x0) * (1.0 - self.phi_i) / (1.0 - x0)


def linear_tau(i: int, phi_i: float) -> LinearTau:
    return LinearTau(i, phi_i)


def check_tube_probability(i: int, phi_i: float, tau: Callable | None, eps_values, N: int,
                           rand: RandomSource, depth: int = 8, workers: int = 1) -> CheckReport:
    """P(max over [2^-i, 1] of |phi - tau| < eps) given phi(2^-i) = phi_i.

    phi on [2^-i, 1] is the conditional chain at the points 2^-m followed by
    fresh subdivision of each [2^-m, 2^-m+1] to ``depth`` further levels.  The
    sup is taken over that grid.  Pass if every rate is positive and the rates
    are non-decreasing in eps.
    """
    if not 0.0 < phi_i < 1.0 or i < 1:
        raise ValueError("need i >= 1 and 0 < phi_i < 1")
    tau = tau or linear_tau(i, phi_i)
    eps = np.sort(np.asarray(eps_values, dtype=np.float64))
    inside = run_chunks(partial(_tube_chunk, rand, i, phi_i, tau, eps, depth), N, workers)
    rate = inside.mean(axis=0)
    ok = bool(np.all(rate > 0) and np.all(np.diff(rate) >= 0))
    return CheckReport(f"tube[i={i},phi_i={phi_i:g}]", float(rate.min()), 0.0, ok, N,
                       rand.master_seed, {"eps": eps, "rate": rate, "depth": depth})


# ---- partial-sum sweeps -------------------------------------------------------------

def _sweep_chunk(rand, f, n_grid, depth, a, b):
    rule = ComposedRule(0, depth, orders=n_grid)
    profile = cycle_profile(f)
    grids = sample_batch(depth, _keys(rand, a, b))
    return np.stack([rule.integrals(f, v, profile=profile)[:, 0] for v in grids])


@dataclass
class SweepResult:
    n_grid: np.ndarray
    values: np.ndarray  # (samples, len(n_grid)) of S_n(f o phi; 0)
    depth: int
    seed: int

    @property
    def sup_abs(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def quantiles(self, qs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict:
        return {f"q{int(round(100 * q)):02d}": float(np.quantile(self.sup_abs, q)) for q in qs}


def sweep_partial_sums(f, n_grid, samples: int, depth: int | None, rand: RandomSource,
                       workers: int = 1) -> SweepResult:
    """S_n(f o phi; 0) per sample for every n in ``n_grid``."""
    n_grid = np.asarray(n_grid, dtype=np.int64)
    if n_grid.size == 0 or n_grid.min() < 0 or n_grid.max() > 4096:
        raise ValueError("n_grid must lie in 0..4096")
    need = composed_depth(int(n_grid.max()))
    depth = need if depth is None else depth
    if depth < need:
        raise ValueError(f"depth must be >= {need} for n up to {n_grid.max()}")
    vals = run_chunks(partial(_sweep_chunk, rand, f, n_grid, depth), samples, workers,
                      chunk=SWEEP_CHUNK)
    return SweepResult(n_grid, vals, depth, rand.master_seed)


CHECKS = ("dyadic-law", "first-passage", "conditional-chain", "third-density", "holder",
          "tail-decay", "head-decay", "head-vs-tail", "tube")
