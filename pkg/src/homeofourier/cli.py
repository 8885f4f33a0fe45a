"""Command line front end.

Exit codes: 0 success or passed check, 1 failed statistical check, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fourier, homeo, testfn, verify, zeroone
from .config import ConfigError, ExperimentConfig, build_config
from .rng import RandomSource

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _g(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


class Output:
    """Writes tables to stdout or into the output directory, with metadata."""

    def __init__(self, cfg: ExperimentConfig, command: list[str]):
        self.cfg = cfg
        self.command = command
        self.written: list[Path] = []

    @property
    def to_stdout(self) -> bool:
        return self.cfg.output_dir in ("-", "")

    def header(self) -> list[str]:
        return [f"command = {' '.join(self.command)}"] + self.cfg.header_lines()

    def meta(self) -> dict:
        return {"command": " ".join(self.command), "config": self.cfg.metadata()}

    def csv(self, name: str, columns: list[str], rows) -> None:
        buf = io.StringIO()
        for h in self.header():
            buf.write(f"# {h}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows([_g(v) for v in row] for row in rows)
        self._emit(f"{name}.csv", buf.getvalue())

    def json(self, name: str, payload: dict) -> None:
        body = dict(payload)
        body.setdefault("seed", self.cfg.seed)
        body.update(self.meta())
        self._emit(f"{name}.json", json.dumps(verify._jsonable(body), indent=2, sort_keys=False) + "\n")

    def table(self, name, columns, rows, summary: dict | None = None):
        if self.cfg.format == "json":
            payload = {"columns": columns, "rows": [list(r) for r in rows]}
            payload.update(summary or {})
            self.json(name, payload)
        else:
            self.csv(name, columns, rows)
            if summary and not self.to_stdout:
                self.json(name + "_summary", summary)

    def _emit(self, filename: str, text: str) -> None:
        if self.to_stdout:
            sys.stdout.write(text)
            return
        path = Path(self.cfg.output_dir) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written.append(path)

    def figure_path(self, name: str) -> Path:
        base = Path(".") if self.to_stdout else Path(self.cfg.output_dir)
        return base / f"{name}.png"


# ---- subcommands ---------------------------------------------------------------

def _phi(cfg, args):
    return homeo.sample(cfg.depth, RandomSource(cfg.seed).child(args.index))


def cmd_sample(cfg, args, out: Output) -> int:
    phi = _phi(cfg, args)
    rows = [(k, x, v) for k, (x, v) in enumerate(zip(phi.grid, phi.values))]
    out.table("sample", ["k", "x", "phi_x"], rows,
              {"depth": cfg.depth, "index": args.index,
               "strictly_increasing": phi.strictly_increasing})
    if args.plot:
        from . import plotting
        plotting.homeomorphism(phi.grid, phi.values, out.figure_path("sample"))
    return EXIT_OK


def cmd_eval(cfg, args, out: Output) -> int:
    f = testfn.parse_spec(args.f)
    phi = _phi(cfg, args)
    if args.x:
        x = np.array(_floats(args.x))
    else:
        x = np.linspace(0.0, 1.0, args.points)
    if np.any((x < 0) | (x > 1)):
        raise UsageError("--x values must lie in [0, 1]")
    px = homeo.evaluate(phi, x)
    fx = f(px)
    out.table("eval", ["x", "phi_x", "f_phi_x"], zip(x, np.atleast_1d(px), np.atleast_1d(fx)),
              {"f": f.to_dict(), "depth": cfg.depth, "index": args.index})
    if args.plot:
        from . import plotting
        plotting.homeomorphism(x, px, out.figure_path("eval"), f_phi=fx)
    return EXIT_OK


def cmd_partial_sum(cfg, args, out: Output) -> int:
    f = testfn.parse_spec(args.f)
    ns = _ints(args.n) if args.n else list(range(args.n_max + 1))
    q = fourier.QuadratureSpec(cfg.points_per_oscillation)
    if args.compose:
        phi = _phi(cfg, args)
        S = fourier.composed_partial_sums(f, phi, ns, args.x, q)
    else:
        S = [fourier.partial_sum(f, n, args.x, q) for n in ns]
    out.table("partial_sum", ["n", "S_n"], zip(ns, S),
              {"f": f.to_dict(), "x": args.x, "composed": bool(args.compose)})
    if args.plot:
        from . import plotting
        plotting.partial_sums(ns, S, out.figure_path("partial_sum"))
    return EXIT_OK


def _verify_report(cfg, args) -> verify.CheckReport:
    rand = RandomSource(cfg.seed)
    N, W = cfg.samples, cfg.workers
    name = args.check
    if name == "dyadic-law":
        return verify.check_dyadic_law(args.i, N, rand, W, threshold=args.threshold)
    if name == "first-passage":
        return verify.check_first_passage(args.x, args.y, N, rand, W)
    if name == "conditional-chain":
        return verify.check_conditional_chain(max(args.i, 2), args.y, N, rand, W,
                                              threshold=args.threshold)
    if name == "third-density":
        return verify.check_third_density(N, cfg.depth, rand, W)
    if name == "holder":
        r = _floats(args.r_values) if args.r_values else [2.0 ** -k for k in range(1, 7)]
        return verify.check_holder(cfg.envelope, r, N, rand, workers=W)
    f = testfn.parse_spec(args.f)
    K = _floats(args.K_values) if args.K_values else None
    depth = args.composed_depth
    if name == "tail-decay":
        return verify.check_tail_decay(f, args.n, args.r, K, N, rand, depth, W)
    if name == "head-decay":
        lo, hi = _floats(args.interval) if args.interval else (-args.r, args.r)
        return verify.check_head_decay(f, (lo, hi), args.n, K, N, rand, depth, W)
    if name == "head-vs-tail":
        return verify.check_head_vs_tail(f, args.n, args.r, N, rand, depth, W)
    if name == "tube":
        eps = _floats(args.eps) if args.eps else [0.1, 0.25, 0.5, 1.0]
        return verify.check_tube_probability(args.i, args.phi_i, None, eps, N, rand, workers=W)
    raise UsageError(f"unknown check {name!r}")


def cmd_verify(cfg, args, out: Output) -> int:
    rep = _verify_report(cfg, args)
    payload = rep.to_json_dict()
    if cfg.format == "csv":
        rows, cols = _detail_rows(rep)
        out.csv("verify_" + args.check, cols, rows)
        if not out.to_stdout:
            out.json("verify_" + args.check, payload)
    else:
        out.json("verify_" + args.check, payload)
    print(rep.line(), file=sys.stderr)
    if args.plot:
        _plot_report(args, rep, out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _detail_rows(rep: verify.CheckReport):
    """Per-grid-point columns when the report has them, else one summary row."""
    arrays = {k: np.asarray(v) for k, v in rep.details.items()
              if isinstance(v, (list, tuple, np.ndarray)) and np.ndim(v) == 1}
    length = max((len(v) for v in arrays.values()), default=0)
    if length <= 2:
        cols = ["name", "statistic", "threshold", "pass", "n_samples"]
        return [(rep.name, rep.statistic, rep.threshold, rep.passed, rep.sample_count)], cols
    cols = [k for k, v in arrays.items() if len(v) == length]
    return list(zip(*(arrays[c] for c in cols))), cols


def _plot_report(args, rep, out):
    from . import plotting
    d = rep.details
    if "exceedance" in d:
        plotting.exceedance({args.check: (d["K"], d["exceedance"])}, out.figure_path(args.check))
    elif "tail_exceedance" in d:
        plotting.exceedance({"tail": (d["kappa"], d["tail_exceedance"]),
                             "head": (d["kappa"], d["head_exceedance"])},
                            out.figure_path(args.check), xlabel="multiples of the median")


def cmd_align(cfg, args, out: Output) -> int:
    q = fourier.QuadratureSpec(cfg.points_per_oscillation)
    rows = []
    for n in _ints(args.n):
        if args.i is None:
            sc = fourier.default_scene(n, args.s0)
        else:
            sc = fourier.build_aligned_scene(n, args.k, args.s0, args.i, args.j, args.phi_i,
                                             args.phi_j, ratio_exponent=args.ratio_exponent)
        A = fourier.aligned_integral(sc, q)
        rows.append((n, sc.r, sc.k, sc.alpha, sc.beta, A, A / math.log(n), sc.identity_error()))
    cols = ["n", "r", "k", "alpha", "beta", "A", "A_over_log_n", "identity_error"]
    out.table("align", cols, rows)
    if args.plot:
        from . import plotting
        plotting.aligned([r[0] for r in rows], [r[6] for r in rows], out.figure_path("align"))
    return EXIT_OK


def cmd_sweep(cfg, args, out: Output) -> int:
    ns = _ints(args.n_grid) if args.n_grid else [2 ** k for k in range(12)]
    depth = args.sweep_depth
    results = {}
    rows = []
    summary = {"n_grid": ns, "families": {}}
    for spec in args.f or ["sin:1"]:
        f = testfn.parse_spec(spec)
        res = verify.sweep_partial_sums(f, ns, cfg.samples, depth, RandomSource(cfg.seed),
                                        cfg.workers)
        results[spec] = res
        for s, row in enumerate(res.values):
            rows += [(spec, s, n, v) for n, v in zip(ns, row)]
        summary["families"][spec] = {"sup_norm": f.sup_norm, "depth": res.depth,
                                     "sup_abs_quantiles": res.quantiles()}
    out.table("sweep", ["f", "sample", "n", "S_n"], rows, summary)
    if args.plot:
        from . import plotting
        plotting.sweep_quantiles(results, out.figure_path("sweep"))
    return EXIT_OK


def cmd_zeroone(cfg, args, out: Output) -> int:
    p = zeroone.parse_init(args.init, args.grid, cfg.seed)
    rows, final = zeroone.trace(p, args.iters, args.min_gap)
    cols = ["iter", "residual", "defect", "violations", "mean"]
    out.table("zeroone", cols, [tuple(r[c] for c in cols) for r in rows],
              {"init": args.init, "grid": args.grid})
    if args.snapshot:
        if out.to_stdout:
            raise UsageError("--snapshot needs --out")
        (Path(cfg.output_dir) / "zeroone_grid.csv").write_text(final.to_csv(out.header()))
    if args.plot:
        from . import plotting
        plotting.zeroone_trace(rows, out.figure_path("zeroone"))
    return EXIT_OK


# ---- parser ----------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=lambda s: int(s, 0))
    g.add_argument("--depth", type=int)
    g.add_argument("--samples", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--ppo", type=int, dest="points_per_oscillation",
                   help="quadrature points per kernel oscillation")
    g.add_argument("--K1", type=float)
    g.add_argument("--K2", type=float)
    g.add_argument("--C", type=float)
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--out", dest="output_dir", help="output directory (default: stdout)")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--plot", action="store_true", help="also write PNG figures")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="homeofourier",
        description="Random homeomorphisms of [0,1] and Fourier partial sums of f o phi.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="sample phi on the dyadic grid")
    p.add_argument("--index", type=int, default=0, help="sample index within the seed")
    p.set_defaults(run=cmd_sample)

    p = sub.add_parser("eval", parents=[common], help="evaluate phi and f o phi")
    p.add_argument("--f", default="sin:1")
    p.add_argument("--x", help="comma separated points")
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("partial-sum", parents=[common], help="S_n series")
    p.add_argument("--f", default="sin:1")
    p.add_argument("--n", help="comma separated orders")
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--compose", action="store_true", help="use f o phi with a sampled phi")
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(run=cmd_partial_sum)

    p = sub.add_parser("verify", parents=[common], help="run a Monte Carlo check")
    p.add_argument("check", choices=verify.CHECKS)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--x", type=float, default=0.1)
    p.add_argument("--y", type=float, default=0.4)
    p.add_argument("--threshold", type=float)
    p.add_argument("--r-values")
    p.add_argument("--f", default="sin:1")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--r", type=float, default=0.125)
    p.add_argument("--interval", help="a,b; default -r,r")
    p.add_argument("--K-values")
    p.add_argument("--composed-depth", type=int)
    p.add_argument("--phi-i", type=float, default=0.3)
    p.add_argument("--eps")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("align", parents=[common], help="aligned scene and A(n, r)")
    p.add_argument("--n", default="8,16,32,64,128,256")
    p.add_argument("--s0", type=float, default=1.0)
    p.add_argument("--k", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--phi-i", type=float)
    p.add_argument("--phi-j", type=float, default=0.5)
    p.add_argument("--ratio-exponent", type=float, default=4.0)
    p.set_defaults(run=cmd_align)

    p = sub.add_parser("sweep", parents=[common], help="S_n(f o phi; 0) over an n grid")
    p.add_argument("--f", action="append", help="test function; repeatable")
    p.add_argument("--n-grid")
    p.add_argument("--sweep-depth", type=int, help="default ceil(log2 max n) + 10")
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("zeroone", parents=[common], help="iterate the averaging equation")
    p.add_argument("--init", default="const:0.5")
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--min-gap", type=float, default=0.0)
    p.add_argument("--snapshot", action="store_true", help="write the final grid too")
    p.set_defaults(run=cmd_zeroone)
    return parser


_CONFIG_KEYS = ("seed", "depth", "samples", "workers", "points_per_oscillation", "K1", "K2",
                "C", "output_dir", "format")


def _strip_execution_flags(argv: list[str]) -> list[str]:
    """Drop --workers and --out from the recorded command line."""
    kept, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("--workers", "--out"):
            skip = True
            continue
        if tok.startswith(("--workers=", "--out=")):
            continue
        kept.append(tok)
    return kept


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
        cfg = build_config(args.config, overrides)
    except ConfigError as e:
        for problem in e.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out = Output(cfg, ["homeofourier"] + _strip_execution_flags(argv))
    try:
        return args.run(cfg, args, out)
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
