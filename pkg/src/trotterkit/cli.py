"""Command line front end.

Subcommands: list, eval, optimize, bench, sweep, correlate.  Every command
accepts --seed, --output-dir and --format; files are written with a
``<name>.manifest.json`` beside them.  Exit codes: 0 success, 1 partial
failure, 2 configuration error.  TROTTERKIT_THREADS sets the number of
worker processes used by multistart campaigns.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, DomainError, OptimizationError, SchemeValidationError
from .error_functions import eff_n, origin_distance
from .scheme_core import compute_error_coefficients, validate_order_cycles

THREADS_ENV = "TROTTERKIT_THREADS"
EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("trotterkit")


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 1")
    return n


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _weights(text: str | None):
    if not text:
        return None
    out = {}
    for item in text.split(","):
        k, _, v = item.partition(":")
        out[int(k)] = float(v)
    return out


class Output:
    """Collects written files for the manifest."""

    def __init__(self, args, subcommand: str):
        self.dir = Path(args.output_dir) if args.output_dir else None
        self.format = args.format
        self.subcommand = subcommand
        self.started = time.time()
        self.paths: list[Path] = []
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, rows, config: dict, seeds: dict, columns=None, counters=None):
        from .benchmarks.results import write_manifest, write_table

        if not self.dir:
            return None
        path = write_table(rows, self.dir / name, self.format, columns)
        write_manifest(self.dir / f"{name}.manifest.json", self.subcommand, config, seeds,
                       [path], self.started, counters)
        self.paths.append(path)
        return path


def _scheme_row(s) -> dict:
    from .library import scheme_metadata

    order = s.order or 2
    meta = scheme_metadata(s, order)
    return dict(name=s.name, n=order, q=s.q, err_n=meta.get("err_n", float("nan")),
                eff_n=meta.get("eff_n", float("nan")), xbar=meta["xbar"], provenance=s.source)


def cmd_list(args) -> int:
    from .library import list_schemes

    rows = [_scheme_row(s) for s in list_schemes(args.scheme_dir)]
    cols = ("name", "n", "q", "err_n", "eff_n", "xbar", "provenance")
    print("  ".join(f"{c:>20}" if i == 0 else f"{c:>12}" for i, c in enumerate(cols)))
    for r in rows:
        cells = [f"{r['name']:>20}", f"{r['n']:>12}", f"{r['q']:>12}"]
        cells += [f"{float(r['err_n']):>12.5e}", f"{float(r['eff_n']):>12.6g}", f"{float(r['xbar']):>12.6g}"]
        cells.append(f"{r['provenance']:>12}")
        print("  ".join(cells))
    Output(args, "list").table("catalog", rows, {"scheme_dir": args.scheme_dir}, {}, cols)
    return EXIT_OK


def evaluate(scheme, order: int | None = None) -> dict:
    """Coefficients and figures of merit of one scheme as plain data."""
    coeffs = compute_error_coefficients(scheme)
    order = order or scheme.order or 2
    report = {
        "name": scheme.name,
        "q": scheme.q,
        "order": order,
        "ramp_c": [complex(v).real if complex(v).imag == 0 else str(v) for v in scheme.ramp_c],
        "nu": float(np.real(coeffs.nu)),
        "sigma": float(np.real(coeffs.sigma)),
        "coefficients": {str(d): [float(np.real(v)) for v in coeffs.degree(d)] for d in (3, 5, 7)},
        "err": {str(k): float(np.linalg.norm(coeffs.leading(k))) for k in (2, 4, 6)},
        "xbar": origin_distance(scheme),
        "basis_id": coeffs.basis_id,
    }
    residuals = {"nu": abs(coeffs.nu - 1), "sigma": abs(coeffs.sigma - 1)}
    for d in range(3, order + 1, 2):
        residuals[str(d)] = float(np.max(np.abs(coeffs.degree(d))))
    report["constraint_residuals"] = {k: float(v) for k, v in residuals.items()}
    if order in (2, 4, 6):
        report["err_n"] = report["err"][str(order)]
        report["eff_n"] = eff_n(report["err_n"], scheme.q, order)
    return report


def cmd_eval(args) -> int:
    from .library import resolve

    try:
        scheme = resolve(args.scheme, verify=not args.no_verify)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    report = evaluate(scheme, args.order)
    text = json.dumps(report, indent=2)
    print(text)
    out = Output(args, "eval")
    if out.dir:
        path = out.dir / f"eval-{scheme.name or 'scheme'}.json"
        path.write_text(text + "\n", encoding="utf-8")
        from .benchmarks.results import write_manifest

        write_manifest(out.dir / f"eval-{scheme.name or 'scheme'}.manifest.json", "eval",
                       {"scheme": args.scheme, "order": args.order}, {}, [path], out.started)
    return EXIT_OK


def _lm_config(args):
    from .optimizer import LMConfig

    cfg = LMConfig(
        weights=_weights(args.weights),
        n_starts=args.starts,
        rng_seed=args.seed,
        real_only=not args.complex,
        dedup_distance=args.dedup,
        max_iterations=args.max_iterations,
        workers=_threads(),
    )
    if args.sigma is not None:
        cfg = replace(cfg, init_sigma=args.sigma) if 0.5 <= args.sigma <= 2.0 else cfg.with_sigma(args.sigma)
    return cfg


def catalog_rows(catalog) -> list[dict]:
    rows = []
    for rank, c in enumerate(catalog.candidates):
        row = dict(rank=rank, label=c.label, q=c.q, n=c.order, err_n=c.err, eff_n=c.eff,
                   xbar=c.xbar, multiplicity=c.multiplicity, constraint_residual=c.constraint_residual,
                   start=c.start)
        for i, v in enumerate(c.scheme.ramp_c, 1):
            row[f"c_{i}"] = v if np.isrealobj(v) else str(v)
        rows.append(row)
    return rows


def cmd_optimize(args) -> int:
    from .library import save_scheme
    from .optimizer import multistart

    validate_order_cycles(args.n, args.q)
    cfg = _lm_config(args)
    catalog = multistart(args.q, args.n, cfg)
    rows = catalog_rows(catalog)
    for r in rows[: args.show]:
        print(f"{r['rank']:3d} {r['label']:>6}  Err_{args.n} = {r['err_n']:.10e}  "
              f"Eff_{args.n} = {r['eff_n']:.6g}  xbar = {r['xbar']:.6g}  x{r['multiplicity']}")
    print(f"{len(catalog)} distinct minima from {cfg.n_starts} starts "
          f"({len(catalog.failures)} failed)")
    out = Output(args, "optimize")
    out.table(f"catalog-n{args.n}-q{args.q}", rows, cfg.as_dict(), {"rng_seed": args.seed},
              counters={"starts": cfg.n_starts, "failed": len(catalog.failures),
                        "distinct": len(catalog)})
    if out.dir and args.save_schemes:
        for r, c in zip(rows, catalog.candidates):
            name = f"opt-n{args.n}-q{args.q}-{r['rank']}"
            save_scheme(c.scheme.with_meta(name=name), out.dir / f"{name}.json")
    return EXIT_OK if len(catalog) else EXIT_PARTIAL


def _schemes(args):
    from .library import BUILTIN_NAMES, resolve

    names = args.schemes.split(",") if args.schemes else list(BUILTIN_NAMES)
    out = []
    for n in names:
        s = resolve(n.strip())
        if (s.order or 2) <= 6:
            out.append(s)
    return out


def _heisenberg_config(args, cost=None):
    from .benchmarks import HeisenbergConfig

    jy = 0.0 if args.xz else 1.0
    return HeisenbergConfig(L=args.L, t=args.t, grouping=args.grouping, rng_seed=args.seed,
                            couplings=(1.0, jy, 1.0))


def _model(args):
    from .benchmarks import HeisenbergModel, OscillatorConfig, OscillatorModel

    if args.model == "heisenberg":
        cfg = _heisenberg_config(args)
        return HeisenbergModel(cfg), cfg
    cfg = OscillatorConfig(t=args.t if args.t is not None else 200.0)
    return OscillatorModel(cfg), cfg


def _defaults_for_model(args):
    if args.t is None:
        args.t = 10.0 if args.model == "heisenberg" else 200.0
    if getattr(args, "cost", None) is None:
        args.cost = 1000 if args.model == "heisenberg" else 6000


def _config_dict(cfg) -> dict:
    from dataclasses import asdict

    return asdict(cfg)


def cmd_bench(args) -> int:
    from .benchmarks.results import BENCH_COLUMNS
    from .benchmarks.sweeps import cost_sweep

    _defaults_for_model(args)
    model, cfg = _model(args)
    schemes = _schemes(args)
    results, failed = [], 0
    for s in schemes:
        try:
            results.extend(cost_sweep([s], model, [args.cost], args.omega0))
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            log.error("%s failed: %s", s.name, exc)
            failed += 1
    rows = [r for res in results for r in res.records()]
    for r in rows:
        print(f"{r['scheme']:>20}  n={r['order']}  q={r['q']:>2}  N_t={r['N_t']:>5}  "
              f"delta={r['delta']:.6e}")
    Output(args, "bench").table(f"bench-{args.model}-cost{args.cost}", rows,
                                dict(_config_dict(cfg), cost=args.cost, omega0=args.omega0),
                                {"field_seed": args.seed}, BENCH_COLUMNS + ("cost", "actual_cost"))
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep(args) -> int:
    from .benchmarks.results import BENCH_COLUMNS
    from .benchmarks.sweeps import chain_length_sweep, cost_sweep

    if args.kind == "chain":
        args.model = "heisenberg"
    _defaults_for_model(args)
    schemes = _schemes(args)
    out = Output(args, "sweep")
    if args.kind == "cost":
        model, cfg = _model(args)
        costs = _ints(args.costs) if args.costs else list(cfg.costs)
        results = cost_sweep(schemes, model, costs, args.omega0)
        for res in results:
            print(f"{res.scheme:>20}  n={res.order}  slope={res.slope:.3f}  window={res.window}")
        rows = [r for res in results for r in res.records()]
        out.table(f"sweep-cost-{args.model}-{args.grouping}", rows,
                  dict(_config_dict(cfg), costs=costs, omega0=args.omega0),
                  {"field_seed": args.seed}, BENCH_COLUMNS + ("cost", "actual_cost"),
                  {"slopes": {r.scheme: r.slope for r in results}})
    else:
        lengths = _ints(args.lengths)
        cost = args.cost if args.cost is not None else 500
        base = _heisenberg_config(args)
        table = chain_length_sweep(schemes, lengths, cost, base)
        for name, vals in table.deltas.items():
            print(f"{name:>20}  " + "  ".join(f"L={L}:{v:.4e}" for L, v in zip(lengths, vals)))
        out.table("sweep-chain", table.records(), dict(_config_dict(base), lengths=lengths, cost=cost),
                  {"field_seed": args.seed})
    return EXIT_OK


def cmd_correlate(args) -> int:
    from .benchmarks.sweeps import penalty_correlation_study
    from .library import load_scheme
    from .optimizer import LMConfig, multistart

    if args.catalog_dir:
        schemes = [load_scheme(p) for p in sorted(Path(args.catalog_dir).glob("*.json"))]
        schemes = [s for s in schemes if s.q == 14 and s.order == 6]
    else:
        cfg = LMConfig(n_starts=args.starts, rng_seed=args.seed, workers=_threads())
        cat = multistart(14, 6, cfg)
        schemes = [c.scheme for c in cat.candidates[: args.keep]]
    _defaults_for_model(args)
    model, mcfg = _model(args)
    r_grid = np.geomspace(args.r_min, args.r_max, args.r_count)
    study = penalty_correlation_study(schemes, r_grid, model, cost=args.cost)
    for row in study.records():
        print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    print(f"rho is largest at r = {study.r_best:.3e}")
    Output(args, "correlate").table("correlate", study.records(),
                                    dict(_config_dict(mcfg), r_grid=r_grid, cost=args.cost,
                                         n_schemes=len(schemes)), {"seed": args.seed})
    failed = any(np.isnan(v).any() for v in study.ratios.values())
    return EXIT_PARTIAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (fields, multistart)")
    common.add_argument("--output-dir", default=None, help="write results and manifests here")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--log-level", default="WARNING")

    p = argparse.ArgumentParser(prog="trotterkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("list", parents=[common], help="bundled schemes and their merit figures")
    s.add_argument("--scheme-dir", default=None, help="extra directory of scheme files")
    s.set_defaults(func=cmd_list)

    s = sub.add_parser("eval", parents=[common], help="coefficients of one scheme as JSON")
    s.add_argument("scheme", help="built-in name or path to a scheme file")
    s.add_argument("--order", type=int, default=None)
    s.add_argument("--no-verify", action="store_true", help="skip order verification on load")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("optimize", parents=[common], help="multistart two-phase search")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--starts", type=int, default=100)
    s.add_argument("--sigma", type=float, default=None)
    s.add_argument("--weights", default=None, help="e.g. 2:1,4:0.1")
    s.add_argument("--dedup", type=float, default=1e-8)
    s.add_argument("--max-iterations", type=int, default=5000)
    s.add_argument("--complex", action="store_true", help="search complex schemes")
    s.add_argument("--show", type=int, default=10)
    s.add_argument("--save-schemes", action="store_true")
    s.set_defaults(func=cmd_optimize)

    def model_flags(s, with_model=True):
        if with_model:
            s.add_argument("model", choices=("heisenberg", "oscillator"))
        s.add_argument("--L", type=int, default=6)
        s.add_argument("--t", type=float, default=None)
        s.add_argument("--grouping", choices=("local", "global"), default="local")
        s.add_argument("--xz", action="store_true", help="XZ model (J^y = 0)")
        s.add_argument("--schemes", default=None, help="comma-separated names or files")
        s.add_argument("--omega0", type=float, default=1.0)

    s = sub.add_parser("bench", parents=[common], help="Delta of every scheme at one cost")
    model_flags(s)
    s.add_argument("--cost", type=int, default=None)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", parents=[common], help="cost or chain-length sweep")
    s.add_argument("kind", choices=("cost", "chain"))
    s.add_argument("--model", choices=("heisenberg", "oscillator"), default="heisenberg")
    model_flags(s, with_model=False)
    s.add_argument("--costs", default=None, help="comma-separated cost grid")
    s.add_argument("--cost", type=int, default=None, help="fixed cost for chain sweeps")
    s.add_argument("--lengths", default="2,3,4,5,6,7")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("correlate", parents=[common], help="penalty-ratio correlation study")
    s.add_argument("--model", choices=("heisenberg", "oscillator"), default="heisenberg")
    model_flags(s, with_model=False)
    s.add_argument("--cost", type=int, default=None)
    s.add_argument("--catalog-dir", default=None, help="q=14 order-6 scheme files")
    s.add_argument("--starts", type=int, default=200)
    s.add_argument("--keep", type=int, default=20)
    s.add_argument("--r-min", type=float, default=1e-9)
    s.add_argument("--r-max", type=float, default=1e-2)
    s.add_argument("--r-count", type=int, default=15)
    s.set_defaults(func=cmd_correlate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DomainError, SchemeValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OptimizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
