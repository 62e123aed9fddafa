"""Cost sweeps, chain-length sweeps and the penalty/correlation study."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..error_functions import combined_error, experimental_efficiency, origin_distance, pearson
from ..errors import DomainError
from ..scheme_core import TrotterScheme, compute_error_coefficients
from .heisenberg import HeisenbergConfig, HeisenbergModel

log = logging.getLogger(__name__)

SLOPE_BAND = 0.4
PLATEAU_CHANGE = 0.05
MIN_WINDOW = 3


@dataclass(frozen=True)
class Row:
    cost: int
    N_t: int
    h: float
    delta: float
    eff_exp: float
    region: str = ""


@dataclass
class BenchmarkResult:
    scheme: str
    order: int
    q: int
    model: str
    grouping: str
    rows: list = field(default_factory=list)
    slope: float = math.nan
    window: tuple = ()
    skipped: list = field(default_factory=list)

    def records(self) -> list[dict]:
        return [dict(model=self.model, grouping=self.grouping, scheme=self.scheme,
                     order=self.order, q=self.q, N_t=r.N_t, h=r.h, delta=r.delta,
                     eff_exp=r.eff_exp, region_flag=r.region, cost=r.cost,
                     actual_cost=self.q * r.N_t)
                for r in self.rows]


def n_steps(cost: float, q: int) -> int:
    """N_t = max(1, round(cost / q))."""
    return max(1, int(round(cost / q)))


def local_slopes(costs, deltas) -> np.ndarray:
    c = np.log(np.asarray(costs, dtype=float))
    d = np.log(np.asarray(deltas, dtype=float))
    return np.diff(d) / np.diff(c)


def scaling_window(costs, deltas, band: float = SLOPE_BAND, min_points: int = MIN_WINDOW):
    """Largest contiguous window whose adjacent log-log slopes all lie
    within ``band`` of their median.  Returns (start, stop) point indices
    (stop exclusive) or None."""
    costs = np.asarray(costs, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    ok = (deltas > 0) & np.isfinite(deltas)
    best = None
    n = costs.size
    s = local_slopes(np.where(ok, costs, 1.0), np.where(ok, deltas, 1.0))
    for i in range(n):
        for j in range(n, i + min_points - 1, -1):
            if not ok[i:j].all():
                continue
            w = s[i:j - 1]
            if np.all(np.abs(w - np.median(w)) <= band):
                if best is None or (j - i) > (best[1] - best[0]):
                    best = (i, j)
                break
    return best


def fit_slope(costs, deltas) -> float:
    x = np.log(np.asarray(costs, dtype=float))
    y = np.log(np.asarray(deltas, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def plateau_flags(deltas, change: float = PLATEAU_CHANGE) -> np.ndarray:
    """True for the leading (low-cost) rows where Delta changes by less than
    ``change`` relative to the next row."""
    d = np.asarray(deltas, dtype=float)
    flags = np.zeros(d.size, dtype=bool)
    for i in range(d.size - 1):
        if abs(d[i + 1] - d[i]) < change * abs(d[i]):
            flags[i] = flags[i + 1] = True
        else:
            break
    return flags


def classify(result: BenchmarkResult) -> BenchmarkResult:
    costs = [result.q * r.N_t for r in result.rows]
    deltas = [r.delta for r in result.rows]
    regions = [""] * len(deltas)
    for i, f in enumerate(plateau_flags(deltas)):
        if f:
            regions[i] = "plateau"
    win = scaling_window(costs, deltas)
    if win is not None:
        i, j = win
        result.window = (costs[i], costs[j - 1])
        result.slope = fit_slope(costs[i:j], deltas[i:j])
        for k in range(i, j):
            regions[k] = regions[k] or "scaling"
    result.rows = [Row(r.cost, r.N_t, r.h, r.delta, r.eff_exp, reg or "transition")
                   for r, reg in zip(result.rows, regions)]
    return result


def cost_sweep(schemes, model, costs, omega0: float = 1.0) -> list[BenchmarkResult]:
    """Delta for every scheme at every nominal cost q * N_t, with the
    scaling region detected and fitted per scheme."""
    out = []
    for s in schemes:
        res = BenchmarkResult(s.name, s.order, s.q, model.tag, model.grouping)
        seen = set()
        for cost in costs:
            if cost < s.q:
                res.skipped.append((cost, f"cost {cost} below q = {s.q}"))
                continue
            N_t = n_steps(cost, s.q)
            if N_t in seen:
                continue
            seen.add(N_t)
            h = model.t / N_t
            delta = model.delta(s, N_t)
            eff = experimental_efficiency(delta, model.t, s.q, h, s.order or 2, omega0)
            res.rows.append(Row(int(cost), N_t, h, delta, eff))
        out.append(classify(res))
        log.info("%s: slope %.3f over %s", s.name, res.slope, res.window)
    return out


def relative_spread(values) -> float:
    """(max - min) / mean."""
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / v.mean())


@dataclass
class ChainLengthTable:
    lengths: tuple
    cost: int
    deltas: dict  # scheme name -> list over lengths

    def spread(self, name: str, lengths=None) -> float:
        idx = [self.lengths.index(L) for L in (lengths or self.lengths)]
        return relative_spread([self.deltas[name][i] for i in idx])

    def ranking(self, L: int) -> list[str]:
        i = self.lengths.index(L)
        return sorted(self.deltas, key=lambda n: self.deltas[n][i])

    def records(self) -> list[dict]:
        return [dict(scheme=n, L=L, cost=self.cost, delta=d[i])
                for n, d in self.deltas.items() for i, L in enumerate(self.lengths)]


def chain_length_sweep(schemes, lengths=(2, 3, 4, 5, 6, 7), cost: int = 500,
                       base: HeisenbergConfig = HeisenbergConfig()) -> ChainLengthTable:
    """Delta per (scheme, L) at a fixed cost; one field draw per L from the
    base seed, shared by all schemes."""
    from dataclasses import replace

    deltas = {s.name: [] for s in schemes}
    for L in lengths:
        model = HeisenbergModel(replace(base, L=L))
        for s in schemes:
            deltas[s.name].append(model.delta(s, n_steps(cost, s.q)))
    return ChainLengthTable(tuple(lengths), cost, deltas)


@dataclass
class PenaltyStudy:
    r_grid: np.ndarray
    rho: np.ndarray
    deltas: np.ndarray
    errs: np.ndarray
    xbars: np.ndarray
    ratios: dict  # label -> array over r_grid (nan where the run failed)
    r_best: float = math.nan

    def records(self) -> list[dict]:
        rows = []
        for i, r in enumerate(self.r_grid):
            row = dict(r=float(r), rho=float(self.rho[i]))
            for label, vals in self.ratios.items():
                row[f"ratio_{label}"] = float(vals[i])
            rows.append(row)
        return rows


def penalty_correlation_study(schemes, r_grid=None, model=None, N_t: int | None = None,
                              cost: int = 1000, n: int = 6, improve: int = 2,
                              config=None) -> PenaltyStudy:
    """Pearson rho between combined_error(r) and measured Delta over a set of
    schemes, and Delta(penalized)/Delta(original) for the best ``improve``
    schemes (by Err_n) re-optimized at each r."""
    from ..optimizer import LMConfig, optimize_penalized
    from ..errors import OptimizationError

    schemes = list(schemes)
    if len(schemes) < 3:
        raise DomainError("penalty study needs at least 3 schemes")
    r_grid = np.geomspace(1e-9, 1e-2, 15) if r_grid is None else np.asarray(r_grid, float)
    model = model or HeisenbergModel()
    config = config or LMConfig()

    def measure(s):
        return model.delta(s, N_t or n_steps(cost, s.q))

    errs = np.array([np.linalg.norm(compute_error_coefficients(s).leading(n)) for s in schemes])
    xbars = np.array([origin_distance(s) for s in schemes])
    deltas = np.array([measure(s) for s in schemes])
    rho = np.array([pearson([combined_error(e, x, r) for e, x in zip(errs, xbars)], deltas)
                    for r in r_grid])
    ratios = {}
    order = np.argsort(errs)
    for rank, idx in enumerate(order[:improve]):
        label = "global" if rank == 0 else f"local{rank}"
        seed = schemes[idx]
        vals = np.full(r_grid.size, np.nan)
        for i, r in enumerate(r_grid):
            try:
                cand = optimize_penalized(seed.q, n, float(r), seed, config)
            except OptimizationError as exc:
                log.warning("penalized run failed at r=%g: %s", r, exc)
                continue
            vals[i] = measure(cand.scheme) / deltas[idx]
        ratios[label] = vals
    return PenaltyStudy(r_grid, rho, deltas, errs, xbars, ratios, float(r_grid[np.argmax(rho)]))
