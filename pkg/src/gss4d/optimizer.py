"""Derivative-free maximization over box-constrained parameters.

``pattern_search`` is a compass (coordinate) search: it polls ``x +- mesh * e_d``
for every coordinate, moves on improvement and expands the mesh, otherwise
contracts it. Points are clamped to the bounds before evaluation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .constellation import ShapingConfig, build_gss
from .exceptions import ConfigError, DegenerateError, DomainError
from .metrics import fit_noise_variance, mi_monte_carlo


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigError("lower and upper bounds must be 1-D and equally long")
        if np.any(lower >= upper):
            raise ConfigError("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


def gss_bounds(cfg: ShapingConfig) -> Bounds:
    """Radii in ``[0, 1]`` followed by angles in ``[0, pi/2]``."""
    lower = np.zeros(cfg.n_params)
    upper = np.concatenate([np.ones(cfg.k), np.full(3 * cfg.n_reduced, np.pi / 2)])
    return Bounds(lower, upper)


def init_halfway(b: Bounds) -> np.ndarray:
    return 0.5 * (b.lower + b.upper)


@dataclass(frozen=True)
class PatternSearchConfig:
    """Compass search settings.

    ``initial_mesh`` and ``mesh_tolerance`` are fractions of each parameter's
    bound width. ``poll_order`` is ``"consecutive"`` (always start at the first
    direction) or ``"success"`` (start at the last successful direction).
    ``complete_poll`` evaluates all directions and takes the best instead of
    accepting the first improvement.
    """

    initial_mesh: float = 0.25
    expand_factor: float = 2.0
    contract_factor: float = 0.5
    mesh_tolerance: float = 1e-4
    max_mesh: float = 1.0
    max_evals: int = 20000
    poll_order: str = "consecutive"
    complete_poll: bool = False

    def __post_init__(self):
        if not self.initial_mesh > 0 or not self.mesh_tolerance > 0:
            raise ConfigError("mesh sizes must be positive")
        if self.mesh_tolerance >= self.initial_mesh:
            raise ConfigError("mesh_tolerance must be below initial_mesh")
        if not self.expand_factor > 1:
            raise ConfigError("expand_factor must exceed 1")
        if not 0 < self.contract_factor < 1:
            raise ConfigError("contract_factor must lie in (0, 1)")
        if self.max_evals < 1:
            raise ConfigError("max_evals must be positive")
        if self.poll_order not in ("consecutive", "success"):
            raise ConfigError(f"unknown poll_order {self.poll_order!r}")


@dataclass
class PatternSearchResult:
    x: np.ndarray
    fun: float
    n_evals: int
    truncated: bool
    # one row per evaluation: (eval index, mesh size, best value so far)
    trace: list = field(default_factory=list)

    def write_trace(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eval", "mesh", "best_mi"])
            for row in self.trace:
                writer.writerow([row[0], repr(row[1]), repr(row[2])])
        return path


def pattern_search(
    f: Callable[[np.ndarray], float],
    x0,
    bounds: Bounds,
    cfg: PatternSearchConfig = PatternSearchConfig(),
    callback=None,
) -> PatternSearchResult:
    """Maximize ``f`` over ``bounds`` starting from ``x0``.

    Stops when the mesh falls to ``cfg.mesh_tolerance`` or after ``cfg.max_evals``
    evaluations; in the latter case ``truncated`` is set and the best point so far
    is returned.
    """
    x = np.array(x0, dtype=float)
    if x.shape != bounds.lower.shape:
        raise DomainError("x0 does not match the bounds")
    if not bounds.contains(x):
        raise DomainError("x0 lies outside the bounds")
    n = x.size
    directions = [(d, s) for d in range(n) for s in (1.0, -1.0)]
    mesh = cfg.initial_mesh
    best = float(f(x))
    n_evals = 1
    trace = [(n_evals, mesh, best)]
    start = 0
    truncated = False

    while mesh > cfg.mesh_tolerance:
        improved = False
        cand_x, cand_f, cand_k = None, best, None
        for i in range(len(directions)):
            if n_evals >= cfg.max_evals:
                truncated = True
                break
            k = (start + i) % len(directions)
            d, s = directions[k]
            trial = x.copy()
            trial[d] += s * mesh * bounds.width[d]
            trial = bounds.project(trial)
            if trial[d] == x[d]:
                continue
            value = float(f(trial))
            n_evals += 1
            if value > cand_f:
                cand_x, cand_f, cand_k = trial, value, k
                improved = True
                if not cfg.complete_poll:
                    trace.append((n_evals, mesh, cand_f))
                    break
            trace.append((n_evals, mesh, max(best, cand_f)))
        if improved:
            x, best = cand_x, cand_f
            mesh = min(mesh * cfg.expand_factor, cfg.max_mesh)
            if cfg.poll_order == "success":
                start = cand_k
        elif not truncated:
            mesh *= cfg.contract_factor
        if callback is not None:
            callback(x, best, mesh, n_evals)
        if truncated:
            break
    return PatternSearchResult(x=x, fun=best, n_evals=n_evals, truncated=truncated, trace=trace)


# --- GSS and PS objectives -------------------------------------------------


def objective(params, sys, seed, cfg: ShapingConfig = ShapingConfig(), assignment=None) -> float:
    """End-to-end MI (bits/4D) of the GSS constellation described by ``params``.

    Deterministic in ``(params, sys, seed)``; all random streams come from ``seed``.
    A parameter vector with every radius at zero carries no energy and scores 0.
    """
    from .system import evaluate_constellation

    try:
        C = build_gss(params, cfg, assignment)
    except DegenerateError:
        return 0.0
    return evaluate_constellation(C, sys, seed).mi_bits_per_4d


class AWGNSurrogate:
    """MI of a constellation on an AWGN channel with fixed noise samples.

    Used as a cheap stand-in for the fiber link at the same effective SNR:
    ``sigma2`` is the noise variance per real dimension of unit-energy symbols.
    """

    def __init__(self, sigma2, n_symbols, seed):
        rng = np.random.default_rng(seed)
        self.sigma2 = sigma2
        self.u = rng.random(n_symbols)
        self.noise = math.sqrt(sigma2) * rng.standard_normal((n_symbols, 4))

    def __call__(self, C) -> float:
        # inverse-CDF draws keep the symbol stream common across constellations
        cdf = np.cumsum(C.priors)
        idx = np.minimum(np.searchsorted(cdf, self.u * cdf[-1], side="right"), C.M - 1)
        y = C.points[idx] + self.noise
        sigma2 = fit_noise_variance(y, C.points[idx])
        return mi_monte_carlo(y, idx, C, sigma2).mi_bits_per_4d


@dataclass(frozen=True)
class GSSSearchConfig:
    """Two-stage GSS search.

    Stage one maximizes the AWGN surrogate from the halfway point for at most
    ``surrogate_evals`` evaluations (0 skips it); stage two runs ``search`` on the
    full link objective from stage one's result with the mesh restarted at
    ``refine_initial_mesh``. ``restarts`` repeats stage two from its own optimum.
    """

    search: PatternSearchConfig = PatternSearchConfig(max_evals=20000, poll_order="success")
    surrogate_evals: int = 4000
    refine_initial_mesh: float = 0.0625
    restarts: int = 0


@dataclass
class GSSResult:
    params: np.ndarray
    mi: float
    surrogate: PatternSearchResult | None
    search: PatternSearchResult
    x0: np.ndarray

    @property
    def trace(self):
        return self.search.trace


def optimize_gss(
    sys,
    seed,
    cfg: ShapingConfig = ShapingConfig(),
    search: GSSSearchConfig = GSSSearchConfig(),
    x0=None,
    surrogate_sigma2=None,
    assignment=None,
) -> GSSResult:
    """Maximize the link MI over GSS parameters with common random numbers.

    ``x0`` warm-starts the search (no surrogate stage). Otherwise the search starts
    halfway between the bounds; if ``surrogate_sigma2`` is given, the surrogate
    stage runs first at that noise variance, and the link search starts from
    whichever of the halfway point and the surrogate optimum scores higher on
    the link, so the result never falls below the halfway initialization.
    """
    b = gss_bounds(cfg)
    start = init_halfway(b) if x0 is None else b.project(np.asarray(x0, dtype=float))
    surrogate_result = None
    ps = search.search
    if x0 is None and surrogate_sigma2 is not None and search.surrogate_evals > 0:
        surrogate = AWGNSurrogate(surrogate_sigma2, sys.n_symbols, seed)

        def f_sur(p):
            try:
                return surrogate(build_gss(p, cfg, assignment))
            except DegenerateError:
                return 0.0

        surrogate_result = pattern_search(
            f_sur, start, b, replace(ps, max_evals=search.surrogate_evals)
        )
        ps = replace(ps, initial_mesh=max(search.refine_initial_mesh, ps.mesh_tolerance * 2))
    elif x0 is not None:
        ps = replace(ps, initial_mesh=max(search.refine_initial_mesh, ps.mesh_tolerance * 2))

    def f(p):
        return objective(p, sys, seed, cfg, assignment)

    if surrogate_result is not None:
        warm = surrogate_result.x
        if f(warm) < f(start):
            # the surrogate optimum is worse on the link than the plain start
            ps = search.search
        else:
            start = warm
    result = pattern_search(f, start, b, ps)
    for _ in range(search.restarts):
        again = pattern_search(f, result.x, b, ps)
        if again.fun <= result.fun:
            break
        offset = result.trace[-1][0]
        again.trace = result.trace + [(offset + e, m, v) for e, m, v in again.trace]
        again.n_evals += result.n_evals
        result = again
    return GSSResult(result.x, result.fun, surrogate_result, result, start)


def optimize_ps_prior(sys, seed, grid=None):
    """Grid search for the PS-PM-16QAM amplitude probability ``p3``.

    ``p3 = 0.5`` (uniform PM-16QAM) is always added to the grid. Returns
    ``(best_p3, best_mi, table)`` where ``table`` maps each ``p3`` to its MI.
    Ties go to the smallest ``p3``.
    """
    from .system import evaluate_constellation
    from .txdsp import PSDistribution, ps_pm16qam_constellation

    if grid is None:
        grid = np.linspace(0.0, 0.5, 11)
    grid = [float(g) for g in np.ravel(grid)]
    if not grid:
        raise ConfigError("empty p3 grid")
    if min(grid) < 0 or max(grid) > 1:
        raise ConfigError("p3 grid must lie in [0, 1]")
    grid = sorted(set(grid) | {0.5})
    table = {}
    for p3 in grid:
        C = ps_pm16qam_constellation(PSDistribution(p3))
        table[p3] = evaluate_constellation(C, sys, seed).mi_bits_per_4d
    best = max(grid, key=lambda p: (table[p], -p))
    return best, table[best], table
