"""Campaign orchestration: configuration, power and distance sweeps, persistence, plot data.

Two seeds are derived from the master seed. The optimization seed drives every
search (GSS parameters, PS prior); the evaluation seed, with ``eval_n_symbols``
symbols, re-evaluates every reported point, so reported MI is not biased by the
search. Both seeds are shared by all constellations, powers and distances.
"""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from .channel import FiberParams, SSFMConfig
from .constellation import (
    Constellation,
    ShapingConfig,
    build_gss,
    export_constellation,
    load_constellation_file,
    pm16qam,
)
from .exceptions import ConfigError
from .metrics import MIEstimate, papr_symbols
from .noise import NoiseBudget
from .optimizer import GSSSearchConfig, PatternSearchConfig, optimize_gss, optimize_ps_prior
from .system import SystemConfig, simulate_link
from .txdsp import SYMBOL_RATE_400ZR, PSDistribution, PulseShapeConfig, ps_pm16qam_constellation

KINDS = ("pm16qam", "ps-pm16qam", "gss", "file")

OPT_STREAM, EVAL_STREAM = 0, 1


class SweepError(RuntimeError):
    """Every point of a sweep failed."""


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class ConstellationSpec:
    """One constellation in a campaign.

    ``kind="file"`` loads ``source``; ``kind="gss"`` is optimized per distance
    with ``m`` bits and ``k`` shells; ``kind="ps-pm16qam"`` optimizes its
    amplitude prior per operating point.
    """

    kind: str
    source: str | None = None
    label: str | None = None
    m: int = 8
    k: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown constellation kind {self.kind!r}")
        if self.kind == "file":
            if not self.source:
                raise ConfigError("file constellations need a source path")
            if not Path(self.source).is_file():
                raise ConfigError(f"constellation file {self.source!r} does not exist")
        if self.kind == "gss":
            ShapingConfig(self.m, self.k)

    @property
    def id(self) -> str:
        if self.label:
            return self.label
        if self.kind == "gss":
            return f"gss-{self.k}"
        if self.kind == "file":
            return Path(self.source).stem
        return self.kind


@dataclass(frozen=True)
class OptimizerSettings:
    max_evals: int = 20000
    initial_mesh: float = 0.25
    expand_factor: float = 2.0
    contract_factor: float = 0.5
    mesh_tolerance: float = 1e-4
    poll_order: str = "success"
    complete_poll: bool = False
    surrogate_evals: int = 4000
    refine_initial_mesh: float = 0.0625
    restarts: int = 0

    def search_config(self) -> GSSSearchConfig:
        ps = PatternSearchConfig(
            initial_mesh=self.initial_mesh,
            expand_factor=self.expand_factor,
            contract_factor=self.contract_factor,
            mesh_tolerance=self.mesh_tolerance,
            max_evals=self.max_evals,
            poll_order=self.poll_order,
            complete_poll=self.complete_poll,
        )
        return GSSSearchConfig(
            search=ps,
            surrogate_evals=self.surrogate_evals,
            refine_initial_mesh=self.refine_initial_mesh,
            restarts=self.restarts,
        )


@dataclass(frozen=True)
class LinkSweepConfig:
    """Everything a campaign needs; see ``quick_config`` and ``full_config``."""

    distances_km: tuple = tuple(range(100, 201, 10))
    powers_dbm: tuple = tuple(range(6, 19))
    constellations: tuple = (
        ConstellationSpec("pm16qam"),
        ConstellationSpec("ps-pm16qam"),
        ConstellationSpec("gss"),
    )
    seed: int = 1
    n_symbols: int = 2**17
    eval_n_symbols: int = 2**20
    refine_step_db: float | None = None
    ps_grid: tuple = tuple(np.round(np.linspace(0.0, 0.5, 11), 10))
    symbol_rate: float = SYMBOL_RATE_400ZR
    fiber: FiberParams = field(default_factory=FiberParams)
    ssfm: SSFMConfig = field(default_factory=SSFMConfig)
    pulse: PulseShapeConfig = field(default_factory=PulseShapeConfig)
    noise: NoiseBudget = field(default_factory=NoiseBudget)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    workers: int = 1
    profile: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "distances_km", tuple(float(d) for d in self.distances_km))
        object.__setattr__(self, "powers_dbm", tuple(float(p) for p in self.powers_dbm))
        object.__setattr__(self, "ps_grid", tuple(float(p) for p in self.ps_grid))
        object.__setattr__(self, "constellations", tuple(self.constellations))
        if not self.distances_km or not self.powers_dbm:
            raise ConfigError("distance and power grids must be nonempty")
        if not self.constellations:
            raise ConfigError("at least one constellation is required")
        if any(d <= 0 for d in self.distances_km):
            raise ConfigError("distances must be positive")
        if self.n_symbols < 1024 or self.eval_n_symbols < 1024:
            raise ConfigError("need at least 1024 symbols per evaluation")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        ids = [c.id for c in self.constellations]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"constellation ids must be unique, got {ids}")

    @property
    def refine_step(self) -> float:
        if self.refine_step_db is not None:
            return float(self.refine_step_db)
        p = sorted(set(self.powers_dbm))
        return 0.5 * min(np.diff(p)) if len(p) > 1 else 0.5

    def system(self, distance_km, power_dbm, n_symbols=None) -> SystemConfig:
        return SystemConfig(
            distance_km=float(distance_km),
            power_dbm=float(power_dbm),
            n_symbols=self.n_symbols if n_symbols is None else n_symbols,
            symbol_rate=self.symbol_rate,
            fiber=self.fiber,
            ssfm=self.ssfm,
            pulse=self.pulse,
            noise=self.noise,
        )

    def opt_seed(self):
        return [self.seed, OPT_STREAM]

    def eval_seed(self):
        return [self.seed, EVAL_STREAM]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["constellations"] = [dataclasses.asdict(c) for c in self.constellations]
        for key in ("distances_km", "powers_dbm", "ps_grid"):
            d[key] = list(d[key])
        return d

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form; the worker count is excluded."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> LinkSweepConfig:
        d = dict(d)
        sections = {
            "fiber": FiberParams,
            "ssfm": SSFMConfig,
            "pulse": PulseShapeConfig,
            "noise": NoiseBudget,
            "optimizer": OptimizerSettings,
        }
        for key, sub in sections.items():
            if key in d and not isinstance(d[key], sub):
                d[key] = _build(sub, d[key] or {}, key)
        if "constellations" in d:
            d["constellations"] = tuple(
                c if isinstance(c, ConstellationSpec) else _build(ConstellationSpec, c, "constellations")
                for c in d["constellations"]
            )
        return _build(cls, d, "config")


def _build(cls, d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    d = dict(d)
    if cls is FiberParams and "dispersion_ps_nm_km" in d:
        from .channel import dispersion_to_beta2

        d["beta2"] = dispersion_to_beta2(float(d.pop("dispersion_ps_nm_km")))
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where!r}: {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {where!r} section: {exc}") from exc


QUICK_OVERRIDES = {
    "profile": "quick",
    "distances_km": [100, 120, 140, 160, 180, 200],
    "powers_dbm": [6, 8, 10, 12, 14, 16, 18],
    "n_symbols": 2**14,
    "eval_n_symbols": 2**15,
    "ssfm": {"max_step_km": 4.0, "max_nl_phase_rad": 1e-2},
    "optimizer": {"max_evals": 2000},
}


def full_config(**overrides) -> LinkSweepConfig:
    return LinkSweepConfig.from_dict(_merge(LinkSweepConfig().to_dict(), overrides))


def quick_config(**overrides) -> LinkSweepConfig:
    return full_config(**_merge(QUICK_OVERRIDES, overrides))


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, quick=False, overrides=None) -> LinkSweepConfig:
    """Profile defaults, then the YAML file at ``path``, then ``overrides``.

    ``quick=True`` (or ``profile: quick`` in the file) starts from the quick profile.
    """
    user = {}
    if path is not None:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    profile = "quick" if quick else user.get("profile", "full")
    if profile not in ("quick", "full"):
        raise ConfigError(f"unknown profile {profile!r}")
    base = LinkSweepConfig().to_dict()
    if profile == "quick":
        base = _merge(base, QUICK_OVERRIDES)
    merged = _merge(_merge(base, user), overrides or {})
    merged["profile"] = profile
    return LinkSweepConfig.from_dict(merged)


def dump_config(cfg: LinkSweepConfig, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)
    return path


# --- results and persistence --------------------------------------------------


@dataclass
class SweepResult:
    """One evaluated operating point.

    ``kind`` is ``"power"`` for a power-sweep point and ``"optimum"`` for the
    record at the optimal launch power of a distance sweep.
    """

    constellation_id: str
    distance_km: float
    power_dbm: float
    mi: MIEstimate | None
    papr_symbol: float | None = None
    papr_waveform_db: float | None = None
    wall_time_s: float = 0.0
    kind: str = "power"
    status: str = "ok"
    error: str | None = None
    config_hash: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def mi_value(self) -> float:
        return self.mi.mi_bits_per_4d if self.mi is not None else math.nan

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mi"] = None if self.mi is None else self.mi.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SweepResult:
        d = dict(d)
        if d.get("mi") is not None:
            d["mi"] = MIEstimate(**d["mi"])
        return cls(**d)


class ResultStore:
    """Append-only JSON-lines file; every record is flushed to disk on write."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: SweepResult):
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def extend(self, records):
        for r in records:
            self.append(r)

    def load(self) -> list:
        return load_results(self.path)


def load_results(path) -> list:
    with open(path) as fh:
        return [SweepResult.from_dict(json.loads(line)) for line in fh if line.strip()]


def results_table(results, include_timing=False) -> list:
    """Flat rows (dicts) for CSV output; wall time is left out unless asked for."""
    rows = []
    for r in results:
        row = {
            "constellation": r.constellation_id,
            "kind": r.kind,
            "distance_km": r.distance_km,
            "power_dbm": r.power_dbm,
            "mi": r.mi_value,
            "stderr": r.mi.stderr if r.mi else math.nan,
            "papr_symbol": r.papr_symbol,
            "papr_waveform_db": r.papr_waveform_db,
            "status": r.status,
        }
        if include_timing:
            row["wall_time_s"] = r.wall_time_s
        rows.append(row)
    return rows


def write_table(rows, path) -> Path:
    path = Path(path)
    if not rows:
        raise ConfigError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return path


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


# --- sweeps -------------------------------------------------------------------

Evaluator = Callable[[Constellation, SystemConfig, object], object]


def _as_provider(constellation):
    """Normalize a constellation or a per-power factory to ``power -> (C, extra)``."""
    if isinstance(constellation, Constellation):
        return lambda power: (constellation, {})
    return constellation


def run_power_sweep(
    cfg: LinkSweepConfig,
    constellation,
    distance_km,
    constellation_id=None,
    powers=None,
    store: ResultStore | None = None,
    evaluator: Evaluator = simulate_link,
    kind="power",
) -> list:
    """Evaluate ``constellation`` at every power on the evaluation seed.

    ``constellation`` is a ``Constellation`` or a callable ``power -> (C, extra)``
    for constellations that are re-optimized per power. A failure at one power
    is recorded with ``status="failed"`` and the sweep continues. Each record is
    written to ``store`` before the next point starts.
    """
    provider = _as_provider(constellation)
    powers = cfg.powers_dbm if powers is None else powers
    cid = constellation_id or getattr(constellation, "name", "constellation")
    chash = cfg.hash()
    out = []
    for p in powers:
        t0 = time.perf_counter()
        try:
            C, extra = provider(float(p))
            res = evaluator(C, cfg.system(distance_km, p, cfg.eval_n_symbols), cfg.eval_seed())
            rec = SweepResult(
                cid,
                float(distance_km),
                float(p),
                res.mi,
                papr_symbols(C),
                res.papr_waveform_db,
                time.perf_counter() - t0,
                kind=kind,
                config_hash=chash,
                extra=dict(extra),
            )
        except Exception as exc:  # isolate the failure to this point
            rec = SweepResult(
                cid,
                float(distance_km),
                float(p),
                None,
                wall_time_s=time.perf_counter() - t0,
                kind=kind,
                status="failed",
                error=f"{type(exc).__name__}: {exc}",
                config_hash=chash,
            )
        if store is not None:
            store.append(rec)
        out.append(rec)
    return out


def best_record(records):
    """Highest MI among successful records; ties go to the lowest power."""
    ok = [r for r in records if r.ok]
    if not ok:
        return None
    return max(ok, key=lambda r: (r.mi_value, -r.power_dbm))


def find_optimal_launch_power(
    cfg: LinkSweepConfig,
    constellation,
    distance_km,
    constellation_id=None,
    store: ResultStore | None = None,
    evaluator: Evaluator = simulate_link,
    powers=None,
):
    """Coarse power sweep, then one 3-point refinement around the coarse argmax.

    Returns ``(P*, MIEstimate at P*, records)``. Ties go to the lowest power.

    Raises
    ------
    ConfigError
        Fewer than 3 powers in the grid.
    SweepError
        Every coarse point failed.
    """
    powers = sorted(set(cfg.powers_dbm if powers is None else (float(p) for p in powers)))
    if len(powers) < 3:
        raise ConfigError("the power grid needs at least 3 points")
    records = run_power_sweep(
        cfg, constellation, distance_km, constellation_id, powers, store, evaluator
    )
    coarse = best_record(records)
    if coarse is None:
        raise SweepError(f"all points failed for {constellation_id} at {distance_km} km")
    step = cfg.refine_step
    local = [coarse.power_dbm - step, coarse.power_dbm + step]
    local = [p for p in local if not any(math.isclose(p, q) for q in powers)]
    records += run_power_sweep(
        cfg, constellation, distance_km, constellation_id, local, store, evaluator
    )
    best = best_record(records)
    return best.power_dbm, best.mi, records


def _optimum_record(cfg, best: SweepResult, extra=None) -> SweepResult:
    return dataclasses.replace(best, kind="optimum", extra={**best.extra, **(extra or {})})


def _ps_provider(cfg, distance_km):
    def provider(power):
        sys = cfg.system(distance_km, power)
        best, mi, table = optimize_ps_prior(sys, cfg.opt_seed(), cfg.ps_grid)
        return ps_pm16qam_constellation(PSDistribution(best)), {"p3": best, "opt_mi": mi}

    return provider


def _load_spec(spec: ConstellationSpec) -> Constellation:
    if spec.kind == "pm16qam":
        return pm16qam()
    if spec.kind == "file":
        return load_constellation_file(spec.source)
    raise ConfigError(f"{spec.kind} constellations are optimized, not loaded")


def optimize_gss_at(cfg, spec, distance_km, power_dbm, evaluator=simulate_link, x0=None):
    """Optimize a GSS constellation at one operating point on the optimization seed.

    The AWGN surrogate stage uses the effective noise variance that PM-16QAM
    sees at the same point.
    """
    sys = cfg.system(distance_km, power_dbm)
    shaping = ShapingConfig(spec.m, spec.k)
    sigma2 = None
    if x0 is None:
        sigma2 = evaluator(pm16qam(), sys, cfg.opt_seed()).mi.sigma2
    result = optimize_gss(
        sys,
        cfg.opt_seed(),
        shaping,
        cfg.optimizer.search_config(),
        x0=x0,
        surrogate_sigma2=sigma2,
    )
    C = build_gss(result.params, shaping, name=f"{spec.id}@{distance_km:g}km,{power_dbm:g}dBm")
    return C, result


def _distance_job(cfg: LinkSweepConfig, distance_km, out_dir, evaluator, store):
    """All constellations at one distance; returns the records in a fixed order."""
    records = []
    ref = None
    tag = f"d{distance_km:g}"

    def reference():
        nonlocal ref
        if ref is None:
            spec = next((c for c in cfg.constellations if c.kind == "pm16qam"), None)
            cid = spec.id if spec is not None else "pm16qam-reference"
            p, mi, recs = find_optimal_launch_power(
                cfg, pm16qam(), distance_km, cid, store if spec is not None else None, evaluator
            )
            ref = (p, mi, recs)
        return ref

    for spec in cfg.constellations:
        t0 = time.perf_counter()
        try:
            if spec.kind == "pm16qam":
                p, mi, recs = reference()
                extra = {}
            elif spec.kind == "file":
                p, mi, recs = find_optimal_launch_power(
                    cfg, _load_spec(spec), distance_km, spec.id, store, evaluator
                )
                extra = {}
            elif spec.kind == "ps-pm16qam":
                p, mi, recs = find_optimal_launch_power(
                    cfg, _ps_provider(cfg, distance_km), distance_km, spec.id, store, evaluator
                )
                extra = {}
            else:
                p_ref = reference()[0]
                C, opt = optimize_gss_at(cfg, spec, distance_km, p_ref, evaluator)
                extra = {
                    "p_opt_dbm": p_ref,
                    "opt_mi": opt.mi,
                    "n_evals": opt.search.n_evals,
                    "params": [float(v) for v in opt.params],
                }
                if out_dir is not None:
                    export_constellation(C, Path(out_dir) / f"{spec.id}_{tag}.txt")
                    opt.search.write_trace(Path(out_dir) / f"{spec.id}_{tag}_trace.csv")
                powers = sorted(set(cfg.powers_dbm) | {p_ref})
                p, mi, recs = find_optimal_launch_power(
                    cfg, C, distance_km, spec.id, store, evaluator, powers=powers
                )
                at_ref = next(r for r in recs if r.ok and math.isclose(r.power_dbm, p_ref))
                extra["mi_at_p_opt"] = at_ref.mi_value
                extra["stderr_at_p_opt"] = at_ref.mi.stderr
        except Exception as exc:
            rec = SweepResult(
                spec.id,
                float(distance_km),
                math.nan,
                None,
                wall_time_s=time.perf_counter() - t0,
                kind="optimum",
                status="failed",
                error=f"{type(exc).__name__}: {exc}",
                config_hash=cfg.hash(),
            )
            if store is not None:
                store.append(rec)
            records.append(rec)
            continue
        records.extend(recs)
        best = next(r for r in recs if r.ok and r.power_dbm == p and r.mi == mi)
        opt_rec = _optimum_record(cfg, best, extra)
        if store is not None:
            store.append(opt_rec)
        records.append(opt_rec)
    return records


def run_distance_sweep(
    cfg: LinkSweepConfig, out_dir=None, evaluator: Evaluator = simulate_link
) -> list:
    """Optimal-launch-power MI for every constellation and distance.

    Distances are independent jobs. With ``cfg.workers > 1`` they run in a
    process pool; records are persisted in distance order either way, so the
    output does not depend on the worker count.
    """
    store = ResultStore(Path(out_dir) / "results.jsonl") if out_dir is not None else None
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    results = []
    if cfg.workers == 1:
        for d in cfg.distances_km:
            results += _distance_job(cfg, d, out_dir, evaluator, store)
    else:
        with concurrent.futures.ProcessPoolExecutor(cfg.workers) as pool:
            futures = [
                pool.submit(_distance_job, cfg, d, out_dir, evaluator, None) for d in cfg.distances_km
            ]
            for fut in futures:
                recs = fut.result()
                if store is not None:
                    store.extend(recs)
                results += recs
    return results


def distance_table(results) -> list:
    """One row per (constellation, distance) from the optimum records."""
    rows = []
    for r in results:
        if r.kind != "optimum":
            continue
        rows.append(
            {
                "constellation": r.constellation_id,
                "distance_km": r.distance_km,
                "p_star_dbm": r.power_dbm,
                "mi": r.mi_value,
                "stderr": r.mi.stderr if r.mi else math.nan,
                "papr_symbol": r.papr_symbol if r.papr_symbol is not None else math.nan,
                "papr_waveform_db": r.papr_waveform_db if r.papr_waveform_db is not None else math.nan,
                "status": r.status,
            }
        )
    return rows


def reach_km(distances, mis, threshold) -> float | None:
    """Distance at which MI first falls below ``threshold`` (linear interpolation).

    Returns ``None`` when the curve never crosses the threshold from above.
    """
    order = np.argsort(distances)
    d = np.asarray(distances, dtype=float)[order]
    m = np.asarray(mis, dtype=float)[order]
    for i in range(len(d) - 1):
        if m[i] >= threshold > m[i + 1]:
            return float(d[i] + (m[i] - threshold) * (d[i + 1] - d[i]) / (m[i] - m[i + 1]))
    return None


# --- plot data ----------------------------------------------------------------


def emit_plot_data(results, axis, out_dir, config_hash, distance_km=None) -> Path:
    """Write one ``x,mi,stderr`` CSV per constellation plus ``manifest.json``.

    ``axis="distance"`` uses the optimum records; ``axis="power"`` uses the
    power-sweep records at ``distance_km`` (which may be omitted when the
    results hold a single distance).

    Raises
    ------
    ConfigError
        No usable records, or a record carries a different config hash.
    """
    results = list(results)
    if not results:
        raise ConfigError("no results to emit")
    stale = {r.config_hash for r in results} - {config_hash}
    if stale:
        raise ConfigError(f"results carry config hash {sorted(stale)}, expected {config_hash}")
    if axis == "distance":
        chosen = [r for r in results if r.kind == "optimum" and r.ok]
        key = "distance_km"
    elif axis == "power":
        chosen = [r for r in results if r.kind == "power" and r.ok]
        distances = sorted({r.distance_km for r in chosen})
        if distance_km is None:
            if len(distances) != 1:
                raise ConfigError(f"results span distances {distances}; pick one")
            distance_km = distances[0]
        chosen = [r for r in chosen if math.isclose(r.distance_km, distance_km)]
        key = "power_dbm"
    else:
        raise ConfigError(f"unknown axis {axis!r}")
    if not chosen:
        raise ConfigError("no successful records for this axis")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for cid in sorted({r.constellation_id for r in chosen}):
        rows = sorted((r for r in chosen if r.constellation_id == cid), key=lambda r: getattr(r, key))
        name = f"{axis}_{cid}.csv"
        with open(out_dir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "mi", "stderr"])
            for r in rows:
                writer.writerow([repr(float(getattr(r, key))), repr(r.mi_value), repr(r.mi.stderr)])
        files[cid] = name
    manifest = {"axis": axis, "config_hash": config_hash, "files": files}
    if axis == "power":
        manifest["distance_km"] = distance_km
    path = out_dir / f"manifest_{axis}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_plot_csv(path) -> np.ndarray:
    """Rows of ``(x, mi, stderr)`` from a plot-data CSV."""
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "mi", "stderr"]:
            raise ConfigError(f"{path}: unexpected header {header}")
        return np.array([[float(v) for v in row] for row in reader])
