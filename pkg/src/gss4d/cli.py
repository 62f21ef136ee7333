"""Command line interface: ``gss4d <command>`` or ``python -m gss4d <command>``.

Every command accepts ``--config FILE`` (YAML), ``--quick`` (desk-scale
profile), ``--seed N`` (master seed) and ``--out DIR``. The resolved
configuration is written to ``DIR/config.yaml`` next to the outputs.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .constellation import (
    ShapingConfig,
    build_gss,
    export_constellation,
    load_constellation_file,
    pm16qam,
    validate_gss,
)
from .exceptions import ConfigError, ConstellationFormatError
from .metrics import papr_symbols
from .optimizer import gss_bounds, init_halfway, optimize_ps_prior
from .system import simulate_link
from .txdsp import PSDistribution, ps_pm16qam_constellation


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _constellations(text):
    specs = []
    for item in text.split(","):
        item = item.strip()
        if item.startswith("file:"):
            specs.append({"kind": "file", "source": item[5:]})
        elif item:
            specs.append({"kind": item})
    return specs


def _resolve(args) -> ex.LinkSweepConfig:
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "distances", None):
        over["distances_km"] = _floats(args.distances)
    if getattr(args, "powers", None):
        over["powers_dbm"] = _floats(args.powers)
    if getattr(args, "constellations", None):
        over["constellations"] = _constellations(args.constellations)
    if getattr(args, "max_evals", None) is not None:
        over["optimizer"] = {"max_evals": args.max_evals}
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    return ex.load_config(args.config, quick=args.quick, overrides=over)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fresh_store(out: Path) -> ex.ResultStore:
    path = out / "results.jsonl"
    if path.exists():
        path.unlink()
    return ex.ResultStore(path)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_optimize(args) -> int:
    cfg = _resolve(args)
    out = _outdir(args)
    ex.dump_config(cfg, out / "config.yaml")
    spec = next((c for c in cfg.constellations if c.kind == "gss"), ex.ConstellationSpec("gss"))
    if args.power is None:
        power, _, _ = ex.find_optimal_launch_power(cfg, pm16qam(), args.distance, "pm16qam")
    else:
        power = args.power
    C, result = ex.optimize_gss_at(cfg, spec, args.distance, power)
    export_constellation(C, out / f"{spec.id}.txt")
    result.search.write_trace(out / f"{spec.id}_trace.csv")
    sys_eval = cfg.system(args.distance, power, cfg.eval_n_symbols)
    gss_eval = simulate_link(C, sys_eval, cfg.eval_seed()).mi
    ref_eval = simulate_link(pm16qam(), sys_eval, cfg.eval_seed()).mi
    summary = {
        "config_hash": cfg.hash(),
        "distance_km": args.distance,
        "power_dbm": power,
        "opt_mi": result.mi,
        "n_evals": result.search.n_evals,
        "params": [float(v) for v in result.params],
        "gss": gss_eval.to_dict(),
        "pm16qam": ref_eval.to_dict(),
        "papr_symbol_gss": papr_symbols(C),
        "papr_symbol_pm16qam": papr_symbols(pm16qam()),
    }
    _write_json(out / "optimize.json", summary)
    print(
        f"{spec.id} at {args.distance:g} km, {power:g} dBm: MI {gss_eval.mi_bits_per_4d:.4f} "
        f"(PM-16QAM {ref_eval.mi_bits_per_4d:.4f}, stderr {ref_eval.stderr:.4f})"
    )
    return 0


def cmd_sweep_distance(args) -> int:
    cfg = _resolve(args)
    out = _outdir(args)
    ex.dump_config(cfg, out / "config.yaml")
    _fresh_store(out)
    results = ex.run_distance_sweep(cfg, out_dir=out)
    rows = ex.distance_table(results)
    ex.write_table(rows, out / "distance_table.csv")
    ex.write_table(ex.results_table(results), out / "results_table.csv")
    ok = [r for r in results if r.kind == "optimum" and r.ok]
    if ok:
        ex.emit_plot_data(results, "distance", out / "plot", cfg.hash())
    for row in rows:
        print(
            f"{row['constellation']:>12} {row['distance_km']:6.1f} km  P* {row['p_star_dbm']:5.1f} dBm"
            f"  MI {row['mi']:.4f} +- {row['stderr']:.4f}  {row['status']}"
        )
    return 0 if len(ok) == len(rows) else 1


def cmd_sweep_power(args) -> int:
    cfg = _resolve(args)
    cfg = ex.LinkSweepConfig.from_dict({**cfg.to_dict(), "distances_km": [args.distance]})
    out = _outdir(args)
    ex.dump_config(cfg, out / "config.yaml")
    _fresh_store(out)
    results = ex.run_distance_sweep(cfg, out_dir=out)
    ex.write_table(ex.results_table(results), out / "results_table.csv")
    if any(r.kind == "power" and r.ok for r in results):
        ex.emit_plot_data(results, "power", out / "plot", cfg.hash(), args.distance)
    for r in results:
        if r.kind == "optimum":
            print(f"{r.constellation_id:>12} P* {r.power_dbm:5.1f} dBm  MI {r.mi_value:.4f}  {r.status}")
    return 0 if all(r.ok for r in results) else 1


def cmd_ps_optimize(args) -> int:
    cfg = _resolve(args)
    out = _outdir(args)
    ex.dump_config(cfg, out / "config.yaml")
    sys_opt = cfg.system(args.distance, args.power)
    best, mi, table = optimize_ps_prior(sys_opt, cfg.opt_seed(), cfg.ps_grid)
    C = ps_pm16qam_constellation(PSDistribution(best))
    fresh = simulate_link(C, cfg.system(args.distance, args.power, cfg.eval_n_symbols), cfg.eval_seed()).mi
    ex.write_table([{"p3": p, "mi": v} for p, v in sorted(table.items())], out / "ps_table.csv")
    _write_json(
        out / "ps_optimize.json",
        {"config_hash": cfg.hash(), "p3": best, "opt_mi": mi, "eval": fresh.to_dict()},
    )
    print(f"best p3 {best:g}: MI {fresh.mi_bits_per_4d:.4f} +- {fresh.stderr:.4f}")
    return 0


def cmd_validate(args) -> int:
    try:
        C = load_constellation_file(args.file)
        report = validate_gss(C, ShapingConfig(C.m, args.k))
    except (ConstellationFormatError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report.lines():
        print(line)
    print(f"PAPR (4D symbol) {papr_symbols(C):.4f}")
    return 0 if report.passed else 1


def cmd_export(args) -> int:
    out = _outdir(args)
    if args.kind == "pm16qam":
        C = pm16qam()
    elif args.kind == "ps-pm16qam":
        C = ps_pm16qam_constellation(PSDistribution(args.p3))
    else:
        shaping = ShapingConfig(args.m, args.k)
        if args.params:
            text = Path(args.params).read_text() if Path(args.params).is_file() else args.params
            params = np.array(json.loads(text) if text.strip().startswith("[") else _floats(text))
        else:
            params = init_halfway(gss_bounds(shaping))
        C = build_gss(params, shaping)
    path = export_constellation(C, out / (args.name or f"{args.kind}.txt"))
    print(path)
    return 0


def cmd_plot_data(args) -> int:
    # default to the configuration saved next to the results
    beside = Path(args.results).parent / "config.yaml"
    if args.config is None and not args.quick and beside.exists():
        args.config = str(beside)
    cfg = _resolve(args)
    results = ex.load_results(args.results)
    try:
        manifest = ex.emit_plot_data(results, args.axis, _outdir(args), cfg.hash(), args.distance)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--quick", action="store_true", help="desk-scale profile")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", default="results", help="output directory")

    grids = argparse.ArgumentParser(add_help=False)
    grids.add_argument("--distances", help="comma-separated distances (km)")
    grids.add_argument("--powers", help="comma-separated launch powers (dBm)")
    grids.add_argument("--constellations", help="comma-separated kinds; file:PATH for files")
    grids.add_argument("--max-evals", type=int, help="link evaluations per GSS search")
    grids.add_argument("--workers", type=int, help="parallel distance jobs")

    p = argparse.ArgumentParser(prog="gss4d", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("optimize", parents=[common, grids], help="optimize a GSS constellation")
    s.add_argument("--distance", type=float, default=160.0)
    s.add_argument("--power", type=float, help="launch power; default: PM-16QAM optimum")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep-distance", parents=[common, grids], help="MI at P* versus distance")
    s.set_defaults(func=cmd_sweep_distance)

    s = sub.add_parser("sweep-power", parents=[common, grids], help="MI versus launch power")
    s.add_argument("--distance", type=float, default=160.0)
    s.set_defaults(func=cmd_sweep_power)

    s = sub.add_parser("ps-optimize", parents=[common, grids], help="optimize the PS prior")
    s.add_argument("--distance", type=float, default=160.0)
    s.add_argument("--power", type=float, default=12.0)
    s.set_defaults(func=cmd_ps_optimize)

    s = sub.add_parser("validate", parents=[common], help="check a GSS constellation file")
    s.add_argument("file")
    s.add_argument("--k", type=int, default=4, help="number of shells")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("export-constellation", parents=[common], help="write a constellation file")
    s.add_argument("--kind", choices=["pm16qam", "ps-pm16qam", "gss"], default="pm16qam")
    s.add_argument("--p3", type=float, default=0.5)
    s.add_argument("--params", help="GSS parameters: JSON list, comma list or file")
    s.add_argument("--m", type=int, default=8)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--name", help="output file name")
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("plot-data", parents=[common], help="emit plot CSVs from results.jsonl")
    s.add_argument("results")
    s.add_argument("--axis", choices=["distance", "power"], default="distance")
    s.add_argument("--distance", type=float)
    s.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
