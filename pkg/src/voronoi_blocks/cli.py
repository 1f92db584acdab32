"""Command line interface: ``run``, ``generate``, ``tessellate`` and ``oracle``.

Exit status is 0 on success, 2 for input or configuration errors and 3 for
posterior domain errors such as a quantum too coarse for the cells.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from .clusters import density_grid, extract_clusters
from .coalesce import CoalesceConfig, best_model, init_partition, run_coalescence
from .exceptions import DomainError, InputError, TooLarge
from .geometry import build_tessellation, make_point_set, validate_quantization
from .io import (
    RunConfig,
    read_points_csv,
    write_json,
    write_points_csv,
    write_raster_binary,
    write_raster_csv,
)
from .oracle import exhaustive_optimum
from .synthetic import SyntheticSpec, default_spec, generate_synthetic

log = logging.getLogger("voronoi_blocks")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3


def _floats(text):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bounds(text):
    if text == "auto":
        return "auto"
    vals = _floats(text)
    if len(vals) not in (2, 4):
        raise argparse.ArgumentTypeError("bounds take lo,hi (1D) or xlo,xhi,ylo,yhi (2D)")
    return [vals[i:i + 2] for i in range(0, len(vals), 2)]


def _quantum(text):
    if text in ("auto", "auto-min-cell"):
        return "auto-min-cell"
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def _grid(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid takes integers, got {text!r}") from None


def _add_data_flags(sp, with_input=True):
    if with_input:
        sp.add_argument("input", nargs="?", help="CSV file with one point per row")
    sp.add_argument("--config", help="JSON run configuration; flags override it")
    sp.add_argument("--dim", type=int, choices=(1, 2))
    sp.add_argument("--bounds", type=_bounds, help="'auto', 'lo,hi' or 'xlo,xhi,ylo,yhi'")
    sp.add_argument("--expand", type=float, help="padding fraction for auto bounds")
    sp.add_argument("--quantum", type=_quantum, help="'auto' or per-dimension resolution")
    sp.add_argument("--penalty", type=float, help="log-prior per block")
    sp.add_argument("--adjacency", choices=("vertex", "edge"))
    sp.add_argument("--duplicates", choices=("error", "jitter"))
    sp.add_argument("--seed", type=int, help="seed for duplicate jitter")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voronoi-blocks",
        description="Segment 1D/2D point data into Poisson blocks and clusters.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="tessellate, coalesce and extract clusters")
    _add_data_flags(run)
    run.add_argument("--threshold", type=float, help="cluster density ratio over background")
    run.add_argument("--grid", type=_grid, help="density raster resolution, e.g. 200,200")
    run.add_argument("--raster-format", dest="raster_format", choices=("csv", "binary"))
    run.add_argument("--emit-history", dest="emit_history", action="store_true", default=None)
    run.add_argument("--emit-cells", dest="emit_cells", action="store_true", default=None)

    tess = sub.add_parser("tessellate", help="build cells only and check the quantum")
    _add_data_flags(tess)

    orc = sub.add_parser("oracle", help="compare greedy with the exhaustive optimum (<= 10 points)")
    _add_data_flags(orc)

    gen = sub.add_parser("generate", help="draw a synthetic point pattern")
    gen.add_argument("--spec", help="JSON synthetic spec; defaults to the two-disk example")
    gen.add_argument("--seed", type=int, help="overrides the seed in the synthetic spec")
    gen.add_argument("--out", default=".", help="output directory")
    gen.add_argument("--name", default="points", help="file stem for the CSV and truth JSON")
    return parser


def resolve_config(args) -> RunConfig:
    """Config file values overridden by any flag given on the command line."""
    base = RunConfig.load(args.config).to_dict() if getattr(args, "config", None) else {}
    for f in RunConfig.__dataclass_fields__:
        val = getattr(args, f, None)
        if val is not None:
            base[f] = val
    return RunConfig.from_dict(base)


def _load(cfg: RunConfig):
    if not cfg.input:
        raise InputError("no input file given")
    try:
        pts = read_points_csv(cfg.input, dim=cfg.dim)
    except FileNotFoundError:
        raise InputError(f"cannot read {cfg.input}") from None
    ps = make_point_set(pts, bounds=cfg.bounds_array, quantum=cfg.quantum_value,
                        expand=cfg.expand, duplicates=cfg.duplicates, random_state=cfg.seed)
    return build_tessellation(ps, adjacency=cfg.adjacency)


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_pipeline(cfg: RunConfig, stream=None) -> dict:
    """Execute the full pipeline and write its artifacts under ``cfg.out``.

    Returns a summary dict; the one-line summary is printed to ``stream``.
    """
    stream = stream or sys.stdout
    cc = _load(cfg)
    p0 = init_partition(cc, cfg.penalty)
    final, history = run_coalescence(p0, CoalesceConfig())
    part = best_model(history, final, "at_stop")
    report = extract_clusters(part, cfg.threshold)

    out = _outdir(cfg)
    write_json(out / "partition.json", part.to_dict())
    write_json(out / "clusters.json", report.to_dict())
    if cfg.emit_cells:
        write_json(out / "cells.json", cc.to_dict())
    if cfg.emit_history:
        write_json(out / "history.json", history.to_dict())
    if cfg.grid:
        grid = density_grid(part, cc, cfg.grid)
        if cfg.raster_format == "binary":
            write_raster_binary(out / "density.f64", grid)
        else:
            write_raster_csv(out / "density.csv", grid)

    summary = {
        "n_points": cc.n_cells,
        "n_blocks": len(part),
        "n_clusters": report.n_clusters,
        "total_log_posterior": part.total_log_posterior,
        "truncated": history.truncated,
    }
    print(f"{cc.n_cells} points -> {len(part)} blocks -> {report.n_clusters} clusters, "
          f"total log posterior {part.total_log_posterior:.6f}", file=stream)
    return summary


def _cmd_run(args):
    run_pipeline(resolve_config(args))
    return EXIT_OK


def _cmd_tessellate(args):
    cfg = resolve_config(args)
    cc = _load(cfg)
    report = validate_quantization(cc)
    out = _outdir(cfg)
    write_json(out / "cells.json", cc.to_dict())
    write_json(out / "quantization.json", report.to_dict())
    status = "pass" if report.passed else f"fail ({len(report.failing)} cells below one quantum)"
    print(f"{cc.n_cells} cells, {len(cc.edges)} adjacent pairs, quantization {status}")
    return EXIT_OK


def _cmd_oracle(args):
    cfg = resolve_config(args)
    cc = _load(cfg)
    blocks, best = exhaustive_optimum(cc, cfg.penalty)
    final, _ = run_coalescence(init_partition(cc, cfg.penalty))
    greedy = final.total_log_posterior
    print(json.dumps({
        "optimum": {"blocks": blocks, "total_log_posterior": best},
        "greedy": {"blocks": sorted(sorted(b.cells) for b in final.blocks),
                   "total_log_posterior": greedy},
        "gap": best - greedy,
    }))
    return EXIT_OK


def _cmd_generate(args):
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                spec = SyntheticSpec.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"cannot load spec {args.spec}: {exc}") from None
    else:
        spec = default_spec()
    if args.seed is not None:
        spec.seed = args.seed
    points, truth = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_points_csv(out / f"{args.name}.csv", points.reshape(-1, spec.dim))
    write_json(out / f"{args.name}.truth.json", truth)
    print(f"{len(points)} points written to {out / (args.name + '.csv')}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "generate": _cmd_generate,
    "tessellate": _cmd_tessellate,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DomainError, TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
