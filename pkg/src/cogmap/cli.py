"""Command-line driver for the cognitive-model pipeline.

    cogmap ingest   --input table.csv [--schema schema.csv] [--mapping map.csv] --out clean.csv
    cogmap edges    --input clean.csv --mask mask.csv [--matrices DIR] --out edges.csv
    cogmap build    --input edges.csv --mask mask.csv --out model.json
    cogmap check    --input model.json
    cogmap weights  --input model.json [--format csv|structured|svg]
    cogmap simulate --input model.json (--scenario s.csv | --impulse NAME) --horizon 20
    cogmap augment  --input model.json --from A --to B (--weight W | --donor other.json)
    cogmap report   --input (model.json | weights.csv | weights.json) --format svg
    cogmap efficiency --input model.json

Exit status: 0 success, 1 user error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from dataclasses import dataclass

from . import data, impulse, model, report, stats
from .errors import CogmapError, NumericalError

logger = logging.getLogger("cogmap")

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class PipelineConfig:
    r_threshold: float = stats.R_THRESHOLD
    err_threshold: float = stats.ERR_THRESHOLD
    min_pairwise_n: int = stats.MIN_PAIRWISE_N
    tolerance: float = 1e-9
    horizon: int = impulse.DEFAULT_HORIZON
    seed: int = 0

    def __post_init__(self):
        for key in ("r_threshold", "err_threshold", "tolerance"):
            v = getattr(self, key)
            if not 0 < v <= 1:
                raise UsageError(f"{key.replace('_', '-')} must be in (0, 1], got {v}")
        if self.horizon < 1:
            raise UsageError(f"horizon must be >= 1, got {self.horizon}")
        if self.min_pairwise_n < 3:
            raise UsageError(f"min-n must be >= 3, got {self.min_pairwise_n}")

    @classmethod
    def from_args(cls, args) -> "PipelineConfig":
        return cls(
            r_threshold=args.r_threshold,
            err_threshold=args.err_threshold,
            min_pairwise_n=args.min_n,
            tolerance=args.tolerance,
            horizon=args.horizon,
            seed=args.seed,
        )


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", required=True, help="primary input file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--schema", help="indicator schema CSV (name,unit,level)")
    p.add_argument("--mask", help="direction mask grid CSV")
    p.add_argument("--mapping", help="level mapping CSV (from_name,to_name)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--r-threshold", type=float, default=stats.R_THRESHOLD)
    p.add_argument("--err-threshold", type=float, default=stats.ERR_THRESHOLD)
    p.add_argument("--min-n", type=int, default=stats.MIN_PAIRWISE_N)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--horizon", type=int, default=impulse.DEFAULT_HORIZON)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=report.FORMATS, default="csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cogmap", description="Cognitive-model pipeline for indicator tables.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    sub.add_parser("ingest", parents=[common], help="load and validate a table")
    p = sub.add_parser("edges", parents=[common], help="statistics and edge filter")
    p.add_argument("--matrices", help="directory for corr/regr/error matrix exports")
    sub.add_parser("build", parents=[common], help="model from edges and mask")
    sub.add_parser("check", parents=[common], help="contraction check")
    p = sub.add_parser("weights", parents=[common], help="system-weight report")
    p.add_argument("--method", choices=[m.value for m in impulse.WeightMethod if m.value != "supplied"],
                   default="closed_form")
    p = sub.add_parser("simulate", parents=[common], help="propagate or forecast")
    p.add_argument("--scenario", help="scenario CSV (step,indicator,magnitude)")
    p.add_argument("--impulse", help="indicator receiving a single unit impulse at step 0")
    p.add_argument("--magnitude", type=float, default=1.0)
    p = sub.add_parser("augment", parents=[common], help="inject an external edge")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--weight", type=float)
    p.add_argument("--donor", help="model file to take the edge weight from")
    p.add_argument("--note", default="")
    p.add_argument("--add-vertex", action="store_true")
    p.add_argument("--override", action="store_true")
    p = sub.add_parser("report", parents=[common], help="render a weight report")
    p.add_argument("--title", default="System weights")
    sub.add_parser("efficiency", parents=[common], help="edge efficiencies, most efficient first")
    return parser


def _emit(args, payload: bytes, stdout):
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        stdout.write(payload)
        stdout.flush()


def _text(fn, *a) -> bytes:
    buf = io.StringIO()
    fn(*a, buf)
    return buf.getvalue().encode("utf-8")


def _load_table(args, cfg):
    schema = data.load_schema(args.schema, args.delimiter) if args.schema else None
    table = data.load_indicator_table(args.input, schema, args.delimiter)
    if args.mapping:
        mapping = data.load_level_mapping(args.mapping, delimiter=args.delimiter)
        table, _ = data.map_level(table, mapping)
    rep = data.validate_table(table, cfg.min_pairwise_n)
    return table, rep


def cmd_ingest(args, cfg, stdout, stderr):
    table, rep = _load_table(args, cfg)
    print(rep.summary(), file=stderr)
    _emit(args, _text(data.write_indicator_table, rep.apply(table)), stdout)
    return EXIT_OK


def cmd_edges(args, cfg, stdout, stderr):
    if not args.mask:
        raise UsageError("edges needs --mask")
    table, rep = _load_table(args, cfg)
    table = rep.apply(table)
    mask = stats.load_mask(args.mask, args.delimiter)
    sm = stats.compute_stat_matrices(stats.standardize(table), cfg.min_pairwise_n)
    if args.matrices:
        stats.export_stat_matrices(sm, args.matrices)
    edges = stats.filter_edges(sm, mask, cfg.r_threshold, cfg.err_threshold)
    print(f"{len(edges)} edge(s) pass |r| >= {cfg.r_threshold:g}, err <= {cfg.err_threshold:g}", file=stderr)
    _emit(args, _text(stats.write_edges, edges), stdout)
    return EXIT_OK


def cmd_build(args, cfg, stdout, stderr):
    edges = stats.load_edges(args.input, args.delimiter)
    if args.schema:
        names = data.load_schema(args.schema, args.delimiter).names
    elif args.mask:
        names = None
    else:
        raise UsageError("build needs --mask or --schema for the indicator list")
    if args.mask:
        mask = stats.load_mask(args.mask, args.delimiter)
        if names is not None:
            mask = mask.restrict(names)
        names = mask.names
        kept = [e for e in edges if e.source in names and e.target in names and mask.allows(e.source, e.target)]
        if len(kept) != len(edges):
            logger.warning("%d edge(s) not allowed by the mask were dropped", len(edges) - len(kept))
        edges = kept
    m = model.build_model(names, edges)
    _emit(args, model.dumps_model(m).encode("utf-8"), stdout)
    return EXIT_OK


def _spectral_doc(sp: model.SpectralReport) -> bytes:
    doc = {
        "spectral_radius": float(format(sp.spectral_radius, ".12g")),
        "is_contraction": sp.is_contraction,
        "series_converged": sp.series_converged,
        "iterations": sp.iterations,
        "tolerance": sp.tolerance,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def cmd_check(args, cfg, stdout, stderr):
    m = model.load_model(args.input)
    sp = model.contraction_check(m, tolerance=cfg.tolerance, seed=cfg.seed)
    _emit(args, _spectral_doc(sp), stdout)
    if sp.is_contraction:
        print(f"contraction: spectral radius {sp.spectral_radius:.6g} < 1", file=stderr)
        return EXIT_OK
    print(
        f"NOT a contraction: spectral radius {sp.spectral_radius:.6g} >= 1 - {cfg.tolerance:g}"
        + ("" if sp.series_converged or sp.spectral_radius >= 1 - cfg.tolerance else "; series terms do not shrink")
        + "; closed-form system weights are unavailable",
        file=stderr,
    )
    return EXIT_NUMERIC


def cmd_weights(args, cfg, stdout, stderr):
    m = model.load_model(args.input)
    horizon = cfg.horizon if args.method == "truncated_series" else None
    rep = impulse.system_weights(m, args.method, horizon=horizon, tolerance=cfg.tolerance, seed=cfg.seed)
    _emit(args, report.render_report(rep, args.format), stdout)
    return EXIT_OK


def cmd_simulate(args, cfg, stdout, stderr):
    m = model.load_model(args.input)
    if bool(args.scenario) == bool(args.impulse):
        raise UsageError("simulate needs exactly one of --scenario or --impulse")
    if args.scenario:
        scenario = impulse.load_scenario(args.scenario, m, args.delimiter)
    else:
        scenario = [(0, impulse.unit_impulse(m, args.impulse, args.magnitude))]
    traj = impulse.forecast(m, scenario, cfg.horizon)
    _emit(args, _text(impulse.write_trajectory, traj), stdout)
    return EXIT_OK


def cmd_augment(args, cfg, stdout, stderr):
    m = model.load_model(args.input)
    if (args.weight is None) == (args.donor is None):
        raise UsageError("augment needs exactly one of --weight or --donor")
    if args.donor:
        edge = model.transfer_edge(model.load_model(args.donor), args.source, args.target, args.note)
    else:
        edge = model.ExternalEdge(args.source, args.target, args.weight, args.note)
    out = model.augment(m, edge, add_vertices=args.add_vertex, override=args.override)
    _emit(args, model.dumps_model(out).encode("utf-8"), stdout)
    return EXIT_OK


def cmd_report(args, cfg, stdout, stderr):
    with open(args.input, encoding="utf-8") as fh:
        text = fh.read()
    if f'"{model.FORMAT_NAME}"' in text[:200]:
        rep = impulse.system_weights(model.loads_model(text), tolerance=cfg.tolerance, seed=cfg.seed)
    else:
        rep = report.load_weights(io.StringIO(text))
    payload = report.render_svg(rep, args.title) if args.format == "svg" else report.render_report(rep, args.format)
    _emit(args, payload, stdout)
    return EXIT_OK


def cmd_efficiency(args, cfg, stdout, stderr):
    m = model.load_model(args.input)
    rows = impulse.edge_efficiencies(m, tolerance=cfg.tolerance, seed=cfg.seed)
    lines = ["from,to,efficiency"] + [f"{s},{t},{format(e, '.12g')}" for s, t, e in rows]
    _emit(args, ("\n".join(lines) + "\n").encode("utf-8"), stdout)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "edges": cmd_edges,
    "build": cmd_build,
    "check": cmd_check,
    "weights": cmd_weights,
    "simulate": cmd_simulate,
    "augment": cmd_augment,
    "report": cmd_report,
    "efficiency": cmd_efficiency,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = PipelineConfig.from_args(args)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USER
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USER
    try:
        return COMMANDS[args.command](args, cfg, stdout, stderr)
    except UsageError as exc:
        print(f"cogmap {args.command}: {exc}", file=stderr)
        return EXIT_USER
    except NumericalError as exc:
        print(f"cogmap {args.command}: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (CogmapError, OSError, ValueError) as exc:
        print(f"cogmap {args.command}: {exc}", file=stderr)
        return EXIT_USER


def main():
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
