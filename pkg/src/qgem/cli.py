"""Command-line entry point: ``qgem <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 file-system error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .basis import NumericalError, commutation_graph, decompose_witness, group_terms_ldfc
from .config import SETUPS, ConfigError, ExperimentConfig, wrap_angle
from .entanglement import build_witness
from .geometry import GeometryError, distance_matrix, validate_geometry
from .io import RunManifest, emit_results, load_config_file, load_manifest, parse_quantity
from .shots import BudgetError, prepare_campaign
from .states import pure_state
from .sweeps import (
    Grid,
    SweepError,
    SweepSpec,
    Table,
    angle_heatmap,
    decoherence_sweep,
    measurement_curve,
    runtime_tradeoff,
    time_sweep,
    width_sweep,
    zero_crossing_gamma,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

OUTPUT_ENV = "QGEM_OUTPUT_DIR"
ALL_DIMENSIONS = (2, 3, 4, 5, 6)

# flag -> config field
CONFIG_FLAGS = {
    "dimension": "dimension",
    "tau": "hold_time",
    "gamma": "decoherence_rate",
    "delta_x": "superposition_width",
    "distance": "min_distance",
    "theta1": "theta_1",
    "theta2": "theta_2",
}

SCALE_RULES = {"d-1": lambda D: D - 1, "d": lambda D: D, "none": lambda D: 1}


# -- configuration ----------------------------------------------------------


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then ``--config`` file, then preset angles, then explicit flags."""
    values: dict = {}
    if ns.config:
        values.update(load_config_file(ns.config))

    custom_angles = ns.theta1 is not None or ns.theta2 is not None
    if ns.setup in SETUPS:
        if custom_angles:
            raise ConfigError("theta_1", f"explicit angles need --setup custom, not --setup {ns.setup}")
        values["theta_1"], values["theta_2"] = SETUPS[ns.setup]
    elif ns.setup == "custom":
        have = custom_angles or ("theta_1" in values and "theta_2" in values)
        if not have:
            raise ConfigError("theta_1", "--setup custom needs --theta1 and --theta2 (or angles in --config)")

    for flag, key in CONFIG_FLAGS.items():
        raw = getattr(ns, flag, None)
        if raw is None:
            continue
        if key == "dimension":
            values[key] = int(raw)
        elif key in ("theta_1", "theta_2"):
            values[key] = wrap_angle(parse_quantity(raw, key))
        else:
            values[key] = parse_quantity(raw, key)
    if ns.mass is not None:
        values["mass_1"] = values["mass_2"] = parse_quantity(ns.mass, "mass_1")

    config = ExperimentConfig.from_dict(values)
    ok, bad = validate_geometry(distance_matrix(config), config)
    if not ok:
        p, q = bad[0]
        raise ConfigError(
            "theta_1",
            f"angles ({config.theta_1:.6g}, {config.theta_2:.6g}) bring instances {p} and {q} "
            "closer than the minimum distance",
        )
    return config


def _dimensions(ns, config: ExperimentConfig, default) -> tuple[int, ...]:
    if ns.dimensions:
        dims = tuple(int(x) for x in ns.dimensions.split(","))
    elif ns.dimension is not None:
        dims = (config.dimension,)
    else:
        dims = tuple(default)
    if not dims or min(dims) < 2:
        raise ConfigError("dimension", "dimensions must be integers >= 2")
    return dims


def _grid(ns, key: str, default: Grid, log: bool = False) -> Grid:
    if not ns.grid:
        return default
    start, stop, points = ns.grid
    try:
        n = int(points)
    except ValueError:
        raise ConfigError(key, f"grid point count {points!r} is not an integer") from None
    scale = "log" if (ns.log or log) else "linear"
    return Grid(parse_quantity(start, key), parse_quantity(stop, key), n, scale)


def _single(value: float) -> Grid:
    return Grid(value, value, 1)


# -- subcommands -------------------------------------------------------------


def cmd_entropy(config, ns):
    spec = SweepSpec(
        "time",
        _grid(ns, "hold_time", _single(config.hold_time)),
        config,
        "entropy",
        _dimensions(ns, config, ALL_DIMENSIONS),
    )
    table = time_sweep(spec)
    return {"entropy.csv": table}, {}, spec


def cmd_witness(config, ns):
    spec = SweepSpec(
        "time",
        _grid(ns, "hold_time", _single(config.hold_time)),
        config,
        f"{ns.witness}-expectation",
        _dimensions(ns, config, ALL_DIMENSIONS),
        witness=ns.witness,
    )
    return {"witness.csv": time_sweep(spec)}, {}, spec


def _crossings(config, dims, kind, hold_times=None) -> Table:
    rows = []
    for D in dims:
        for tau in hold_times or (config.hold_time,):
            g = zero_crossing_gamma(config.replace(dimension=D, hold_time=float(tau)), kind)
            rows.append((float(tau), D, g))
    return Table(["tau_s", "D", "gamma_zero_hz"], rows)


def cmd_deco_sweep(config, ns):
    spec = SweepSpec(
        "gamma",
        _grid(ns, "decoherence_rate", Grid(0.0, 0.2, 41)),
        config.replace(decoherence_rate=0.0),
        f"{ns.witness}-expectation",
        _dimensions(ns, config, ALL_DIMENSIONS),
        witness=ns.witness,
    )
    tables = {
        "decoherence.csv": decoherence_sweep(spec),
        "zero_crossing.csv": _crossings(spec.config, spec.dimensions, ns.witness),
    }
    return tables, {}, spec


def cmd_heatmap(config, ns):
    spec = SweepSpec(
        "theta-pair",
        Grid(0.0, 1.0, ns.points),  # only the point count matters; angles always cover [0, 2pi)
        config,
        "entropy",
        (config.dimension,),
        options={"points": ns.points},
    )
    return {"heatmap.csv": angle_heatmap(spec)}, {}, spec


def cmd_width_sweep(config, ns):
    dims = _dimensions(ns, config, ALL_DIMENSIONS)
    if ns.scaled:
        spec = SweepSpec(
            "time",
            _grid(ns, "hold_time", Grid(0.0, 5.0, 51)),
            config,
            "entropy",
            dims,
            options={"scaled": True, "scale_rule": ns.scale_rule},
        )
        table = width_sweep(spec, scaled=True, scale_factor=SCALE_RULES[ns.scale_rule])
    else:
        spec = SweepSpec("width", _grid(ns, "superposition_width", Grid(50e-6, 500e-6, 10)), config, "entropy", dims)
        table = width_sweep(spec)
    return {"width.csv": table}, {}, spec


def cmd_tradeoff(config, ns):
    taus = tuple(parse_quantity(t, "hold_time") for t in ns.taus.split(","))
    spec = SweepSpec(
        "gamma",
        _grid(ns, "decoherence_rate", Grid(0.0, 0.25, 51)),
        config.replace(decoherence_rate=0.0),
        f"{ns.witness}-expectation",
        _dimensions(ns, config, (2, 6)),
        witness=ns.witness,
        options={"hold_times": list(taus)},
    )
    tables = {
        "tradeoff.csv": runtime_tradeoff(spec, taus),
        "tradeoff_crossing.csv": _crossings(spec.config, spec.dimensions, ns.witness, taus),
    }
    return tables, {}, spec


def _decomposition(config, kind):
    witness = build_witness(kind, pure_state(config), config.hold_time, built_from=config.to_dict())
    if witness is None:
        raise ConfigError("hold_time", "the state is not entangled (PPT); there is no witness to decompose")
    return decompose_witness(witness)


def _terms_document(decomp, kind) -> dict:
    return {
        "dimension": decomp.dimension,
        "witness": kind,
        "threshold": decomp.threshold,
        "term_count": len(decomp),
        "identity_coefficient": decomp.identity_coefficient,
        "terms": decomp.to_records(),
    }


def cmd_decompose(config, ns):
    decomp = _decomposition(config, ns.witness)
    print(f"D={decomp.dimension} {ns.witness} witness: {len(decomp)} terms")
    return {}, {"witness_terms.json": _terms_document(decomp, ns.witness)}, None


def cmd_group(config, ns):
    decomp = _decomposition(config, ns.witness)
    graph = commutation_graph(decomp)
    groups = group_terms_ldfc(graph, decomp, strategy=ns.strategy, with_basis=False)
    doc = _terms_document(decomp, ns.witness)
    doc["strategy"] = ns.strategy
    doc["group_count"] = len(groups)
    doc["groups"] = [g.to_record(graph.terms) for g in groups]
    print(f"D={decomp.dimension} {ns.witness} witness: {len(decomp)} terms in {len(groups)} groups")
    return {}, {"witness_terms.json": doc}, None


def cmd_simulate(config, ns):
    if ns.seed is None:
        raise ConfigError("seed", "simulate needs an explicit --seed")
    if ns.shots is not None:
        grid = _single(float(ns.shots))
    elif ns.grid:
        grid = _grid(ns, "shots", None, log=True)
    else:
        grid = Grid.per_decade(100, 1e5)
    spec = SweepSpec(
        "budget",
        grid,
        config,
        "confidence",
        (config.dimension,),
        witness=ns.witness,
        grouped=ns.grouped,
        repetitions=ns.reps,
        seed=ns.seed,
        options={"strategy": ns.strategy},
    )
    table = measurement_curve(spec)
    if not table.rows:
        raise BudgetError("no budget in the grid gives every measured unit at least two shots")
    documents = {}
    if ns.per_run:
        campaign = prepare_campaign(config, ns.witness, ns.grouped, ns.strategy)
        runs = []
        for M in table.column("M"):
            res = campaign.run(int(M), ns.reps, ns.seed)
            runs.append({"M": int(M), "repetitions": [r.to_dict() for r in res.reports]})
        documents["runs.json"] = runs
    return {"confidence.csv": table}, documents, spec


COMMANDS = {
    "entropy": cmd_entropy,
    "witness": cmd_witness,
    "deco-sweep": cmd_deco_sweep,
    "heatmap": cmd_heatmap,
    "width-sweep": cmd_width_sweep,
    "tradeoff": cmd_tradeoff,
    "decompose": cmd_decompose,
    "group": cmd_group,
    "simulate": cmd_simulate,
}


# -- parser ------------------------------------------------------------------


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file of SI-unit parameters (or a run manifest)")
    g.add_argument("--setup", choices=["parallel", "linear", "custom"], default=None)
    g.add_argument("--dimension", type=int)
    g.add_argument("--dimensions", help="comma-separated list, e.g. 2,3,4,5,6")
    g.add_argument("--tau", help="hold time, e.g. 2.5s")
    g.add_argument("--gamma", help="decoherence rate, e.g. 50mHz")
    g.add_argument("--delta-x", dest="delta_x", help="superposition width, e.g. 250um")
    g.add_argument("--distance", help="minimum distance, e.g. 200um")
    g.add_argument("--mass", help="mass of each particle, e.g. 1e-14kg")
    g.add_argument("--theta1", help="angle of interferometer 1 (rad, or with deg suffix)")
    g.add_argument("--theta2", help="angle of interferometer 2")
    g.add_argument("--witness", choices=["ppt", "vicinity"], default="ppt")
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or the current directory)")
    g.add_argument("--grid", nargs=3, metavar=("START", "STOP", "POINTS"), help="swept-variable grid")
    g.add_argument("--log", action="store_true", help="log-spaced grid")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgem", description="Gravitationally induced qudit entanglement simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _config_parent()

    sub.add_parser("entropy", parents=[parent], help="entanglement entropy against hold time")
    sub.add_parser("witness", parents=[parent], help="witness expectation against hold time")
    sub.add_parser("deco-sweep", parents=[parent], help="witness expectation against decoherence rate")
    h = sub.add_parser("heatmap", parents=[parent], help="entropy over all interferometer angles")
    h.add_argument("--points", type=int, default=100, help="grid points per angle over [0, 2pi)")
    w = sub.add_parser("width-sweep", parents=[parent], help="entropy against superposition width")
    w.add_argument("--scaled", action="store_true", help="scale the width with D and sweep hold time")
    w.add_argument("--scale-rule", choices=sorted(SCALE_RULES), default="d-1")
    t = sub.add_parser("tradeoff", parents=[parent], help="hold time against tolerable decoherence")
    t.add_argument("--taus", default="1.5,2,2.5,3,3.5", help="comma-separated hold times")
    for name, text in (("decompose", "Gell-Mann decomposition of the witness"), ("group", "commuting groups")):
        s = sub.add_parser(name, parents=[parent], help=text)
        if name == "group":
            s.add_argument("--strategy", choices=["ldfc", "clique"], default="ldfc")
    s = sub.add_parser("simulate", parents=[parent], help="simulated measurement campaigns")
    s.add_argument("--grouped", action="store_true")
    s.add_argument("--strategy", choices=["ldfc", "clique"], default="ldfc")
    s.add_argument("--shots", type=int, help="single total budget (otherwise --grid or a default log grid)")
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--seed", type=int)
    s.add_argument("--per-run", action="store_true", help="also write every repetition to runs.json")
    r = sub.add_parser("replay", help="re-run a manifest")
    r.add_argument("manifest")
    r.add_argument("--out")
    return parser


def _output_dir(ns) -> Path:
    return Path(ns.out or os.environ.get(OUTPUT_ENV) or ".")


def _options(ns) -> dict:
    skip = {"command", "out", "config"}
    return {k: v for k, v in vars(ns).items() if k not in skip}


def execute(command: str, config: ExperimentConfig, ns, out: Path) -> Path:
    tables, documents, spec = COMMANDS[command](config, ns)
    manifest = RunManifest(
        subcommand=command,
        config=config.to_dict(),
        sweep=spec.to_dict() if spec is not None else None,
        seed=getattr(ns, "seed", None),
        options=_options(ns),
    )
    path = emit_results(out, tables, manifest, documents)
    for table_name, table in tables.items():
        print(f"{table_name}: {len(table.rows)} rows")
    print(f"manifest: {path}")
    return path


def replay(manifest_path, out: Path) -> Path:
    manifest = load_manifest(manifest_path)
    if manifest.subcommand not in COMMANDS:
        raise ConfigError("subcommand", f"unknown subcommand {manifest.subcommand!r} in manifest")
    defaults = vars(build_parser().parse_args([manifest.subcommand]))
    defaults.update(manifest.options)
    ns = argparse.Namespace(**defaults)
    return execute(manifest.subcommand, manifest.resolved_config(), ns, out)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "replay":
            replay(ns.manifest, _output_dir(ns))
        else:
            execute(ns.command, resolve_config(ns), ns, _output_dir(ns))
    except (ConfigError, SweepError, GeometryError, BudgetError) as exc:
        print(f"qgem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qgem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"qgem: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qgem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
