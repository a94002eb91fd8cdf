"""Reading configurations and writing result tables.

Files are always in SI units. CSV bodies are deterministic: columns come in
a fixed order and floats are written with ``repr`` so values round-trip
exactly. The only line that changes between identical runs is the
``# generated:`` timestamp in the header.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .config import ConfigError, ExperimentConfig

try:
    from importlib.metadata import PackageNotFoundError, version as _dist_version

    __version__ = _dist_version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

TIMESTAMP_PREFIX = "# generated: "

# unit suffix -> SI multiplier, grouped by physical quantity
UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3},
    "rate": {"Hz": 1.0, "hz": 1.0, "mHz": 1e-3},
    "mass": {"kg": 1.0, "g": 1e-3},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
}

QUANTITY = {
    "superposition_width": "length",
    "min_distance": "length",
    "hold_time": "time",
    "decoherence_rate": "rate",
    "mass_1": "mass",
    "mass_2": "mass",
    "theta_1": "angle",
    "theta_2": "angle",
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ]*)\s*$")


def parse_quantity(text: str, key: str) -> float:
    """Parse ``"250um"`` style input for config field ``key`` into SI units.

    A bare number is taken to already be in SI units.
    """
    m = _NUMBER.match(str(text))
    if not m:
        raise ConfigError(key, f"cannot parse {text!r} as a number")
    value, suffix = float(m.group(1)), m.group(2)
    if not suffix:
        return value
    quantity = QUANTITY.get(key)
    table = UNITS.get(quantity, {})
    if suffix not in table:
        allowed = ", ".join(table) or "none"
        raise ConfigError(key, f"unit {suffix!r} not allowed here (allowed: {allowed})")
    return value * table[suffix]


def load_config_file(path: str | Path) -> dict:
    """Read a flat JSON object of SI scalars, or the ``config`` block of a run manifest."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path}: expected a JSON object")
    if "subcommand" in data and isinstance(data.get("config"), dict):
        data = data["config"]
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(key, "config values must be scalars")
    ExperimentConfig.from_dict(data)  # validates keys and values now, naming the culprit
    return dict(data)


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    sweep: dict | None = None
    seed: int | None = None
    outputs: list[str] = field(default_factory=list)
    options: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "sweep": self.sweep,
            "seed": self.seed,
            "outputs": list(self.outputs),
            "options": self.options,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})

    def resolved_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)


def load_manifest(path: str | Path) -> RunManifest:
    return RunManifest.from_dict(json.loads(Path(path).read_text()))


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _header(manifest: RunManifest) -> list[str]:
    return [
        f"# qgem {manifest.version} {manifest.subcommand}",
        f"{TIMESTAMP_PREFIX}{manifest.timestamp}",
        f"# config: {json.dumps(manifest.config, sort_keys=True)}",
        f"# sweep: {json.dumps(manifest.sweep, sort_keys=True)}",
        f"# seed: {manifest.seed}",
    ]


def write_csv(path: str | Path, table, manifest: RunManifest) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _header(manifest):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Return (columns, rows) with the ``#`` header block skipped; values stay strings."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_json(path: str | Path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def emit_results(out_dir: str | Path, tables: dict, manifest: RunManifest, documents: dict | None = None) -> Path:
    """Write each table as CSV and each document as JSON, then the manifest sidecar.

    ``tables`` maps file names to :class:`~qgem.sweeps.Table`; ``documents``
    maps file names to JSON-serialisable payloads. Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in tables.items():
        written.append(str(write_csv(out / name, table, manifest)))
    for name, payload in (documents or {}).items():
        written.append(str(write_json(out / name, payload)))
    manifest.outputs = written
    return write_json(out / f"{manifest.subcommand}_manifest.json", manifest.to_dict())
