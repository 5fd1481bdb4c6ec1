"""Run reports and the CSV conventions shared by all commands.

Every CSV starts with ``#`` header lines: a title, the hash of the settings
that produced it, one ``key=value`` line per diagnostic, the units and the
column names. Numbers are written with ``repr`` so they round-trip exactly,
and nothing time-dependent goes into a CSV, which keeps reruns byte-identical.
Wall-clock times live in the JSON report only.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .stable import STREAM_LAYOUT

REPORT_VERSION = 1


def _canonical(value):
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def config_hash(settings: dict) -> str:
    text = json.dumps(_canonical(settings), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, units, data, settings_hash, title, diagnostics=None):
    """Write ``data`` (a sequence of equally long columns) with the standard header."""
    if len(columns) != len(units) or len(columns) != len(data):
        raise ValueError("columns, units and data must have the same length")
    cols = [np.asarray(c) for c in data]
    lines = [f"# {title}", f"# config_hash={settings_hash}"]
    for key, value in (diagnostics or {}).items():
        lines.append(f"# {key}={_fmt(value)}")
    lines.append("# units: " + ",".join(units))
    lines.append("# " + ",".join(columns))
    body = [",".join(_fmt(c[i]) for c in cols) for i in range(len(cols[0]) if cols else 0)]
    text = "\n".join(lines + body) + "\n"
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return Path(path)


def read_csv_header(path):
    """``key=value`` header entries of a CSV written by :func:`write_csv`."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body and not body.startswith("units"):
                k, v = body.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunReport:
    command: str
    settings: dict
    config_hash: str
    seed: int | None = None
    stream_layout: str = STREAM_LAYOUT
    numerics: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    versions: dict = field(default_factory=dict)
    report_version: int = REPORT_VERSION

    def add_output(self, path):
        self.outputs.append({"path": Path(path).name, "sha256": file_digest(path)})

    def to_json(self) -> str:
        return json.dumps(_canonical(asdict(self)), indent=2, sort_keys=True) + "\n"

    def write(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json())
        return Path(path)

    @classmethod
    def load(cls, path) -> "RunReport":
        data = json.loads(Path(path).read_text())
        if "command" not in data or "settings" not in data:
            raise ValueError(f"{path} is not a run report")
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})


def versions():
    from importlib.metadata import PackageNotFoundError, version

    try:
        own = version("levyflights")
    except PackageNotFoundError:
        own = "unknown"
    return {
        "levyflights": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
