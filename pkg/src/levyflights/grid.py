"""Uniformly sampled functions on an interval."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridFunction:
    """Real function sampled at ``x_i = x_min + i*h``, ``i = 0..n-1``."""

    x_min: float
    x_max: float
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise GridError("values must be one-dimensional")
        if values.size < 3:
            raise GridError("a grid needs at least 3 nodes")
        if not self.x_max > self.x_min:
            raise GridError("x_max must exceed x_min")
        if not np.all(np.isfinite(values)):
            raise GridError("grid values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @classmethod
    def from_callable(cls, func, x_min, x_max, n, **meta):
        x = np.linspace(x_min, x_max, n)
        return cls(x_min, x_max, func(x), meta)

    @classmethod
    def from_samples(cls, x, values, rtol=1e-9, **meta):
        """Build from explicit nodes, checking that they are uniform."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise GridError("need at least 3 nodes")
        check_uniform(x, rtol=rtol)
        return cls(float(x[0]), float(x[-1]), np.asarray(values, dtype=float), meta)

    def with_values(self, values, **meta) -> "GridFunction":
        merged = {**self.meta, **meta}
        return GridFunction(self.x_min, self.x_max, values, merged)

    def same_grid(self, other: "GridFunction") -> bool:
        return (
            self.n == other.n
            and np.isclose(self.x_min, other.x_min)
            and np.isclose(self.x_max, other.x_max)
        )

    def __call__(self, x):
        return np.interp(x, self.x, self.values)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.h))

    def to_csv(self, path_or_buf=None, header=None) -> str:
        """Two-column ``x,value`` CSV with a ``# gridfunction`` header line."""
        if header is None:
            mu = self.meta.get("mu", "na")
            method = self.meta.get("method", "na")
            header = f"gridfunction mu={mu} method={method}"
        buf = io.StringIO()
        buf.write(f"# {header}\n")
        buf.write("# x,value\n")
        for xi, vi in zip(self.x, self.values):
            buf.write(f"{float(xi)!r},{float(vi)!r}\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w", newline="\n") as fh:
                    fh.write(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "GridFunction":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if body.startswith("gridfunction"):
                        for tok in body.split()[1:]:
                            if "=" in tok:
                                k, v = tok.split("=", 1)
                                meta[k] = v
                    continue
                rows.append([float(t) for t in line.split(",")[:2]])
        if not rows:
            raise GridError(f"no data rows in {path}")
        data = np.array(rows)
        return cls.from_samples(data[:, 0], data[:, 1], **meta)


def check_uniform(x, rtol=1e-9):
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    h = (x[-1] - x[0]) / (x.size - 1)
    if h <= 0 or np.max(np.abs(dx - h)) > rtol * max(abs(h), 1.0) + 1e-12 * np.max(np.abs(x)):
        raise GridError("grid is not uniform")
    return h


def second_difference(f, h):
    """Centered second difference with reflecting (zero-flux) end rows.

    The column sums of the implied matrix vanish, so ``sum(D2 f) == 0``.
    """
    f = np.asarray(f, dtype=float)
    d2 = np.empty_like(f)
    d2[1:-1] = f[2:] - 2.0 * f[1:-1] + f[:-2]
    d2[0] = f[1] - f[0]
    d2[-1] = f[-2] - f[-1]
    return d2 / (h * h)


def second_derivative(f, h):
    """Centered second difference; one-sided second-order rows at the ends."""
    f = np.asarray(f, dtype=float)
    d2 = np.empty_like(f)
    d2[1:-1] = f[2:] - 2.0 * f[1:-1] + f[:-2]
    if f.size >= 4:
        d2[0] = 2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]
        d2[-1] = 2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]
    else:
        d2[0] = d2[1]
        d2[-1] = d2[-2]
    return d2 / (h * h)


def first_derivative4(f, h):
    """Fourth-order centered first derivative; second-order near the ends."""
    f = np.asarray(f, dtype=float)
    d = np.gradient(f, h, edge_order=2)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    return d


def second_derivative4(f, h):
    """Fourth-order centered second derivative; lower order near the ends."""
    f = np.asarray(f, dtype=float)
    d = second_derivative(f, h)
    d[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    return d
