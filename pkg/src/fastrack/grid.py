"""Cartesian grids, look-up tables, multilinear interpolation and the table file format."""

from __future__ import annotations

import itertools
import json
import struct
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

MAGIC = b"FSTRK01\0"


class TableError(ValueError):
    pass


class TableFormatError(TableError):
    """Wrong magic bytes or an unreadable header."""


class TableCorruptError(TableError):
    """Checksum mismatch, truncation, or a payload that does not fit the grid."""


@dataclass(frozen=True)
class Dim:
    label: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)) or self.min >= self.max:
            raise ValueError(f"dimension {self.label!r}: need finite min < max, got [{self.min}, {self.max}]")
        if int(self.count) != self.count or self.count < 3:
            raise ValueError(f"dimension {self.label!r}: need an integer count >= 3, got {self.count}")

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / (self.count - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class GridSpec:
    """Row-major Cartesian grid; the last dimension varies fastest."""

    dims: tuple[Dim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        labels = [d.label for d in self.dims]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate dimension labels: {labels}")

    @classmethod
    def from_bounds(cls, labels, mins, maxs, counts) -> "GridSpec":
        if np.isscalar(counts):
            counts = [counts] * len(labels)
        return cls(tuple(Dim(l, float(a), float(b), int(c)) for l, a, b, c in zip(labels, mins, maxs, counts)))

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(tuple(Dim(d["label"], float(d["min"]), float(d["max"]), int(d["count"])) for d in data["dims"]))

    def to_dict(self) -> dict:
        return {"dims": [{"label": d.label, "min": d.min, "max": d.max, "count": d.count} for d in self.dims]}

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(d.count for d in self.dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.shape))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(d.label for d in self.dims)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([d.spacing for d in self.dims])

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.min for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.max for d in self.dims])

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(d.nodes for d in self.dims)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Sparse broadcastable coordinate arrays, one per dimension."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no dimension {label!r}; grid has {self.labels}") from None

    @cached_property
    def _corner_offsets(self) -> np.ndarray:
        strides = np.array([int(np.prod(self.shape[i + 1:])) for i in range(self.ndim)])
        return np.array([np.dot(bits, strides) for bits in itertools.product((0, 1), repeat=self.ndim)])


def node_coords(grid: GridSpec, flat_index: int) -> np.ndarray:
    if not 0 <= flat_index < grid.total:
        raise IndexError(f"node index {flat_index} outside [0, {grid.total})")
    multi = np.unravel_index(flat_index, grid.shape)
    return grid.lower + np.asarray(multi) * grid.spacing


def flat_index(grid: GridSpec, point) -> int:
    """Row-major index of the node nearest to ``point``."""
    point = np.asarray(point, dtype=float).reshape(grid.ndim)
    multi = np.rint((point - grid.lower) / grid.spacing).astype(int)
    if np.any(multi < 0) or np.any(multi >= grid.shape):
        raise IndexError(f"point {point} is not on the grid")
    return int(np.ravel_multi_index(tuple(multi), grid.shape))


@dataclass
class ValueTable:
    grid: GridSpec
    values: np.ndarray
    subsystem: str = ""
    solver_hash: str = ""
    converged: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("value table contains non-finite entries")

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()


@dataclass
class GradientTable:
    grid: GridSpec
    components: tuple[np.ndarray, ...]
    subsystem: str = ""
    solver_hash: str = ""
    converged: bool = False
    _stacked: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.components) != self.grid.ndim:
            raise ValueError(f"expected {self.grid.ndim} gradient components, got {len(self.components)}")
        self.components = tuple(np.asarray(c, dtype=np.float64).reshape(self.grid.shape) for c in self.components)
        for c in self.components:
            if not np.all(np.isfinite(c)):
                raise ValueError("gradient table contains non-finite entries")
        self._stacked = np.stack([c.ravel() for c in self.components])

    def component(self, label: str) -> np.ndarray:
        return self.components[self.grid.index_of(label)]


def _cell(grid: GridSpec, point: np.ndarray):
    """Base flat index, corner weights and clamp flag for one query point."""
    s = (point - grid.lower) / grid.spacing
    n = np.asarray(grid.shape)
    clamped = bool(np.any(s < 0) or np.any(s > n - 1))
    s = np.clip(s, 0, n - 1)
    i = np.minimum(np.floor(s).astype(int), n - 2)
    f = s - i
    w = np.ones(1)
    for fk in f:
        w = np.kron(w, (1.0 - fk, fk))
    base = int(np.ravel_multi_index(tuple(i), grid.shape))
    return base + grid._corner_offsets, w, clamped


def interpolate(table, point) -> tuple[float, bool]:
    """Multilinear value of ``table`` at ``point``; outside points clamp to the boundary.

    ``table`` may be a :class:`ValueTable` or a ``(grid, array)`` pair, which is
    how single gradient components are queried.
    """
    grid, values = (table.grid, table.values) if isinstance(table, ValueTable) else table
    point = np.asarray(point, dtype=float).reshape(grid.ndim)
    if not np.all(np.isfinite(point)):
        raise ValueError(f"query point {point} is not finite")
    corners, w, clamped = _cell(grid, point)
    return float(np.dot(values.ravel()[corners], w)), clamped


def interpolate_gradient(table: GradientTable, point) -> tuple[np.ndarray, bool]:
    """All gradient components at ``point`` sharing one set of interpolation weights."""
    point = np.asarray(point, dtype=float).reshape(table.grid.ndim)
    corners, w, clamped = _cell(table.grid, point)
    return table._stacked[:, corners] @ w, clamped


def interpolate_many(grid: GridSpec, values: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`interpolate` over an ``(N, ndim)`` batch."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = np.asarray(grid.shape)
    s = (points - grid.lower) / grid.spacing
    clamped = np.any((s < 0) | (s > n - 1), axis=1)
    s = np.clip(s, 0, n - 1)
    i = np.minimum(np.floor(s).astype(int), n - 2)
    f = s - i
    flat = values.ravel()
    base = np.ravel_multi_index(tuple(i.T), grid.shape)
    out = np.zeros(len(points))
    for bits, offset in zip(itertools.product((0, 1), repeat=grid.ndim), grid._corner_offsets):
        w = np.prod(np.where(np.asarray(bits, dtype=bool), f, 1.0 - f), axis=1)
        out += w * flat[base + offset]
    return out, clamped


def gradient_tables(table: ValueTable) -> GradientTable:
    """Central differences inside, first-order one-sided differences on the boundary."""
    grads = np.gradient(table.values, *table.grid.spacing, edge_order=1)
    if table.grid.ndim == 1:
        grads = [grads]
    return GradientTable(table.grid, tuple(grads), table.subsystem, table.solver_hash, table.converged)


def save_table(table, path) -> None:
    if isinstance(table, ValueTable):
        kind, arrays = "value", [table.values]
    elif isinstance(table, GradientTable):
        kind, arrays = "gradient", list(table.components)
    else:
        raise TypeError(f"cannot save {type(table).__name__}")
    header = {
        "dims": table.grid.to_dict()["dims"],
        "subsystem": table.subsystem,
        "solver_hash": table.solver_hash,
        "converged": bool(table.converged),
        "kind": kind,
        "components": len(arrays),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = struct.pack("<I", len(hbytes)) + hbytes
    body += b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    Path(path).write_bytes(MAGIC + body + struct.pack("<I", zlib.crc32(body)))


def load_table(path):
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise TableFormatError(f"{path}: not a table file (bad magic {raw[:8]!r})")
    if len(raw) < 16:
        raise TableCorruptError(f"{path}: truncated")
    body, (crc,) = raw[8:-4], struct.unpack("<I", raw[-4:])
    (hlen,) = struct.unpack("<I", body[:4])
    if 4 + hlen > len(body):
        raise TableCorruptError(f"{path}: truncated header")
    try:
        header = json.loads(body[4:4 + hlen].decode("utf-8"))
        grid = GridSpec.from_dict(header)
        kind, ncomp = header["kind"], int(header["components"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TableFormatError(f"{path}: unreadable header ({exc})") from exc
    payload = body[4 + hlen:]
    if len(payload) != 8 * ncomp * grid.total:
        raise TableCorruptError(
            f"{path}: payload holds {len(payload) // 8} values, grid needs {ncomp * grid.total}"
        )
    if zlib.crc32(body) != crc:
        raise TableCorruptError(f"{path}: checksum mismatch")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((ncomp,) + grid.shape)
    meta = dict(subsystem=header["subsystem"], solver_hash=header["solver_hash"], converged=header["converged"])
    if kind == "value":
        return ValueTable(grid, data[0], **meta)
    if kind == "gradient":
        return GradientTable(grid, tuple(data), **meta)
    raise TableFormatError(f"{path}: unknown table kind {kind!r}")
