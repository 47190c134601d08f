"""Self-describing binary snapshot files and CSV diagnostics.

One snapshot file holds one run: a text header (magic line plus a single JSON
line) followed by raw frames. Every frame stores the named fields in order as
little-endian float64 with the x axis varying fastest (Fortran order of the
(x, y, z)-indexed arrays). Times are uniform: ``time_start + n * time_step``.
The format is plain enough to parse from any language; docs/snapshot_format.md
spells out the bytes.

All text output goes through ``repr`` of Python floats (shortest round-trip
form), which keeps reruns byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grids import Grid

__all__ = [
    "MAGIC",
    "SnapshotWriter",
    "SnapshotData",
    "read_snapshot",
    "write_snapshot",
    "dump_csv",
    "DiagnosticsWriter",
    "format_float",
]

MAGIC = "WAVEPOT-SNAP 1"


def format_float(x: float) -> str:
    return repr(float(x))


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    raise TypeError(f"not JSON-serializable: {obj!r}")


class SnapshotWriter:
    """Streams frames to a snapshot file without holding them all in memory."""

    def __init__(
        self,
        path: str | Path,
        *,
        kind: str,
        grid: Grid,
        fields: Sequence[str],
        time_start: float,
        time_step: float,
        frame_count: int,
        provenance: dict,
    ):
        self.path = Path(path)
        self.grid = grid
        self.fields = tuple(fields)
        self.frame_count = frame_count
        self._written = 0
        header = {
            "fields": list(self.fields),
            "frame_count": int(frame_count),
            "grid": {"points": list(grid.points), "lengths": list(grid.lengths)},
            "kind": kind,
            "provenance": provenance,
            "time_start": float(time_start),
            "time_step": float(time_step),
        }
        self._fh = open(self.path, "wb")
        self._fh.write((MAGIC + "\n").encode("ascii"))
        self._fh.write(
            (json.dumps(header, sort_keys=True, default=_json_default) + "\n").encode("ascii")
        )

    def write_frame(self, arrays: Sequence[np.ndarray]) -> None:
        if len(arrays) != len(self.fields):
            raise ValueError(f"expected {len(self.fields)} arrays, got {len(arrays)}")
        for arr in arrays:
            data = np.asarray(arr, dtype="<f8")
            if data.shape != self.grid.shape:
                raise ValueError(f"frame array shape {data.shape} != grid {self.grid.shape}")
            self._fh.write(data.tobytes(order="F"))
        self._written += 1

    def close(self) -> None:
        self._fh.close()
        if self._written != self.frame_count:
            raise ValueError(
                f"snapshot header promised {self.frame_count} frames, wrote {self._written}"
            )

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
        if exc_type is None and self._written != self.frame_count:
            raise ValueError(
                f"snapshot header promised {self.frame_count} frames, wrote {self._written}"
            )


@dataclass(frozen=True)
class SnapshotData:
    """A fully loaded snapshot file."""

    kind: str
    grid: Grid
    fields: tuple[str, ...]
    times: np.ndarray
    frames: list[dict[str, np.ndarray]]
    provenance: dict

    def frame_arrays(self, n: int) -> dict[str, np.ndarray]:
        return self.frames[n]


def write_snapshot(
    path: str | Path,
    *,
    kind: str,
    grid: Grid,
    fields: Sequence[str],
    times: Sequence[float],
    frames: Iterable[Sequence[np.ndarray]],
    provenance: dict,
) -> None:
    times = np.asarray(times, dtype=float)
    step = float(times[1] - times[0]) if times.size > 1 else 0.0
    with SnapshotWriter(
        path,
        kind=kind,
        grid=grid,
        fields=fields,
        time_start=float(times[0]),
        time_step=step,
        frame_count=len(times),
        provenance=provenance,
    ) as writer:
        for frame in frames:
            writer.write_frame(frame)


def read_snapshot(path: str | Path) -> SnapshotData:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").rstrip("\n")
        if magic != MAGIC:
            raise ValueError(f"{path} is not a snapshot file (magic {magic!r})")
        header = json.loads(fh.readline().decode("ascii"))
        grid = Grid(tuple(header["grid"]["points"]), tuple(header["grid"]["lengths"]))
        fields = tuple(header["fields"])
        count = int(header["frame_count"])
        frame_bytes = grid.size * 8
        frames = []
        for _ in range(count):
            entry = {}
            for name in fields:
                raw = fh.read(frame_bytes)
                if len(raw) != frame_bytes:
                    raise ValueError(f"{path} is truncated")
                entry[name] = (
                    np.frombuffer(raw, dtype="<f8").reshape(grid.shape, order="F").copy()
                )
            frames.append(entry)
        tail = fh.read(1)
        if tail:
            raise ValueError(f"{path} has trailing bytes")
    times = header["time_start"] + header["time_step"] * np.arange(count)
    return SnapshotData(header["kind"], grid, fields, times, frames, header.get("provenance", {}))


def dump_csv(data: SnapshotData, out_path: str | Path, frame: int | None = None) -> None:
    """Convert snapshot frames to CSV: one row per grid point per frame."""
    coord_names = ("x", "y", "z")[: data.grid.dims]
    axes = [data.grid.axis_coordinates(a) for a in range(data.grid.dims)]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat_coords = [m.ravel(order="F") for m in mesh]
    which = range(len(data.frames)) if frame is None else [frame]
    with open(out_path, "w", newline="") as fh:
        fh.write(",".join(["frame", "time", *coord_names, *data.fields]) + "\n")
        for n in which:
            t = format_float(data.times[n])
            cols = [data.frames[n][name].ravel(order="F") for name in data.fields]
            for i in range(data.grid.size):
                row = [str(n), t]
                row += [format_float(c[i]) for c in flat_coords]
                row += [format_float(c[i]) for c in cols]
                fh.write(",".join(row) + "\n")


class DiagnosticsWriter:
    """Streaming CSV writer with a fixed column order."""

    def __init__(self, path: str | Path, columns: Sequence[str]):
        self.columns = tuple(columns)
        self._fh = open(path, "w", newline="")
        self._fh.write(",".join(self.columns) + "\n")

    def write_row(self, values: Sequence) -> None:
        if len(values) != len(self.columns):
            raise ValueError("diagnostics row does not match the column order")
        cells = [str(v) if isinstance(v, int) else format_float(v) for v in values]
        self._fh.write(",".join(cells) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self._fh.close()
