"""Readers for the stackedcp CLI artifacts.

Every loader is a pure reader: it parses a file the simulator CLI wrote and
refuses anything whose schema tag it does not recognize, so a stale plotkit
fails loudly instead of misreading a newer table.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """An input file is not an artifact this package knows how to read."""


_SWEEP_MAGIC = re.compile(r"#\s*stackedcp\s+sweep\s+schema=(\d+)\s*$")

# aggregate columns the sweep command writes after the axis columns, in order
_SWEEP_AGGREGATES = [
    "u0_mean", "u0_se", "u1_mean", "u1_se", "u2_mean", "u2_se",
    "host_survival", "symbiont_survival", "replicas", "mf_outcome",
]


@dataclass
class SweepTable:
    """Parsed sweep.csv: axis columns plus per-point aggregates."""

    axes: list[str]
    columns: dict[str, np.ndarray] = field(repr=False)
    outcomes: np.ndarray = field(repr=False)   # mf_outcome, dtype=str
    n_rows: int = 0

    @classmethod
    def load(cls, path) -> "SweepTable":
        path = Path(path)
        with open(path) as fh:
            first = fh.readline().rstrip("\n")
            m = _SWEEP_MAGIC.match(first)
            if m is None:
                raise SchemaError(
                    f"{path}: missing '# stackedcp sweep schema=...' line")
            if int(m.group(1)) != 1:
                raise SchemaError(
                    f"{path}: unknown sweep schema version {m.group(1)}")
            header = fh.readline().rstrip("\n").split(",")
            if header[-len(_SWEEP_AGGREGATES):] != _SWEEP_AGGREGATES:
                raise SchemaError(
                    f"{path}: aggregate columns do not match the sweep "
                    "contract")
            axes = header[:-len(_SWEEP_AGGREGATES)]
            if len(axes) not in (1, 2):
                raise SchemaError(
                    f"{path}: expected 1 or 2 axis columns, got {len(axes)}")
            rows = [line.rstrip("\n").split(",") for line in fh
                    if line.strip()]
        for r in rows:
            if len(r) != len(header):
                raise SchemaError(f"{path}: ragged row with {len(r)} cells")
        columns: dict[str, np.ndarray] = {}
        for j, name in enumerate(header):
            if name == "mf_outcome":
                continue
            cells = [r[j] for r in rows]
            kind = int if name == "replicas" else float
            try:
                columns[name] = np.array([kind(c) for c in cells])
            except ValueError as e:
                raise SchemaError(f"{path}: bad value in column "
                                  f"{name!r}: {e}") from None
        outcomes = np.array([r[header.index("mf_outcome")] for r in rows],
                            dtype=object)
        return cls(axes=axes, columns=columns, outcomes=outcomes,
                   n_rows=len(rows))

    def grid(self, value: str, x: str, y: str):
        """Pivot a column onto the (x, y) axis grid.

        Returns (xvals, yvals, Z) with Z[y_index, x_index].  The sweep
        command writes one row per grid point, so a hole or duplicate means
        the file was truncated or hand-edited.
        """
        if sorted((x, y)) != sorted(self.axes):
            raise ValueError(f"axes {x!r}, {y!r} do not match the sweep "
                             f"axes {self.axes}")
        xs, ys = self.columns[x], self.columns[y]
        xu, yu = np.unique(xs), np.unique(ys)
        if xu.size * yu.size != self.n_rows:
            raise ValueError("sweep grid is incomplete "
                             f"({self.n_rows} rows for a "
                             f"{xu.size}x{yu.size} grid)")
        if value == "mf_outcome":
            vals = self.outcomes
            Z = np.empty((yu.size, xu.size), dtype=object)
        else:
            vals = self.columns[value]
            Z = np.full((yu.size, xu.size), np.nan)
        seen = np.zeros(Z.shape, dtype=bool)
        xi = np.searchsorted(xu, xs)
        yi = np.searchsorted(yu, ys)
        for k in range(self.n_rows):
            if seen[yi[k], xi[k]]:
                raise ValueError("sweep grid has a duplicate point")
            seen[yi[k], xi[k]] = True
            Z[yi[k], xi[k]] = vals[k]
        return xu, yu, Z


def load_meanfield(path) -> dict:
    """Read meanfield.json and resolve its trajectory CSVs.

    Returns the parsed document with an extra key ``trajectory_paths``
    (absolute paths, all verified to exist).
    """
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("artifact") != "stackedcp-meanfield":
        raise SchemaError(f"{path}: not a stackedcp meanfield artifact")
    if doc.get("schema") != 1:
        raise SchemaError(f"{path}: unknown meanfield schema "
                          f"{doc.get('schema')!r}")
    for key in ("params", "equilibria", "nullclines", "trajectories"):
        if key not in doc:
            raise SchemaError(f"{path}: missing {key!r}")
    paths = [path.parent / name for name in doc["trajectories"]]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(f"trajectory file {p} is missing")
    doc["trajectory_paths"] = paths
    return doc


def load_trajectory(path):
    """Read one mf_traj CSV -> (t, u1, u2) arrays."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != "t,u1,u2":
            raise SchemaError(f"{path}: expected 't,u1,u2' header, got "
                              f"{header!r}")
        data = np.array([[float(c) for c in line.split(",")]
                         for line in fh if line.strip()])
    if data.size == 0:
        raise SchemaError(f"{path}: trajectory has no rows")
    return data[:, 0], data[:, 1], data[:, 2]


def load_edges(path):
    """Read an edge series CSV -> (t, r, l) arrays.

    Accepts both flavors the CLI writes: 't,r,l' (occupied-edge series from
    edge-speed) and 't,r,l,d' (interface series from the simulate observer).
    The extra column is ignored.  Header-only files give empty arrays.
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header not in ("t,r,l", "t,r,l,d"):
            raise SchemaError(f"{path}: expected 't,r,l' or 't,r,l,d' "
                              f"header, got {header!r}")
        ncol = len(header.split(","))
        rows = []
        for line in fh:
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            if len(cells) != ncol:
                raise SchemaError(f"{path}: ragged row {line.rstrip()!r}")
            rows.append([float(c) for c in cells[:3]])
    if not rows:
        z = np.empty(0)
        return z, z.copy(), z.copy()
    data = np.array(rows)
    return data[:, 0], data[:, 1], data[:, 2]
