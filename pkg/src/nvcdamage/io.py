"""CSV curves, nodal snapshots and run manifests."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .driver import TensileRecord

CURVE_HEADER = ("time_s", "eng_strain", "eng_stress_MPa", "neck_radius_m", "max_f",
                "max_epbar", "CL_center_molm3", "total_H_mol")
SNAPSHOT_HEADER = ("node", "r_m", "z_m", "u_r_m", "u_z_m", "C_L_molm3")


def _rows(record: TensileRecord):
    for i in range(len(record)):
        yield (record.time[i], record.eng_strain[i], record.eng_stress[i] / 1e6,
               record.neck_radius[i], record.max_f[i], record.max_epbar[i],
               record.CL_center[i], record.total_H[i])


def write_curve_csv(record: TensileRecord, path) -> Path:
    """One row per output step; floats written with ``repr`` (round-trip exact)."""
    if len(record) == 0:
        raise ValueError("record is empty")
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for row in _rows(record):
            w.writerow([repr(float(v)) for v in row])
    return path


def read_curve_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CURVE_HEADER:
            raise ValueError(f"unexpected header {header}")
        data = [[float(x) for x in row] for row in reader]
    arr = np.array(data, dtype=float).reshape(-1, len(CURVE_HEADER))
    return {name: arr[:, i] for i, name in enumerate(CURVE_HEADER)}


def write_snapshot(path, nodes: np.ndarray, u: np.ndarray, C_L: np.ndarray) -> Path:
    """Nodal field table: node id, reference r and z, displacements, C_L."""
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for i in range(nodes.shape[0]):
            w.writerow([i] + [repr(float(v)) for v in (nodes[i, 0], nodes[i, 1],
                                                       u[i, 0], u[i, 1], C_L[i])])
    return path


@dataclass
class RunManifest:
    version: str
    preset: str | None = None
    outputs: list[str] = field(default_factory=list)
    configs: dict[str, str] = field(default_factory=dict)  # output file -> scenario text
    results: dict[str, object] = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))
