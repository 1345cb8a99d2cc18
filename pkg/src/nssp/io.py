"""On-disk formats: binary checkpoints, CSV tables and the trajectory manifest.

Checkpoint layout (little endian)::

    magic  b"NSSP"   4 bytes
    version          uint32
    dim, n           uint32, uint32
    nu, time         float64, float64
    coeffs           complex128, shape (dim, n, ..., n//2 + 1), C order

CSV floats are written with 17 significant digits so they parse back to the
same doubles.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .solver import DiagnosticsRow, SolverConfig, TrajectoryRecord
from .spectral import GridSpec, SpectralField

MAGIC = b"NSSP"
CHECKPOINT_VERSION = 1
HEADER = struct.Struct("<4sIIIdd")
CSV_SCHEMA_VERSION = 1
DIAGNOSTIC_COLUMNS = ("t", "energy", "enstrophy", "dissipation_integral", "besov_m1")
CHECK_COLUMNS = ("name", "time", "k", "sigma", "lhs", "rhs", "margin", "status")
MANIFEST = "trajectory.json"
DIAGNOSTICS_CSV = "diagnostics.csv"


def fmt(x) -> str:
    """17-significant-digit text for a float; empty for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def ladder_column(k: float) -> str:
    return f"e_k_{float(k):g}"


def write_checkpoint(path, u: SpectralField, time: float = 0.0) -> None:
    g = u.grid
    header = HEADER.pack(MAGIC, CHECKPOINT_VERSION, g.dim, g.n, float(g.nu), float(time))
    payload = np.ascontiguousarray(u.coeffs, dtype="<c16").tobytes()
    Path(path).write_bytes(header + payload)


def read_checkpoint(path) -> tuple[SpectralField, float]:
    """Inverse of :func:`write_checkpoint`; raises ValueError on a bad file."""
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, version, dim, n, nu, time = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    grid = GridSpec(dim, n, nu)
    shape = (dim,) + grid.spectral_shape
    expected = HEADER.size + 16 * math.prod(shape)
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    coeffs = np.frombuffer(data, dtype="<c16", offset=HEADER.size).reshape(shape).astype(np.complex128)
    return SpectralField(grid, coeffs), time


def write_diagnostics_csv(path, rows, k_ladder) -> None:
    ladder = [float(k) for k in k_ladder]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(DIAGNOSTIC_COLUMNS) + [ladder_column(k) for k in ladder])
        for r in rows:
            w.writerow(
                [fmt(r.t), fmt(r.energy), fmt(r.enstrophy), fmt(r.dissipation_integral), fmt(r.besov_m1)]
                + [fmt(r.truncated_energies[k]) for k in ladder]
            )


def read_diagnostics_csv(path, k_ladder) -> list[DiagnosticsRow]:
    ladder = [float(k) for k in k_ladder]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                DiagnosticsRow(
                    t=float(rec["t"]),
                    energy=float(rec["energy"]),
                    enstrophy=float(rec["enstrophy"]),
                    dissipation_integral=float(rec["dissipation_integral"]),
                    besov_m1=float(rec["besov_m1"]),
                    truncated_energies={k: float(rec[ladder_column(k)]) for k in ladder},
                )
            )
    return rows


def write_checks_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHECK_COLUMNS)
        for r in reports:
            w.writerow([r.name, fmt(r.time), fmt(r.k), fmt(r.sigma), fmt(r.lhs), fmt(r.rhs), fmt(r.margin), r.status])


def write_table_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Plain numeric table, one column per key, rows in index order."""
    names = list(columns)
    data = [np.asarray(columns[c], dtype=float) for c in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([fmt(x) for x in row])


def checkpoint_name(index: int) -> str:
    return f"ckpt_{index:06d}.nssp"


def save_trajectory(directory, record: TrajectoryRecord, checkpoint_every: int = 1, extra: dict | None = None) -> Path:
    """Write diagnostics.csv, checkpoints and the JSON manifest into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(out / DIAGNOSTICS_CSV, record.diagnostics, record.k_ladder)
    saved = []
    for idx, (t, u) in enumerate(zip(record.times, record.checkpoints)):
        if idx % checkpoint_every == 0:
            name = checkpoint_name(idx)
            write_checkpoint(out / name, u, float(t))
            saved.append({"index": idx, "time": float(t), "file": name})
    cfg = record.config
    manifest = {
        "schema_version": CSV_SCHEMA_VERSION,
        "dim": cfg.grid.dim,
        "n": cfg.grid.n,
        "nu": cfg.grid.nu,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "dealias": cfg.dealias,
        "nonlinear_form": cfg.nonlinear_form,
        "sample_every": cfg.sample_every,
        "inviscid": cfg.inviscid,
        "k_ladder": list(record.k_ladder),
        "oversample": record.oversample,
        "checkpoints": saved,
    }
    if extra:
        manifest.update(extra)
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def load_trajectory(directory) -> TrajectoryRecord:
    """Rebuild a record from :func:`save_trajectory` output.

    Only samples with a checkpoint are kept, so ``times``, ``checkpoints`` and
    ``diagnostics`` stay aligned.  Raises FileNotFoundError when the manifest,
    the diagnostics table or a checkpoint is missing.
    """
    root = Path(directory)
    manifest_path = root / MANIFEST
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no {MANIFEST} in {root}")
    meta = json.loads(manifest_path.read_text())
    diag_path = root / DIAGNOSTICS_CSV
    if not diag_path.is_file():
        raise FileNotFoundError(f"no {DIAGNOSTICS_CSV} in {root}")
    grid = GridSpec(meta["dim"], meta["n"], meta["nu"])
    cfg = SolverConfig(
        grid, meta["dt"], meta["t_end"], meta["dealias"], meta["nonlinear_form"], meta["sample_every"],
        meta.get("inviscid", False),
    )
    ladder = tuple(float(k) for k in meta["k_ladder"])
    rows = read_diagnostics_csv(diag_path, ladder)
    times, fields, kept = [], [], []
    for entry in meta["checkpoints"]:
        path = root / entry["file"]
        if not path.is_file():
            raise FileNotFoundError(f"missing checkpoint {path}")
        u, t = read_checkpoint(path)
        if u.grid.dim != grid.dim or u.grid.n != grid.n:
            raise ValueError(f"{path}: grid does not match the manifest")
        times.append(t)
        fields.append(u.replace(u.coeffs, divergence_free=True))
        kept.append(rows[entry["index"]])
    return TrajectoryRecord(cfg, np.array(times), fields, kept, ladder, meta["oversample"])
