"""Deterministic artifact writers: CSV, JSON, binary field snapshots.

Every writer formats numbers with a fixed rule so identical inputs give
byte-identical files; the run manifest lists each emitted file with its
SHA-256 checksum.

Binary field layout (little-endian), documented for external readers:
  magic   4 bytes  b"PWF1"
  dims    u8       1 or 2
  ncomp   u8       1 (scalar) or 2 (spinor)
  bound   u8       0 periodic, 1 absorbing
  pad     u8
  absorb  f64      absorbing ramp width
  per axis: lo f64, hi f64, n u64
  time    f64
  hbar    f64
  mass    f64
  data    ncomp blocks of complex128, C (row-major) node order
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import ABSORBING, Grid

FLOAT_FMT = "%.12g"

MAGIC = b"PWF1"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % float(value)
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_json(path, obj):
    path = Path(path)

    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON-serializable: {type(o)}")

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, sort_keys=True, indent=2, default=default)
        f.write("\n")
    return path


def write_density_matrix(path, field_density: np.ndarray, grid: Grid,
                         time: float):
    """Row-major density matrix with a commented geometry header."""
    path = Path(path)
    nx, ny = (grid.shape if grid.dims == 2 else (grid.shape[0], 1))
    (xlo, xhi) = grid.extents[0]
    (ylo, yhi) = grid.extents[1] if grid.dims == 2 else (0.0, 0.0)
    vals = np.atleast_2d(field_density)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# nx={nx} ny={ny} xlo={fmt(xlo)} xhi={fmt(xhi)} "
                f"ylo={fmt(ylo)} yhi={fmt(yhi)} time={fmt(time)}\n")
        for row in vals:
            f.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    return path


# ---------------------------------------------------------------------------
# binary field snapshots
# ---------------------------------------------------------------------------

def save_field(path, field):
    """ComplexField (1 component) or SpinorField (2 components)."""
    comps = [field.psi] if hasattr(field, "psi") else [field.plus, field.minus]
    grid = field.grid
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BBBB", grid.dims, len(comps),
                            1 if grid.boundary == ABSORBING else 0, 0))
        f.write(struct.pack("<d", grid.absorb_width))
        for (lo, hi), n in zip(grid.extents, grid.shape):
            f.write(struct.pack("<ddQ", lo, hi, n))
        f.write(struct.pack("<ddd", field.time, field.hbar, field.mass))
        for c in comps:
            f.write(np.ascontiguousarray(c, dtype=np.complex128).tobytes())
    return path


def load_field(path):
    from .spin import SpinorField
    from .wavefields import ComplexField

    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError("not a pilotwave field file")
        dims, ncomp, bound, _ = struct.unpack("<BBBB", f.read(4))
        (absorb,) = struct.unpack("<d", f.read(8))
        extents, shape = [], []
        for _ in range(dims):
            lo, hi, n = struct.unpack("<ddQ", f.read(24))
            extents.append((lo, hi))
            shape.append(int(n))
        time, hbar, mass = struct.unpack("<ddd", f.read(24))
        grid = Grid(tuple(extents), tuple(shape),
                    boundary=ABSORBING if bound else "periodic",
                    absorb_width=absorb)
        count = int(np.prod(shape))
        comps = [np.frombuffer(f.read(16 * count), dtype=np.complex128)
                 .reshape(shape).copy() for _ in range(ncomp)]
    if ncomp == 1:
        return ComplexField(grid, comps[0], time, hbar, mass)
    return SpinorField(grid, comps[0], comps[1], time, hbar, mass)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config_hash: str, wall_time_s: float,
                   files) -> Path:
    out_dir = Path(out_dir)
    entries = []
    for name in sorted(files):
        p = out_dir / name
        entries.append({"name": name, "sha256": sha256_file(p),
                        "bytes": p.stat().st_size})
    from . import __version__

    manifest = {
        "config_sha256": config_hash,
        "version": __version__,
        "wall_time_s": round(wall_time_s, 3),
        "files": entries,
    }
    return write_json(out_dir / "run_manifest.json", manifest)
