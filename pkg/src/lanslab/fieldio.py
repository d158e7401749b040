"""Self-describing binary checkpoints and CSV export for spectral fields.

The binary container is a magic string, a length-prefixed JSON header with
the grid parameters and array shape, then the raw coefficients as
little-endian IEEE-754 complex doubles.  Files round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np

from .spectral import SpectralField, TorusGrid, inverse_transform

MAGIC = b"LANSLAB-FIELD-1\n"

__all__ = ["MAGIC", "write_field", "read_field", "field_to_csv", "FieldFormatError"]


class FieldFormatError(ValueError):
    """Raised when a checkpoint file does not parse."""


def write_field(path, field: SpectralField, extra: dict | None = None):
    """Serialize a field; `extra` lands verbatim in the JSON header."""
    header = {
        "dim": field.grid.dim,
        "points_per_axis": field.grid.points_per_axis,
        "box_length": field.grid.box_length,
        "dealias_fraction": field.grid.dealias_fraction,
        "shape": list(field.coeffs.shape),
        "real_valued": field.real_valued,
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(field.coeffs.astype("<c16")).tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def read_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise FieldFormatError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        shape = tuple(header["shape"])
        count = int(np.prod(shape))
        raw = fh.read(count * 16)
        if len(raw) != count * 16:
            raise FieldFormatError(f"{path}: truncated payload")
        coeffs = np.frombuffer(raw, dtype="<c16").reshape(shape).astype(np.complex128)
    grid = TorusGrid(
        dim=header["dim"],
        points_per_axis=header["points_per_axis"],
        box_length=header["box_length"],
        dealias_fraction=header["dealias_fraction"],
    )
    return SpectralField(grid, coeffs, header["real_valued"])


def field_to_csv(path, field: SpectralField, manifest_hash: str | None = None):
    """Physical-space samples, one grid point per row, for plotting."""
    g = field.grid
    samples = inverse_transform(field)
    flat = samples.reshape((-1,) + g.shape) if field.rank else samples[None]
    ncomp = flat.shape[0]
    coords = g.mesh.reshape(g.dim, -1)
    values = flat.reshape(ncomp, -1)
    with open(path, "w", newline="") as fh:
        if manifest_hash:
            fh.write(f"# manifest={manifest_hash}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x{i+1}" for i in range(g.dim)] + [f"f{i+1}" for i in range(ncomp)])
        for row in range(coords.shape[1]):
            rec = [f"{coords[i, row]:.17g}" for i in range(g.dim)]
            if np.iscomplexobj(values):
                rec += [f"{values[i, row].real:.17g}" for i in range(ncomp)]
            else:
                rec += [f"{values[i, row]:.17g}" for i in range(ncomp)]
            writer.writerow(rec)
