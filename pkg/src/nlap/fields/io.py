"""Field dumps: a flat self-describing layout in binary or plain text.

Binary layout (all little-endian, C row-major):

    bytes 0-7   magic ``NLAPFLD\\x01``
    uint32      dim
    uint32      kind (0 scalar, 1 vector)
    uint32*dim  shape
    float64     h
    float64*dim box origin (coordinate of the lower box corner)
    float64     delta
    float64*    values  (size values; vector fields store dim per node,
                         component index fastest)
    uint8*      region codes (0 domain, 1 collar, 2 exterior)

The text form carries the same header as ``key value`` lines, then a
``values`` block (one node per line) and a ``regions`` block.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid

MAGIC = b"NLAPFLD\x01"
REGION_DOMAIN, REGION_COLLAR, REGION_EXTERIOR = 0, 1, 2


def region_codes(grid: Grid) -> np.ndarray:
    codes = np.full(grid.shape, REGION_EXTERIOR, dtype=np.uint8)
    codes[grid.collar_mask] = REGION_COLLAR
    codes[grid.domain_mask] = REGION_DOMAIN
    return codes


def write_field(field: Field, path, fmt: str = "binary") -> None:
    """Dump a field with its geometry and region masks."""
    grid = field.grid
    kind = 1 if field.is_vector else 0
    codes = region_codes(grid)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            np.array([grid.dim, kind], dtype="<u4").tofile(fh)
            np.array(grid.shape, dtype="<u4").tofile(fh)
            np.array([grid.h], dtype="<f8").tofile(fh)
            np.array(grid.origin, dtype="<f8").tofile(fh)
            np.array([grid.delta], dtype="<f8").tofile(fh)
            field.values.astype("<f8").tofile(fh)
            codes.tofile(fh)
    elif fmt == "text":
        with open(path, "w") as fh:
            fh.write("# nlap field dump\n")
            fh.write(f"dim {grid.dim}\n")
            fh.write(f"kind {'vector' if kind else 'scalar'}\n")
            fh.write("shape " + " ".join(str(n) for n in grid.shape) + "\n")
            fh.write(f"h {float(grid.h)!r}\n")
            fh.write("origin "
                     + " ".join(repr(float(o)) for o in grid.origin) + "\n")
            fh.write(f"delta {float(grid.delta)!r}\n")
            fh.write("values\n")
            flat = field.values.reshape(-1, grid.dim) if kind else \
                field.values.reshape(-1, 1)
            for row in flat:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            fh.write("regions\n")
            for c in codes.reshape(-1):
                fh.write(f"{int(c)}\n")
    else:
        raise ValueError(f"unknown dump format {fmt!r}")


def read_field(path):
    """Read a dump; returns ``(values, header)`` with the header holding
    dim/shape/h/origin/delta/kind and the region-code array."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic == MAGIC:
            dim, kind = np.fromfile(fh, dtype="<u4", count=2)
            shape = tuple(int(n) for n in np.fromfile(fh, dtype="<u4", count=int(dim)))
            h = float(np.fromfile(fh, dtype="<f8", count=1)[0])
            origin = tuple(float(o) for o in np.fromfile(fh, dtype="<f8", count=int(dim)))
            delta = float(np.fromfile(fh, dtype="<f8", count=1)[0])
            size = int(np.prod(shape))
            count = size * (int(dim) if kind else 1)
            values = np.fromfile(fh, dtype="<f8", count=count)
            values = values.reshape(shape + (int(dim),) if kind else shape)
            codes = np.fromfile(fh, dtype=np.uint8, count=size).reshape(shape)
            header = {"dim": int(dim), "kind": "vector" if kind else "scalar",
                      "shape": shape, "h": h, "origin": origin, "delta": delta,
                      "regions": codes}
            return values, header
    # fall through to the text form
    header = {}
    values_rows, codes = [], []
    section = "header"
    with open(path) as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if body == "values":
                section = "values"
                continue
            if body == "regions":
                section = "regions"
                continue
            if section == "header":
                key, rest = body.split(None, 1)
                header[key] = rest
            elif section == "values":
                values_rows.append([float(v) for v in body.split()])
            else:
                codes.append(int(body))
    dim = int(header["dim"])
    shape = tuple(int(n) for n in header["shape"].split())
    kind = header["kind"]
    values = np.asarray(values_rows)
    values = values.reshape(shape + (dim,)) if kind == "vector" else values.reshape(shape)
    out = {"dim": dim, "kind": kind, "shape": shape, "h": float(header["h"]),
           "origin": tuple(float(o) for o in header["origin"].split()),
           "delta": float(header["delta"]),
           "regions": np.asarray(codes, dtype=np.uint8).reshape(shape)}
    return values, out
