"""Field snapshot files and CSV export.

One snapshot = one ASCII header line + raw little-endian float64 payload.
The header is `BHF1 kind=<box|torus> nx=<int> nz=<int> Lx=<float> Lz=<float>
t=<float> name=<string> ncomp=<int>` optionally followed by extra
`key=value` tokens (e.g. `xsample=1,2`, `eps=0.25`, `tau=0.1`). The payload
stores each component with x as the fastest-varying index, components
concatenated. Writes are deterministic byte-for-byte for equal inputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .fields import ScalarField, VectorField

MAGIC = "BHF1"
_NAME_RE = re.compile(r"^[A-Za-z0-9_.+-]+$")
_HEADER_KEYS = ("kind", "nx", "nz", "Lx", "Lz", "t", "name", "ncomp")


@dataclass
class SnapshotMeta:
    kind: str
    nx: int
    nz: int
    Lx: float
    Lz: float
    t: float
    name: str
    ncomp: int
    extra: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return Grid(self.kind, self.nx, self.nz, self.Lx, self.Lz)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _component_bytes(values: np.ndarray) -> bytes:
    # x fastest: transpose (nx, nz) -> (nz, nx) and emit C-order
    return np.ascontiguousarray(values.T, dtype="<f8").tobytes()


def write_snapshot(path, obj, t: float, name: str, extra: dict | None = None):
    """Write a ScalarField or VectorField snapshot to `path`."""
    if not _NAME_RE.match(name):
        raise ValueError(f"snapshot name {name!r} has characters outside the token set")
    if isinstance(obj, VectorField):
        comps = [c.values for c in obj.components]
    else:
        comps = [obj.values]
    g = obj.grid
    tokens = [
        MAGIC,
        f"kind={g.kind}",
        f"nx={g.nx}",
        f"nz={g.nz}",
        f"Lx={_fmt(float(g.Lx))}",
        f"Lz={_fmt(float(g.Lz))}",
        f"t={_fmt(float(t))}",
        f"name={name}",
        f"ncomp={len(comps)}",
    ]
    for k in sorted(extra or {}):
        v = (extra or {})[k]
        if k in _HEADER_KEYS or not _NAME_RE.match(k):
            raise ValueError(f"bad extra header token {k!r}")
        tokens.append(f"{k}={_fmt(v)}")
    with open(path, "wb") as f:
        f.write((" ".join(tokens) + "\n").encode("ascii"))
        for c in comps:
            f.write(_component_bytes(c))


def _parse_header(line: str) -> SnapshotMeta:
    parts = line.split()
    if not parts or parts[0] != MAGIC:
        raise ValueError(f"not a {MAGIC} snapshot")
    kv = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ValueError(f"malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        if k in kv:
            raise ValueError(f"duplicate header token {k!r}")
        kv[k] = v
    missing = [k for k in _HEADER_KEYS if k not in kv]
    if missing:
        raise ValueError(f"header missing tokens: {', '.join(missing)}")
    meta = SnapshotMeta(
        kind=kv.pop("kind"),
        nx=int(kv.pop("nx")),
        nz=int(kv.pop("nz")),
        Lx=float(kv.pop("Lx")),
        Lz=float(kv.pop("Lz")),
        t=float(kv.pop("t")),
        name=kv.pop("name"),
        ncomp=int(kv.pop("ncomp")),
        extra=kv,
    )
    if meta.ncomp not in (1, 2):
        raise ValueError(f"ncomp={meta.ncomp} unsupported")
    return meta


def read_snapshot(path):
    """Read a snapshot; returns (ScalarField | VectorField, SnapshotMeta)."""
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").rstrip("\n")
        meta = _parse_header(header)
        count = meta.ncomp * meta.nx * meta.nz
        raw = f.read(count * 8)
        if len(raw) != count * 8:
            raise ValueError(f"{path}: truncated payload")
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes after payload")
    flat = np.frombuffer(raw, dtype="<f8")
    grid = meta.grid
    comps = []
    per = meta.nx * meta.nz
    for i in range(meta.ncomp):
        block = flat[i * per : (i + 1) * per].reshape(meta.nz, meta.nx)
        comps.append(np.ascontiguousarray(block.T))
    if meta.ncomp == 1:
        return ScalarField(grid, comps[0]), meta
    return VectorField.from_arrays(grid, comps[0], comps[1]), meta


def write_csv(path, obj):
    """Export a field as `x,z,value[,value2]` rows, 17 significant digits."""
    if isinstance(obj, VectorField):
        comps = [c.values for c in obj.components]
    else:
        comps = [obj.values]
    g = obj.grid
    x, z = g.x, g.z
    with open(path, "w", encoding="ascii") as f:
        f.write("x,z," + ",".join(
            ["value"] + [f"value{i + 1}" for i in range(1, len(comps))]
        ) + "\n")
        for j in range(g.nz):
            for i in range(g.nx):
                vals = ",".join("%.17g" % c[i, j] for c in comps)
                f.write("%.17g,%.17g,%s\n" % (x[i], z[j], vals))


def write_table(path, columns, rows):
    """CSV table with a header row; cells formatted at 17 significant digits."""
    with open(path, "w", encoding="ascii") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(
                "%.17g" % v if isinstance(v, float) else str(v) for v in row
            ) + "\n")


def read_table(path):
    """Read a write_table CSV back as (columns, list of float rows)."""
    with open(path, "r", encoding="ascii") as f:
        columns = f.readline().rstrip("\n").split(",")
        rows = []
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            rows.append([float(tok) for tok in line.split(",")])
    return columns, rows
