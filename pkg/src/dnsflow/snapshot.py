"""Field snapshot IO: legacy structured-points VTK ASCII and bare CSV.

All floating-point emission uses 17 significant digits so a written
snapshot reads back bitwise. The VTK title line carries the boundary
condition and extent, which the plain format has no slot for.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .fields import BoundaryCondition, GridSpec, ScalarField, VelocityField


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path, velocity: VelocityField,
              pressure: ScalarField | None = None,
              title: str | None = None) -> None:
    spec = velocity.spec
    nx, ny = spec.node_shape
    dx = spec.spacing
    if title is None:
        title = (f"dnsflow bc={spec.bc.value} "
                 f"extent={_fmt(spec.extent[0])},{_fmt(spec.extent[1])}")
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        "ORIGIN 0 0 0",
        f"SPACING {_fmt(dx)} {_fmt(dx)} 1",
        f"POINT_DATA {nx * ny}",
        "VECTORS velocity float",
    ]
    u, v = velocity.data[0], velocity.data[1]
    # VTK point order: x fastest
    for j in range(ny):
        for i in range(nx):
            lines.append(f"{_fmt(u[i, j])} {_fmt(v[i, j])} 0")
    if pressure is not None:
        lines.append("SCALARS pressure float 1")
        lines.append("LOOKUP_TABLE default")
        for j in range(ny):
            for i in range(nx):
                lines.append(_fmt(pressure.data[i, j]))
    Path(path).write_text("\n".join(lines) + "\n")


def _spec_from_header(title: str, nx: int, ny: int, dx: float) -> GridSpec:
    bc = BoundaryCondition.PERIODIC
    extent = None
    for token in title.split():
        if token.startswith("bc="):
            bc = BoundaryCondition.parse(token[3:])
        elif token.startswith("extent="):
            parts = token[7:].split(",")
            extent = (float(parts[0]), float(parts[1]))
    if bc is BoundaryCondition.PERIODIC:
        cells = (nx, ny)
    else:
        cells = (nx - 1, ny - 1)
    if extent is None:
        extent = (cells[0] * dx, cells[1] * dx)
    return GridSpec(cells, extent, bc)


def read_vtk(path) -> tuple[VelocityField, ScalarField | None]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 9 or "vtk DataFile" not in lines[0]:
        raise ValueError(f"{path}: not a legacy VTK file")
    title = lines[1]
    idx = {line.split()[0]: k for k, line in enumerate(lines)
           if line and line[0].isalpha()}
    dims = lines[idx["DIMENSIONS"]].split()
    nx, ny = int(dims[1]), int(dims[2])
    dx = float(lines[idx["SPACING"]].split()[1])
    spec = _spec_from_header(title, nx, ny, dx)
    start = idx["VECTORS"] + 1
    u = np.empty((nx, ny))
    v = np.empty((nx, ny))
    k = start
    for j in range(ny):
        for i in range(nx):
            parts = lines[k].split()
            u[i, j] = float(parts[0])
            v[i, j] = float(parts[1])
            k += 1
    velocity = VelocityField(spec, np.stack([u, v]))
    pressure = None
    if "SCALARS" in idx:
        k = idx["LOOKUP_TABLE"] + 1
        p = np.empty((nx, ny))
        for j in range(ny):
            for i in range(nx):
                p[i, j] = float(lines[k])
                k += 1
        pressure = ScalarField(spec, p)
    return velocity, pressure


def write_csv(path, velocity: VelocityField,
              pressure: ScalarField | None = None) -> None:
    """Headerless rows x,y,vx,vy,p in row-major node order."""
    spec = velocity.spec
    nx, ny = spec.node_shape
    dx = spec.spacing
    p = pressure.data if pressure is not None else np.zeros((nx, ny))
    rows = []
    for i in range(nx):
        for j in range(ny):
            rows.append(",".join([
                _fmt(i * dx), _fmt(j * dx),
                _fmt(velocity.data[0][i, j]), _fmt(velocity.data[1][i, j]),
                _fmt(p[i, j]),
            ]))
    Path(path).write_text("\n".join(rows) + "\n")


def read_csv(path, bc: BoundaryCondition = BoundaryCondition.PERIODIC,
             ) -> tuple[VelocityField, ScalarField]:
    """Rebuild fields from the bare CSV; the grid is inferred from the
    coordinate columns plus the caller-supplied boundary condition."""
    raw = np.loadtxt(path, delimiter=",")
    if raw.ndim != 2 or raw.shape[1] != 5:
        raise ValueError(f"{path}: expected x,y,vx,vy,p rows")
    xs = np.unique(raw[:, 0])
    ys = np.unique(raw[:, 1])
    nx, ny = len(xs), len(ys)
    if nx * ny != raw.shape[0]:
        raise ValueError(f"{path}: rows do not form a full grid")
    dx = xs[1] - xs[0]
    if bc is BoundaryCondition.PERIODIC:
        cells = (nx, ny)
        extent = (nx * dx, ny * dx)
    else:
        cells = (nx - 1, ny - 1)
        extent = (xs[-1], ys[-1])
    spec = GridSpec(cells, extent, bc)
    u = raw[:, 2].reshape(nx, ny)
    v = raw[:, 3].reshape(nx, ny)
    p = raw[:, 4].reshape(nx, ny)
    return VelocityField(spec, np.stack([u, v])), ScalarField(spec, p)
