"""Output writers: versioned CSV tables, legacy VTK, binary checkpoints.

Every file is written to a temporary sibling and moved into place with
``os.replace`` so an interrupted run never leaves a truncated file.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

CSV_SCHEMA_VERSION = 1
CHECKPOINT_MAGIC = b"ITERPROJCKPT1\n"
ITERATION_COLUMNS = ("step", "s", "dp_max", "dp_l2", "weak_div", "strong_div")

# P2 tet -> 8 P1 sub-tets in local numbering (vertices 0-3, edge midpoints 4-9
# following LOCAL_EDGES = 01, 02, 03, 12, 13, 23)
_SUBTETS = np.array([
    [0, 4, 5, 6], [4, 1, 7, 8], [5, 7, 2, 9], [6, 8, 9, 3],
    [4, 5, 6, 8], [4, 5, 7, 8], [5, 6, 8, 9], [5, 7, 8, 9],
])
VTK_TETRA = 10


@contextmanager
def atomic_open(path, mode: str = "w", **kw):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, kind: str) -> None:
    """CSV with a leading ``# iterproj-csv v<version> kind=<kind>`` line."""
    with atomic_open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# iterproj-csv v{CSV_SCHEMA_VERSION} kind={kind}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_csv(path):
    """Return (kind, version, columns, rows-as-strings); rejects unknown schema."""
    with open(path, encoding="utf-8", newline="") as fh:
        head = fh.readline().strip()
        parts = head.split()
        if len(parts) < 3 or parts[0] != "#" or parts[1] != "iterproj-csv":
            raise ValueError(f"{path}: missing schema header")
        version = int(parts[2].lstrip("v"))
        if version != CSV_SCHEMA_VERSION:
            raise ValueError(f"{path}: schema v{version}, expected v{CSV_SCHEMA_VERSION}")
        kind = parts[3].split("=", 1)[1] if len(parts) > 3 else ""
        reader = csv.reader(fh)
        columns = next(reader)
        return kind, version, columns, list(reader)


def write_diagnostics(path, diagnostics, with_errors: bool) -> None:
    from .diagnostics import StepDiagnostics
    write_csv(path, StepDiagnostics.columns(with_errors),
              (d.row(with_errors) for d in diagnostics), kind="diagnostics")


def write_iterations(path, reports, first_step: int = 2) -> None:
    rows = []
    for i, rep in enumerate(reports):
        for r in rep.records:
            rows.append([first_step + i, r.s, r.dp_max, r.dp_l2, r.weak_div, r.strong_div])
    write_csv(path, ITERATION_COLUMNS, rows, kind="iterations")


# VTK -----------------------------------------------------------------------

def refined_p1_cells(mesh) -> np.ndarray:
    """Connectivity of the 8-fold P1 refinement over the P2 node set."""
    cells = mesh.p2_cells
    return cells[:, _SUBTETS].reshape(-1, 4)


def write_vtk(path, mesh, u: np.ndarray, p: np.ndarray, title: str = "iterproj") -> None:
    """Legacy ASCII unstructured grid with velocity and pressure point data.

    Pressure is P1; its values at the edge midpoints are the averages of the
    endpoint values, which is exact for a linear field.
    """
    pts = mesh.p2_nodes
    cells = refined_p1_cells(mesh)
    vel = np.asarray(u).reshape(-1, 3)
    p = np.asarray(p)
    p2 = np.concatenate([p, 0.5 * (p[mesh.edges[:, 0]] + p[mesh.edges[:, 1]])])
    buf = io.StringIO()
    buf.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    buf.write(f"POINTS {len(pts)} double\n")
    np.savetxt(buf, pts, fmt="%.17g")
    buf.write(f"CELLS {len(cells)} {5 * len(cells)}\n")
    np.savetxt(buf, np.hstack([np.full((len(cells), 1), 4), cells]), fmt="%d")
    buf.write(f"CELL_TYPES {len(cells)}\n")
    np.savetxt(buf, np.full(len(cells), VTK_TETRA), fmt="%d")
    buf.write(f"POINT_DATA {len(pts)}\nVECTORS velocity double\n")
    np.savetxt(buf, vel, fmt="%.17g")
    buf.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
    np.savetxt(buf, p2, fmt="%.17g")
    with atomic_open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


# checkpoints --------------------------------------------------------------

def params_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, state, N: int, k: float, params: dict) -> None:
    header = dict(N=int(N), k=float(k), t=float(state.t), n=int(state.n),
                  sizes=[len(state.u), len(state.p)], params_hash=params_hash(params))
    hb = json.dumps(header, sort_keys=True).encode()
    with atomic_open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(hb).to_bytes(8, "little"))
        fh.write(hb)
        for v in (state.u, state.u_prev, state.p, state.p_prev):
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path, params: dict | None = None):
    """Return (TimeState, header). With ``params`` the stored hash must match."""
    from .march import TimeState
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint")
        hlen = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(hlen))
        nu_, np_ = header["sizes"]
        vecs = []
        for n in (nu_, nu_, np_, np_):
            raw = fh.read(8 * n)
            if len(raw) != 8 * n:
                raise ValueError(f"{path}: truncated checkpoint")
            vecs.append(np.frombuffer(raw, dtype="<f8").copy())
    if params is not None and params_hash(params) != header["params_hash"]:
        raise ValueError(f"{path}: checkpoint written with different parameters")
    return TimeState(vecs[0], vecs[1], vecs[2], vecs[3], header["t"], header["n"]), header
