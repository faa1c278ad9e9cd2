"""Plain-text artifacts: CSV snapshots, gnuplot matrix blocks and JSON."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .evolution import EnsembleField
from .grid import PhaseGrid
from .quantum_ref import WaveFunction1D

FIELD_COLUMNS = ("q", "p", "amp", "phase", "re_psi", "im_psi")
WAVE_COLUMNS = ("q", "re_psi", "im_psi", "abs2")


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_field_csv(path, f: EnsembleField, hbar: float = 1.0) -> Path:
    """One row per node, q-major order."""
    qq, pp = f.grid.mesh()
    psi = f.amp * np.exp(1j * f.phase / hbar)
    data = np.column_stack([a.ravel() for a in (qq, pp, f.amp, f.phase, psi.real, psi.imag)])
    path = Path(path)
    np.savetxt(path, data, delimiter=",", header=",".join(FIELD_COLUMNS), comments="", fmt="%.17g")
    return path


def read_field_csv(path, grid: PhaseGrid, t: float = 0.0) -> EnsembleField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.nq * grid.np, len(FIELD_COLUMNS)):
        raise ValueError(f"{path}: expected {grid.nq * grid.np} rows of {len(FIELD_COLUMNS)} columns")
    return EnsembleField(grid, data[:, 2].reshape(grid.shape), data[:, 3].reshape(grid.shape), t)


def write_matrix_dat(path, grid: PhaseGrid, values: np.ndarray) -> Path:
    """Gnuplot ``nonuniform matrix`` text layout.

    First row: number of p nodes followed by the p coordinates; each further row:
    a q coordinate followed by the values along p. Plot with
    ``plot 'file.dat' nonuniform matrix with image``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError("values do not match the grid")
    head = np.concatenate([[grid.np], grid.p])
    body = np.column_stack([grid.q, values])
    path = Path(path)
    with path.open("w") as fh:
        fh.write(" ".join(f"{x:.17g}" for x in head) + "\n")
        np.savetxt(fh, body, fmt="%.17g")
    return path


def read_matrix_dat(path):
    """Return ``(q, p, values)`` from a file written by :func:`write_matrix_dat`."""
    rows = np.loadtxt(path, ndmin=2)
    n = int(rows[0, 0])
    if rows.shape[1] != n + 1:
        raise ValueError(f"{path}: header announces {n} columns, found {rows.shape[1] - 1}")
    return rows[1:, 0], rows[0, 1:], rows[1:, 1:]


def write_wavefunction_csv(path, psi: WaveFunction1D) -> Path:
    data = np.column_stack([psi.q, psi.values.real, psi.values.imag, psi.density])
    path = Path(path)
    np.savetxt(path, data, delimiter=",", header=",".join(WAVE_COLUMNS), comments="", fmt="%.17g")
    return path


def read_wavefunction_csv(path, q_min: float, q_max: float, t: float = 0.0, hbar: float = 1.0,
                          mass: float = 1.0) -> WaveFunction1D:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return WaveFunction1D(q_min, q_max, data[:, 1] + 1j * data[:, 2], t, hbar, mass)


def write_columns_csv(path, columns: dict) -> Path:
    """Equal-length named columns, e.g. marginals on a q-grid."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    path = Path(path)
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def read_columns_csv(path) -> dict:
    path = Path(path)
    names = path.read_text().split("\n", 1)[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {k: data[:, i] for i, k in enumerate(names)}
