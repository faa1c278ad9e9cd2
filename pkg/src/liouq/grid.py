"""Uniform (q, p) grids and local Lagrange interpolation on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

INTERPOLATION_ORDERS = {"linear": 2, "cubic": 4}


@dataclass(frozen=True)
class PhaseGrid:
    """Node-centred rectangular window; both end points are nodes.

    Arrays on the grid have shape ``(nq, np)`` with q along axis 0.
    """

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int
    np: int

    def __post_init__(self):
        if not (self.q_max > self.q_min and self.p_max > self.p_min):
            raise ValueError("grid window must have q_max > q_min and p_max > p_min")
        if self.nq < 8 or self.np < 8:
            raise ValueError("grids need at least 8 nodes per axis")

    @classmethod
    def square(cls, half_width: float, n: int, center=(0.0, 0.0)):
        q0, p0 = center
        return cls(q0 - half_width, q0 + half_width, p0 - half_width, p0 + half_width, n, n)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.nq - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.np - 1)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.nq)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    @property
    def shape(self) -> tuple:
        return (self.nq, self.np)

    @property
    def cell_area(self) -> float:
        return self.dq * self.dp

    def mesh(self):
        return np.meshgrid(self.q, self.p, indexing="ij")

    def contains(self, q, p) -> np.ndarray:
        return (q >= self.q_min) & (q <= self.q_max) & (p >= self.p_min) & (p <= self.p_max)

    def refined(self):
        """Same window with the spacing halved."""
        return PhaseGrid(self.q_min, self.q_max, self.p_min, self.p_max, 2 * self.nq - 1, 2 * self.np - 1)

    def to_json(self) -> dict:
        return {
            "q": [self.q_min, self.q_max],
            "p": [self.p_min, self.p_max],
            "nq": self.nq,
            "np": self.np,
        }


def _lagrange_weights(x: np.ndarray, start: np.ndarray, width: int) -> np.ndarray:
    nodes = start[:, None] + np.arange(width)[None, :]
    w = np.ones((x.size, width))
    for j in range(width):
        for m in range(width):
            if m != j:
                w[:, j] *= (x - nodes[:, m]) / (j - m)
    return w


def stencil(x: np.ndarray, n: int, kind: str = "cubic", outside: str = "zero"):
    """Interpolation stencils along one axis in index coordinates.

    ``outside="zero"`` treats values beyond the window as 0 (stencil entries off
    the grid are masked). ``outside="extrapolate"`` shifts stencils to stay on the
    grid and extrapolates up to one cell beyond the window (positions further out
    are clamped there); polynomials of degree < stencil width are reproduced
    exactly within that band.
    Returns ``(idx, weights, valid)`` with shape ``(len(x), width)``.
    """
    width = INTERPOLATION_ORDERS[kind]
    x = np.asarray(x, dtype=float).ravel()
    if outside == "extrapolate":
        x = np.clip(x, 0.0, n - 1.0)
        base = np.floor(x).astype(np.int64) - (width // 2 - 1)
        start = np.clip(base, 0, n - width)
        w = _lagrange_weights(x, start, width)
        idx = start[:, None] + np.arange(width)[None, :]
        return idx, w, np.ones_like(idx, dtype=bool)
    if outside != "zero":
        raise ValueError(f"unknown outside policy {outside!r}")
    i0 = np.floor(x).astype(np.int64)
    start = i0 - (width // 2 - 1)
    w = _lagrange_weights(x, start, width)
    idx = start[:, None] + np.arange(width)[None, :]
    valid = (idx >= 0) & (idx < n)
    return np.clip(idx, 0, n - 1), w, valid


def _index_coords(grid: PhaseGrid, q, p):
    return (np.asarray(q, float).ravel() - grid.q_min) / grid.dq, (np.asarray(p, float).ravel() - grid.p_min) / grid.dp


def interpolation_matrix(grid: PhaseGrid, q, p, kind: str = "cubic", outside: str = "zero"):
    """Sparse matrix M with ``(M @ f.ravel())`` = f interpolated at the points (q, p).

    With ``outside="zero"`` rows for points outside the window are empty.
    """
    xq, xp = _index_coords(grid, q, p)
    iq, wq, vq = stencil(xq, grid.nq, kind, outside)
    ip, wp, vp = stencil(xp, grid.np, kind, outside)
    npts, width = iq.shape
    rows = np.repeat(np.arange(npts), width * width)
    cols = (iq[:, :, None] * grid.np + ip[:, None, :]).ravel()
    vals = (wq[:, :, None] * wp[:, None, :]).ravel()
    keep = (vq[:, :, None] & vp[:, None, :]).ravel()
    if outside == "zero":
        inside = grid.contains(np.asarray(q).ravel(), np.asarray(p).ravel())
        keep &= np.repeat(inside, width * width)
    m = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(npts, grid.nq * grid.np))
    m.sum_duplicates()
    return m


def interpolate(grid: PhaseGrid, values: np.ndarray, q, p, kind: str = "cubic", outside: str = "zero"):
    """Evaluate a grid field at arbitrary points; result has the shape of ``q``."""
    shape = np.shape(q)
    m = interpolation_matrix(grid, q, p, kind, outside)
    return (m @ np.asarray(values).ravel()).reshape(shape)
