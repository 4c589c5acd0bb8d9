"""Brute-force grid ground truth: zero localization and component counts.

Nothing here is certified; the module exists so certified results can be
checked against an independent method in tests and reports. Interval
evaluation over cells is vectorized with numpy and processed in chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import DomainError
from .intervals import Box
from .terms import (ADD, CONST, DPHI, EXP, LOG, MUL, NEG, PHI, RA, SQR, VAR,
                    CompiledTerms, TermNode, compile_terms)

_CHUNK = 32768
_EXP_CLIP = 709.8


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell grid over a box, at most ``cap`` cells in total."""

    box: Box
    resolution: tuple
    cap: int = 100_000_000

    def __post_init__(self):
        if len(self.resolution) != self.box.n:
            raise DomainError("one resolution per axis required")
        if any(r < 2 for r in self.resolution):
            raise DomainError("resolution below 2")
        if self.cells > self.cap:
            raise DomainError(f"grid of {self.cells} cells exceeds cap {self.cap}")

    @classmethod
    def square(cls, radius: float, n: int, res: int) -> "GridSpec":
        return cls(Box.cube(radius, n), tuple([res] * n))

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def cells(self) -> int:
        return int(np.prod([int(r) for r in self.resolution]))

    def edges(self, axis: int) -> np.ndarray:
        c = self.box.coords[axis]
        return np.linspace(c.lo, c.hi, self.resolution[axis] + 1)

    def steps(self) -> np.ndarray:
        return np.array([(c.hi - c.lo) / r
                         for c, r in zip(self.box.coords, self.resolution)])

    @property
    def cell_diag(self) -> float:
        return float(np.sqrt(np.sum(self.steps() ** 2)))


# ---------------------------------------------------------------------------
# vectorized tape evaluation over point arrays and cell-interval arrays

def _exp_arr(x: np.ndarray) -> np.ndarray:
    return np.where(x < _EXP_CLIP, np.exp(np.minimum(x, _EXP_CLIP)), np.inf)


def eval_points(ct: CompiledTerms, coords: Sequence[np.ndarray], abel) -> list:
    """Values of every root at an array of points (one array per variable)."""
    vals: list = [None] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = coords[payload]
        elif code == CONST:
            vals[i] = np.full_like(coords[0], payload)
        elif code == ADD:
            vals[i] = vals[a] + vals[b]
        elif code == MUL:
            vals[i] = vals[a] * vals[b]
        elif code == SQR:
            vals[i] = vals[a] * vals[a]
        elif code == NEG:
            vals[i] = -vals[a]
        elif code == EXP:
            vals[i] = _exp_arr(vals[a])
        elif code == LOG:
            if np.any(vals[a] <= 0.0):
                raise DomainError("log of non-positive value on grid")
            vals[i] = np.log(vals[a])
        elif code == RA:
            x = vals[a]
            if np.any(x < payload.lo) or np.any(x > payload.hi):
                raise DomainError(f"{payload.name} argument leaves domain on grid")
            vals[i] = np.asarray(payload.fn(x), dtype=float)
        elif code == PHI:
            vals[i] = abel.eval_phi_array(vals[a])
        else:  # DPHI
            vals[i] = abel.eval_dphi_array(vals[a])
    return [vals[r] for r in ct.roots]


def gradient_points(ct: CompiledTerms, coords: Sequence[np.ndarray], abel):
    """Forward-mode values and gradients at an array of points."""
    n = ct.n_vars
    m = coords[0].shape
    vals: list = [None] * len(ct.ops)
    grads: list = [None] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = coords[payload]
            g = [np.zeros(m) for _ in range(n)]
            g[payload] = np.ones(m)
            grads[i] = g
        elif code == CONST:
            vals[i] = np.full(m, payload)
            grads[i] = [np.zeros(m)] * n
        elif code == ADD:
            vals[i] = vals[a] + vals[b]
            grads[i] = [p + q for p, q in zip(grads[a], grads[b])]
        elif code == MUL:
            va, vb = vals[a], vals[b]
            vals[i] = va * vb
            grads[i] = [va * q + vb * p for p, q in zip(grads[a], grads[b])]
        elif code == SQR:
            va = vals[a]
            vals[i] = va * va
            grads[i] = [2.0 * va * p for p in grads[a]]
        elif code == NEG:
            vals[i] = -vals[a]
            grads[i] = [-p for p in grads[a]]
        elif code == EXP:
            v = _exp_arr(vals[a])
            vals[i] = v
            grads[i] = [v * p for p in grads[a]]
        elif code == LOG:
            if np.any(vals[a] <= 0.0):
                raise DomainError("log of non-positive value on grid")
            vals[i] = np.log(vals[a])
            inv = 1.0 / vals[a]
            grads[i] = [inv * p for p in grads[a]]
        elif code == RA:
            x = vals[a]
            if np.any(x < payload.lo) or np.any(x > payload.hi):
                raise DomainError(f"{payload.name} argument leaves domain on grid")
            if payload.deriv is None:
                raise DomainError(f"primitive {payload.name!r} has no derivative")
            vals[i] = np.asarray(payload.fn(x), dtype=float)
            d = np.asarray(payload.deriv.fn(x), dtype=float)
            grads[i] = [d * p for p in grads[a]]
        elif code == PHI:
            vals[i] = abel.eval_phi_array(vals[a])
            d = abel.eval_dphi_array(vals[a])
            grads[i] = [d * p for p in grads[a]]
        else:  # DPHI
            vals[i] = abel.eval_dphi_array(vals[a])
            x = vals[a]
            d = np.array([abel.eval_d2phi(float(v)) for v in np.ravel(x)])
            d = d.reshape(x.shape)
            grads[i] = [d * p for p in grads[a]]
    return [vals[r] for r in ct.roots], [grads[r] for r in ct.roots]


def _mul_corners(al, ah, bl, bh):
    # 0 * inf must clamp to 0 for containment
    def m(p, q):
        out = p * q
        return np.where((p == 0.0) | (q == 0.0), 0.0, out)

    c1, c2, c3, c4 = m(al, bl), m(al, bh), m(ah, bl), m(ah, bh)
    lo = np.minimum(np.minimum(c1, c2), np.minimum(c3, c4))
    hi = np.maximum(np.maximum(c1, c2), np.maximum(c3, c4))
    return lo, hi


def _out(lo: np.ndarray, hi: np.ndarray):
    return np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf)


def eval_cells(ct: CompiledTerms, los: Sequence[np.ndarray],
               his: Sequence[np.ndarray], abel) -> list:
    """Interval enclosures of every root over an array of cells."""
    vals: list = [None] * len(ct.ops)
    for i, (code, a, b, payload) in enumerate(ct.ops):
        if code == VAR:
            vals[i] = (los[payload], his[payload])
        elif code == CONST:
            c = np.full_like(los[0], payload)
            vals[i] = (c, c)
        elif code == ADD:
            lo = vals[a][0] + vals[b][0]
            hi = vals[a][1] + vals[b][1]
            vals[i] = _out(np.nan_to_num(lo, nan=-np.inf),
                           np.nan_to_num(hi, nan=np.inf))
        elif code == MUL:
            lo, hi = _mul_corners(*vals[a], *vals[b])
            vals[i] = _out(lo, hi)
        elif code == SQR:
            al, ah = vals[a]
            lo, hi = _mul_corners(al, ah, al, ah)
            lo = np.where((al <= 0.0) & (ah >= 0.0), 0.0, np.maximum(lo, 0.0))
            vals[i] = _out(lo, hi)
        elif code == NEG:
            vals[i] = (-vals[a][1], -vals[a][0])
        elif code == EXP:
            vals[i] = (np.maximum(np.nextafter(_exp_arr(vals[a][0]), -np.inf), 0.0),
                       np.nextafter(_exp_arr(vals[a][1]), np.inf))
        elif code == LOG:
            al, ah = vals[a]
            if np.any(al <= 0.0):
                raise DomainError("log reaches non-positive values on grid")
            vals[i] = _out(np.log(al), np.log(ah))
        elif code == RA:
            al, ah = vals[a]
            if np.any(al < payload.lo) or np.any(ah > payload.hi):
                raise DomainError(f"{payload.name} argument leaves domain on grid")
            pairs = [payload.range_fn(float(p), float(q))
                     for p, q in zip(np.ravel(al), np.ravel(ah))]
            lo = np.array([p[0] for p in pairs]).reshape(al.shape)
            hi = np.array([p[1] for p in pairs]).reshape(al.shape)
            vals[i] = _out(*_out(lo, hi))
        elif code == PHI:
            al, ah = vals[a]
            w = abel.seed_error
            vals[i] = _out(abel.eval_phi_array(al) - w,
                           abel.eval_phi_array(ah) + w)
        else:  # DPHI
            al, ah = vals[a]
            pairs = [abel.interval_dphi(float(p), float(q))
                     for p, q in zip(np.ravel(al), np.ravel(ah))]
            lo = np.array([p[0] for p in pairs]).reshape(al.shape)
            hi = np.array([p[1] for p in pairs]).reshape(al.shape)
            vals[i] = (lo, hi)
    return [vals[r] for r in ct.roots]


def _chunked_cells(grid: GridSpec):
    """Yield (flat slice, per-axis lo arrays, per-axis hi arrays)."""
    edges = [grid.edges(i) for i in range(grid.n)]
    shape = tuple(grid.resolution)
    total = grid.cells
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        flat = np.arange(start, stop)
        idx = np.unravel_index(flat, shape)
        los = [edges[ax][idx[ax]] for ax in range(grid.n)]
        his = [edges[ax][idx[ax] + 1] for ax in range(grid.n)]
        yield slice(start, stop), los, his


def _chunked_centers(grid: GridSpec):
    edges = [grid.edges(i) for i in range(grid.n)]
    mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
    shape = tuple(grid.resolution)
    total = grid.cells
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        flat = np.arange(start, stop)
        idx = np.unravel_index(flat, shape)
        yield slice(start, stop), [mids[ax][idx[ax]] for ax in range(grid.n)]


# ---------------------------------------------------------------------------
# zero localization

def zero_cell_mask(system, grid: GridSpec) -> np.ndarray:
    """Boolean grid: interval evaluation of every equation contains 0."""
    ct = system.compiled
    abel = system.abel
    flat = np.zeros(grid.cells, dtype=bool)
    for sl, los, his in _chunked_cells(grid):
        roots = eval_cells(ct, los, his, abel)
        ok = np.ones(los[0].shape, dtype=bool)
        for lo, hi in roots:
            ok &= (lo <= 0.0) & (hi >= 0.0)
        flat[sl] = ok
    return flat.reshape(tuple(grid.resolution))


def grid_zero_cells(system, grid: GridSpec) -> list:
    """Index tuples of cells whose interval evaluation contains zero in
    every equation."""
    mask = zero_cell_mask(system, grid)
    return [tuple(int(v) for v in idx) for idx in np.argwhere(mask)]


def _label(mask: np.ndarray):
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    return ndimage.label(mask, structure=structure)


def oracle_zero_count(system, grid: GridSpec):
    """Number of connected clusters of zero cells, with cluster centers.

    For systems whose zeros are isolated and grid-separated this equals
    the number of zeros; tests double-check residuals at the centers.
    """
    mask = zero_cell_mask(system, grid)
    labels, count = _label(mask)
    centers = []
    edges = [grid.edges(i) for i in range(grid.n)]
    mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
    for lab in range(1, count + 1):
        idx = np.argwhere(labels == lab)
        centers.append([float(np.mean(mids[ax][idx[:, ax]]))
                        for ax in range(grid.n)])
    return count, centers


# ---------------------------------------------------------------------------
# component counting

def _atom_mask(term: TermNode, rel: str, grid: GridSpec, abel) -> np.ndarray:
    ct = compile_terms([term])
    flat_val = np.empty(grid.cells)
    flat_tau = np.zeros(grid.cells)
    need_tau = rel == "="
    for sl, centers in _chunked_centers(grid):
        if need_tau:
            vals, grads = gradient_points(ct, centers, abel)
            g = np.sqrt(sum(p * p for p in grads[0]))
            flat_tau[sl] = 4.0 * grid.cell_diag * g
            flat_val[sl] = vals[0]
        else:
            flat_val[sl] = eval_points(ct, centers, abel)[0]
    if rel == "=":
        return (np.abs(flat_val) <= flat_tau).reshape(tuple(grid.resolution))
    if rel == ">":
        return (flat_val > 0.0).reshape(tuple(grid.resolution))
    if rel == "<=":
        return (flat_val <= 0.0).reshape(tuple(grid.resolution))
    raise DomainError(f"unsupported relation {rel!r}")


def membership_mask(dnf, grid: GridSpec, abel,
                    ball_radius: float | None = None) -> np.ndarray:
    """Cell-center membership for a DNF of (term, rel) atoms.

    Equality atoms are thickened by a per-cell tolerance of four cell
    diagonals times the local gradient norm, so measure-zero sets stay
    grid-visible without bleeding across true gaps.
    """
    mask = np.zeros(tuple(grid.resolution), dtype=bool)
    for conj in dnf:
        m = np.ones(tuple(grid.resolution), dtype=bool)
        for term, rel in conj:
            m &= _atom_mask(term, rel, grid, abel)
        mask |= m
    if ball_radius is not None:
        flat = np.zeros(grid.cells, dtype=bool)
        for sl, centers in _chunked_centers(grid):
            r2 = sum(c * c for c in centers)
            flat[sl] = r2 <= ball_radius * ball_radius
        mask &= flat.reshape(tuple(grid.resolution))
    return mask


def flood_components(dnf, grid: GridSpec, abel,
                     ball_radius: float | None = None) -> int:
    """Connected components (2n-connectivity) of a DNF set on the grid."""
    mask = membership_mask(dnf, grid, abel, ball_radius)
    _, count = _label(mask)
    return int(count)


def flood_components_sublevel(term: TermNode, grid: GridSpec, abel) -> int:
    """Components of the region term <= 0 at cell centers."""
    mask = _atom_mask(term, "<=", grid, abel)
    _, count = _label(mask)
    return int(count)


def resolution_stable_components(dnf, box: Box, abel, resolutions=(512, 1024),
                                 ball_radius: float | None = None):
    """Counts at each resolution plus a stability flag (top two agree)."""
    counts = []
    for res in resolutions:
        grid = GridSpec(box, tuple([res] * box.n))
        counts.append(flood_components(dnf, grid, abel, ball_radius))
    return counts, counts[-1] == counts[-2]
