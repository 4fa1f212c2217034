"""Atomic and grid measures, particle states, and conversions between them."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

MERGE_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def fmt(v: float) -> str:
    """Round-trip float formatting used by every CSV writer."""
    return repr(float(v))


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite signed combination of Dirac masses.

    Parameters
    ----------
    positions : array-like, shape (n, d) or (n,)
        Atom locations; a 1-D array is read as ``d = 1``.
    weights : array-like, shape (n,)
        Signed atom weights.
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if pos.ndim != 2:
            raise ValueError("positions must have shape (n, d)")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pos.shape[0]:
            raise ValueError(f"{pos.shape[0]} positions but {w.shape[0]} weights")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(w))):
            raise ValueError("atomic measure with non-finite position or weight")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def empty(cls, dim: int = 1) -> "AtomicMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def dirac(cls, x, weight: float = 1.0) -> "AtomicMeasure":
        return cls(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1), [weight])

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def x(self) -> np.ndarray:
        """Positions of a 1-D measure as a flat array."""
        if self.dim != 1:
            raise ValueError(f"measure is {self.dim}-dimensional")
        return self.positions[:, 0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum())

    def moment(self) -> np.ndarray:
        """First moment ``sum_i w_i x_i`` (a vector)."""
        return self.weights @ self.positions

    def is_probability(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.weights >= 0) and abs(self.total_mass - 1.0) <= tol)

    def canonical(self, tol: float = MERGE_TOL) -> "AtomicMeasure":
        """Merge atoms whose positions round to the same ``tol``-cell; drop zeros.

        The surviving position of a merged group is that of its first atom in
        sorted order, so ``canonical`` is idempotent.
        """
        if self.size == 0:
            return self
        keys = np.round(self.positions / tol).astype(np.int64)
        order = np.lexsort(keys.T[::-1])
        keys = keys[order]
        pos = self.positions[order]
        w = self.weights[order]
        new_group = np.ones(len(w), dtype=bool)
        new_group[1:] = np.any(keys[1:] != keys[:-1], axis=1)
        starts = np.flatnonzero(new_group)
        merged = np.add.reduceat(w, starts)
        keep = merged != 0.0
        return AtomicMeasure(pos[starts][keep], merged[keep])

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.positions, self.weights * factor)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return AtomicMeasure(
            np.vstack([self.positions, other.positions]),
            np.concatenate([self.weights, other.weights]),
        )

    def __sub__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return self + other.scaled(-1.0)

    def to_csv(self, path) -> None:
        header = [f"position_{k}" for k in range(self.dim)] + ["weight"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for p, w in zip(self.positions, self.weights):
                wr.writerow([fmt(v) for v in p] + [fmt(w)])

    @classmethod
    def from_csv(cls, path) -> "AtomicMeasure":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        d = sum(1 for h in header if h.startswith("position_"))
        data = np.array(body, dtype=float).reshape(-1, d + 1)
        return cls(data[:, :d], data[:, d])


def measure_equal(a: AtomicMeasure, b: AtomicMeasure, tol: float = 1e-12) -> bool:
    """True when the canonical forms agree atom by atom within ``tol``."""
    ca, cb = a.canonical(), b.canonical()
    if ca.size != cb.size or ca.dim != cb.dim:
        return False
    return bool(
        np.allclose(ca.positions, cb.positions, rtol=0, atol=tol)
        and np.allclose(ca.weights, cb.weights, rtol=0, atol=tol)
    )


@dataclass(frozen=True)
class GridMeasure:
    """Cell masses on ``G`` uniform cells of ``[left, right]``.

    Masses, not densities, are stored; ``density`` divides by the cell width.
    """

    left: float
    right: float
    mass: np.ndarray

    def __post_init__(self):
        if not self.right > self.left:
            raise ValueError(f"empty domain [{self.left}, {self.right}]")
        m = np.asarray(self.mass, dtype=float).reshape(-1)
        if m.size == 0:
            raise ValueError("grid needs at least one cell")
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite cell mass")
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "right", float(self.right))
        object.__setattr__(self, "mass", _frozen(m))

    @classmethod
    def zeros(cls, left: float, right: float, cells: int) -> "GridMeasure":
        return cls(left, right, np.zeros(cells))

    @property
    def cells(self) -> int:
        return self.mass.shape[0]

    @property
    def width(self) -> float:
        return (self.right - self.left) / self.cells

    @property
    def edges(self) -> np.ndarray:
        return self.left + self.width * np.arange(self.cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.left + self.width * (np.arange(self.cells) + 0.5)

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.width

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @property
    def is_probability(self) -> bool:
        return bool(self.mass.min() >= 0 and abs(self.total_mass - 1.0) <= 1e-12)

    def support(self) -> tuple[float, float]:
        """Outer edges of the nonzero cells, or (nan, nan) for an empty grid."""
        nz = np.flatnonzero(self.mass != 0)
        if nz.size == 0:
            return float("nan"), float("nan")
        e = self.edges
        return float(e[nz[0]]), float(e[nz[-1] + 1])

    def with_mass(self, mass) -> "GridMeasure":
        return GridMeasure(self.left, self.right, mass)

    def to_csv(self, path, t: float | None = None) -> None:
        e = self.edges
        header = (["t"] if t is not None else []) + ["cell_left", "cell_right", "mass", "density"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for j in range(self.cells):
                row = [fmt(e[j]), fmt(e[j + 1]), fmt(self.mass[j]), fmt(self.density[j])]
                wr.writerow(([fmt(t)] if t is not None else []) + row)


@dataclass(frozen=True)
class ParticleState:
    """Positions ``x`` (N x d), weights ``m`` (N,), total mass ``M`` and time ``t``."""

    x: np.ndarray
    m: np.ndarray
    M: float
    t: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        m = np.asarray(self.m, dtype=float).reshape(-1)
        if x.shape[0] != m.shape[0]:
            raise ValueError(f"{x.shape[0]} positions but {m.shape[0]} weights")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
            raise ValueError("particle state contains NaN or Inf")
        if not (np.isfinite(self.M) and self.M > 0):
            raise ValueError(f"total mass M must be positive, got {self.M}")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "m", _frozen(m))
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "t", float(self.t))

    @property
    def N(self) -> int:
        return self.m.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def empirical_measure(state: ParticleState) -> AtomicMeasure:
    """Weighted empirical measure ``(1/M) sum_i m_i delta_{x_i}``."""
    if state.N < 1:
        raise ValueError("empirical measure of an empty state")
    return AtomicMeasure(state.x, state.m / state.M)


def counting_measure(state: ParticleState, bins: int, domain=(0.0, 1.0)) -> GridMeasure:
    """Bin the empirical measure into ``bins`` half-open cells of ``domain``.

    A particle sitting exactly on the right end of the domain goes into the
    last cell.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if state.dim != 1:
        raise ValueError("counting measure is one-dimensional")
    a, b = map(float, domain)
    x = state.x[:, 0]
    bad = np.flatnonzero((x < a) | (x > b))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"particle {i} at x={x[i]!r} lies outside [{a}, {b}]")
    idx = np.minimum(np.floor((x - a) / (b - a) * bins).astype(np.intp), bins - 1)
    mass = np.bincount(idx, weights=state.m / state.M, minlength=bins)
    return GridMeasure(a, b, mass)


def grid_from_density(f: Callable, normalizer: float | None, domain, cells: int) -> GridMeasure:
    """Midpoint-rule cell masses of ``f / normalizer``, renormalised to sum to one."""
    if cells < 1:
        raise ValueError("cells must be >= 1")
    g = GridMeasure.zeros(domain[0], domain[1], cells)
    vals = np.asarray(f(g.centers), dtype=float)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("density is negative or non-finite at a sample point")
    mass = vals * g.width / (normalizer if normalizer else 1.0)
    total = mass.sum()
    if total <= 0:
        raise ValueError("density integrates to zero on the grid")
    return g.with_mass(mass / total)


def atomic_from_grid(g: GridMeasure) -> AtomicMeasure:
    """One atom per nonzero cell, located at the cell centre."""
    nz = g.mass != 0
    return AtomicMeasure(g.centers[nz].reshape(-1, 1), g.mass[nz])
