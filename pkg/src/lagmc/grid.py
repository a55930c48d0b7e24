"""Uniform tensor grids, central differences and the Lagrangian angle.

Values of a :class:`GridFunction` are stored as an ``n``-dimensional array of
shape ``(m,) * n`` in C order, so flattening gives the lexicographic node
order used by the CSV format.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

MAX_DIM = 4


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n: int
    lo: tuple[float, ...]
    h: float
    m: int

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "h", float(self.h))
        if not 1 <= self.n <= MAX_DIM:
            raise GridError(f"dimension must be in [1, {MAX_DIM}], got {self.n}")
        if len(lo) != self.n:
            raise GridError("lower corner length does not match dimension")
        if not self.h > 0:
            raise GridError("spacing must be positive")
        if self.m < 5:
            raise GridError("need at least 5 points per axis")

    @classmethod
    def box(cls, n: int, lo: float, hi: float, m: int) -> "GridSpec":
        """Cube ``[lo, hi]^n`` with ``m`` points per axis."""
        return cls(n, (lo,) * n, (hi - lo) / (m - 1), m)

    @classmethod
    def centered(cls, n: int, radius: float, h: float) -> "GridSpec":
        """Cube ``[-radius, radius]^n`` with spacing close to ``h`` and an odd point count."""
        half = max(2, int(round(radius / h)))
        return cls(n, (-half * h,) * n, h, 2 * half + 1)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(v + (self.m - 1) * self.h for v in self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.n

    @property
    def size(self) -> int:
        return self.m**self.n

    def axes(self) -> list[np.ndarray]:
        return [lo + self.h * np.arange(self.m) for lo in self.lo]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(m,)*n + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior_coords(self) -> np.ndarray:
        return self.coords()[(slice(1, -1),) * self.n]

    def point(self, idx: Sequence[int]) -> np.ndarray:
        return np.asarray(self.lo) + self.h * np.asarray(idx, dtype=float)

    def nearest_index(self, x: Sequence[float]) -> tuple[int, ...]:
        k = np.rint((np.asarray(x, float) - np.asarray(self.lo)) / self.h).astype(int)
        return tuple(int(v) for v in np.clip(k, 0, self.m - 1))

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, float)
        return bool(np.all(x >= np.asarray(self.lo) - tol) and np.all(x <= np.asarray(self.hi) + tol))


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.size != self.spec.size:
            raise GridError(f"expected {self.spec.size} values, got {vals.size}")
        vals = vals.reshape(self.spec.shape)
        if not np.all(np.isfinite(vals)):
            raise GridError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, spec: GridSpec, fn) -> "GridFunction":
        """Sample ``fn`` on every node; ``fn`` receives an array of points ``(..., n)``."""
        return cls(spec, fn(spec.coords()))

    def __call__(self, idx) -> float:
        return float(self.values[tuple(idx)])

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.spec, values)

    def interior(self) -> np.ndarray:
        return self.values[(slice(1, -1),) * self.spec.n]


class Spectrum(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def _check_interior(spec: GridSpec, idx: Sequence[int], width: int = 1) -> tuple[int, ...]:
    idx = tuple(int(i) for i in idx)
    if len(idx) != spec.n or any(i < width or i > spec.m - 1 - width for i in idx):
        raise GridError(f"index not interior: {idx}")
    return idx


def gradient_central(u: GridFunction, idx: Sequence[int]) -> np.ndarray:
    idx = _check_interior(u.spec, idx)
    out = np.empty(u.spec.n)
    for i in range(u.spec.n):
        plus, minus = list(idx), list(idx)
        plus[i] += 1
        minus[i] -= 1
        out[i] = (u.values[tuple(plus)] - u.values[tuple(minus)]) / (2 * u.spec.h)
    return out


def hessian_central(u: GridFunction, idx: Sequence[int]) -> np.ndarray:
    idx = _check_interior(u.spec, idx)
    n, h, v = u.spec.n, u.spec.h, u.values

    def at(shift):
        return v[tuple(a + b for a, b in zip(idx, shift))]

    def e(i, s):
        z = [0] * n
        z[i] = s
        return z

    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (at(e(i, 1)) - 2 * v[idx] + at(e(i, -1))) / h**2
    for i, j in combinations(range(n), 2):
        def d(si, sj):
            z = [0] * n
            z[i], z[j] = si, sj
            return at(z)

        H[i, j] = H[j, i] = (d(1, 1) - d(1, -1) - d(-1, 1) + d(-1, -1)) / (4 * h**2)
    return H


def _shifted(values: np.ndarray, shift: Sequence[int], width: int = 1) -> np.ndarray:
    """View of ``values`` displaced by ``shift`` over the nodes at least ``width`` from the boundary."""
    m = values.shape[0]
    return values[tuple(slice(width + s, m - width + s) for s in shift)]


def gradient_field(u: GridFunction) -> np.ndarray:
    """Central gradient at every interior node, shape ``(m-2,)*n + (n,)``."""
    n, h, v = u.spec.n, u.spec.h, u.values
    comps = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        comps.append((_shifted(v, e) - _shifted(v, [-s for s in e])) / (2 * h))
    return np.stack(comps, axis=-1)


def hessian_field(u: GridFunction) -> np.ndarray:
    """Central Hessian at every interior node, shape ``(m-2,)*n + (n, n)``."""
    n, h, v = u.spec.n, u.spec.h, u.values
    center = _shifted(v, [0] * n)
    H = np.empty(center.shape + (n, n))
    for i in range(n):
        e = [0] * n
        e[i] = 1
        H[..., i, i] = (_shifted(v, e) - 2 * center + _shifted(v, [-s for s in e])) / h**2
    for i, j in combinations(range(n), 2):
        def d(si, sj):
            z = [0] * n
            z[i], z[j] = si, sj
            return _shifted(v, z)

        H[..., i, j] = H[..., j, i] = (d(1, 1) - d(1, -1) - d(-1, 1) + d(-1, -1)) / (4 * h**2)
    return H


def jacobi_eigh(A: np.ndarray, rtol: float = 1e-12, max_sweeps: int = 60) -> Spectrum:
    """Cyclic Jacobi eigensolver for a stack of small symmetric matrices.

    ``A`` has shape ``(..., n, n)``. Every matrix in the stack is rotated at
    once; sweeps continue until each off-diagonal Frobenius norm is at most
    ``rtol`` times the matrix Frobenius norm. Eigenvalues come back sorted
    ascending with eigenvectors in the matching columns.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise GridError("expected square matrices")
    if not np.all(np.isfinite(A)):
        raise GridError("matrix has non-finite entries")
    n = A.shape[-1]
    batch = A.shape[:-2]
    A = A.reshape(-1, n, n)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    fro = np.sqrt(np.sum(A**2, axis=(-1, -2)))
    offmask = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, offmask] ** 2, axis=-1))
        active = off > rtol * fro
        if not np.any(active):
            break
        for p, q in combinations(range(n), 2):
            apq = A[:, p, q]
            nz = apq != 0
            if not np.any(nz):
                continue
            app, aqq = A[:, p, p], A[:, q, q]
            safe = np.where(nz, apq, 1.0)
            with np.errstate(over="ignore", divide="ignore"):
                theta = (aqq - app) / (2 * safe)
            big = np.abs(theta) > 1e150
            root = np.sqrt(np.where(big, 1.0, theta) ** 2 + 1.0)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), np.sign(theta) / (np.abs(theta) + root))
            t = np.where(theta == 0, 1.0, t)
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            colp, colq = A[:, :, p].copy(), A[:, :, q].copy()
            A[:, :, p] = c[:, None] * colp - s[:, None] * colq
            A[:, :, q] = s[:, None] * colp + c[:, None] * colq
            rowp, rowq = A[:, p, :].copy(), A[:, q, :].copy()
            A[:, p, :] = c[:, None] * rowp - s[:, None] * rowq
            A[:, q, :] = s[:, None] * rowp + c[:, None] * rowq
            A[:, p, q] = A[:, q, p] = 0.0
            vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
            V[:, :, p] = c[:, None] * vp - s[:, None] * vq
            V[:, :, q] = s[:, None] * vp + c[:, None] * vq
    else:
        raise GridError("Jacobi iteration did not converge")

    w = np.diagonal(A, axis1=-2, axis2=-1)
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    return Spectrum(w.reshape(batch + (n,)), V.reshape(batch + (n, n)))


def eigen_sym(M: np.ndarray) -> Spectrum:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise GridError("eigen_sym takes a single matrix")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * (1 + np.abs(M).max(initial=0))):
        raise GridError("matrix is not symmetric")
    return jacobi_eigh(M)


def lagrangian_angle(M: np.ndarray) -> float | np.ndarray:
    """Sum of arctangents of the eigenvalues; accepts a single matrix or a stack."""
    return np.arctan(jacobi_eigh(M).values).sum(axis=-1)


def embed_interior(spec: GridSpec, interior: np.ndarray, fill: float = 0.0) -> np.ndarray:
    out = np.full(spec.shape, fill, dtype=float)
    out[(slice(1, -1),) * spec.n] = interior
    return out
