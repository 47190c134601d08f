"""Uniform periodic grids and the sampled fields that live on them.

All state in the package is a sampled field on a periodic box. Along an axis
with ``n`` points and length ``L`` the sample ``j`` sits at ``x_j = j*L/n``:
coordinate 0 is a sample point and ``x = L`` wraps around to 0. Point counts
must be even and at least 4 so spectral differentiation has an unambiguous
Nyquist convention.

Fields are frozen dataclasses wrapping float64/complex128 arrays; treat the
arrays as immutable. Arithmetic between fields on the same grid is supported
where it reads naturally (addition, scaling, pointwise products).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "Grid",
    "ScalarSampleField",
    "ComplexSampleField",
    "VectorSampleField3",
    "integrate",
    "inner",
    "l2_norm",
    "max_norm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in 1, 2, or 3 dimensions (natural units)."""

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(p) for p in np.atleast_1d(self.points))
        lengths = tuple(float(l) for l in np.atleast_1d(self.lengths))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lengths", lengths)
        if not 1 <= len(points) <= 3:
            raise ValueError(f"grid must have 1-3 axes, got {len(points)}")
        if len(lengths) != len(points):
            raise ValueError("points and lengths must have the same number of axes")
        for n in points:
            if n < 4:
                raise ValueError(f"need at least 4 points per axis, got {n}")
            if n % 2 != 0:
                raise ValueError(f"points per axis must be even, got {n}")
        for L in lengths:
            if not np.isfinite(L) or L <= 0.0:
                raise ValueError(f"axis length must be positive and finite, got {L}")

    @classmethod
    def line(cls, n: int, length: float) -> "Grid":
        return cls((n,), (length,))

    @classmethod
    def square(cls, n: int, length: float) -> "Grid":
        return cls((n, n), (length, length))

    @classmethod
    def cube(cls, n: int, length: float) -> "Grid":
        return cls((n, n, n), (length, length, length))

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @cached_property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.points))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @cached_property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        n = self.points[axis]
        return np.arange(n) * (self.lengths[axis] / n)

    def coordinate_arrays(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (meshgrid with 'ij' indexing, sparse)."""
        axes = [self.axis_coordinates(a) for a in range(self.dims)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))


def _check_values(values: np.ndarray, grid: Grid, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != grid.shape:
        raise ValueError(f"sample shape {arr.shape} does not match grid {grid.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("field contains non-finite samples")
    return arr


@dataclass(frozen=True)
class ScalarSampleField:
    """Real scalar samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid, np.float64))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarSampleField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarSampleField":
        return cls(grid, np.full(grid.shape, float(value)))

    def __add__(self, other):
        _same_grid(self, other)
        return ScalarSampleField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ScalarSampleField(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, ScalarSampleField):
            _same_grid(self, other)
            return ScalarSampleField(self.grid, self.values * other.values)
        return ScalarSampleField(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarSampleField(self.grid, -self.values)


@dataclass(frozen=True)
class ComplexSampleField:
    """Complex scalar samples on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid, np.complex128))

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexSampleField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_parts(cls, re: ScalarSampleField, im: ScalarSampleField) -> "ComplexSampleField":
        _same_grid(re, im)
        return cls(re.grid, re.values + 1j * im.values)

    @property
    def real(self) -> ScalarSampleField:
        return ScalarSampleField(self.grid, self.values.real.copy())

    @property
    def imag(self) -> ScalarSampleField:
        return ScalarSampleField(self.grid, self.values.imag.copy())

    def __add__(self, other):
        _same_grid(self, other)
        return ComplexSampleField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ComplexSampleField(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, (ScalarSampleField, ComplexSampleField)):
            _same_grid(self, other)
            return ComplexSampleField(self.grid, self.values * other.values)
        return ComplexSampleField(self.grid, self.values * complex(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexSampleField(self.grid, -self.values)


@dataclass(frozen=True)
class VectorSampleField3:
    """Three-component real vector field on a 3D grid.

    ``values`` has shape (3, nx, ny, nz); components share the grid by
    construction.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.grid.dims != 3:
            raise GridMismatchError("vector fields require a 3D grid")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector samples must have shape (3, nx, ny, nz), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorSampleField3":
        return cls(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def from_components(
        cls, fx: ScalarSampleField, fy: ScalarSampleField, fz: ScalarSampleField
    ) -> "VectorSampleField3":
        _same_grid(fx, fy)
        _same_grid(fx, fz)
        return cls(fx.grid, np.stack([fx.values, fy.values, fz.values]))

    def component(self, i: int) -> ScalarSampleField:
        return ScalarSampleField(self.grid, self.values[i].copy())

    @property
    def x(self) -> ScalarSampleField:
        return self.component(0)

    @property
    def y(self) -> ScalarSampleField:
        return self.component(1)

    @property
    def z(self) -> ScalarSampleField:
        return self.component(2)

    def dot(self, other: "VectorSampleField3") -> ScalarSampleField:
        _same_grid(self, other)
        return ScalarSampleField(self.grid, np.einsum("i...,i...->...", self.values, other.values))

    def __add__(self, other):
        _same_grid(self, other)
        return VectorSampleField3(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return VectorSampleField3(self.grid, self.values - other.values)

    def __mul__(self, other):
        return VectorSampleField3(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorSampleField3(self.grid, -self.values)


def _same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")


def integrate(field) -> float:
    """Discrete integral: sum of samples times cell volume."""
    return float(np.sum(field.values).real * field.grid.cell_volume) if np.iscomplexobj(
        field.values
    ) else float(np.sum(field.values) * field.grid.cell_volume)


def inner(a, b) -> complex | float:
    """Discrete L2 inner product <a, b> = sum conj(a)*b * cell volume."""
    _same_grid(a, b)
    val = np.vdot(a.values, b.values) * a.grid.cell_volume
    if np.iscomplexobj(a.values) or np.iscomplexobj(b.values):
        return complex(val)
    return float(val.real)


def l2_norm(field) -> float:
    v = np.asarray(field.values)
    return float(np.sqrt(np.sum(np.abs(v) ** 2) * field.grid.cell_volume))


def max_norm(field) -> float:
    return float(np.max(np.abs(field.values)))
