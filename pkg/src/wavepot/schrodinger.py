"""Schrodinger dynamics on the grid: the reference side of every equivalence test.

The complex evolution i*hbar dPsi/dt = H Psi with H = -(hbar^2/2m) Lap + V is
exposed three ways:

* ``apply_hamiltonian`` / ``canonical_rhs``: the first-order system for the
  real and imaginary parts (varphi, p), generated by the canonical Hamiltonian
  functional ``hamiltonian_canonical``.
* ``generalized_rhs``: the same flow generated by the norm functional through
  a non-canonical bracket whose kernel is the operator L = (hbar^2/2m) Lap - V
  (= -H). Both right-hand sides must agree to roundoff.
* Two propagators: ``crank_nicolson_step`` (Cayley form, exactly unitary up to
  the linear-solve tolerance) and ``exact_propagate_small`` (dense
  eigendecomposition, machine-precision for grids up to 4096 points).

The potential must not depend on time; PotentialSpec enforces that at
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import expressions
from .errors import GridMismatchError, SolverError
from .grids import ComplexSampleField, Grid, ScalarSampleField
from .linsolve import normal_equations_cg
from .operators import (
    _laplacian_symbol,
    gradient_arrays,
    laplacian_array,
    laplacian_spectral_radius,
)
from .expressions import Expression

__all__ = [
    "QuantumParams",
    "WaveFunction",
    "PotentialSpec",
    "apply_hamiltonian",
    "canonical_rhs",
    "generalized_rhs",
    "hamiltonian_canonical",
    "norm_functional",
    "crank_nicolson_step",
    "propagate_cn",
    "exact_propagate_small",
    "eigenpairs_small",
    "DenseEigensystem",
    "dense_eigensystem",
    "max_energy_bound",
    "l_operator_array",
    "hamiltonian_array",
    "DENSE_GRID_LIMIT",
]

DENSE_GRID_LIMIT = 4096


@dataclass(frozen=True)
class QuantumParams:
    """Planck constant and particle mass in natural units."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class WaveFunction:
    """Complex wave function samples plus physical constants."""

    psi: ComplexSampleField
    params: QuantumParams

    @property
    def grid(self) -> Grid:
        return self.psi.grid


@dataclass(frozen=True)
class PotentialSpec:
    """Time-independent potential: optional defining expression plus samples."""

    sampled: ScalarSampleField
    expression: Expression | None = None

    def __post_init__(self):
        if self.expression is not None and expressions.references_time(self.expression):
            raise ValueError("potential must not reference t (time-independent by contract)")

    @classmethod
    def from_expression(
        cls, source: str | Expression, grid: Grid, bindings=None
    ) -> "PotentialSpec":
        node = expressions.parse(source) if isinstance(source, str) else source
        if expressions.references_time(node):
            raise ValueError("potential must not reference t (time-independent by contract)")
        return cls(expressions.sample(node, grid, bindings), node)

    @classmethod
    def from_field(cls, field: ScalarSampleField) -> "PotentialSpec":
        return cls(field, None)

    @classmethod
    def zero(cls, grid: Grid) -> "PotentialSpec":
        return cls(ScalarSampleField.zeros(grid), expressions.Number(0.0))

    @property
    def grid(self) -> Grid:
        return self.sampled.grid


def _check_same_grid(grid: Grid, *fields) -> None:
    for f in fields:
        if f.grid != grid:
            raise GridMismatchError("operands live on different grids")


def hamiltonian_array(
    values: np.ndarray, v: np.ndarray, grid: Grid, params: QuantumParams, method: str
) -> np.ndarray:
    """H f = -(hbar^2/2m) Lap f + V f on raw samples (real or complex)."""
    kin = -(params.hbar**2) / (2.0 * params.mass)
    return kin * laplacian_array(values, grid, method) + v * values


def l_operator_array(
    values: np.ndarray, v: np.ndarray, grid: Grid, params: QuantumParams, method: str
) -> np.ndarray:
    """L f = (hbar^2/2m) Lap f - V f, the operator mapping potentials to -Re Psi."""
    kin = params.hbar**2 / (2.0 * params.mass)
    return kin * laplacian_array(values, grid, method) - v * values


def real_l_operator(grid: Grid, v: np.ndarray, params: QuantumParams, method: str):
    """Specialized L for real fields, used by integrator hot loops.

    Spectral backend goes through the real FFT (half spectrum); identical to
    l_operator_array up to roundoff.
    """
    if method != "spectral":
        return lambda f: l_operator_array(f, v, grid, params, method)
    kin = params.hbar**2 / (2.0 * params.mass)
    n_last = grid.points[-1]
    sym = kin * np.ascontiguousarray(
        _laplacian_symbol(grid, method)[..., : n_last // 2 + 1]
    )
    if grid.dims == 1:
        rfft, irfft = np.fft.rfft, np.fft.irfft

        def lop_1d(f: np.ndarray) -> np.ndarray:
            hat = rfft(f)
            hat *= sym
            out = irfft(hat, n_last)
            out -= v * f
            return out

        return lop_1d
    axes = tuple(range(grid.dims))
    shape = grid.shape

    def lop(f: np.ndarray) -> np.ndarray:
        hat = np.fft.rfftn(f, axes=axes)
        hat *= sym
        out = np.fft.irfftn(hat, s=shape, axes=axes)
        out -= v * f
        return out

    return lop


def apply_hamiltonian(
    psi: WaveFunction, V: PotentialSpec, method: str = "spectral"
) -> ComplexSampleField:
    grid = psi.grid
    _check_same_grid(grid, V.sampled)
    out = hamiltonian_array(psi.psi.values, V.sampled.values, grid, psi.params, method)
    return ComplexSampleField(grid, out)


def canonical_rhs(
    varphi: ScalarSampleField,
    p: ScalarSampleField,
    V: PotentialSpec,
    params: QuantumParams,
    method: str = "spectral",
) -> tuple[ScalarSampleField, ScalarSampleField]:
    """Time derivatives of (Re Psi, Im Psi) as a canonical Hamiltonian system.

    d(varphi)/dt = -(1/hbar) L p,  dp/dt = +(1/hbar) L varphi. Reassembled as
    a complex field this is exactly (H Psi)/(i hbar).
    """
    grid = varphi.grid
    _check_same_grid(grid, p, V.sampled)
    v = V.sampled.values
    lp = l_operator_array(p.values, v, grid, params, method)
    lphi = l_operator_array(varphi.values, v, grid, params, method)
    return (
        ScalarSampleField(grid, -lp / params.hbar),
        ScalarSampleField(grid, lphi / params.hbar),
    )


def generalized_rhs(
    varphi: ScalarSampleField,
    p: ScalarSampleField,
    V: PotentialSpec,
    params: QuantumParams,
    method: str = "spectral",
) -> tuple[ScalarSampleField, ScalarSampleField]:
    """Same flow generated by the norm functional through the L-kernel bracket.

    The functional derivatives of H' = (1/2 hbar) Int (varphi^2 + p^2) are
    varphi/hbar and p/hbar; the bracket inserts -L between conjugate pairs.
    Must agree with canonical_rhs to roundoff.
    """
    grid = varphi.grid
    _check_same_grid(grid, p, V.sampled)
    v = V.sampled.values
    dh_dp = p.values / params.hbar
    dh_dphi = varphi.values / params.hbar
    return (
        ScalarSampleField(grid, -l_operator_array(dh_dp, v, grid, params, method)),
        ScalarSampleField(grid, l_operator_array(dh_dphi, v, grid, params, method)),
    )


def hamiltonian_canonical(
    varphi: ScalarSampleField,
    p: ScalarSampleField,
    V: PotentialSpec,
    params: QuantumParams,
    method: str = "spectral",
) -> float:
    """Canonical energy functional of the (varphi, p) system.

    (1/2 hbar) Int [ (hbar^2/2m)(|grad varphi|^2 + |grad p|^2) + V (varphi^2 + p^2) ].
    Conserved along the exact flow; nonnegative for V >= 0.
    """
    grid = varphi.grid
    _check_same_grid(grid, p, V.sampled)
    kin = params.hbar**2 / (2.0 * params.mass)
    grad2 = np.zeros(grid.shape)
    for g in gradient_arrays(varphi.values, grid, method):
        grad2 += g * g
    for g in gradient_arrays(p.values, grid, method):
        grad2 += g * g
    dens = kin * grad2 + V.sampled.values * (varphi.values**2 + p.values**2)
    return float(dens.sum() * grid.cell_volume / (2.0 * params.hbar))


def norm_functional(psi: WaveFunction) -> float:
    """(1/2 hbar) Int |Psi|^2; the generalized Hamiltonian of the flow."""
    v = psi.psi.values
    return float(np.sum(v.real**2 + v.imag**2) * psi.grid.cell_volume / (2.0 * psi.params.hbar))


def crank_nicolson_step(
    psi: WaveFunction,
    V: PotentialSpec,
    dt: float,
    method: str = "spectral",
    *,
    tol: float = 1e-12,
    max_iter: int = 400,
) -> WaveFunction:
    """One Cayley step: solve (1 + i dt H / 2 hbar) Psi' = (1 - i dt H / 2 hbar) Psi.

    The solve runs CG on the normal equations of the (normal, superbly
    conditioned) Cayley matrix down to a relative residual of ``tol``; norm is
    then conserved to the same tolerance.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = psi.grid
    _check_same_grid(grid, V.sampled)
    params = psi.params
    v = V.sampled.values
    alpha = dt / (2.0 * params.hbar)

    def apply_a(x: np.ndarray) -> np.ndarray:
        return x + 1j * alpha * hamiltonian_array(x, v, grid, params, method)

    def apply_ah(x: np.ndarray) -> np.ndarray:
        return x - 1j * alpha * hamiltonian_array(x, v, grid, params, method)

    b = psi.psi.values - 1j * alpha * hamiltonian_array(psi.psi.values, v, grid, params, method)
    try:
        out = normal_equations_cg(apply_a, apply_ah, b, tol=tol, max_iter=max_iter)
    except SolverError as exc:
        raise SolverError(f"Crank-Nicolson solve failed: {exc}") from exc
    return WaveFunction(ComplexSampleField(grid, out), params)


def propagate_cn(
    psi: WaveFunction,
    V: PotentialSpec,
    dt: float,
    steps: int,
    *,
    snapshot_stride: int = 1,
    method: str = "spectral",
    observer=None,
) -> tuple[np.ndarray, list[ComplexSampleField]]:
    """Run ``steps`` Cayley steps, recording every ``snapshot_stride``-th state.

    Snapshot times include t=0. ``observer(step, psi_values)`` is called after
    every step when given.
    """
    times = [0.0]
    snaps = [psi.psi]
    state = psi
    for n in range(1, steps + 1):
        state = crank_nicolson_step(state, V, dt, method)
        if observer is not None:
            observer(n, state.psi.values)
        if n % snapshot_stride == 0 or n == steps:
            times.append(n * dt)
            snaps.append(state.psi)
    return np.array(times), snaps


@dataclass(frozen=True)
class DenseEigensystem:
    """Full spectrum of the discrete H on a small grid.

    ``vectors[:, n]`` is the n-th eigenvector over flattened samples,
    orthonormal in the plain dot product; eigenvalues ascend.
    """

    grid: Grid
    energies: np.ndarray
    vectors: np.ndarray
    params: QuantumParams

    def eigenfield(self, n: int) -> ScalarSampleField:
        vec = self.vectors[:, n] / np.sqrt(self.grid.cell_volume)
        return ScalarSampleField(self.grid, vec.reshape(self.grid.shape))


def dense_hamiltonian(V: PotentialSpec, params: QuantumParams, method: str = "spectral") -> np.ndarray:
    """Materialize H as a dense symmetric matrix (grids up to 4096 points)."""
    grid = V.grid
    m = grid.size
    if m > DENSE_GRID_LIMIT:
        raise ValueError(f"grid too large for dense methods ({m} > {DENSE_GRID_LIMIT} points)")
    v = V.sampled.values
    mat = np.empty((m, m))
    chunk = max(1, min(m, (1 << 22) // m))
    eye = np.eye(m)
    for start in range(0, m, chunk):
        block = eye[start : start + chunk].reshape((-1,) + grid.shape)
        hb = hamiltonian_array(block, v, grid, params, method)
        mat[start : start + chunk] = hb.reshape(-1, m)
    # rows hold H applied to basis vectors; symmetrize away roundoff skew
    return 0.5 * (mat + mat.T)


def dense_eigensystem(
    V: PotentialSpec, params: QuantumParams, method: str = "spectral"
) -> DenseEigensystem:
    mat = dense_hamiltonian(V, params, method)
    energies, vectors = scipy.linalg.eigh(mat)
    # deterministic sign: largest-magnitude entry positive
    for n in range(vectors.shape[1]):
        col = vectors[:, n]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            vectors[:, n] = -col
    return DenseEigensystem(V.grid, energies, vectors, params)


def eigenpairs_small(
    V: PotentialSpec,
    params: QuantumParams,
    count: int,
    method: str = "spectral",
    *,
    eig: DenseEigensystem | None = None,
) -> list[tuple[float, ScalarSampleField]]:
    """Lowest ``count`` eigenpairs of the discrete H, ascending, grid-orthonormal."""
    system = eig if eig is not None else dense_eigensystem(V, params, method)
    count = min(count, system.energies.size)
    return [(float(system.energies[n]), system.eigenfield(n)) for n in range(count)]


def exact_propagate_small(
    psi: WaveFunction,
    V: PotentialSpec,
    t: float,
    method: str = "spectral",
    *,
    eig: DenseEigensystem | None = None,
) -> WaveFunction:
    """Propagate through the full discrete spectrum: machine-precision oracle.

    Psi(t) = sum_n <psi_n|Psi(0)> exp(-i E_n t / hbar) psi_n. Pass a
    precomputed ``eig`` to amortize the diagonalization over many times.
    """
    grid = psi.grid
    _check_same_grid(grid, V.sampled)
    system = eig if eig is not None else dense_eigensystem(V, psi.params, method)
    flat = psi.psi.values.ravel()
    coeffs = system.vectors.T @ flat
    phases = np.exp(-1j * system.energies * (t / psi.params.hbar))
    out = system.vectors @ (phases * coeffs)
    return WaveFunction(ComplexSampleField(grid, out.reshape(grid.shape)), psi.params)


def max_energy_bound(V: PotentialSpec, params: QuantumParams, method: str = "spectral") -> float:
    """Upper bound on |spec(H)|: kinetic spectral radius plus potential range."""
    v = V.sampled.values
    kin = params.hbar**2 / (2.0 * params.mass) * laplacian_spectral_radius(V.grid, method)
    return float(kin + max(0.0, float(v.max())) - min(0.0, float(v.min())))
