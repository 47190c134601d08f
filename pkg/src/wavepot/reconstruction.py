"""Inverse maps: recover the potentials from recorded field trajectories.

Quantum side: given a wave-function trajectory, the potential is

    phi(t) = (1/hbar) Int_0^t Im Psi dtau + C,   L C = -Re Psi(0),

with the elliptic solve pinned to the minimum-norm solution (zero along any
numerical kernel of L, which is exactly the gauge sector). Electromagnetic
side: given an (E, B) trajectory,

    A(t) = -c Int_0^t E dtau + K,   curl K = B(0),

with K made unique by the divergence-free, zero-mean choice. Cumulative
integrals use the composite trapezoid rule, matching the second-order
accuracy of the recording propagators; a Crank-Nicolson record round-trips
through the quantum map exactly up to the elliptic residual because the
Cayley update *is* the trapezoid relation between the two parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IncompatibleRhsError, SolverError
from .grids import ComplexSampleField, Grid, ScalarSampleField, VectorSampleField3
from .linsolve import conjugate_gradient, normal_equations_cg
from .maxwell import EMState, PotentialState
from .operators import (
    _deriv_symbols,
    _laplacian_symbol,
    first_derivative_array,
    max_wavenumber,
)
from .schrodinger import (
    DENSE_GRID_LIMIT,
    PotentialSpec,
    QuantumParams,
    dense_eigensystem,
    l_operator_array,
    max_energy_bound,
)
from .wavepotential import PhiState

__all__ = [
    "TrajectoryRecord",
    "time_integrate",
    "solve_elliptic",
    "reconstruct_phi",
    "curl_inverse",
    "reconstruct_vector_potential",
]


@dataclass(frozen=True)
class TrajectoryRecord:
    """Uniformly sampled snapshots starting at t = 0.

    Frames are ComplexSampleField (wave functions) or EMState (field pairs),
    homogeneous within one record.
    """

    times: np.ndarray
    frames: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", tuple(self.frames))
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a trajectory needs at least two samples")
        if len(self.frames) != times.size:
            raise ValueError("times and frames disagree in length")
        if abs(times[0]) > 1e-12 * max(times[-1], 1.0):
            raise ValueError("trajectory must start at t = 0")
        dts = np.diff(times)
        if np.any(dts <= 0):
            raise ValueError("times must ascend")
        dt = dts[0]
        if np.max(np.abs(dts - dt)) > 1e-12 * dt:
            raise ValueError("trajectory samples must be uniformly spaced")
        kinds = {type(f) for f in self.frames}
        if len(kinds) != 1:
            raise ValueError("trajectory frames must be homogeneous")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid

    @classmethod
    def of_waves(cls, times, psis: Sequence[ComplexSampleField]) -> "TrajectoryRecord":
        return cls(np.asarray(times), tuple(psis))

    @classmethod
    def of_fields(cls, times, states: Sequence[EMState]) -> "TrajectoryRecord":
        return cls(np.asarray(times), tuple(states))


def time_integrate(snapshots: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative composite-trapezoid integral along the leading (time) axis."""
    snapshots = np.asarray(snapshots)
    out = np.empty_like(snapshots, dtype=np.result_type(snapshots, np.float64))
    out[0] = 0.0
    if snapshots.shape[0] > 1:
        increments = 0.5 * dt * (snapshots[1:] + snapshots[:-1])
        np.cumsum(increments, axis=0, out=out[1:])
    return out


def _kernel_basis(
    V: PotentialSpec, params: QuantumParams, method: str, zero_tol: float
) -> list[np.ndarray]:
    """Orthonormal (plain dot) basis of the numerical kernel of L = -H."""
    v = V.sampled.values
    if not v.any():
        const = np.full(V.grid.size, 1.0 / np.sqrt(V.grid.size))
        return [const]
    if V.grid.size <= DENSE_GRID_LIMIT:
        system = dense_eigensystem(V, params, method)
        emax = max_energy_bound(V, params, method)
        idx = np.nonzero(np.abs(system.energies) <= zero_tol * emax)[0]
        return [system.vectors[:, i].copy() for i in idx]
    return []  # kernel assumed trivial on grids too large for the dense oracle


def solve_elliptic(
    V: PotentialSpec,
    rhs: ScalarSampleField,
    params: QuantumParams,
    method: str = "spectral",
    *,
    tol: float = 1e-10,
    max_iter: int = 20000,
    zero_tol: float = 1e-10,
) -> ScalarSampleField:
    """Solve L C = rhs for the minimum-norm C, L = (hbar^2/2m) Lap - V.

    The right-hand side must be orthogonal to the numerical kernel of L
    (relative tolerance ``zero_tol``); the returned solution carries no kernel
    component. CG runs on the positive-semidefinite -L when V >= 0, otherwise
    on the normal equations; both are preconditioned/checked against the true
    relative residual ``tol``.
    """
    grid = V.grid
    if rhs.grid != grid:
        raise ValueError("rhs must live on the potential grid")
    v = V.sampled.values
    kernel = _kernel_basis(V, params, method, zero_tol)

    flat_rhs = rhs.values.ravel().copy()
    rhs_norm = float(np.linalg.norm(flat_rhs))
    if rhs_norm == 0.0:
        return ScalarSampleField.zeros(grid)
    for u in kernel:
        overlap = float(u @ flat_rhs)
        if abs(overlap) > zero_tol * rhs_norm:
            raise IncompatibleRhsError(
                "incompatible right-hand side: component along a zero mode of L "
                f"has relative magnitude {abs(overlap) / rhs_norm:.3e} "
                f"(tolerance {zero_tol:g})"
            )

    def project(x: np.ndarray) -> np.ndarray:
        out = x
        for u in kernel:
            out = out - u.reshape(x.shape) * np.sum(u.reshape(x.shape) * x)
        return out

    def apply_h(x: np.ndarray) -> np.ndarray:
        return -l_operator_array(x, v, grid, params, method)

    # Fourier preconditioner: kinetic part plus the mean potential
    kin = params.hbar**2 / (2.0 * params.mass)
    sym = -kin * _laplacian_symbol(grid, method) + float(v.mean())
    sym = np.where(np.abs(sym) < 1e-14, 1.0, sym)

    def precondition(x: np.ndarray) -> np.ndarray:
        out = np.fft.ifftn(np.fft.fftn(x) / sym)
        return out.real

    b = -rhs.values  # H C = -rhs
    inner_tol = 0.5 * tol
    if float(v.min()) >= 0.0:
        sol = conjugate_gradient(
            apply_h, b, tol=inner_tol, max_iter=max_iter,
            precondition=precondition, project=project,
        )
    else:
        sol = normal_equations_cg(
            apply_h, apply_h, b, tol=inner_tol, max_iter=max_iter, project=project
        )
    sol = project(sol)
    residual = l_operator_array(sol, v, grid, params, method) - rhs.values
    rel = float(np.linalg.norm(residual.ravel())) / rhs_norm
    if rel > tol:
        raise SolverError(f"elliptic solve residual {rel:.3e} exceeds tolerance {tol:g}")
    return ScalarSampleField(grid, sol)


def reconstruct_phi(
    traj: TrajectoryRecord,
    V: PotentialSpec,
    params: QuantumParams,
    method: str = "spectral",
    *,
    elliptic_tol: float = 1e-10,
) -> list[PhiState]:
    """Build the wave-potential trajectory equivalent to a recorded Psi trajectory.

    phi(t_n) integrates Im Psi / hbar by cumulative trapezoid from t = 0; the
    integration constant solves L C = -Re Psi(0). phi_dot(t_n) is
    Im Psi(t_n) / hbar pointwise.
    """
    if not isinstance(traj.frames[0], ComplexSampleField):
        raise TypeError("reconstruct_phi needs a wave-function trajectory")
    grid = traj.grid
    if V.grid != grid:
        raise ValueError("potential must live on the trajectory grid")
    p_stack = np.stack([frame.values.imag for frame in traj.frames])
    c0 = solve_elliptic(
        V,
        ScalarSampleField(grid, -traj.frames[0].values.real),
        params,
        method,
        tol=elliptic_tol,
    )
    integral = time_integrate(p_stack, traj.dt) / params.hbar
    states = []
    for n in range(len(traj.frames)):
        phi = ScalarSampleField(grid, integral[n] + c0.values)
        phi_dot = ScalarSampleField(grid, p_stack[n] / params.hbar)
        states.append(PhiState(phi, phi_dot, params, V))
    return states


def curl_inverse(
    b0: VectorSampleField3,
    method: str = "spectral",
    *,
    div_tol: float = 1e-10,
    mean_tol: float = 1e-12,
) -> VectorSampleField3:
    """The unique K with curl K = b0, div K = 0, zero mean.

    b0 must be solenoidal and mean-free: a uniform magnetic field has no
    periodic potential. Inverted mode-by-mode with the backend's derivative
    symbols, so the residual of curl K - b0 sits at roundoff.
    """
    grid = b0.grid
    vals = b0.values
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        return VectorSampleField3.zeros(grid)

    mean = np.abs(vals.reshape(3, -1).mean(axis=1))
    if float(mean.max()) > mean_tol * scale:
        raise ValueError(
            f"mean magnetic field {mean.max():.3e} has no periodic vector potential "
            f"(tolerance {mean_tol * scale:.3e})"
        )
    div = sum(first_derivative_array(vals[a], grid, a, method) for a in range(3))
    div_scale = scale * max_wavenumber(grid)
    if float(np.max(np.abs(div))) > div_tol * div_scale:
        raise ValueError(
            f"magnetic field is not solenoidal: max |div B| = {np.max(np.abs(div)):.3e} "
            f"(tolerance {div_tol * div_scale:.3e})"
        )

    s = _deriv_symbols(grid, method)
    sx = np.broadcast_to(s[0], grid.shape)
    sy = np.broadcast_to(s[1], grid.shape)
    sz = np.broadcast_to(s[2], grid.shape)
    s2 = sx**2 + sy**2 + sz**2
    hat = np.fft.fftn(vals, axes=(1, 2, 3))
    # K_hat = i s x B_hat / |s|^2 on live modes
    cross = np.stack(
        [
            sy * hat[2] - sz * hat[1],
            sz * hat[0] - sx * hat[2],
            sx * hat[1] - sy * hat[0],
        ]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        k_hat = np.where(s2 == 0.0, 0.0, 1j * cross / np.where(s2 == 0.0, 1.0, s2))
    k = np.fft.ifftn(k_hat, axes=(1, 2, 3)).real
    return VectorSampleField3(grid, k)


def reconstruct_vector_potential(
    traj: TrajectoryRecord, method: str = "spectral"
) -> list[PotentialState]:
    """Build the potential trajectory equivalent to a recorded (E, B) trajectory.

    A(t_n) = -c * cumulative-trapezoid of E plus the curl inverse of B(0);
    dA/dt is -c E(t_n) pointwise, so the electric field round-trips exactly.
    """
    if not isinstance(traj.frames[0], EMState):
        raise TypeError("reconstruct_vector_potential needs an (E, B) trajectory")
    grid = traj.grid
    c = traj.frames[0].c
    k0 = curl_inverse(traj.frames[0].b, method)
    e_stack = np.stack([frame.e.values for frame in traj.frames])
    integral = time_integrate(e_stack, traj.dt)
    states = []
    for n in range(len(traj.frames)):
        a = VectorSampleField3(grid, -c * integral[n] + k0.values)
        a_dot = VectorSampleField3(grid, -c * e_stack[n])
        states.append(PotentialState(a, a_dot, c))
    return states
