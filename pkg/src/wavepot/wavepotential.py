"""The real wave potential: second-order dynamics equivalent to Schrodinger flow.

A real field phi with velocity phi_dot generates a wave function through

    Re Psi = -L phi,   Im Psi = hbar * phi_dot,   L = (hbar^2/2m) Lap - V,

and obeys hbar^2 phi_ddot + L^2 phi = 0, integrated here with velocity-Verlet
(symplectic, time-reversible). |Psi|^2 equals 2*hbar times the field energy
density pointwise, so probability conservation is literally energy
conservation of this field. Functions alpha with L alpha = 0 shift phi
without changing Psi; that kernel is the gauge sector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GaugeError, GridMismatchError, StabilityError
from .grids import Grid, ComplexSampleField, ScalarSampleField
from .schrodinger import (
    PotentialSpec,
    QuantumParams,
    WaveFunction,
    l_operator_array,
    max_energy_bound,
    real_l_operator,
)

__all__ = [
    "PhiState",
    "EnergyDensity",
    "phi_acceleration",
    "stable_dt",
    "verlet_step",
    "run_verlet",
    "to_wavefunction",
    "stationary_phi",
    "energy_density",
    "lagrangian_density",
    "gauge_shift",
]

DEFAULT_SAFETY = 0.2


@dataclass(frozen=True)
class PhiState:
    """Wave potential phi, its time derivative, and the background."""

    phi: ScalarSampleField
    phi_dot: ScalarSampleField
    params: QuantumParams
    potential: PotentialSpec

    def __post_init__(self):
        if not (self.phi.grid == self.phi_dot.grid == self.potential.grid):
            raise GridMismatchError("phi, phi_dot, and potential must share one grid")

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    @property
    def momentum(self) -> ScalarSampleField:
        """Conjugate momentum hbar * phi_dot (kinetic term is (hbar/2) phi_dot^2)."""
        return ScalarSampleField(self.grid, self.params.hbar * self.phi_dot.values)


@dataclass(frozen=True)
class EnergyDensity:
    """Pointwise energy split of the wave potential; total = kinetic + potential."""

    total: ScalarSampleField
    kinetic: ScalarSampleField
    potential: ScalarSampleField


def phi_acceleration(state: PhiState, method: str = "spectral") -> ScalarSampleField:
    """phi_ddot = -(1/hbar^2) L(L(phi)); L applied twice, never expanded."""
    grid = state.grid
    v = state.potential.sampled.values
    lphi = l_operator_array(state.phi.values, v, grid, state.params, method)
    llphi = l_operator_array(lphi, v, grid, state.params, method)
    return ScalarSampleField(grid, -llphi / state.params.hbar**2)


def stable_dt(
    V: PotentialSpec,
    params: QuantumParams,
    method: str = "spectral",
    safety: float = DEFAULT_SAFETY,
) -> float:
    """Verlet step budget: safety * 2 hbar / E_max.

    E_max bounds |spec(H)|, so the squared operator driving phi stays inside
    the Verlet stability region dt < 2 hbar / E_max with margin ``safety``.
    """
    return safety * 2.0 * params.hbar / max_energy_bound(V, params, method)


def _require_stable(dt: float, state: PhiState, method: str) -> None:
    budget = stable_dt(state.potential, state.params, method)
    if dt > budget * (1.0 + 1e-12):
        emax = max_energy_bound(state.potential, state.params, method)
        raise StabilityError(
            f"dt={dt:g} exceeds the Verlet budget {budget:g} "
            f"(E_max={emax:g}, hard stability limit {2 * state.params.hbar / emax:g})"
        )


def verlet_step(state: PhiState, dt: float, method: str = "spectral") -> PhiState:
    """One kick-drift-kick velocity-Verlet step. Refuses unstable dt."""
    _require_stable(dt, state, method)
    grid = state.grid
    v = state.potential.sampled.values
    hbar2 = state.params.hbar**2

    def accel(phi_values: np.ndarray) -> np.ndarray:
        lphi = l_operator_array(phi_values, v, grid, state.params, method)
        return -l_operator_array(lphi, v, grid, state.params, method) / hbar2

    a0 = accel(state.phi.values)
    v_half = state.phi_dot.values + 0.5 * dt * a0
    phi_new = state.phi.values + dt * v_half
    a1 = accel(phi_new)
    v_new = v_half + 0.5 * dt * a1
    return PhiState(
        ScalarSampleField(grid, phi_new),
        ScalarSampleField(grid, v_new),
        state.params,
        state.potential,
    )


def run_verlet(
    state: PhiState,
    dt: float,
    steps: int,
    *,
    snapshot_stride: int = 1,
    method: str = "spectral",
    observer: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    observe_stride: int = 1,
) -> tuple[np.ndarray, list[PhiState]]:
    """Integrate ``steps`` Verlet steps on raw arrays (hot path).

    Snapshots (including t=0) are boxed into PhiState every
    ``snapshot_stride`` steps. ``observer(step, l_phi, phi_dot)`` receives the
    operator image L(phi) and the velocity after each ``observe_stride``-th
    step, which is enough to form Psi and all densities without extra
    transforms.
    """
    _require_stable(dt, state, method)
    grid = state.grid
    v = state.potential.sampled.values
    params = state.params
    hbar2 = params.hbar**2
    lop = real_l_operator(grid, v, params, method)

    phi = state.phi.values.copy()
    vel = state.phi_dot.values.copy()
    times = [0.0]
    snaps = [state]

    def box(p, w) -> PhiState:
        return PhiState(
            ScalarSampleField(grid, p.copy()),
            ScalarSampleField(grid, w.copy()),
            params,
            state.potential,
        )

    neg_inv_hbar2 = -1.0 / hbar2
    half_dt = 0.5 * dt
    lphi = lop(phi)
    if observer is not None:
        observer(0, lphi, vel)
    accel = lop(lphi)
    accel *= neg_inv_hbar2
    for n in range(1, steps + 1):
        vel += half_dt * accel
        phi += dt * vel
        lphi = lop(phi)
        accel = lop(lphi)
        accel *= neg_inv_hbar2
        vel += half_dt * accel
        if observer is not None and n % observe_stride == 0:
            observer(n, lphi, vel)
        if n % snapshot_stride == 0 or n == steps:
            times.append(n * dt)
            snaps.append(box(phi, vel))
    return np.array(times), snaps


def to_wavefunction(state: PhiState, method: str = "spectral") -> WaveFunction:
    """Psi = -L phi + i hbar phi_dot."""
    grid = state.grid
    v = state.potential.sampled.values
    lphi = l_operator_array(state.phi.values, v, grid, state.params, method)
    psi = -lphi + 1j * state.params.hbar * state.phi_dot.values
    return WaveFunction(ComplexSampleField(grid, psi), state.params)


def stationary_phi(
    psi_n: ScalarSampleField,
    energy: float,
    t: float,
    params: QuantumParams,
    V: PotentialSpec,
    method: str = "spectral",
) -> PhiState:
    """Wave potential of a stationary state: phi = (psi_n/E_n) cos(E_n t / hbar).

    Requires E_n away from zero; zero-energy eigenvectors are pure gauge and
    carry no wave function. ``to_wavefunction`` of the result reproduces
    psi_n exp(-i E_n t / hbar) exactly at the discrete-operator level.
    """
    emax = max_energy_bound(V, params, method)
    if abs(energy) <= 1e-12 * emax:
        raise ValueError(
            f"stationary construction divides by the eigenvalue; E={energy:g} is "
            f"numerically zero (threshold {1e-12 * emax:g}); zero modes are gauge"
        )
    phase = energy * t / params.hbar
    phi = ScalarSampleField(psi_n.grid, psi_n.values * (np.cos(phase) / energy))
    phi_dot = ScalarSampleField(psi_n.grid, psi_n.values * (-np.sin(phase) / params.hbar))
    return PhiState(phi, phi_dot, params, V)


def energy_density(state: PhiState, method: str = "spectral") -> EnergyDensity:
    """Kinetic (hbar/2) phi_dot^2 and potential (1/2 hbar) (L phi)^2 densities.

    2 hbar * total equals |Psi|^2 pointwise for Psi = to_wavefunction(state).
    """
    grid = state.grid
    hbar = state.params.hbar
    v = state.potential.sampled.values
    lphi = l_operator_array(state.phi.values, v, grid, state.params, method)
    kinetic = 0.5 * hbar * state.phi_dot.values**2
    potential = 0.5 / hbar * lphi**2
    return EnergyDensity(
        ScalarSampleField(grid, kinetic + potential),
        ScalarSampleField(grid, kinetic),
        ScalarSampleField(grid, potential),
    )


def lagrangian_density(state: PhiState, method: str = "spectral") -> ScalarSampleField:
    """Kinetic minus potential density of the wave potential."""
    dens = energy_density(state, method)
    return ScalarSampleField(state.grid, dens.kinetic.values - dens.potential.values)


def gauge_shift(
    state: PhiState,
    alpha: ScalarSampleField,
    method: str = "spectral",
    *,
    tol_factor: float = 1e-10,
) -> PhiState:
    """Shift phi by a kernel function of L; the wave function is unchanged.

    alpha must satisfy ||L alpha|| <= tol_factor * ||alpha|| * E_max in the
    discrete L2 norm, otherwise GaugeError reports the offending residual.
    """
    grid = state.grid
    if alpha.grid != grid:
        raise GridMismatchError("gauge function must live on the state grid")
    v = state.potential.sampled.values
    l_alpha = l_operator_array(alpha.values, v, grid, state.params, method)
    vol = grid.cell_volume
    residual = float(np.sqrt(np.sum(l_alpha**2) * vol))
    alpha_norm = float(np.sqrt(np.sum(alpha.values**2) * vol))
    bound = tol_factor * alpha_norm * max_energy_bound(state.potential, state.params, method)
    if residual > bound:
        raise GaugeError(
            f"gauge function is not in the kernel of L: ||L alpha|| = {residual:.3e} "
            f"exceeds the bound {bound:.3e}",
            residual=residual,
            bound=bound,
        )
    return PhiState(state.phi + alpha, state.phi_dot, state.params, state.potential)
