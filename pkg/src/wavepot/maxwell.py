"""Electromagnetic half of the analogy: (E, B) evolution versus the vector potential.

The first-order system

    dE/dt = c curl B - J,   dB/dt = -c curl E

is integrated with classical RK4; the divergence equations are *initial
conditions* whose residuals are monitored, not enforced (their persistence
along the flow is itself one of the checked claims). The second-order vector
potential obeys

    d^2A/dt^2 = c^2 (Lap A - grad div A) + c J,

integrated with velocity-Verlet exactly like the wave potential, and maps to
fields through B = curl A, E = -(1/c) dA/dt. The complex combination
B + i E (Riemann-Silberstein vector) repackages the first-order system into
one equation whose residual must vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import expressions
from .errors import ContinuityError, GridMismatchError, StabilityError
from .expressions import Expression
from .grids import Grid, ScalarSampleField, VectorSampleField3
from .operators import (
    _curl_arrays,
    _deriv_symbols_half,
    _laplacian_symbol_half,
    first_derivative_array,
    gradient_arrays,
    inverse_div_grad,
    laplacian_array,
    max_wavenumber,
)

__all__ = [
    "EMState",
    "PotentialState",
    "SourceSpec",
    "em_rhs",
    "rk4_dt_bound",
    "rk4_step",
    "run_rk4",
    "constraint_residual",
    "riemann_silberstein_residual",
    "potential_acceleration",
    "potential_dt_bound",
    "potential_verlet_step",
    "run_potential_verlet",
    "potential_to_fields",
    "potential_constraint_residual",
    "em_hamiltonians",
    "gauge_shift_potential",
    "coulomb_field_from_charge",
]

RK4_IMAG_STABILITY = 2.8  # conservative value of the RK4 imaginary-axis reach
DEFAULT_SAFETY = 0.5


@dataclass(frozen=True)
class EMState:
    """Electric and magnetic fields with the speed of light."""

    e: VectorSampleField3
    b: VectorSampleField3
    c: float = 1.0

    def __post_init__(self):
        if self.e.grid != self.b.grid:
            raise GridMismatchError("E and B must share a grid")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def grid(self) -> Grid:
        return self.e.grid


@dataclass(frozen=True)
class PotentialState:
    """Vector potential and its time derivative (E = -a_dot / c)."""

    a: VectorSampleField3
    a_dot: VectorSampleField3
    c: float = 1.0

    def __post_init__(self):
        if self.a.grid != self.a_dot.grid:
            raise GridMismatchError("A and dA/dt must share a grid")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def grid(self) -> Grid:
        return self.a.grid


class SourceSpec:
    """Charge density and current expressions over (t, x, y, z).

    The pair must satisfy the continuity equation; ``validate_continuity``
    gates a run by probing d(rho)/dt + div J at sample times (d/dt by a
    centered difference with step dt/100).
    """

    def __init__(
        self,
        rho: str | Expression,
        j: tuple[str | Expression, str | Expression, str | Expression],
        bindings: dict[str, float] | None = None,
    ):
        as_node = lambda s: expressions.parse(s) if isinstance(s, str) else s
        self.rho = as_node(rho)
        self.j = tuple(as_node(src) for src in j)
        self.bindings = dict(bindings or {})
        self._static = not any(
            expressions.references_time(node) for node in (self.rho, *self.j)
        )
        self._cache: dict = {}

    @classmethod
    def vacuum(cls) -> "SourceSpec":
        return cls("0", ("0", "0", "0"))

    @property
    def is_static(self) -> bool:
        return self._static

    def rho_at(self, t: float, grid: Grid) -> ScalarSampleField:
        if self._static and ("rho", grid) in self._cache:
            return self._cache[("rho", grid)]
        field = expressions.sample(self.rho, grid, self.bindings, t)
        if self._static:
            self._cache[("rho", grid)] = field
        return field

    def current_at(self, t: float, grid: Grid) -> VectorSampleField3:
        if self._static and ("j", grid) in self._cache:
            return self._cache[("j", grid)]
        comps = [expressions.sample(node, grid, self.bindings, t) for node in self.j]
        field = VectorSampleField3.from_components(*comps)
        if self._static:
            self._cache[("j", grid)] = field
        return field

    def continuity_residual(
        self, t: float, grid: Grid, dt: float, method: str = "spectral"
    ) -> tuple[float, float]:
        """(max |d rho/dt + div J|, scale) at time t."""
        h = dt / 100.0
        rho_plus = expressions.sample(self.rho, grid, self.bindings, t + h).values
        rho_minus = expressions.sample(self.rho, grid, self.bindings, t - h).values
        drho = (rho_plus - rho_minus) / (2.0 * h)
        jv = self.current_at(t, grid).values
        div_j = sum(first_derivative_array(jv[a], grid, a, method) for a in range(3))
        residual = float(np.max(np.abs(drho + div_j)))
        scale = float(np.max(np.abs(drho)) + np.max(np.abs(div_j)))
        return residual, scale

    def validate_continuity(
        self,
        grid: Grid,
        dt: float,
        total_time: float,
        method: str = "spectral",
        *,
        tol: float = 1e-8,
        probes: int = 9,
    ) -> None:
        """Reject the sources if continuity fails at any probe time."""
        times = np.linspace(0.0, max(total_time, dt), probes) if not self._static else [0.0]
        for t in times:
            residual, scale = self.continuity_residual(float(t), grid, dt, method)
            if residual > tol * max(scale, 1e-30):
                raise ContinuityError(
                    f"sources violate the continuity equation at t={float(t):g}: "
                    f"max |d rho/dt + div J| = {residual:.3e} (scale {scale:.3e})"
                )


def em_rhs(
    state: EMState, current: VectorSampleField3, method: str = "spectral"
) -> tuple[VectorSampleField3, VectorSampleField3]:
    """dE/dt = c curl B - J, dB/dt = -c curl E."""
    grid = state.grid
    if current.grid != grid:
        raise GridMismatchError("current must live on the field grid")
    de = state.c * _curl_arrays(state.b.values, grid, method) - current.values
    db = -state.c * _curl_arrays(state.e.values, grid, method)
    return VectorSampleField3(grid, de), VectorSampleField3(grid, db)


def rk4_dt_bound(grid: Grid, c: float, safety: float = DEFAULT_SAFETY) -> float:
    """CFL budget safety * 2.8 / (c k_max) for the first-order system."""
    return safety * RK4_IMAG_STABILITY / (c * max_wavenumber(grid))


def _require_cfl(dt: float, bound: float, label: str) -> None:
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:g} exceeds the {label} budget {bound:g}")


def _em_rhs_arrays(
    e: np.ndarray, b: np.ndarray, j: np.ndarray, c: float, grid: Grid, method: str
) -> tuple[np.ndarray, np.ndarray]:
    return c * _curl_arrays(b, grid, method) - j, -c * _curl_arrays(e, grid, method)


def rk4_step(
    state: EMState,
    sources: SourceSpec,
    t: float,
    dt: float,
    method: str = "spectral",
) -> EMState:
    """Classical RK4 step with sources sampled at the substage times."""
    grid = state.grid
    _require_cfl(dt, rk4_dt_bound(grid, state.c), "RK4 CFL")
    c = state.c
    j0 = sources.current_at(t, grid).values
    j_half = sources.current_at(t + 0.5 * dt, grid).values
    j1 = sources.current_at(t + dt, grid).values
    e, b = state.e.values, state.b.values

    ke1, kb1 = _em_rhs_arrays(e, b, j0, c, grid, method)
    ke2, kb2 = _em_rhs_arrays(e + 0.5 * dt * ke1, b + 0.5 * dt * kb1, j_half, c, grid, method)
    ke3, kb3 = _em_rhs_arrays(e + 0.5 * dt * ke2, b + 0.5 * dt * kb2, j_half, c, grid, method)
    ke4, kb4 = _em_rhs_arrays(e + dt * ke3, b + dt * kb3, j1, c, grid, method)

    e_new = e + (dt / 6.0) * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4)
    b_new = b + (dt / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
    return EMState(VectorSampleField3(grid, e_new), VectorSampleField3(grid, b_new), c)


def run_rk4(
    state: EMState,
    sources: SourceSpec,
    dt: float,
    steps: int,
    *,
    snapshot_stride: int = 1,
    method: str = "spectral",
    observer: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    observe_stride: int = 1,
) -> tuple[np.ndarray, list[EMState]]:
    """Integrate the field system, snapshotting every ``snapshot_stride`` steps."""
    grid = state.grid
    _require_cfl(dt, rk4_dt_bound(grid, state.c), "RK4 CFL")
    c = state.c
    e = state.e.values.copy()
    b = state.b.values.copy()
    times = [0.0]
    snaps = [state]
    if observer is not None:
        observer(0, e, b)
    for n in range(1, steps + 1):
        t = (n - 1) * dt
        j0 = sources.current_at(t, grid).values
        j_half = sources.current_at(t + 0.5 * dt, grid).values
        j1 = sources.current_at(t + dt, grid).values
        ke1, kb1 = _em_rhs_arrays(e, b, j0, c, grid, method)
        ke2, kb2 = _em_rhs_arrays(e + 0.5 * dt * ke1, b + 0.5 * dt * kb1, j_half, c, grid, method)
        ke3, kb3 = _em_rhs_arrays(e + 0.5 * dt * ke2, b + 0.5 * dt * kb2, j_half, c, grid, method)
        ke4, kb4 = _em_rhs_arrays(e + dt * ke3, b + dt * kb3, j1, c, grid, method)
        e += (dt / 6.0) * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4)
        b += (dt / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
        if observer is not None and n % observe_stride == 0:
            observer(n, e, b)
        if n % snapshot_stride == 0 or n == steps:
            times.append(n * dt)
            snaps.append(
                EMState(
                    VectorSampleField3(grid, e.copy()), VectorSampleField3(grid, b.copy()), c
                )
            )
    return np.array(times), snaps


def constraint_residual(state: EMState, rho: ScalarSampleField, method: str = "spectral") -> tuple[float, float]:
    """Max-norms of (div E - rho, div B): the initial-condition residuals."""
    grid = state.grid
    if rho.grid != grid:
        raise GridMismatchError("rho must live on the field grid")
    div_e = sum(first_derivative_array(state.e.values[a], grid, a, method) for a in range(3))
    div_b = sum(first_derivative_array(state.b.values[a], grid, a, method) for a in range(3))
    return float(np.max(np.abs(div_e - rho.values))), float(np.max(np.abs(div_b)))


def riemann_silberstein_residual(
    state: EMState, sources: SourceSpec, t: float, method: str = "spectral"
) -> tuple[float, float]:
    """Residual of the compact form (i/c) dW/dt + curl W = J/c with W = B + i E.

    dW/dt is taken from em_rhs, so the residual is an algebraic identity and
    must sit at roundoff. Returns (max residual, scale), where scale sums the
    max-norms of the constituent terms.
    """
    grid = state.grid
    current = sources.current_at(t, grid)
    de, db = em_rhs(state, current, method)
    w = state.b.values + 1j * state.e.values
    dw = db.values + 1j * de.values
    curl_w = _curl_arrays(w, grid, method)
    residual = (1j / state.c) * dw + curl_w - current.values / state.c
    scale = (
        float(np.max(np.abs(dw)) / state.c)
        + float(np.max(np.abs(curl_w)))
        + float(np.max(np.abs(current.values)) / state.c)
    )
    return float(np.max(np.abs(residual))), scale


def potential_acceleration(
    state: PotentialState, current: VectorSampleField3, method: str = "spectral"
) -> VectorSampleField3:
    """d^2A/dt^2 = c^2 (Lap A - grad div A) + c J.

    Equal to -c^2 curl(curl A) + c J by the curl-curl expansion (exactly so
    for fields without Nyquist content).
    """
    grid = state.grid
    if current.grid != grid:
        raise GridMismatchError("current must live on the potential grid")
    a = state.a.values
    lap = laplacian_array(a, grid, method)
    div = sum(first_derivative_array(a[i], grid, i, method) for i in range(3))
    grad_div = np.stack(gradient_arrays(div, grid, method))
    acc = state.c**2 * (lap - grad_div) + state.c * current.values
    return VectorSampleField3(grid, acc)


def potential_dt_bound(grid: Grid, c: float, safety: float = DEFAULT_SAFETY) -> float:
    """Verlet budget safety * 2 / (c k_max) for the second-order system."""
    return safety * 2.0 / (c * max_wavenumber(grid))


def _potential_accel_arrays(
    a: np.ndarray, j: np.ndarray, c: float, grid: Grid, method: str
) -> np.ndarray:
    if method == "spectral":
        # one transform pair: Lap A - grad(div A) is diagonal mode by mode
        axes = (1, 2, 3)
        s = _deriv_symbols_half(grid, method)
        lap = _laplacian_symbol_half(grid, method)
        hat = np.fft.rfftn(a, axes=axes)
        dsum = s[0] * hat[0] + s[1] * hat[1] + s[2] * hat[2]
        out_hat = np.empty_like(hat)
        for b in range(3):
            out_hat[b] = lap * hat[b] + s[b] * dsum
        out = np.fft.irfftn(out_hat, s=grid.shape, axes=axes)
        return c * c * out + c * j
    lap = laplacian_array(a, grid, method)
    div = sum(first_derivative_array(a[i], grid, i, method) for i in range(3))
    grad_div = np.stack(gradient_arrays(div, grid, method))
    return c * c * (lap - grad_div) + c * j


def potential_verlet_step(
    state: PotentialState,
    sources: SourceSpec,
    t: float,
    dt: float,
    method: str = "spectral",
) -> PotentialState:
    """Velocity-Verlet step of the second-order potential dynamics."""
    grid = state.grid
    _require_cfl(dt, potential_dt_bound(grid, state.c), "potential Verlet")
    c = state.c
    j0 = sources.current_at(t, grid).values
    j1 = sources.current_at(t + dt, grid).values
    a0 = _potential_accel_arrays(state.a.values, j0, c, grid, method)
    v_half = state.a_dot.values + 0.5 * dt * a0
    a_new = state.a.values + dt * v_half
    a1 = _potential_accel_arrays(a_new, j1, c, grid, method)
    v_new = v_half + 0.5 * dt * a1
    return PotentialState(
        VectorSampleField3(grid, a_new), VectorSampleField3(grid, v_new), c
    )


def run_potential_verlet(
    state: PotentialState,
    sources: SourceSpec,
    dt: float,
    steps: int,
    *,
    snapshot_stride: int = 1,
    method: str = "spectral",
    observer: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    observe_stride: int = 1,
) -> tuple[np.ndarray, list[PotentialState]]:
    grid = state.grid
    _require_cfl(dt, potential_dt_bound(grid, state.c), "potential Verlet")
    c = state.c
    a = state.a.values.copy()
    vel = state.a_dot.values.copy()
    times = [0.0]
    snaps = [state]
    if observer is not None:
        observer(0, a, vel)
    accel = _potential_accel_arrays(a, sources.current_at(0.0, grid).values, c, grid, method)
    for n in range(1, steps + 1):
        vel += 0.5 * dt * accel
        a += dt * vel
        accel = _potential_accel_arrays(
            a, sources.current_at(n * dt, grid).values, c, grid, method
        )
        vel += 0.5 * dt * accel
        if observer is not None and n % observe_stride == 0:
            observer(n, a, vel)
        if n % snapshot_stride == 0 or n == steps:
            times.append(n * dt)
            snaps.append(
                PotentialState(
                    VectorSampleField3(grid, a.copy()), VectorSampleField3(grid, vel.copy()), c
                )
            )
    return np.array(times), snaps


def potential_to_fields(state: PotentialState, method: str = "spectral") -> EMState:
    """B = curl A, E = -(1/c) dA/dt; div B vanishes structurally."""
    grid = state.grid
    b = _curl_arrays(state.a.values, grid, method)
    e = -state.a_dot.values / state.c
    return EMState(VectorSampleField3(grid, e), VectorSampleField3(grid, b), state.c)


def potential_constraint_residual(
    state: PotentialState, rho: ScalarSampleField, method: str = "spectral"
) -> float:
    """Max-norm of div(dA/dt) + c rho, the potential-side initial condition."""
    grid = state.grid
    if rho.grid != grid:
        raise GridMismatchError("rho must live on the potential grid")
    div_adot = sum(
        first_derivative_array(state.a_dot.values[i], grid, i, method) for i in range(3)
    )
    return float(np.max(np.abs(div_adot + state.c * rho.values)))


def em_hamiltonians(
    state: EMState, current: VectorSampleField3, method: str = "spectral"
) -> tuple[float, float]:
    """Canonical and generalized field energies.

    H  = Int [ (c/2)(B . curl B + E . curl E) - B . J ]
    H' = Int (c/2)(E^2 + B^2)

    H' is conserved for J = 0; H is conserved for static J.
    """
    grid = state.grid
    if current.grid != grid:
        raise GridMismatchError("current must live on the field grid")
    e, b = state.e.values, state.b.values
    curl_b = _curl_arrays(b, grid, method)
    curl_e = _curl_arrays(e, grid, method)
    vol = grid.cell_volume
    h = float(
        np.sum(0.5 * state.c * (b * curl_b + e * curl_e) - b * current.values) * vol
    )
    h_prime = float(np.sum(0.5 * state.c * (e * e + b * b)) * vol)
    return h, h_prime


def gauge_shift_potential(
    state: PotentialState, alpha: ScalarSampleField, method: str = "spectral"
) -> PotentialState:
    """A -> A + grad alpha with static alpha; the fields are unchanged."""
    grid = state.grid
    if alpha.grid != grid:
        raise GridMismatchError("gauge function must live on the potential grid")
    grad_alpha = np.stack(gradient_arrays(alpha.values, grid, method))
    return PotentialState(
        VectorSampleField3(grid, state.a.values + grad_alpha), state.a_dot, state.c
    )


def coulomb_field_from_charge(
    rho: ScalarSampleField, method: str = "spectral"
) -> VectorSampleField3:
    """Gradient field E with div E = rho exactly (rho must have zero mean)."""
    u = inverse_div_grad(rho.values, rho.grid, method)
    return VectorSampleField3(rho.grid, np.stack(gradient_arrays(u, rho.grid, method)))
