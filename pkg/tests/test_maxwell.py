import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import smooth_scalar, smooth_vector
from wavepot.errors import ContinuityError, StabilityError
from wavepot.grids import Grid, ScalarSampleField, VectorSampleField3, l2_norm, max_norm
from wavepot.maxwell import (
    EMState,
    PotentialState,
    SourceSpec,
    constraint_residual,
    coulomb_field_from_charge,
    em_hamiltonians,
    em_rhs,
    gauge_shift_potential,
    potential_acceleration,
    potential_constraint_residual,
    potential_dt_bound,
    potential_to_fields,
    potential_verlet_step,
    riemann_silberstein_residual,
    rk4_dt_bound,
    rk4_step,
    run_potential_verlet,
    run_rk4,
)
from wavepot.operators import curl, divergence, gradient


def mesh(grid):
    return np.meshgrid(*[grid.axis_coordinates(a) for a in range(3)], indexing="ij")


def plane_wave_state(grid, c=1.0):
    """Travelling wave along x: E = cos(x) e_y, B = cos(x) e_z."""
    x, _, _ = mesh(grid)
    zero = np.zeros_like(x)
    e = VectorSampleField3(grid, np.stack([zero, np.cos(x), zero]))
    b = VectorSampleField3(grid, np.stack([zero, zero, np.cos(x)]))
    return EMState(e, b, c)


def plane_wave_potential(grid, c=1.0):
    """A = sin(x) e_y so that E = cos(x) e_y and B = cos(x) e_z at t = 0."""
    x, _, _ = mesh(grid)
    zero = np.zeros_like(x)
    a = VectorSampleField3(grid, np.stack([zero, np.sin(x), zero]))
    a_dot = VectorSampleField3(grid, np.stack([zero, -c * np.cos(x), zero]))
    return PotentialState(a, a_dot, c)


class TestEmRhs:
    def test_zero_state(self, cube16):
        state = EMState(VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16))
        de, db = em_rhs(state, VectorSampleField3.zeros(cube16))
        assert max_norm(de) == 0.0 and max_norm(db) == 0.0

    def test_curl_free_magnetostatic_equilibrium(self, cube16):
        # uniform B has zero curl; with E = 0, J = 0 nothing moves
        b = VectorSampleField3(cube16, np.stack([np.ones(cube16.shape)] * 3))
        state = EMState(VectorSampleField3.zeros(cube16), b)
        de, db = em_rhs(state, VectorSampleField3.zeros(cube16))
        assert max_norm(de) <= 1e-13 and max_norm(db) <= 1e-13

    def test_plane_wave_time_derivative(self, cube16):
        state = plane_wave_state(cube16)
        x, _, _ = mesh(cube16)
        de, db = em_rhs(state, VectorSampleField3.zeros(cube16))
        # E = cos(x - t) e_y at t=0: dE/dt = sin(x - t)*...(-1)' -> +sin? d/dt cos(x-t) = sin(x-t)
        assert np.max(np.abs(de.values[1] - np.sin(x))) <= 1e-11
        assert np.max(np.abs(db.values[2] - np.sin(x))) <= 1e-11

    @given(a=st.floats(-2, 2), b=st.floats(-2, 2), seed=st.integers(0, 2**10))
    def test_linear_in_state(self, a, b, seed):
        rng = np.random.default_rng(seed)
        grid = Grid.cube(8, 2 * np.pi)
        j = VectorSampleField3.zeros(grid)
        e1, b1 = smooth_vector(grid, rng), smooth_vector(grid, rng)
        e2, b2 = smooth_vector(grid, rng), smooth_vector(grid, rng)
        lhs = em_rhs(EMState(a * e1 + b * e2, a * b1 + b * b2), j)
        r1 = em_rhs(EMState(e1, b1), j)
        r2 = em_rhs(EMState(e2, b2), j)
        for i in range(2):
            combo = a * r1[i].values + b * r2[i].values
            assert np.max(np.abs(lhs[i].values - combo)) <= 1e-10 * (abs(a) + abs(b) + 1)


class TestRk4:
    def test_zero_state_stays_zero(self, cube16):
        state = EMState(VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16))
        out = rk4_step(state, SourceSpec.vacuum(), 0.0, 0.01)
        assert max_norm(out.e) == 0.0 and max_norm(out.b) == 0.0

    def test_cfl_refusal(self, cube16):
        state = plane_wave_state(cube16)
        with pytest.raises(StabilityError):
            rk4_step(state, SourceSpec.vacuum(), 0.0, 10.0)

    def test_vacuum_wave_fourth_order(self, cube16):
        state = plane_wave_state(cube16)
        src = SourceSpec.vacuum()
        period = 2 * np.pi
        errs = []
        for steps in (80, 160):
            _, snaps = run_rk4(state, src, period / steps, steps, snapshot_stride=steps)
            errs.append(
                max(l2_norm(snaps[-1].e - state.e), l2_norm(snaps[-1].b - state.b))
            )
        order = np.log2(errs[0] / errs[1])
        assert 3.7 <= order <= 4.3

    def test_energy_drift_small_inside_cfl(self, cube16):
        state = plane_wave_state(cube16)
        src = SourceSpec.vacuum()
        j0 = src.current_at(0.0, cube16)
        dt = 0.2 * rk4_dt_bound(cube16, state.c)
        h0 = em_hamiltonians(state, j0)[1]
        _, snaps = run_rk4(state, src, dt, 1000, snapshot_stride=100)
        drift = max(abs(em_hamiltonians(s, j0)[1] - h0) / h0 for s in snaps)
        assert drift <= 1e-9

    def test_rk4_dissipation_scaling(self, cube16):
        # amplitude decay per step is (omega dt)^6 / 72; verify the law at 2x dt
        state = plane_wave_state(cube16)
        src = SourceSpec.vacuum()
        j0 = src.current_at(0.0, cube16)
        h0 = em_hamiltonians(state, j0)[1]
        drifts = []
        for factor in (0.2, 0.4):
            dt = factor * rk4_dt_bound(cube16, state.c)
            _, snaps = run_rk4(state, src, dt, 200, snapshot_stride=200)
            per_step = abs(em_hamiltonians(snaps[-1], j0)[1] - h0) / h0 / 200
            drifts.append(per_step)
        measured = np.log2(drifts[1] / drifts[0])
        assert 5.5 <= measured <= 6.5


class TestConstraints:
    def test_coulomb_initial_data(self, cube16):
        x, y, _ = mesh(cube16)
        rho = ScalarSampleField(cube16, np.sin(x) * np.cos(y))
        e = coulomb_field_from_charge(rho)
        state = EMState(e, VectorSampleField3.zeros(cube16))
        div_e_res, div_b_res = constraint_residual(state, rho)
        assert div_e_res <= 1e-10
        assert div_b_res == 0.0

    def test_plane_wave_residuals_roundoff(self, cube16):
        state = plane_wave_state(cube16)
        res = constraint_residual(state, ScalarSampleField.zeros(cube16))
        assert res[0] <= 1e-12 and res[1] <= 1e-12

    def test_injected_violation_constant_in_time(self, cube16):
        # add a longitudinal mode to E: div E != 0, J = rho = 0 keeps it frozen
        state = plane_wave_state(cube16)
        x, _, _ = mesh(cube16)
        bad_e = VectorSampleField3(
            cube16, state.e.values + np.stack([np.sin(x), np.zeros_like(x), np.zeros_like(x)])
        )
        state = EMState(bad_e, state.b)
        src = SourceSpec.vacuum()
        rho0 = ScalarSampleField.zeros(cube16)
        res0 = constraint_residual(state, rho0)[0]
        dt = 0.3 * rk4_dt_bound(cube16, state.c)
        _, snaps = run_rk4(state, src, dt, 300, snapshot_stride=100)
        for s in snaps:
            res_t = constraint_residual(s, rho0)[0]
            assert abs(res_t - res0) <= 1e-12 * res0

    def test_persistence_with_static_charge(self, cube16):
        x, y, _ = mesh(cube16)
        rho = ScalarSampleField(cube16, 0.3 * np.sin(x) * np.cos(y))
        e_static = coulomb_field_from_charge(rho)
        wave = plane_wave_state(cube16)
        state = EMState(
            VectorSampleField3(cube16, e_static.values + wave.e.values), wave.b
        )
        src = SourceSpec("0.3*sin(x)*cos(y)", ("0", "0", "0"))
        dt = 0.3 * rk4_dt_bound(cube16, state.c)
        scale = max_norm(state.e) / cube16.spacings[0] + max_norm(rho)
        _, snaps = run_rk4(state, src, dt, 400, snapshot_stride=200)
        for s in snaps:
            div_e_res, div_b_res = constraint_residual(s, rho)
            assert div_e_res <= 1e-9 * scale
            assert div_b_res <= 1e-9 * scale


class TestRiemannSilberstein:
    def test_zero_everything(self, cube16):
        state = EMState(VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16))
        res, scale = riemann_silberstein_residual(state, SourceSpec.vacuum(), 0.0)
        assert res == 0.0

    def test_plane_wave(self, cube16):
        res, scale = riemann_silberstein_residual(plane_wave_state(cube16), SourceSpec.vacuum(), 0.0)
        assert res <= 1e-12 * scale

    @given(seed=st.integers(0, 2**12))
    def test_random_state_identity(self, seed):
        rng = np.random.default_rng(seed)
        grid = Grid.cube(8, 2 * np.pi)
        state = EMState(smooth_vector(grid, rng), smooth_vector(grid, rng), c=2.0)
        src = SourceSpec("0", ("cos(y)", "sin(z)", "0"))
        res, scale = riemann_silberstein_residual(state, src, 0.0)
        assert res <= 1e-12 * scale


class TestPotentialDynamics:
    def test_pure_gauge_is_static(self, cube16, rng):
        alpha = smooth_scalar(cube16, rng)
        a = gradient(alpha)
        state = PotentialState(a, VectorSampleField3.zeros(cube16))
        acc = potential_acceleration(state, VectorSampleField3.zeros(cube16))
        assert max_norm(acc) <= 1e-11
        dt = 0.3 * potential_dt_bound(cube16, state.c)
        _, snaps = run_potential_verlet(state, SourceSpec.vacuum(), dt, 50, snapshot_stride=50)
        assert max_norm(snaps[-1].a - a) <= 1e-11
        assert max_norm(snaps[-1].a_dot) <= 1e-11

    def test_transverse_mode_acceleration(self, cube16):
        x, _, _ = mesh(cube16)
        zero = np.zeros_like(x)
        a = VectorSampleField3(cube16, np.stack([zero, np.cos(x), zero]))
        state = PotentialState(a, VectorSampleField3.zeros(cube16), c=2.0)
        acc = potential_acceleration(state, VectorSampleField3.zeros(cube16))
        assert np.max(np.abs(acc.values - (-4.0) * a.values)) <= 1e-11

    def test_current_drives_acceleration(self, cube16):
        state = PotentialState(
            VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16), c=3.0
        )
        j = VectorSampleField3(cube16, np.ones((3,) + cube16.shape))
        acc = potential_acceleration(state, j)
        assert np.allclose(acc.values, 3.0, atol=1e-12)

    def test_acceleration_equals_curl_curl_form(self, cube16, rng):
        a = smooth_vector(cube16, rng)
        state = PotentialState(a, VectorSampleField3.zeros(cube16), c=1.5)
        j = smooth_vector(cube16, rng)
        acc = potential_acceleration(state, j)
        alt = -(1.5**2) * curl(curl(a)).values + 1.5 * j.values
        assert np.max(np.abs(acc.values - alt)) <= 1e-11

    def test_verlet_dispersion(self, cube16):
        state = plane_wave_potential(cube16)
        dt = 0.4 * potential_dt_bound(cube16, state.c)
        stepped = potential_verlet_step(state, SourceSpec.vacuum(), 0.0, dt)
        ratio = float(
            np.vdot(state.a.values, stepped.a.values) / np.vdot(state.a.values, state.a.values)
        )
        # a-projection advances like a cos(Omega t) + (a_dot-part) sin; isolate via symmetric combo
        back = PotentialState(state.a, -1.0 * state.a_dot, state.c)
        stepped_back = potential_verlet_step(back, SourceSpec.vacuum(), 0.0, dt)
        ratio_sym = 0.5 * (
            ratio
            + float(
                np.vdot(state.a.values, stepped_back.a.values)
                / np.vdot(state.a.values, state.a.values)
            )
        )
        omega = (2.0 / dt) * np.arcsin(dt * state.c * 1.0 / 2)  # |k| = 1
        assert ratio_sym == pytest.approx(np.cos(omega * dt), abs=1e-12)

    def test_reversal(self, cube16, rng):
        state = PotentialState(smooth_vector(cube16, rng), smooth_vector(cube16, rng))
        dt = 0.3 * potential_dt_bound(cube16, state.c)
        forward = state
        for _ in range(10):
            forward = potential_verlet_step(forward, SourceSpec.vacuum(), 0.0, dt)
        back = PotentialState(forward.a, -1.0 * forward.a_dot, state.c)
        for _ in range(10):
            back = potential_verlet_step(back, SourceSpec.vacuum(), 0.0, dt)
        scale = max(max_norm(state.a), max_norm(state.a_dot))
        assert max_norm(back.a - state.a) <= 1e-12 * scale


class TestFieldMap:
    def test_zero_potential(self, cube16):
        state = PotentialState(VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16))
        fields = potential_to_fields(state)
        assert max_norm(fields.e) == 0.0 and max_norm(fields.b) == 0.0

    def test_plane_wave_fields(self, cube16):
        state = plane_wave_potential(cube16)
        fields = potential_to_fields(state)
        ref = plane_wave_state(cube16)
        assert max_norm(fields.e - ref.e) <= 1e-12
        assert max_norm(fields.b - ref.b) <= 1e-12

    def test_gauge_shift_leaves_fields(self, cube16, rng):
        state = PotentialState(smooth_vector(cube16, rng), smooth_vector(cube16, rng))
        alpha = smooth_scalar(cube16, rng)
        shifted = gauge_shift_potential(state, alpha)
        f0 = potential_to_fields(state)
        f1 = potential_to_fields(shifted)
        assert max_norm(f1.e - f0.e) == 0.0
        assert max_norm(f1.b - f0.b) <= 1e-12

    def test_gauge_mode_static_under_evolution(self, cube16, rng):
        state = plane_wave_potential(cube16)
        alpha = smooth_scalar(cube16, rng)
        shifted = gauge_shift_potential(state, alpha)
        dt = 0.2 * potential_dt_bound(cube16, state.c)
        src = SourceSpec.vacuum()
        _, snaps_a = run_potential_verlet(state, src, dt, 100, snapshot_stride=50)
        _, snaps_b = run_potential_verlet(shifted, src, dt, 100, snapshot_stride=50)
        for sa, sb in zip(snaps_a, snaps_b):
            fa, fb = potential_to_fields(sa), potential_to_fields(sb)
            assert max_norm(fb.e - fa.e) <= 1e-10
            assert max_norm(fb.b - fa.b) <= 1e-10

    def test_div_b_structural(self, cube16, rng):
        state = PotentialState(smooth_vector(cube16, rng), smooth_vector(cube16, rng))
        fields = potential_to_fields(state)
        assert max_norm(divergence(fields.b)) <= 1e-11


class TestPotentialConstraint:
    def test_vacuum_transverse_wave(self, cube16):
        state = plane_wave_potential(cube16)
        res = potential_constraint_residual(state, ScalarSampleField.zeros(cube16))
        assert res <= 1e-12

    def test_violation_constant_for_static_charge(self, cube16):
        x, y, _ = mesh(cube16)
        rho = ScalarSampleField(cube16, 0.2 * np.sin(x) * np.cos(y))
        state = plane_wave_potential(cube16)  # div a_dot = 0, so residual = c*max|rho|
        res0 = potential_constraint_residual(state, rho)
        src = SourceSpec("0.2*sin(x)*cos(y)", ("0", "0", "0"))
        dt = 0.3 * potential_dt_bound(cube16, state.c)
        _, snaps = run_potential_verlet(state, src, dt, 200, snapshot_stride=100)
        for s in snaps:
            res_t = potential_constraint_residual(s, rho)
            assert abs(res_t - res0) <= 1e-10 * res0

    def test_satisfied_constraint_persists(self, cube16):
        # transverse wave with zero charge: residual stays at roundoff
        state = plane_wave_potential(cube16)
        rho0 = ScalarSampleField.zeros(cube16)
        dt = 0.3 * potential_dt_bound(cube16, state.c)
        _, snaps = run_potential_verlet(state, SourceSpec.vacuum(), dt, 1000, snapshot_stride=250)
        scale = state.c * max_norm(state.a_dot) / cube16.spacings[0]
        for s in snaps:
            assert potential_constraint_residual(s, rho0) <= 1e-8 * scale

    def test_charged_initial_data_persists(self, cube16):
        # static charge: A_dot(0) = -cE(0) with a Coulomb part satisfies
        # div A_dot + c rho = 0; the evolution keeps it there
        from wavepot.reconstruction import curl_inverse

        x, y, _ = mesh(cube16)
        rho = ScalarSampleField(cube16, 0.25 * np.sin(x) * np.cos(y))
        wave = plane_wave_state(cube16)
        e0 = VectorSampleField3(cube16, coulomb_field_from_charge(rho).values + wave.e.values)
        a0 = curl_inverse(wave.b)
        state = PotentialState(a0, -1.0 * e0, 1.0)
        src = SourceSpec("0.25*sin(x)*cos(y)", ("0", "0", "0"))
        res0 = potential_constraint_residual(state, rho)
        scale = state.c * max_norm(state.a_dot) / cube16.spacings[0]
        assert res0 <= 1e-10 * scale
        dt = 0.3 * potential_dt_bound(cube16, state.c)
        _, snaps = run_potential_verlet(state, src, dt, 1000, snapshot_stride=250)
        for s in snaps:
            assert potential_constraint_residual(s, rho) <= 1e-8 * scale


class TestHamiltonians:
    def test_zero_state(self, cube16):
        state = EMState(VectorSampleField3.zeros(cube16), VectorSampleField3.zeros(cube16))
        assert em_hamiltonians(state, VectorSampleField3.zeros(cube16)) == (0.0, 0.0)

    def test_circular_mode_canonical_value(self, cube16):
        # E = E0 (cos(kx) e_y + sin(kx) e_z) gives E . curl E = -k E0^2 pointwise
        x, _, _ = mesh(cube16)
        e0, b0, c = 0.7, 0.4, 1.3
        zero = np.zeros_like(x)
        e = VectorSampleField3(cube16, e0 * np.stack([zero, np.cos(x), np.sin(x)]))
        b = VectorSampleField3(cube16, b0 * np.stack([zero, np.cos(x), np.sin(x)]))
        state = EMState(e, b, c)
        vol_box = float(np.prod(cube16.lengths))
        expected_h = -0.5 * c * (e0**2 + b0**2) * vol_box
        h, h_prime = em_hamiltonians(state, VectorSampleField3.zeros(cube16))
        assert h == pytest.approx(expected_h, rel=1e-12)
        assert h_prime == pytest.approx(0.5 * c * (e0**2 + b0**2) * vol_box, rel=1e-12)

    def test_h_prime_conserved_over_period(self, cube16):
        state = plane_wave_state(cube16)
        src = SourceSpec.vacuum()
        j0 = src.current_at(0.0, cube16)
        period = 2 * np.pi
        steps = 600
        _, snaps = run_rk4(state, src, period / steps, steps, snapshot_stride=60)
        h0 = em_hamiltonians(state, j0)[1]
        worst = max(abs(em_hamiltonians(s, j0)[1] - h0) / h0 for s in snaps)
        assert worst <= 1e-9

    def test_canonical_h_conserved_with_static_current(self, cube16):
        x, y, _ = mesh(cube16)
        zero = np.zeros_like(x)
        e = VectorSampleField3(cube16, 0.7 * np.stack([zero, np.cos(x), np.sin(x)]))
        b = VectorSampleField3(cube16, 0.4 * np.stack([zero, np.cos(x), np.sin(x)]))
        state = EMState(e, b)
        src = SourceSpec("0", ("0.2*cos(y)", "0", "0.1*sin(y)"))
        src.validate_continuity(cube16, 0.01, 1.0)
        j0 = src.current_at(0.0, cube16)
        h0 = em_hamiltonians(state, j0)[0]
        dt = 0.1 * rk4_dt_bound(cube16, state.c)
        _, snaps = run_rk4(state, src, dt, 500, snapshot_stride=100)
        worst = max(abs(em_hamiltonians(s, j0)[0] - h0) / abs(h0) for s in snaps)
        assert worst <= 1e-10


class TestContinuityGate:
    def test_consistent_sources_accepted(self, cube16):
        # rho = sin(x) cos(t), J_x = -cos(x) sin(t): d rho/dt + div J = 0
        src = SourceSpec("sin(x)*cos(t)", ("0-cos(x)*sin(t)", "0", "0"))
        src.validate_continuity(cube16, 1e-2, 1.0)

    def test_violating_sources_rejected(self, cube16):
        src = SourceSpec("sin(x)*cos(t)", ("0", "0", "0"))
        with pytest.raises(ContinuityError, match="continuity"):
            src.validate_continuity(cube16, 1e-2, 1.0)

    def test_static_divergence_free_accepted(self, cube16):
        src = SourceSpec("0.5*sin(x)", ("cos(y)", "0", "sin(x)"))
        src.validate_continuity(cube16, 1e-2, 1.0)

    def test_static_divergent_current_rejected(self, cube16):
        src = SourceSpec("0", ("sin(x)", "0", "0"))
        with pytest.raises(ContinuityError):
            src.validate_continuity(cube16, 1e-2, 1.0)


class TestEquivalence:
    def test_rk4_and_potential_verlet_agree(self, cube16):
        c = 1.0
        field_state = plane_wave_state(cube16, c)
        pot_state = plane_wave_potential(cube16, c)
        src = SourceSpec.vacuum()
        period = 2 * np.pi
        _, f_snaps = run_rk4(field_state, src, period / 600, 600, snapshot_stride=60)
        _, p_snaps = run_potential_verlet(pot_state, src, period / 6000, 6000, snapshot_stride=600)
        ref = l2_norm(field_state.e)
        worst = 0.0
        for fs, ps in zip(f_snaps, p_snaps):
            mapped = potential_to_fields(ps)
            worst = max(
                worst,
                l2_norm(mapped.e - fs.e) / ref,
                l2_norm(mapped.b - fs.b) / ref,
            )
        assert worst <= 1e-6
