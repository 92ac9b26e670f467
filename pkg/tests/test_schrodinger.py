import math

import numpy as np
import pytest
from scipy import integrate

from trapcool.phase import ControlBounds
from trapcool.synthesis import Schedule, chain_segments, synthesize
from trapcool.schrodinger import (
    GridSpanError,
    SpatialGrid,
    WaveState,
    eigenstate,
    exact_state,
    fidelity,
    ground_state,
    l2_distance,
    scaling_solution,
    split_step_propagate,
)

B18 = ControlBounds(1, 8)
B11 = ControlBounds(1, 1)
GAMMA = math.sqrt(10)


@pytest.fixture(scope="module")
def grid():
    return SpatialGrid.for_expansion(GAMMA)


@pytest.fixture(scope="module")
def cooling_schedule():
    return synthesize(B18, GAMMA).schedule


class TestGrid:
    def test_geometry(self):
        g = SpatialGrid.for_expansion(2.0, 1024)
        assert (g.x_min, g.x_max) == (-16.0, 16.0)
        assert g.dx == 32 / 1024
        assert g.x[0] == -16.0 and g.x[-1] == pytest.approx(16 - g.dx)
        assert g.x[512] == 0.0

    @pytest.mark.parametrize("n,lo,hi", [(1000, -1, 1), (1, -1, 1), (64, -1, 2), (64, 1, -1)])
    def test_rejects(self, n, lo, hi):
        with pytest.raises(ValueError):
            SpatialGrid(n, lo, hi)


class TestGroundState:
    def test_norm(self, grid):
        assert ground_state(1.0, grid).norm() == pytest.approx(1.0, abs=1e-10)

    def test_second_moment(self, grid):
        assert ground_state(1.0, grid).moment(2) == pytest.approx(0.5, abs=1e-8)

    def test_second_moment_expanded(self):
        g = SpatialGrid.for_expansion(2.0)
        assert ground_state(0.25, g).moment(2) == pytest.approx(2.0, abs=1e-8)

    def test_narrow_grid_rejected(self):
        with pytest.raises(GridSpanError):
            ground_state(1.0, SpatialGrid(256, -4, 4))

    def test_bad_arguments(self, grid):
        with pytest.raises(ValueError):
            ground_state(0.0, grid)
        with pytest.raises(ValueError):
            eigenstate(-1, 1.0, grid)

    def test_eigenstates_orthonormal(self, grid):
        states = [eigenstate(n, 0.3, grid) for n in range(5)]
        for i, a in enumerate(states):
            for j, b in enumerate(states):
                ov = abs(np.sum(np.conj(a.amplitudes) * b.amplitudes) * grid.dx)
                assert ov == pytest.approx(1.0 if i == j else 0.0, abs=1e-10)

    def test_second_excited_moment(self, grid):
        # <x^2> = (n + 1/2) / omega
        assert eigenstate(2, 0.5, grid).moment(2) == pytest.approx(5.0, abs=1e-8)


class TestFidelity:
    def test_self(self, grid):
        psi = ground_state(1.0, grid)
        assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_overlap(self):
        g = SpatialGrid.for_expansion(2.0)
        got = fidelity(ground_state(1.0, g), ground_state(0.25, g))
        assert got == pytest.approx(0.8, abs=1e-10)
        # independent quadrature of the continuum overlap
        w1, w2 = 1.0, 0.25
        ov, _ = integrate.quad(
            lambda x: (w1 / math.pi) ** 0.25 * (w2 / math.pi) ** 0.25 * math.exp(-(w1 + w2) * x * x / 2),
            -math.inf, math.inf)
        assert got == pytest.approx(ov**2, abs=1e-10)

    def test_parity_orthogonal(self, grid):
        assert fidelity(eigenstate(0, 1.0, grid), eigenstate(1, 1.0, grid)) == pytest.approx(0.0, abs=1e-10)

    def test_phase_insensitive(self, grid):
        psi = ground_state(1.0, grid)
        rotated = WaveState(grid, psi.amplitudes * np.exp(1.234j))
        assert fidelity(psi, rotated) == pytest.approx(1.0, abs=1e-12)
        assert l2_distance(psi, rotated) > 0.5

    def test_grid_mismatch(self, grid):
        other = SpatialGrid.for_expansion(2.0)
        with pytest.raises(ValueError):
            fidelity(ground_state(1.0, grid), ground_state(1.0, other))
        with pytest.raises(ValueError):
            l2_distance(ground_state(1.0, grid), ground_state(1.0, other))


class TestScalingSolution:
    def test_initial(self, grid):
        assert fidelity(scaling_solution(GAMMA, 1.0, 0.0, grid), ground_state(1.0, grid)) == pytest.approx(1, abs=1e-12)

    def test_terminal(self, grid):
        got = fidelity(scaling_solution(GAMMA, GAMMA, 0.0, grid), ground_state(1 / GAMMA**2, grid))
        assert got == pytest.approx(1, abs=1e-12)

    def test_rejects(self, grid):
        with pytest.raises(ValueError):
            scaling_solution(GAMMA, 0.0, 0.0, grid)
        with pytest.raises(GridSpanError):
            scaling_solution(10.0, 1.0, 0.0, SpatialGrid(512, -8, 8))


class TestPropagation:
    def test_empty_schedule(self, grid):
        psi = ground_state(1.0, grid)
        out = split_step_propagate(psi, Schedule(B18, GAMMA, ()), 1e-3)
        assert np.array_equal(out.amplitudes, psi.amplitudes)

    def test_stationary(self, grid):
        psi = ground_state(1.0, grid)
        out = split_step_propagate(psi, chain_segments(B11, 2.0, [(B11.Y, 1.0)]), 1e-2)
        assert fidelity(out, psi) == pytest.approx(1.0, abs=1e-8)
        assert out.t == pytest.approx(1.0)

    def test_frictionless_cooling(self, grid, cooling_schedule):
        norms = []
        psi = ground_state(1.0, grid)
        out = split_step_propagate(psi, cooling_schedule, 1e-3,
                                   on_step=lambda t, a: norms.append(np.sum(np.abs(a) ** 2) * grid.dx))
        assert fidelity(out, ground_state(1 / GAMMA**2, grid)) >= 0.999
        assert fidelity(out, scaling_solution(GAMMA, GAMMA, 0.0, grid)) >= 0.9999
        assert max(abs(n - 1) for n in norms) < 1e-8
        assert out.moment(2) == pytest.approx(GAMMA**2 / 2, rel=1e-4)

    def test_matches_exact_state_with_phase(self, grid, cooling_schedule):
        out = split_step_propagate(ground_state(1.0, grid), cooling_schedule, 1e-3)
        assert l2_distance(out, exact_state(cooling_schedule, grid)) < 1e-4

    def test_mid_trajectory(self, grid, cooling_schedule):
        x, y = cooling_schedule.segments
        t_mid = x.duration + 0.4 * y.duration
        partial = chain_segments(B18, GAMMA, [(x.control, x.duration), (y.control, 0.4 * y.duration)])
        ref = exact_state(cooling_schedule, grid, t_mid)
        coarse = split_step_propagate(ground_state(1.0, grid), partial, 1e-3)
        fine = split_step_propagate(ground_state(1.0, grid), partial, 5e-4)
        assert fidelity(coarse, ref) >= 0.9999
        assert fidelity(fine, ref) >= 0.9999
        assert l2_distance(fine, ref) < l2_distance(coarse, ref)

    def test_excited_population(self, grid, cooling_schedule):
        out = split_step_propagate(eigenstate(2, 1.0, grid), cooling_schedule, 1e-3)
        assert fidelity(out, eigenstate(2, 1 / GAMMA**2, grid)) >= 0.999

    def test_one_turn_schedule(self):
        sol = synthesize(B18, 9.0)
        assert sol.n_turns == 1
        g = SpatialGrid.for_expansion(9.0)
        out = split_step_propagate(ground_state(1.0, g), sol.schedule, 1e-4)
        assert fidelity(out, scaling_solution(9.0, 9.0, 0.0, g)) >= 1 - 1e-4

    def test_strang_second_order(self, grid, cooling_schedule):
        ref = exact_state(cooling_schedule, grid)
        dts = [1e-2, 1e-3, 1e-4]
        errs = [l2_distance(split_step_propagate(ground_state(1.0, grid), cooling_schedule, dt), ref) for dt in dts]
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert abs(slope - 2) <= 0.3

    def test_leak_detected(self, cooling_schedule):
        g = SpatialGrid(1024, -8.0, 8.0)
        with pytest.raises(GridSpanError):
            split_step_propagate(ground_state(1.0, g), cooling_schedule, 1e-3)

    def test_rejects_bad_step(self, grid, cooling_schedule):
        with pytest.raises(ValueError):
            split_step_propagate(ground_state(1.0, grid), cooling_schedule, 0.0)
