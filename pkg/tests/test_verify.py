import math
from dataclasses import replace

import pytest

from trapcool.phase import ControlBounds, PhaseState, propagate_constant
from trapcool.synthesis import Schedule, build_schedule, chain_segments, synthesize
from trapcool.verify import (
    TrajectorySample,
    check_schedule,
    check_solution,
    convergence_slope,
    ermakov_residual,
    integrate_schedule,
    rk4_terminal_errors,
    segment_drifts,
    structure_ok,
    switching_ratio_deviation,
)

B18 = ControlBounds(1, 8)
B150 = ControlBounds(1, 50)
B11 = ControlBounds(1, 1)


class TestIntegrateSchedule:
    def test_zero_turn_endpoint(self):
        sched = build_schedule(B18, 2.0, 0)
        samples = integrate_schedule(sched, 1e-4)
        end = samples[-1]
        assert end.t == sched.total_time
        assert end.state == pytest.approx((2.0, 0.0), abs=1e-6)
        assert end.state == pytest.approx(tuple(sched.final_state), abs=1e-6)

    def test_equilibrium(self):
        sched = chain_segments(B11, 2.0, [(B11.Y, 1.3)])
        samples = integrate_schedule(sched, 1e-3)
        assert all(s.state == (1.0, 0.0) for s in samples)

    def test_empty_schedule(self):
        sched = Schedule(B18, 2.0, ())
        assert integrate_schedule(sched, 1e-3) == [TrajectorySample(0.0, PhaseState(1.0, 0.0), 1.0, 0)]

    def test_samples_increase_and_tag_controls(self):
        sched = build_schedule(B18, 9.0, 1)
        samples = integrate_schedule(sched, 1e-3)
        ts = [s.t for s in samples]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        for smp in samples[1:]:
            assert smp.u == sched.segments[smp.segment].control.value
        # switching instants are sample times
        for t in sched.switching_times:
            assert min(abs(x - t) for x in ts) < 1e-12

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            integrate_schedule(build_schedule(B18, 2.0, 0), 0.0)


class TestErmakovResidual:
    @pytest.mark.parametrize("gamma", [2.0, 9.0])
    def test_small_on_valid_schedules(self, gamma):
        samples = integrate_schedule(synthesize(B18, gamma).schedule, 1e-4)
        assert ermakov_residual(samples) < 1e-8

    def test_equilibrium_is_exactly_zero(self):
        samples = integrate_schedule(chain_segments(B11, 2.0, [(B11.Y, 0.5)]), 1e-3)
        assert ermakov_residual(samples) == 0.0

    def test_detects_corrupted_sample(self):
        samples = integrate_schedule(build_schedule(B18, 2.0, 0), 1e-4)
        k = len(samples) // 3
        smp = samples[k]
        samples[k] = smp._replace(state=PhaseState(smp.state.x1, smp.state.x2 + 1e-3))
        assert ermakov_residual(samples) > 1e-3

    def test_physical_frequency_scaling(self):
        # w0 only rescales time; the reported residual is in rescaled units
        samples = integrate_schedule(build_schedule(B18, 2.0, 0), 1e-4)
        assert ermakov_residual(samples, omega0=1.0) < 1e-8
        with pytest.raises(ValueError):
            ermakov_residual(samples, omega0=0.0)


class TestDrift:
    def test_per_segment(self):
        samples = integrate_schedule(build_schedule(B18, 9.0, 1), 1e-4)
        drifts = segment_drifts(samples)
        assert len(drifts) == 3
        assert max(drifts) < 1e-8

    def test_fourth_order_decay(self):
        sched = build_schedule(B150, 14.0, 2)
        a = max(segment_drifts(integrate_schedule(sched, 2e-4)))
        b = max(segment_drifts(integrate_schedule(sched, 1e-4)))
        assert 12 < a / b < 20


class TestCheckSolution:
    def test_u2_8_passes(self):
        rep = check_solution(synthesize(B18, 2.0))
        assert rep.passed
        assert rep.endpoint_check and rep.drift_check and rep.ratio_check and rep.structure_check
        assert rep.switching_count == 1

    def test_two_turns_count_even(self):
        sol = synthesize(B150, 14.0)
        rep = check_solution(sol)
        assert sol.n_turns == 2
        assert rep.switching_count == 4

    def test_two_turns_pass_at_fine_step(self):
        # the inner loop reaches x1 ~ 0.1, where dt = 1e-4 is too coarse for the drift bound
        rep = check_solution(synthesize(B150, 14.0), 5e-6)
        assert rep.passed, rep.to_dict()

    def test_spurious_segment_breaks_structure(self):
        sched = synthesize(B18, 2.0).schedule
        bad = chain_segments(B18, 2.0, [(s.control, s.duration) for s in sched.segments] + [(B18.X, 0.01)])
        rep = check_schedule(bad, 1e-3)
        assert not rep.structure_check
        assert not rep.passed

    def test_coarse_step_reports_larger_error(self):
        sol = synthesize(B18, 2.0)
        fine = check_solution(sol, 1e-4)
        coarse = check_solution(sol, 1e-1)
        assert max(coarse.endpoint_error) > max(fine.endpoint_error)
        d = coarse.to_dict()
        assert set(d) >= {"endpoint_error", "max_integral_drift", "max_ermakov_residual", "ratio_check",
                          "structure_check", "passed"}

    def test_report_fields_nonnegative(self):
        d = check_solution(synthesize(B18, 9.0), 1e-3).to_dict()
        for key in ("max_integral_drift", "max_ermakov_residual", "ratio_deviation"):
            assert d[key] >= 0
        assert min(d["endpoint_error"]) >= 0


class TestStructure:
    @pytest.mark.parametrize("bounds,gamma,n", [(B18, 2.0, 0), (B18, 9.0, 1), (B150, 14.0, 2), (B150, 14.0, 3)])
    def test_built_schedules(self, bounds, gamma, n):
        assert structure_ok(build_schedule(bounds, gamma, n))

    @pytest.mark.parametrize("kinds", ["XYX", "YX", "Y", "XYXY", "YY", ""])
    def test_rejected_patterns(self, kinds):
        sched = chain_segments(B18, 2.0, [(B18.control(k), 0.0) for k in kinds])
        assert not structure_ok(sched)

    def test_wrong_half_plane(self):
        sched = build_schedule(B18, 2.0, 0)
        x, y = sched.segments
        flipped = PhaseState(x.end.x1, -x.end.x2)
        bad = Schedule(B18, 2.0, (replace(x, end=flipped), replace(y, start=flipped)))
        assert not structure_ok(bad)


class TestRatioDeviation:
    def test_alternating(self):
        r = 2.0
        pts = [(1.0, -r), (1.5, r * 1.5), (0.7, -r * 0.7)]
        assert switching_ratio_deviation(pts, 4.0) == pytest.approx(0.0, abs=1e-15)
        assert switching_ratio_deviation(pts) == pytest.approx(0.0, abs=1e-15)

    def test_mirror_points(self):
        assert switching_ratio_deviation([(1.0, -2.0), (1.0, 2.0)], 4.0) == math.inf

    def test_too_few(self):
        assert switching_ratio_deviation([(1.0, 3.0)]) == 0.0


class TestConvergence:
    def test_rk4_fourth_order(self):
        sched = synthesize(B150, 2.0).schedule
        dts = [1e-2, 1e-3, 1e-4]
        errs = rk4_terminal_errors(sched, dts)
        assert errs[-1] < 1e-6
        assert abs(convergence_slope(dts, errs) - 4) <= 0.3

    def test_endpoint_matches_closed_form(self):
        sched = build_schedule(B150, 14.0, 2)
        end = integrate_schedule(sched, 1e-4)[-1].state
        exact = propagate_constant(sched.segments[-1].start, 50.0, sched.segments[-1].duration)
        assert end == pytest.approx(tuple(exact), abs=1e-6)
