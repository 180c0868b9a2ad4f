import math

import pytest

from oracles import grid_threshold

from staleness_lab.charpoly import DelayModel, pmf_uniform
from staleness_lab.errors import NoThreshold
from staleness_lab.stability import (
    METHOD_BISECTION,
    ThresholdCurve,
    analytic_threshold_plain,
    dampened_lr,
    effective_lr,
    numeric_threshold,
    scale_lr,
    taylor_inverse_threshold,
    threshold_curve,
)


class TestClosedForm:
    def test_tau_zero_is_two_over_a(self):
        assert analytic_threshold_plain(1.0, 0) == 2.0
        assert analytic_threshold_plain(4.0, 0) == 0.5

    def test_tau_eight_frozen(self):
        assert analytic_threshold_plain(1.0, 8) == 0.18453671892660398

    def test_scales_inversely_with_a(self):
        for tau in (1, 7, 33):
            assert analytic_threshold_plain(2.5, tau) == pytest.approx(
                analytic_threshold_plain(1.0, tau) / 2.5, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            analytic_threshold_plain(0.0, 4)
        with pytest.raises(ValueError):
            analytic_threshold_plain(1.0, -1)


class TestTaylorInverse:
    def test_frozen_values(self):
        assert taylor_inverse_threshold(1) == 3.0 / math.pi
        assert taylor_inverse_threshold(64) == 41.061975317709

    def test_error_small_for_all_tau(self):
        worst = max(
            abs(1.0 / analytic_threshold_plain(1.0, tau) - taylor_inverse_threshold(tau))
            for tau in range(1, 65)
        )
        assert worst < 0.05

    def test_rejects_tau_zero(self):
        with pytest.raises(ValueError):
            taylor_inverse_threshold(0)


class TestLrHelpers:
    def test_scale_lr_frozen(self):
        assert scale_lr(0.8, 8) == 0.07391982714328925

    def test_scale_lr_is_threshold_ratio_linearized(self):
        # pi / (4 (tau + 0.5)) approximates sin(pi / (4 tau + 2)) / sin(pi/2)
        for tau in (4, 16, 64):
            exact_ratio = analytic_threshold_plain(1.0, tau) / analytic_threshold_plain(1.0, 0)
            assert scale_lr(1.0, tau) == pytest.approx(exact_ratio, rel=0.05)

    def test_effective_dampened_inverse(self):
        for m in (0.0, 0.5, 0.9):
            assert dampened_lr(effective_lr(0.3, m), m) == pytest.approx(0.3, rel=1e-15)

    def test_effective_lr_grows_with_m(self):
        assert effective_lr(0.1, 0.9) == pytest.approx(1.0)


class TestNumericThreshold:
    def test_matches_closed_form_within_tolerance(self):
        for tau in (0, 1, 3, 8, 17, 33):
            r = numeric_threshold("plain", 1.0, DelayModel.constant(tau))
            assert abs(r.eta_star - analytic_threshold_plain(1.0, tau)) <= 1e-6

    def test_tau_eight_frozen_bisection_value(self):
        r = numeric_threshold("plain", 1.0, DelayModel.constant(8))
        assert r.eta_star == 0.18453671923828124
        assert r.method == METHOD_BISECTION

    def test_result_metadata(self):
        r = numeric_threshold("momentum", 1.0, DelayModel.constant(4), m=0.5)
        lo, hi = r.bracket
        assert lo < r.eta_star < hi
        assert hi - lo <= r.tolerance * r.eta_star
        assert (r.variant, r.m, r.a) == ("momentum", 0.5, 1.0)
        assert r.max_root_residual <= 1e-9

    def test_accepts_bare_int_delay(self):
        assert numeric_threshold("plain", 1.0, 8).eta_star == \
            numeric_threshold("plain", 1.0, DelayModel.constant(8)).eta_star

    def test_threshold_scales_exactly_with_a(self):
        r1 = numeric_threshold("plain", 1.0, DelayModel.constant(8))
        r2 = numeric_threshold("plain", 2.0, DelayModel.constant(8))
        assert r2.eta_star == r1.eta_star / 2.0

    def test_momentum_frozen_triple(self):
        got = [numeric_threshold("momentum", 1.0, DelayModel.constant(16), m=m).eta_star
               for m in (0.0, 0.5, 0.9)]
        assert got == [0.09516383178710938, 0.0904911359863281, 0.07488019702148435]
        assert got[0] > got[1] > got[2]

    def test_shifted_frozen_triple(self):
        got = [numeric_threshold("shifted", 1.0, DelayModel.constant(16), m=m).eta_star
               for m in (0.0, 0.5, 0.9)]
        assert got == [0.09516383178710938, 0.11197219287109375, 0.12261014306640622]
        assert got[0] < got[1] < got[2]

    def test_agrees_with_coarse_grid_oracle(self):
        # independent coarse sweep over companion-matrix magnitudes
        from oracles import companion_max_magnitude
        from staleness_lab.charpoly import OptimizerSpec, char_poly

        for variant, m in (("plain", 0.0), ("momentum", 0.6), ("shifted", 0.6)):
            dm = DelayModel.constant(4)

            def stable(eta):
                p = char_poly(OptimizerSpec(variant, eta, m), 1.0, dm)
                return companion_max_magnitude(p.coeffs) < 1.0

            steps = 4000
            last_stable = grid_threshold(stable, 1e-3, 1.0, steps=steps)
            cell = (1.0 - 1e-3) / (steps - 1)
            got = numeric_threshold(variant, 1.0, dm, m=m).eta_star
            assert last_stable <= got <= last_stable + cell

    def test_stochastic_uniform_frozen(self):
        r = numeric_threshold("plain", 1.0, pmf_uniform(1, 9))
        assert r.eta_star == 0.3799540458984375

    def test_point_mass_pmf_equals_constant(self):
        pm = DelayModel((6,), (1.0,))
        assert numeric_threshold("plain", 1.0, pm).eta_star == \
            numeric_threshold("plain", 1.0, DelayModel.constant(6)).eta_star

    def test_stochastic_threshold_above_worst_case(self):
        # spreading mass below the max delay can only help
        mixed = numeric_threshold("plain", 1.0, pmf_uniform(1, 9)).eta_star
        worst = analytic_threshold_plain(1.0, 9)
        assert mixed > worst

    def test_no_threshold_above_cap(self):
        # shifted at tau=0 has its boundary at eta*a = 2(1+m)/(1-m) = 38
        with pytest.raises(NoThreshold):
            numeric_threshold("shifted", 1.0, DelayModel.constant(0), m=0.9)

    def test_rejects_momentum_with_random_delay(self):
        with pytest.raises(ValueError):
            numeric_threshold("momentum", 1.0, pmf_uniform(1, 4), m=0.5)


class TestThresholdCurve:
    def test_rows_and_fit(self):
        curve = threshold_curve("plain", 1.0, [4, 8, 16, 32])
        assert [r.x for r in curve.rows] == [4, 8, 16, 32]
        for r in curve.rows:
            assert r.inv_a_eta == pytest.approx(1.0 / r.result.eta_star)
        assert curve.slope == pytest.approx(2.0 / math.pi, rel=0.01)
        assert curve.r_squared > 0.999

    def test_pmf_rows_use_expected_delay(self):
        curve = threshold_curve("plain", 1.0, [pmf_uniform(1, 3), pmf_uniform(1, 9)])
        assert [r.x for r in curve.rows] == [2.0, 5.0]

    def test_failed_row_is_recorded_not_raised(self):
        curve = threshold_curve("shifted", 1.0, [0, 4, 8], m=0.9)
        assert curve.rows[0].result is None
        assert "cap" in curve.rows[0].error or "stable" in curve.rows[0].error
        assert curve.rows[1].result is not None
        assert math.isfinite(curve.slope)

    def test_csv_shape(self, tmp_path):
        curve = threshold_curve("plain", 1.0, [2, 4])
        text = curve.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "tau_or_Etau,eta_star,inv_a_eta,method,max_root_residual"
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "2.0"
        assert float(first[1]) == curve.rows[0].result.eta_star
        path = tmp_path / "curve.csv"
        curve.write_csv(path)
        assert path.read_text() == text

    def test_csv_failed_row_cell_layout(self):
        curve = threshold_curve("shifted", 1.0, [0, 4], m=0.9)
        line = curve.to_csv().strip().split("\n")[1]
        assert line.startswith("0.0,")
        assert ",failed," in line

    def test_single_row_has_nan_fit(self):
        curve = threshold_curve("plain", 1.0, [4])
        assert math.isnan(curve.slope) and math.isnan(curve.r_squared)
