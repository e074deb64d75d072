import math

import numpy as np
import pytest

from paraconcave.concavity import (
    ConcavityQuery,
    ConcavityReport,
    Verdict,
    certification_tolerance,
    check_parabolic_concavity,
    check_spatial_concavity,
    estimate_max_exponent,
    evaluate_triples,
    transformed_defects,
)
from paraconcave.concavity.sampling import draw_slice_pairs, draw_triples
from paraconcave.domain import ConvexDomain, build_grid
from paraconcave.errors import (
    BracketError,
    EmptySampleError,
    ExponentDomainError,
    InterpolationError,
    NegativeInputError,
    ParaconcaveError,
    ToleranceError,
)
from paraconcave.fields import SpaceTimeField
from paraconcave.solver import solve_parabolic
from paraconcave.sources import SourceSpec

EARLY_DT = 1e-4


@pytest.fixture(scope="module")
def early_time_weighted(unit_interval):
    return solve_parabolic(unit_interval, SourceSpec.time_weighted(0.25), h=1 / 128, dt=EARLY_DT, T=0.25)


def constant_field(value=1.0):
    grid = build_grid(ConvexDomain.interval(0.0, 1.0), 1 / 16)
    values = np.full((3,) + grid.lattice_shape, value)
    values[0] = 0.0
    return SpaceTimeField(grid, np.array([0.0, 0.5, 1.0]), values)


class TestParabolicCheck:

    def test_torch_is_half_concave(self, early_torch):
        report = check_parabolic_concavity(early_torch, ConcavityQuery(alpha=0.5, p=0.5), t_min=20 * EARLY_DT)
        assert report.verdict == Verdict.PASS
        assert report.samples_tested > 4096
        assert report.worst_defect <= report.tolerance

    def test_torch_is_not_more_concave(self, early_torch):
        report = check_parabolic_concavity(early_torch, ConcavityQuery(alpha=0.5, p=0.8), t_min=20 * EARLY_DT)
        assert report.verdict == Verdict.FAIL
        assert report.defect_ratio > 1.0
        assert report.worst_triple is not None

    def test_minimum_mean_with_linear_time(self, torch_field):
        report = check_parabolic_concavity(torch_field, ConcavityQuery(alpha=1.0, p=-math.inf), t_min=0.02)
        assert report.passed

    def test_time_weighted_source_above_threshold_fails(self, early_time_weighted):
        # largest admissible exponent for t^(1/4) is 1 / (2 (1 + 1/4)) = 0.4
        report = check_parabolic_concavity(early_time_weighted, ConcavityQuery(alpha=0.5, p=0.6),
                                           t_min=20 * EARLY_DT)
        assert not report.passed

    def test_same_seed_same_report(self, torch_field):
        query = ConcavityQuery(alpha=0.5, p=0.5, n_samples=1024, seed=7)
        first = check_parabolic_concavity(torch_field, query, t_min=0.02)
        second = check_parabolic_concavity(torch_field, query, t_min=0.02)
        assert first.to_dict() == second.to_dict()

    def test_threaded_batches_match_serial(self, torch_field):
        serial = check_parabolic_concavity(torch_field, ConcavityQuery(n_samples=20000, seed=3), t_min=0.02)
        threaded = check_parabolic_concavity(torch_field, ConcavityQuery(n_samples=20000, seed=3, workers=4),
                                             t_min=0.02)
        assert threaded.worst_defect == serial.worst_defect
        assert threaded.samples_tested == serial.samples_tested

    def test_t_min_below_two_steps(self, torch_field):
        with pytest.raises(InterpolationError):
            check_parabolic_concavity(torch_field, ConcavityQuery(), t_min=torch_field.dt)

    def test_empty_time_window(self, torch_field):
        with pytest.raises(EmptySampleError):
            check_parabolic_concavity(torch_field, ConcavityQuery(), t_min=torch_field.T)

    def test_invalid_alpha(self):
        with pytest.raises(ExponentDomainError):
            ConcavityQuery(alpha=0.0)

    @pytest.mark.parametrize("kwargs", [{"tolerance": -1.0}, {"tolerance": 0.0}, {"c_tol": 0.0}])
    def test_nonpositive_tolerance(self, kwargs):
        with pytest.raises(ToleranceError):
            ConcavityQuery(**kwargs)
        with pytest.raises(ParaconcaveError):
            ConcavityQuery(**kwargs)

    def test_negative_field(self, torch_field):
        negative = torch_field.with_values(-torch_field.values)
        with pytest.raises(NegativeInputError):
            check_parabolic_concavity(negative, ConcavityQuery(), t_min=0.02)

    def test_tolerance_formula(self, torch_field):
        h, dt = torch_field.grid.h, torch_field.level_spacing
        expected = 5.0 * (h ** 2 + dt ** 1.0) * torch_field.max_value
        assert certification_tolerance(torch_field, 0.5) == pytest.approx(expected)
        expected = 5.0 * (h ** 2 + dt ** 0.5) * torch_field.max_value
        assert certification_tolerance(torch_field, 0.25) == pytest.approx(expected)


class TestSampledDefects:

    def test_defects_are_monotone_in_p(self, torch_field):
        sample = draw_triples(torch_field.grid, 0.02 ** 0.5, torch_field.T ** 0.5, 2048, seed=1)
        values = evaluate_triples(torch_field, sample, 0.5)
        worst = [float(np.max(values.defects(p))) for p in (-math.inf, -1.0, 0.0, 0.25, 0.5, 1.0, math.inf)]
        assert all(b >= a - 1e-15 for a, b in zip(worst, worst[1:]))

    def test_transformed_defects_share_sign(self, early_torch):
        sample = draw_triples(early_torch.grid, 0.002 ** 0.5, early_torch.T ** 0.5, 2048, seed=2)
        for p in (0.5, 0.8):
            plain = evaluate_triples(early_torch, sample, 0.5).defects(p)
            transformed = transformed_defects(early_torch, sample, 0.5, p)
            clear = np.abs(plain) > 1e-10
            np.testing.assert_array_equal(np.sign(plain[clear]), np.sign(transformed[clear]))

    def test_transformed_defects_need_positive_p(self, torch_field):
        sample = draw_triples(torch_field.grid, 0.2, 1.0, 16)
        with pytest.raises(ExponentDomainError):
            transformed_defects(torch_field, sample, 0.5, 0.0)

    def test_sweep_adds_axis_pairs(self, torch_field):
        plain = draw_triples(torch_field.grid, 0.2, 1.0, 64, sweep=False)
        swept = draw_triples(torch_field.grid, 0.2, 1.0, 64)
        assert len(plain) == 64
        assert len(swept) > len(plain)
        assert swept.n_random == 64

    def test_samples_lie_inside(self):
        grid = build_grid(ConvexDomain.disk((0, 0), 1), 0.1)
        sample = draw_slice_pairs(grid, 0.5, 512, seed=4)
        assert np.all(np.linalg.norm(sample.x1, axis=1) < 1.0)
        assert np.all(np.linalg.norm(sample.x_mid, axis=1) < 1.0)
        assert np.all((sample.lam > 0.0) & (sample.lam < 1.0))


class TestSpatialCheck:

    def test_steady_torch_is_half_concave(self, steady_torch):
        u = steady_torch.as_space_time(1.0)
        assert check_spatial_concavity(u, 1.0, 0.5).passed
        assert check_spatial_concavity(u, 1.0, 1.0).passed

    def test_steady_torch_is_not_two_concave(self, steady_torch):
        u = steady_torch.as_space_time(1.0)
        report = check_spatial_concavity(u, 1.0, 2.0)
        assert not report.passed
        assert report.kind == "spatial"

    @pytest.mark.parametrize("p", [-math.inf, -2.0, 0.0, 1.0, 5.0, math.inf])
    def test_constant_slice_passes_for_all_p(self, p):
        assert check_spatial_concavity(constant_field(), 1.0, p).passed

    def test_time_outside_field(self, steady_torch):
        with pytest.raises(InterpolationError):
            check_spatial_concavity(steady_torch.as_space_time(1.0), 2.0, 0.5)


class TestMaxExponent:

    def test_lower_end_must_pass(self, early_torch):
        with pytest.raises(BracketError):
            estimate_max_exponent(early_torch, 0.5, 0.8, 0.9, n_samples=1024)

    def test_upper_end_must_fail(self, early_torch):
        with pytest.raises(BracketError):
            estimate_max_exponent(early_torch, 0.5, -1.0, 0.2, n_samples=1024)

    def test_empty_bracket(self, early_torch):
        with pytest.raises(BracketError):
            estimate_max_exponent(early_torch, 0.5, 0.6, 0.6)

    def test_estimate_inside_bracket(self, early_torch):
        estimate = estimate_max_exponent(early_torch, 0.5, 0.3, 0.8, tol_p=0.01, n_samples=2048)
        assert 0.3 < estimate < 0.8
        assert estimate == pytest.approx(0.5, abs=0.1)


class TestReport:

    def test_merge_keeps_worst(self):
        a = ConcavityReport(Verdict.PASS, 1e-5, None, 10, 1e-4)
        b = ConcavityReport(Verdict.FAIL, 2e-4, None, 20, 1e-4)
        merged = a.merge(b)
        assert merged.verdict == Verdict.FAIL
        assert merged.worst_defect == 2e-4
        assert merged.samples_tested == 30

    def test_to_dict_is_json_safe(self):
        report = ConcavityReport(Verdict.PASS, 0.0, None, 1, 1.0, p=-math.inf)
        data = report.to_dict()
        assert data["verdict"] == "pass"
        assert data["p"] == "-inf"
