"""부등식 및 항등식 검증 테스트"""

import json
import math
from types import SimpleNamespace

import pytest

from app.schemas.domain import Disk, Polygon, Rectangle
from app.schemas.report import CheckReport, Relation, Verdict
from app.services import inequalities
from app.services.errors import (
    InvalidInputError,
    NoConvergenceError,
    NonConvexDomainRefusedError,
    NotNestedError,
)
from app.services.inequalities import (
    UNIT_DISK,
    UNIT_SQUARE,
    check_a_p,
    check_ball_shooting,
    check_continuity_in_p,
    check_domain_monotonicity,
    check_energy_conservation,
    check_faber_krahn,
    check_gradient_bound,
    check_grid_radial_agreement,
    check_holder_comparison,
    check_inradius_ball_maximizes,
    check_laplacian_symmetry,
    check_lemma_identity,
    check_pfunction_bound,
    check_pfunction_slab,
    check_product_identity,
    check_radial_symmetry,
    check_rearrangement_energy,
    check_rearrangement_norms,
    check_scale_invariance,
    check_scaling_law,
    check_slab_eigen_limit,
    check_slab_superlinear_growth,
    check_slab_torsion_decay,
    check_uniqueness_consistency,
    probe_c_infinity,
    run_suite,
    write_aggregate,
)

TRIANGLE = Polygon(vertices=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


class TestScalingAndComparison:
    """스케일 법칙, 단조성, 횔더 비교 테스트"""

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_scaling_law(self, p, coarse_settings):
        report = check_scaling_law(UNIT_DISK, p, 2.0, coarse_settings)
        assert report.passed
        assert report.extras["identical_masks"] is True
        assert report.rhs == pytest.approx(-4.0 / p)

    def test_scaling_law_needs_r(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_scaling_law(UNIT_DISK, 2.0, 1.0, coarse_settings)

    def test_domain_monotonicity(self, coarse_settings):
        report = check_domain_monotonicity(UNIT_DISK, Disk(radius=2.0), 2.0, coarse_settings)
        assert report.passed
        assert report.lhs > report.rhs

    def test_not_nested(self, coarse_settings):
        with pytest.raises(NotNestedError):
            check_domain_monotonicity(Disk(radius=2.0), UNIT_DISK, 2.0, coarse_settings)

    def test_holder_torsion_eigenvalue(self, coarse_settings):
        """(p, q) = (1, 2): λ < 4A/P 형태 함께 기록"""
        report = check_holder_comparison(UNIT_DISK, 1.0, 2.0, coarse_settings)
        assert report.passed
        assert report.extras["polya_szego_form"] is True

    def test_holder_needs_order(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_holder_comparison(UNIT_DISK, 2.0, 1.5, coarse_settings)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_faber_krahn_square(self, p, coarse_settings):
        """정사각형은 같은 넓이의 원판보다 3% 이상 큼"""
        report = check_faber_krahn(UNIT_SQUARE, p, coarse_settings)
        assert report.passed
        assert report.margin >= 0.03
        assert report.extras["equality_case"] is False

    def test_faber_krahn_disk_equality(self, coarse_settings):
        """원판 입력: 별도로 푼 같은 넓이 원판과 격자 허용오차 안에서 일치"""
        report = check_faber_krahn(UNIT_DISK, 2.0, coarse_settings)
        assert report.extras["disk_radius"] != 1.0
        assert abs(report.margin) <= report.tolerance
        assert report.extras["equality_case"] is True
        assert report.passed

    def test_inradius_ball(self, coarse_settings):
        report = check_inradius_ball_maximizes(Rectangle(half_widths=(2.0, 1.0)), 2.0, coarse_settings)
        assert report.passed
        assert report.extras["inradius"] == 1.0


class TestPFunction:
    """P-함수 상계 테스트"""

    def test_disk_torsion_bound(self, coarse_settings):
        report = check_pfunction_bound(UNIT_DISK, 1.0, coarse_settings)
        assert report.passed
        assert report.extras["u_max_le_r_squared"] is True

    def test_square_eigen_bound(self, coarse_settings):
        report = check_pfunction_bound(UNIT_SQUARE, 2.0, coarse_settings)
        assert report.passed
        assert report.extras["lambda_ge_hersch"] is True

    def test_polygon_refused(self, coarse_settings):
        with pytest.raises(NonConvexDomainRefusedError):
            check_pfunction_bound(TRIANGLE, 1.0, coarse_settings)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_slab_equality(self, p):
        assert check_pfunction_slab(p).passed

    def test_gradient_bound(self, coarse_settings):
        assert check_gradient_bound(UNIT_DISK, 1.0, coarse_settings).passed


class TestIdentities:
    """항등식 및 솔버 성질 테스트"""

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_lemma_identity(self, p, coarse_settings):
        assert check_lemma_identity(UNIT_DISK, p, coarse_settings).passed

    def test_product_identity(self, coarse_settings):
        report = check_product_identity(UNIT_SQUARE, 2.0, coarse_settings)
        assert report.passed
        assert report.rhs == 4.0

    def test_uniqueness(self, coarse_settings):
        report = check_uniqueness_consistency(UNIT_DISK, 1.5, (1, 2), coarse_settings)
        assert report.passed
        assert len(report.extras["values"]) == 2

    def test_uniqueness_needs_two_seeds(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_uniqueness_consistency(UNIT_DISK, 1.5, (1,), coarse_settings)

    def test_properties(self, coarse_settings):
        assert check_scale_invariance(UNIT_SQUARE, 1.5, settings=coarse_settings).passed
        assert check_laplacian_symmetry(UNIT_DISK, coarse_settings).passed
        assert check_rearrangement_norms(UNIT_SQUARE, coarse_settings).passed
        assert check_rearrangement_energy(UNIT_SQUARE, 2.0, coarse_settings).passed

    def test_a_p(self):
        for p in (1.0, 2.0, 10.0):
            assert check_a_p(p).passed


class TestRadialChecks:
    """반경 방향 및 에너지 보존 검증"""

    def test_ball_shooting(self):
        report = check_ball_shooting(2, 2.0)
        assert report.passed
        assert report.rhs == pytest.approx(5.783185962946784)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_grid_radial_agreement(self, p, coarse_settings):
        """원판 격자 해와 반경 방향 슈팅 값 2% 이내"""
        report = check_grid_radial_agreement(p, coarse_settings)
        assert report.passed
        assert report.inputs["h"] == pytest.approx(1.0 / 128.0)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_radial_symmetry(self, p, coarse_settings):
        """같은 반지름 위의 값 차이가 최댓값의 3% 이하 (h = 1/64)"""
        settings = coarse_settings.model_copy(update={"h": 1.0 / 64.0})
        report = check_radial_symmetry(p, settings)
        assert report.passed
        assert report.lhs <= 0.03
        assert report.extras["min_value"] > 0.0

    def test_ball_shooting_without_oracle(self):
        with pytest.raises(InvalidInputError):
            check_ball_shooting(3, 1.5)

    def test_slab_energy(self):
        report = check_energy_conservation("slab", p=1.5)
        assert report.claim_id == "energy_conservation_slab"
        assert report.passed

    def test_critical_energy(self):
        report = check_energy_conservation("ball_critical", n=3)
        assert report.passed
        assert report.extras["printed_variant_drift"] > 1e-6

    def test_unknown_system(self):
        with pytest.raises(InvalidInputError):
            check_energy_conservation("pendulum", p=2.0)


class TestSlabLimits:
    """긴 직사각형(슬랩 절단) 테스트"""

    def test_eigen_limit(self, coarse_settings):
        report = check_slab_eigen_limit(coarse_settings)
        assert report.passed
        assert report.extras["monotone"] is True
        assert report.extras["shooting_lambda"] == pytest.approx(math.pi**2 / 4.0, rel=1e-6)

    def test_torsion_decay(self, coarse_settings):
        report = check_slab_torsion_decay(coarse_settings)
        assert report.passed
        assert report.extras["monotone"] is True

    def test_superlinear_growth(self, coarse_settings):
        report = check_slab_superlinear_growth(3.0, coarse_settings, lengths=(2.0, 4.0))
        assert report.passed
        assert report.extras["trial_increasing"] is True
        assert report.lhs > report.rhs
        assert len(report.extras["profile_values"]) == 2

    def test_superlinear_needs_p_above_two(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_slab_superlinear_growth(2.0, coarse_settings)


class TestProbeAndContinuity:
    """C_∞ 탐색 및 p 연속성 테스트"""

    def test_c_infinity_tent(self, coarse_settings):
        report = probe_c_infinity((1.5, 2.0), (0.5, 0.2), coarse_settings)
        assert report.passed
        assert report.extras["failed"] == []
        assert report.extras["tent_exact"][0] == pytest.approx(3.0 * math.pi)
        assert report.extras["tent_decreasing"] is True

    def test_c_infinity_default_p_sweep(self, coarse_settings):
        """p = 2, 4, 8, 16 에서 V^{2/p} C_p 감소"""
        report = probe_c_infinity(settings=coarse_settings)
        assert report.inputs["p_list"] == [2.0, 4.0, 8.0, 16.0]
        trend = report.extras["normalized_disk"]
        assert all(a > b for a, b in zip(trend, trend[1:]))
        assert report.passed

    def test_c_infinity_fails_on_rising_trend(self, monkeypatch, coarse_settings):
        """정규화 값이 증가하면 판정 실패"""
        monkeypatch.setattr(
            inequalities, "_solve", lambda domain, p, h, options: SimpleNamespace(volume=1.0, c_p=p)
        )
        report = probe_c_infinity((2.0, 4.0), (0.5,), coarse_settings)
        assert report.verdict is Verdict.FAIL
        assert report.extras["failed"] == ["normalized_disk_trend"]

    def test_c_infinity_needs_increasing_p(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            probe_c_infinity((2.0, 1.5), (0.5,), coarse_settings)

    def test_continuity(self, coarse_settings):
        report = check_continuity_in_p(UNIT_DISK, [1.0, 1.1, 1.2, 1.3], coarse_settings)
        assert report.passed
        assert len(report.extras["c_p"]) == 4

    def test_continuity_vacuous(self, coarse_settings):
        report = check_continuity_in_p(UNIT_DISK, [1.0, 1.1], coarse_settings)
        assert report.passed
        assert report.lhs == 0.0

    def test_continuity_spacing(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_continuity_in_p(UNIT_DISK, [1.0, 1.5], coarse_settings)

    def test_continuity_sorted(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            check_continuity_in_p(UNIT_DISK, [1.1, 1.0, 1.2], coarse_settings)


def _passing_check() -> CheckReport:
    return CheckReport(claim_id="ignored", lhs=1.0, rhs=1.0, relation=Relation.EQ)


def _failing_check() -> CheckReport:
    raise NoConvergenceError("did not converge")


class TestRunSuite:
    """스위트 실행 및 집계 테스트"""

    def test_unknown_suite(self, coarse_settings):
        with pytest.raises(InvalidInputError):
            run_suite("nonexistent", coarse_settings)

    def test_errors_become_failures(self, monkeypatch, coarse_settings):
        """검사 중 예외는 FAIL 보고서로 변환"""
        monkeypatch.setitem(
            inequalities.SUITES,
            "tiny",
            lambda settings: [("b_check", _failing_check), ("a_check", _passing_check)],
        )
        report = run_suite("tiny", coarse_settings)
        assert [check.claim_id for check in report.checks] == ["a_check", "b_check"]
        assert report.checks[1].verdict is Verdict.FAIL
        assert report.checks[1].extras["error"]["error"] == "NoConvergence"
        assert report.all_passed is False
        assert report.counts == {"pass": 1, "fail": 1, "inconclusive": 0}

    def test_parallel_order_stable(self, monkeypatch, coarse_settings):
        entries = [(f"check_{index:02d}", _passing_check) for index in range(10)][::-1]
        monkeypatch.setitem(inequalities.SUITES, "tiny", lambda settings: entries)
        parallel = coarse_settings.model_copy(update={"workers": 4})
        report = run_suite("tiny", parallel)
        assert [check.claim_id for check in report.checks] == sorted(claim for claim, _ in entries)

    def test_identities_suite(self, coarse_settings, tmp_path):
        report = run_suite("identities", coarse_settings)
        assert report.all_passed
        assert report.environment.settings == coarse_settings
        ids = [check.claim_id for check in report.checks]
        assert ids == sorted(ids)
        assert "product_identity[square,p=2]" in ids

        json_path, csv_path = write_aggregate(report, tmp_path)
        assert json_path.name == "verify_identities.json"
        stored = json.loads(json_path.read_text(encoding="utf-8"))
        assert stored["all_passed"] is True
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "claim_id,pass,margin"
        assert len(lines) == len(ids) + 1
