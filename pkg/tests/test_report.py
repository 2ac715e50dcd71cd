"""검증 보고서 판정 규칙 테스트"""

import math

import pytest

from app.schemas.config import HarnessSettings
from app.schemas.report import (
    AggregateReport,
    CheckReport,
    EnvironmentBlock,
    Relation,
    Verdict,
    judge,
    normalized_margin,
)


class TestMargin:
    def test_normalized(self):
        assert normalized_margin(3.0, 2.0) == pytest.approx(1.0 / 3.0)
        assert normalized_margin(-1.0, 1.0) == pytest.approx(-2.0)

    def test_both_zero(self):
        assert normalized_margin(0.0, 0.0) == 0.0

    def test_nan(self):
        assert math.isnan(normalized_margin(math.nan, 1.0))


class TestJudge:
    """관계별 판정"""

    @pytest.mark.parametrize(
        "relation, margin, tolerance, expected",
        [
            (Relation.GE, -0.01, 0.02, Verdict.PASS),
            (Relation.GE, -0.05, 0.02, Verdict.FAIL),
            (Relation.LE, 0.01, 0.02, Verdict.PASS),
            (Relation.EQ, 0.03, 0.02, Verdict.FAIL),
            (Relation.GT, 0.01, 0.02, Verdict.INCONCLUSIVE),
            (Relation.GT, 0.05, 0.02, Verdict.PASS),
            (Relation.GT, -0.05, 0.02, Verdict.FAIL),
            (Relation.LT, -0.05, 0.0, Verdict.PASS),
            (Relation.LT, 0.0, 0.0, Verdict.INCONCLUSIVE),
        ],
    )
    def test_relations(self, relation, margin, tolerance, expected):
        assert judge(relation, margin, tolerance) is expected

    def test_nan_fails(self):
        assert judge(Relation.LE, math.nan, 1.0) is Verdict.FAIL


class TestAggregate:
    """집계 보고서"""

    def test_inconclusive_does_not_fail(self):
        checks = [
            CheckReport(claim_id="a", lhs=1.0, rhs=1.0, relation=Relation.GT, tolerance=0.1),
            CheckReport(claim_id="b", lhs=2.0, rhs=1.0, relation=Relation.GE),
        ]
        report = AggregateReport(suite="s", environment=EnvironmentBlock(settings=HarnessSettings()), checks=checks)
        assert report.all_passed is True
        assert report.counts == {"pass": 1, "fail": 0, "inconclusive": 1}

    def test_summary_line(self):
        line = CheckReport(claim_id="x", lhs=2.0, rhs=1.0, relation=Relation.GE).summary_line()
        assert "PASS" in line
        assert line.endswith("(margin +5.000e-01)")

    def test_serialized_fields(self):
        payload = CheckReport(claim_id="x", lhs=1.0, rhs=2.0, relation=Relation.LE).model_dump(mode="json")
        assert payload["verdict"] == "pass"
        assert payload["passed"] is True
        assert payload["relation"] == "<="
