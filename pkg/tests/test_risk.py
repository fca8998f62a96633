import math

import numpy as np
import pytest

from gevtree import gev
from gevtree.errors import DomainError, IncompleteDay
from gevtree.gev import GevParams
from gevtree.risk import (
    RiskPolicy,
    capacity_requirement,
    daily_eue,
    nerc_daily_lolp,
    report_from_params,
)


def hours(day, n=24):
    return np.datetime64(day, "s") + np.arange(n) * np.timedelta64(3600, "s")


class TestNerc:
    def test_constant(self):
        assert nerc_daily_lolp() == 0.1 / 365
        assert nerc_daily_lolp() == pytest.approx(2.739726e-4, rel=1e-6)
        assert 365 * nerc_daily_lolp() == pytest.approx(0.1, rel=1e-15)

    def test_confidence(self):
        assert RiskPolicy().confidence == pytest.approx(0.99972603, abs=5e-9)

    @pytest.mark.parametrize("eta", [0.0, 1.0, -0.1])
    def test_policy_domain(self, eta):
        with pytest.raises(DomainError):
            RiskPolicy(eta)


class TestCapacity:
    def test_nerc_value(self):
        # root of cdf(y) = 1 - 0.1/365 for GEV(0, 1, 0.2), mpmath at 30 digits
        assert capacity_requirement(GevParams(0, 1, 0.2)) == pytest.approx(20.787941562207043, rel=1e-12)

    def test_identity_point(self):
        policy = RiskPolicy(1 - math.exp(-1))
        assert capacity_requirement(GevParams(0, 1, 0), policy) == pytest.approx(0.0, abs=1e-15)

    def test_monotone_in_scale(self):
        caps = [capacity_requirement(GevParams(0, s, 0.1)) for s in (0.5, 1.0, 2.0)]
        assert caps[0] < caps[1] < caps[2]


class TestEue:
    def test_matches_quadrature(self):
        # 24 * integral_{VaR}^{inf} (y - VaR) f(y) dy by scipy quadrature (independent of the package)
        assert daily_eue([GevParams(0, 1, 0.2)] * 24) == pytest.approx(0.042394363433665525, rel=1e-6)

    def test_degenerate_hours(self):
        unit = daily_eue([GevParams(5.0, 1.0, 0.1)] * 24)
        for sigma in (1e-4, 1e-8, 1e-12):
            # the shortfall scales with sigma and vanishes with it
            assert daily_eue([GevParams(5.0, sigma, 0.1)] * 24) == pytest.approx(unit * sigma, rel=1e-6)

    def test_accepts_array_params(self):
        p = GevParams(np.zeros(24), np.ones(24), np.full(24, 0.2))
        assert daily_eue(p) == pytest.approx(daily_eue([GevParams(0, 1, 0.2)] * 24), rel=1e-14)


class TestReport:
    def test_one_day(self):
        p = GevParams(np.linspace(0, 1, 24), np.ones(24), np.full(24, 0.1))
        report = report_from_params(p, hours("2024-05-01"))
        records = list(report.records())
        assert len(records) == 24 and report.daily_eue.size == 1
        assert report.daily_eue[0] == pytest.approx(
            daily_eue([r["params"] for r in records]), rel=1e-14)
        assert report.annual_capacity_sum == pytest.approx(np.sum(gev.var(RiskPolicy().confidence, p)))

    def test_incomplete_day(self):
        p = GevParams(np.zeros(30), np.ones(30), np.zeros(30))
        with pytest.raises(IncompleteDay):
            report_from_params(p, hours("2024-05-01", 30))

    def test_time_zone_grouping(self):
        p = GevParams(np.zeros(48), np.ones(48), np.zeros(48))
        t = hours("2024-05-01T04:00", 48)   # midnight in New York (EDT)
        report = report_from_params(p, t, tz="America/New_York")
        assert [str(d) for d in report.days] == ["2024-05-01", "2024-05-02"]

    def test_writes(self, tmp_path):
        p = GevParams(np.zeros(24), np.ones(24), np.zeros(24))
        report = report_from_params(p, hours("2024-05-01"))
        report.write_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "instant,mu,sigma,xi,var,cvar,capacity"
        assert len(lines) == 25
        report.write_summary(tmp_path / "s.json")
        assert "annual_eue" in (tmp_path / "s.json").read_text()
