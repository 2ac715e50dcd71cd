"""1차원 슬랩 및 반경 방향 슈팅 테스트"""

import math

import pytest
from scipy.special import jn_zeros

from app.services.errors import InvalidInputError, SupercriticalRefusedError
from app.services.radial import (
    EnergyVariant,
    a_p,
    a_p_closed_form,
    calibrate,
    energy_ball_critical,
    energy_drift,
    energy_slab,
    integrate_critical_ode,
    integrate_slab_ode,
    radial_c_p,
    shoot_ball,
    solve_slab,
)


@pytest.fixture(scope="module")
def disk_torsion_profile():
    return shoot_ball(2, 1.0)


class TestAp:
    """A_p 적분 테스트"""

    @pytest.mark.parametrize("p, expected", [(1.0, 2.0), (2.0, math.pi / 2.0)])
    def test_known_values(self, p, expected):
        assert a_p(p) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("p", [1.5, 3.0, 10.0])
    def test_gamma_form(self, p):
        assert a_p(p) == pytest.approx(a_p_closed_form(p), rel=1e-9)

    def test_invalid_p(self):
        with pytest.raises(InvalidInputError):
            a_p(0.5)


class TestSlab:
    """슬랩 단면 문제 테스트"""

    def test_torsion_profile(self):
        """p = 1, Λ = 2 이면 u = 1 - x^2"""
        profile = solve_slab(1.0, 2.0)
        assert profile.u_max == pytest.approx(1.0, rel=1e-6)
        assert profile.du[0] == pytest.approx(2.0, rel=1e-6)
        assert profile.system == "slab"

    def test_eigen_profile(self):
        profile = solve_slab(2.0, 2.0)
        assert profile.lam == pytest.approx(math.pi**2 / 4.0, rel=1e-6)
        assert profile.u_max == pytest.approx(1.0, rel=1e-6)
        assert profile.first_zero == pytest.approx(1.0, abs=1e-6)
        assert profile.richardson_error < 1e-8

    def test_sublinear_boundary(self):
        profile = solve_slab(1.5, 1.0)
        assert profile.boundary_residual < 1e-6
        assert profile.u.min() >= 0.0

    def test_invalid_lambda(self):
        with pytest.raises(InvalidInputError):
            solve_slab(1.5, 0.0)

    def test_report_alias(self):
        payload = solve_slab(2.0, 2.0).to_report().model_dump(by_alias=True)
        assert payload["lambda"] == pytest.approx(math.pi**2 / 4.0, rel=1e-6)
        assert payload["system"] == "slab"


class TestBall:
    """공 위의 반경 방향 해 테스트"""

    def test_disk_torsion(self, disk_torsion_profile):
        assert disk_torsion_profile.lam == pytest.approx(4.0, rel=1e-6)
        assert radial_c_p(disk_torsion_profile) == pytest.approx(8.0 / math.pi, rel=1e-5)

    def test_calibrate(self, disk_torsion_profile):
        calibrated = calibrate(disk_torsion_profile, 2.0)
        assert calibrated.lam == 2.0
        assert calibrated.u_max == pytest.approx(0.5, rel=1e-6)

    def test_calibrate_p2_unchanged(self):
        profile = shoot_ball(3, 2.0)
        assert calibrate(profile, 7.0) is profile

    @pytest.mark.parametrize(
        "n, expected",
        [(2, float(jn_zeros(0, 1)[0]) ** 2), (3, math.pi**2), (4, float(jn_zeros(1, 1)[0]) ** 2)],
    )
    def test_eigenvalues(self, n, expected):
        assert shoot_ball(n, 2.0).lam == pytest.approx(expected, rel=1e-5)

    def test_three_dimensional_torsion(self):
        """n = 3: Λ = 2n, C_1 = n(n+2)/ω_n"""
        profile = shoot_ball(3, 1.0)
        assert profile.lam == pytest.approx(6.0, rel=1e-6)
        assert radial_c_p(profile) == pytest.approx(15.0 / (4.0 * math.pi / 3.0), rel=1e-5)

    @pytest.mark.parametrize("p, regime", [(6.0, "critical"), (7.0, "supercritical")])
    def test_refuses_critical_and_beyond(self, p, regime):
        with pytest.raises(SupercriticalRefusedError) as caught:
            shoot_ball(3, p)
        assert caught.value.to_payload()["regime"] == regime


class TestEnergies:
    """보존량 테스트"""

    def test_slab_energy(self):
        assert energy_slab(1.0, 0.0, 2.0, 1.0) == pytest.approx(1.0)

    def test_slab_energy_negative_u(self):
        with pytest.raises(InvalidInputError):
            energy_slab(-0.1, 0.0, 2.0, 1.0)

    def test_critical_variants(self):
        assert energy_ball_critical(1.0, 0.0, 3, 1.0, EnergyVariant.PRINTED) == pytest.approx(-1.0 / 3.0)
        assert energy_ball_critical(1.0, 0.0, 3, 1.0, "conserved") == pytest.approx(1.0 / 24.0)

    def test_critical_needs_three_dimensions(self):
        with pytest.raises(InvalidInputError):
            energy_ball_critical(1.0, 0.0, 2, 1.0)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_slab_energy_conserved(self, p):
        end = 0.9 * a_p(p) / math.sqrt(2.0 / p)
        trajectory = integrate_slab_ode(1.0, 0.0, p, 1.0, end)
        drift = energy_drift(trajectory, lambda u, w: energy_slab(u, w, p, 1.0))
        assert drift < 1e-8

    def test_critical_energy_conserved(self):
        trajectory = integrate_critical_ode(0.5, 0.0, 3, 1.0, 20.0)
        conserved = energy_drift(trajectory, lambda v, w: energy_ball_critical(v, w, 3, 1.0, "conserved"))
        printed = energy_drift(trajectory, lambda v, w: energy_ball_critical(v, w, 3, 1.0, "printed"))
        assert conserved < 1e-8
        assert printed > 1e-6
