"""슈바르츠 재배열 테스트"""

import math

import numpy as np
import pytest

from app.services.errors import NegativeFieldError
from app.services.field import dirichlet_energy, lp_norm_p
from app.services.symmetrize import (
    distribution_volume,
    level_set_energy,
    rearrange,
    write_rearrangement_csv,
)


@pytest.fixture(scope="module")
def rearranged_square(square_eigen):
    return rearrange(square_eigen.u)


class TestDistributionVolume:
    """분포 함수 테스트"""

    def test_disk_torsion_half_level(self, disk_torsion):
        """u = (1 - r^2)/2 > 1/4 ⇔ r < 1/√2"""
        assert distribution_volume(disk_torsion.calibrated_u, 0.25) == pytest.approx(math.pi / 2.0, rel=0.02)

    def test_extremes(self, disk_torsion):
        u = disk_torsion.calibrated_u
        assert distribution_volume(u, -1.0) == pytest.approx(u.mask.cell_count * u.mask.h**2)
        assert distribution_volume(u, u.max) == 0.0


class TestRearrange:
    """재배열 불변량 테스트"""

    def test_cell_count_preserved(self, square_eigen, rearranged_square):
        assert rearranged_square.cell_count == square_eigen.mask.cell_count
        assert rearranged_square.source_cells == square_eigen.mask.cell_count

    def test_values_equimeasurable(self, square_eigen, rearranged_square):
        assert np.array_equal(np.sort(rearranged_square.field.values), np.sort(square_eigen.u.values))
        for p in (1.0, 2.0, 3.5):
            assert lp_norm_p(rearranged_square.field, p) == pytest.approx(lp_norm_p(square_eigen.u, p), rel=1e-12)

    def test_radially_nonincreasing(self, rearranged_square):
        radii = rearranged_square.radial_values[:, 0]
        values = rearranged_square.radial_values[:, 1]
        assert np.all(np.diff(radii) >= 0.0)
        assert np.all(np.diff(values) <= 0.0)

    def test_energy_not_increased(self, square_eigen, rearranged_square):
        """Pólya-Szegő: 재배열 후 에너지 비증가 (격자 오차 5% 허용)"""
        assert dirichlet_energy(rearranged_square.field) <= 1.05 * dirichlet_energy(square_eigen.u)

    def test_source_is_disk(self, square_eigen, rearranged_square):
        disk = rearranged_square.field.mask.source
        assert disk.kind == "disk"
        assert math.pi * disk.radius**2 == pytest.approx(square_eigen.volume)

    def test_negative_field_rejected(self, square_eigen):
        with pytest.raises(NegativeFieldError):
            rearrange(-1.0 * square_eigen.u)

    def test_csv(self, rearranged_square, tmp_path):
        path = write_rearrangement_csv(rearranged_square, tmp_path / "rearranged.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# h=0.015625"
        assert lines[2] == "radius,value"
        assert len(lines) == 3 + rearranged_square.cell_count


class TestLevelSetEnergy:
    """레벨셋 에너지 ψ(t) 테스트"""

    def test_zero_level_is_full_energy(self, disk_torsion):
        u = disk_torsion.calibrated_u
        assert level_set_energy(u, 0.0) == pytest.approx(dirichlet_energy(u))

    def test_nonincreasing_in_t(self, disk_torsion):
        u = disk_torsion.calibrated_u
        values = [level_set_energy(u, t) for t in (0.0, 0.1, 0.2, 0.3, 0.4)]
        assert all(later <= earlier for earlier, later in zip(values, values[1:]))
        assert level_set_energy(u, u.max) == 0.0
