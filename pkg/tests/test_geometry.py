"""격자 영역(마스크) 생성 및 기하량 테스트"""

import math

import numpy as np
import pytest

from app.schemas.domain import Annulus, Ball, Disk, Polygon, Rectangle, Slab, load_domain, parse_domain
from app.services.errors import (
    InvalidDomainError,
    InvalidMaskError,
    NonpositiveScaleError,
    ResolutionTooCoarseError,
    UnsupportedDimensionError,
)
from app.services.geometry import (
    GridMask,
    ball_volume,
    contains,
    continuous_volume,
    equal_volume_ball,
    inradius,
    rasterize,
    scale_domain,
    truncated_slab,
    volume,
)


class TestParseDomain:
    """영역 JSON 파싱 테스트"""

    def test_parse_disk(self):
        """원판 파싱"""
        domain = parse_domain({"kind": "disk", "radius": 2.0})
        assert domain == Disk(radius=2.0)

    def test_unknown_key_rejected(self):
        """알 수 없는 키는 거부"""
        with pytest.raises(InvalidDomainError):
            parse_domain({"kind": "disk", "radius": 1.0, "colour": "red"})

    def test_self_intersecting_polygon_rejected(self):
        """자기 교차 다각형(나비넥타이) 거부"""
        with pytest.raises(InvalidDomainError):
            parse_domain({"kind": "polygon", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]})

    def test_annulus_order(self):
        with pytest.raises(InvalidDomainError):
            parse_domain({"kind": "annulus", "r_in": 2.0, "r_out": 1.0})

    def test_load_domain_missing_file(self, tmp_path):
        """존재하지 않는 파일"""
        with pytest.raises(InvalidDomainError):
            load_domain(tmp_path / "missing.json")

    def test_load_domain_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(InvalidDomainError):
            load_domain(path)

    def test_load_domain_from_file(self, tmp_path):
        path = tmp_path / "square.json"
        path.write_text('{"kind": "rectangle", "half_widths": [0.5, 0.5]}', encoding="utf-8")
        assert load_domain(path) == Rectangle(half_widths=(0.5, 0.5))


class TestContains:
    """점 포함 판정 테스트"""

    def test_polygon_boundary_excluded(self):
        """다각형 경계 위의 점은 내부가 아님"""
        square = Polygon(vertices=[(0, 0), (1, 0), (1, 1), (0, 1)])
        inside = contains(square, np.array([0.5, 1.0, 0.5, 1.5]), np.array([0.5, 0.5, 0.0, 0.5]))
        assert inside.tolist() == [True, False, False, False]

    def test_annulus_hole(self):
        ring = Annulus(r_in=0.5, r_out=1.0)
        inside = contains(ring, np.array([0.0, 0.75]), np.array([0.0, 0.0]))
        assert inside.tolist() == [False, True]

    def test_slab_has_no_planar_test(self):
        with pytest.raises(InvalidDomainError):
            contains(Slab(n=2, half_width=1.0), np.array([0.0]), np.array([0.0]))


class TestRasterize:
    """래스터화 테스트"""

    def test_square_cell_count(self, unit_square):
        """정사각형: 경계 노드 제외 63 x 63"""
        mask = rasterize(unit_square, 1.0 / 64.0)
        assert mask.cell_count == 63 * 63
        assert volume(mask) == pytest.approx(63 * 63 / 64.0**2)

    def test_disk_volume_close_to_pi(self, unit_disk):
        mask = rasterize(unit_disk, 1.0 / 64.0)
        assert volume(mask) == pytest.approx(math.pi, rel=0.01)

    def test_square_inradius(self, unit_square):
        mask = rasterize(unit_square, 1.0 / 64.0)
        assert inradius(mask) == pytest.approx(0.5)

    def test_outer_ring_is_exterior(self, unit_disk):
        occupancy = rasterize(unit_disk, 1.0 / 32.0).occupancy
        assert not occupancy[0, :].any()
        assert not occupancy[-1, :].any()
        assert not occupancy[:, 0].any()
        assert not occupancy[:, -1].any()

    def test_scaled_domain_shares_lattice(self, unit_disk):
        """r 배 확대 + h 배 확대 시 동일 마스크"""
        small = rasterize(unit_disk, 1.0 / 32.0)
        large = rasterize(scale_domain(unit_disk, 2.0), 2.0 / 32.0)
        assert np.array_equal(small.occupancy, large.occupancy)
        assert small.offset == large.offset

    def test_too_coarse(self, unit_disk):
        """격자 간격이 너무 큰 경우"""
        with pytest.raises(ResolutionTooCoarseError):
            rasterize(unit_disk, 0.5)

    def test_nonpositive_spacing(self, unit_disk):
        with pytest.raises(ResolutionTooCoarseError):
            rasterize(unit_disk, 0.0)

    def test_three_dimensional_ball_refused(self):
        with pytest.raises(UnsupportedDimensionError):
            rasterize(Ball(n=3, radius=1.0), 1.0 / 32.0)

    def test_slab_refused(self):
        with pytest.raises(InvalidDomainError):
            rasterize(Slab(n=2, half_width=1.0), 1.0 / 32.0)

    def test_planar_ball_matches_disk(self, unit_disk):
        mask = rasterize(Ball(n=2, radius=1.0), 1.0 / 32.0)
        assert np.array_equal(mask.occupancy, rasterize(unit_disk, 1.0 / 32.0).occupancy)

    def test_stiffness_symmetric(self, unit_disk):
        stiffness = rasterize(unit_disk, 1.0 / 16.0).stiffness
        assert abs(stiffness - stiffness.T).max() == 0.0
        assert stiffness.diagonal() == pytest.approx(4.0 * 16.0**2)


class TestGridMask:
    """마스크 불변식 테스트"""

    def test_disconnected_nodes_rejected(self):
        with pytest.raises(InvalidMaskError):
            GridMask.from_nodes(0.1, np.array([[0, 0], [5, 5]]))

    def test_empty_mask_rejected(self):
        with pytest.raises(InvalidMaskError):
            GridMask.from_nodes(0.1, np.empty((0, 2)))

    def test_from_nodes_keeps_global_index(self):
        mask = GridMask.from_nodes(0.5, np.array([[3, 4], [4, 4]]))
        assert mask.node_indices.tolist() == [[3, 4], [4, 4]]
        x, y = mask.coordinates()
        assert x.tolist() == [1.5, 2.0]
        assert y.tolist() == [2.0, 2.0]


class TestScaling:
    """스케일 및 부피 보조 함수 테스트"""

    def test_scale_rectangle(self):
        scaled = scale_domain(Rectangle(half_widths=(1.0, 2.0)), 3.0)
        assert scaled.half_widths == (3.0, 6.0)

    def test_scale_polygon(self):
        scaled = scale_domain(Polygon(vertices=[(0, 0), (1, 0), (0, 1)]), 2.0)
        assert scaled.vertices == [(0, 0), (2, 0), (0, 2)]

    def test_nonpositive_scale(self, unit_disk):
        with pytest.raises(NonpositiveScaleError):
            scale_domain(unit_disk, 0.0)

    def test_ball_volume(self):
        assert ball_volume(2) == pytest.approx(math.pi)
        assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)

    def test_equal_volume_ball_of_mask(self, unit_square):
        mask = rasterize(unit_square, 1.0 / 32.0)
        assert math.pi * equal_volume_ball(mask).radius ** 2 == pytest.approx(volume(mask))

    def test_continuous_volume(self):
        assert continuous_volume(Annulus(r_in=1.0, r_out=2.0)) == pytest.approx(3.0 * math.pi)
        assert continuous_volume(Polygon(vertices=[(0, 0), (2, 0), (0, 2)])) == pytest.approx(2.0)

    def test_truncated_slab(self):
        assert truncated_slab(1.0, 8.0).half_widths == (8.0, 1.0)
