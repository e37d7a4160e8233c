import re

import numpy as np
import pytest

from strobe import FullPathVector, default_circle_grid, render_2d, split_path


def _path(values):
    return FullPathVector(np.asarray(values, dtype=np.float64), frozenset())


class TestRender2d:
    def test_two_waypoints_two_dots_one_polyline(self):
        svg = render_2d(_path([[0.0, 0.0], [1.0, 1.0]]))
        assert len(re.findall(r'<circle class="waypoint"', svg)) == 2
        polylines = re.findall(r'<polyline class="path" points="([^"]+)"', svg)
        assert len(polylines) == 1
        assert len(polylines[0].split()) == 2  # one segment

    def test_byte_identical_repeat(self):
        p = _path(np.random.default_rng(0).uniform(0, 1, size=(9, 2)))
        field = default_circle_grid()
        part = split_path(9, 2, 2)
        assert render_2d(p, field, partition=part) == render_2d(p, field, partition=part)

    def test_pod_groups_alternate(self):
        p = _path(np.random.default_rng(1).uniform(0, 1, size=(100, 2)))
        part = split_path(100, 12, 2)
        svg = render_2d(p, partition=part)
        colors = re.findall(r'<g class="pod" data-color="([BR])"', svg)
        assert len(colors) == 24
        assert colors == ["B", "R"] * 12

    def test_field_circles_present(self):
        p = _path([[0.1, 0.1], [0.9, 0.9]])
        svg = render_2d(p, default_circle_grid())
        assert len(re.findall(r'<circle class="field-falloff"', svg)) == 25
        assert len(re.findall(r'<circle class="field-core"', svg)) == 25

    def test_writes_file(self, tmp_path):
        target = tmp_path / "path.svg"
        text = render_2d(_path([[0.0, 0.0], [1.0, 0.5]]), out=target)
        assert target.read_text(encoding="utf-8") == text

    def test_rejects_non_planar_path(self):
        with pytest.raises(ValueError):
            render_2d(_path(np.zeros((4, 7))))

    def test_rejects_partition_length_mismatch(self):
        with pytest.raises(ValueError):
            render_2d(_path(np.zeros((6, 2))), partition=split_path(8, 2, 2))

    def test_every_waypoint_dotted_once_with_partition(self):
        p = _path(np.random.default_rng(2).uniform(0, 1, size=(17, 2)))
        svg = render_2d(p, partition=split_path(17, 3, 2))
        assert len(re.findall(r'<circle class="waypoint"', svg)) == 17
