import re

import pytest

from conftest import built
from leastgrad.geometry import Circle
from leastgrad.svg import emit_svg, render_svg


def _count(svg, tag):
    return len(re.findall(rf"<{tag}\b", svg))


def test_empty_family_gives_outline_only():
    svg = render_svg(None, Circle())
    assert _count(svg, "line") == 0 and _count(svg, "polygon") == 0
    assert 'class="outline"' in svg


def test_piecewise_plot_has_two_lines_and_three_regions():
    b = built("p1_piecewise")
    svg = render_svg(b.family, b.domain)
    assert _count(svg, "line") == 2
    assert len(re.findall(r'<polygon class="fat"', svg)) == 3


def test_case1_plot_structure():
    b = built("d2_case1")
    svg = render_svg(b.family, b.domain, max_lines=21)
    assert _count(svg, "polygon") == 1
    # below the critical level every level has two segments, above it one
    assert 21 < _count(svg, "line") <= 42


def test_coordinates_use_three_decimals():
    b = built("d1_monotone")
    svg = render_svg(b.family, b.domain)
    nums = re.findall(r'x1="(-?\d+\.\d+)"', svg)
    assert nums and all(len(n.split(".")[1]) == 3 for n in nums)


def test_emit_svg_writes_and_surfaces_io_errors(tmp_path):
    b = built("d1_monotone")
    path = emit_svg(b.family, b.domain, tmp_path / "plot.svg")
    assert path.read_text().startswith("<svg")
    with pytest.raises(OSError):
        emit_svg(b.family, b.domain, tmp_path / "missing" / "plot.svg")
