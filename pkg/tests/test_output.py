import json
import xml.etree.ElementTree as ET

import pytest

from satrx.montecarlo import BerPoint
from satrx.output import (
    CSV_HEADER,
    RunManifest,
    ber_svg,
    emit_results,
    read_results_csv,
    results_csv,
)

POINTS = [
    BerPoint("JML", 10.0, 120, 3000, 1),
    BerPoint("JML", 20.0, 0, 30000, 10),
    BerPoint("RC-LGSD(2/1/2)", 10.0, 300, 3000, 1),
    BerPoint("RC-LGSD(2/1/2)", 20.0, 40, 3000, 1),
]


def test_csv_header_and_round_trip(tmp_path):
    text = results_csv(POINTS)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert text.splitlines()[1] == "JML,10.0,1,3000,120,0.04"
    path = tmp_path / "r.csv"
    path.write_text(text)
    assert read_results_csv(path) == POINTS


def test_svg_is_deterministic_and_well_formed():
    a, b = ber_svg(POINTS), ber_svg(list(POINTS))
    assert a == b
    root = ET.fromstring(a)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


def test_zero_error_points_marked_on_floor():
    svg = ber_svg(POINTS)
    assert "no errors (1e-8)" in svg
    assert svg.count('fill="white" stroke=') == 2  # one hollow marker plus the legend glyph
    assert ">1e-8<" in svg


def test_svg_escapes_names():
    svg = ber_svg([BerPoint("a<b&c", 1.0, 1, 10, 1)])
    assert "a&lt;b&amp;c" in svg
    with pytest.raises(ValueError):
        ber_svg([])


def test_emit_results(tmp_path):
    manifest = RunManifest(config={"seed": 1}, version="0.1.0", config_digest="abc", workers=2)
    paths = emit_results(POINTS, manifest, tmp_path / "out")
    assert sorted(p.name for p in paths.values()) == ["ber.svg", "manifest.json", "results.csv"]
    data = json.loads(paths["manifest"].read_text())
    assert data["config"] == {"seed": 1}
    assert data["outputs"]["results"] == "results.csv"
    with pytest.raises(ValueError):
        emit_results([], manifest, tmp_path)
