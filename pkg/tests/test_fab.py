import hashlib
import json
import xml.etree.ElementTree as ET

import pytest

from boards import pro_mini_fixture, single_trace_board, square_outline
from stretchcircuit.board import Board, Layer, Pour, Trace, Via
from stretchcircuit.fab import (
    CO2_DEFAULT,
    DrcRefusal,
    FabError,
    LaserSettings,
    MaskDocument,
    MaskKind,
    emit_svg,
    emit_traveler,
    generate_masks,
    material_config,
    write_package,
)
from stretchcircuit.geometry import Point
from stretchcircuit.transform import mirror_axis_sum

SVG = "{http://www.w3.org/2000/svg}"
SC = "{urn:stretchcircuit:mask}"


@pytest.fixture(scope="module")
def package():
    return generate_masks(pro_mini_fixture(), material="vhb", uv_settings=LaserSettings(30, 50, 1))


def test_three_documents(package):
    assert set(package.documents) == set(MaskKind)
    assert len(package.documents) == 3
    assert package.metadata["rule_set_sha256"]
    assert package.metadata["tool_versions"]["stretchcircuit"]


def test_co2_document_contents(package, pro_mini):
    co2 = package.documents[MaskKind.CO2_OUTLINE_AND_VIAS]
    ids = co2.feature_ids
    assert ids.count("outline") == 1
    assert sorted(i for i in ids if i != "outline") == sorted(v.id for v in pro_mini.vias)
    assert not any(t.id in ids for t in pro_mini.traces)
    assert co2.settings == CO2_DEFAULT == LaserSettings(100, 20, 2)
    assert co2.kerf_offset == 150


def test_uv_documents_per_side(package, pro_mini):
    top = package.documents[MaskKind.UV_TOP_TRACES]
    bottom = package.documents[MaskKind.UV_BOTTOM_TRACES]
    for doc, layer in ((top, Layer.TOP), (bottom, Layer.BOTTOM)):
        ids = doc.feature_ids
        expect = [t.id for t in pro_mini.traces if t.layer is layer] + [p.id for p in pro_mini.pads if p.layer is layer]
        assert sorted(ids) == sorted(expect)
        assert len(ids) == len(set(ids))
        assert not any(v.id in ids for v in pro_mini.vias)
        assert doc.kerf_offset == 7.5
    assert bottom.mirrored and not top.mirrored


def test_via_alignment_after_flip(package, pro_mini):
    top = package.documents[MaskKind.UV_TOP_TRACES]
    bottom = package.documents[MaskKind.UV_BOTTOM_TRACES]
    axis = mirror_axis_sum(pro_mini)
    top_reg = dict(top.registration)
    for vid, (x, y) in bottom.registration:
        tx, ty = top_reg[vid]
        assert abs((axis - x) - tx) <= 1 and abs(y - ty) <= 1
    # bottom trace geometry flipped back lands on the via centers it joins
    (path,) = [t for t in bottom.toolpaths if t.id == "T00b"]
    xs = [axis - x for x, _ in path.points]
    assert min(xs) == pytest.approx(12000 - 117.5, abs=1) and max(xs) == pytest.approx(22000 + 117.5, abs=1)


def test_drc_refusal_and_override():
    bad = single_trace_board(width=150)
    with pytest.raises(DrcRefusal) as exc:
        generate_masks(bad)
    assert [v.rule for v in exc.value.violations] == ["trace_width"]
    assert "T1" in str(exc.value)
    pkg = generate_masks(bad, force=True)
    assert pkg.metadata["drc_override"] is True


def test_pours_must_be_handled():
    b = Board("p", square_outline(20000), pours=(Pour("G", ((0, 0), (5000, 0), (5000, 5000)), "top", "GND"),))
    with pytest.raises(FabError, match="pours"):
        generate_masks(b)


def test_single_via_circle_svg():
    b = Board("v", square_outline(20000), vias=(Via("V1", (10000, 5000), 400),))
    doc = generate_masks(b).documents[MaskKind.CO2_OUTLINE_AND_VIAS]
    root = ET.fromstring(emit_svg(doc))
    (circle,) = root.iter(SVG + "circle")
    assert (circle.get("cx"), circle.get("cy"), circle.get("r")) == ("10.000", "5.000", "0.050")


def test_empty_document_viewport():
    doc = MaskDocument(MaskKind.UV_TOP_TRACES, (), None, 7.5, (Point(-150, -150), Point(10150, 5150)))
    text = emit_svg(doc)
    root = ET.fromstring(text)
    assert root.get("viewBox") == "-0.150 -5.150 10.300 5.300"
    assert root.get("width") == "10.300mm" and root.get("height") == "5.300mm"
    assert list(root.iter(SVG + "path")) == [] and list(root.iter(SVG + "circle")) == []
    assert "UNSET" in text


def test_svg_deterministic_and_sorted(package):
    for doc in package.documents.values():
        a, b = emit_svg(doc), emit_svg(doc)
        assert hashlib.sha256(a.encode()).hexdigest() == hashlib.sha256(b.encode()).hexdigest()
        root = ET.fromstring(a)
        ids = [e.get("id") for e in root.iter() if e.tag in (SVG + "path", SVG + "circle")]
        assert ids == sorted(ids)
        (group,) = root.iter(SVG + "g")
        assert group.get("id") == doc.kind.value
        assert len(list(root.iter(SC + "point"))) == len(doc.registration)


def test_regenerated_package_is_identical(pro_mini):
    a = generate_masks(pro_mini)
    b = generate_masks(pro_mini_fixture())
    assert [emit_svg(a.documents[k]) for k in MaskKind] == [emit_svg(b.documents[k]) for k in MaskKind]
    assert a.traveler.to_text() == b.traveler.to_text()


def test_traveler_vhb(pro_mini):
    t = emit_traveler(pro_mini, "vhb")
    assert [s.code for s in t.steps] == list("CDEFGHIJKL")
    enc = [s for s in t.steps if s.code in ("I", "L")]
    assert all("rubber cement" in s.action.lower() for s in enc)
    assert "VHB" in t.steps[0].action


def test_traveler_slacker(pro_mini):
    t = emit_traveler(pro_mini, "slacker1.5")
    assert len(t.steps) == 10
    assert "Slacker 1.5" in t.steps[0].action
    assert all("Slacker 1.5" in s.action for s in t.steps if s.code in ("I", "L"))
    assert "rubber cement" not in t.to_text().lower()


def test_traveler_strain_limit_region(pro_mini):
    t = emit_traveler(pro_mini, "vhb")
    last = t.steps[-1]
    assert "Sil-Poxy" in last.action and "Sil-Poxy" in last.materials
    (region,) = last.regions
    xs = [p.x for p in region]
    assert min(xs) < 37000 - 2750 and max(xs) > 37000 + 2750
    data = json.loads(t.to_json())
    assert data["steps"][-1]["regions_mm"]


def test_traveler_without_regions():
    t = emit_traveler(single_trace_board(), "slacker2")
    assert len(t.steps) == 10
    assert t.steps[-1].regions == ()


def test_unknown_material():
    with pytest.raises(FabError, match="unknown material"):
        material_config("latex")
    with pytest.raises(FabError):
        emit_traveler(single_trace_board(), "latex")


def test_write_package(tmp_path, package):
    paths = write_package(package, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == sorted(
        [f"{k.value}.svg" for k in MaskKind] + ["traveler.txt", "traveler.json", "package.json"]
    )
    meta = json.loads((tmp_path / "package.json").read_text())
    assert meta["board"] == "pro-mini-scale"


def test_trace_only_board_has_no_co2_traces():
    b = Board("t", square_outline(20000), (Trace("T", "top", ((1000, 1000), (9000, 1000)), 250),))
    pkg = generate_masks(b)
    assert pkg.documents[MaskKind.CO2_OUTLINE_AND_VIAS].feature_ids == ["outline"]
    assert pkg.documents[MaskKind.UV_BOTTOM_TRACES].feature_ids == []
