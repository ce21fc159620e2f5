import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boards import pro_mini_fixture, rect, square_outline
from oracles import sampled_distance
from stretchcircuit.board import Board, FootprintInstance, Layer, PackageClass, Pad, Trace, Via
from stretchcircuit.drc import DesignRuleSet, Severity, check_board, check_packages, min_distance, violation_to_dict
from stretchcircuit.geometry import Shape


def two_traces(gap_centerlines, width=200, layer_b="top", net_b=None):
    return Board(
        "tt",
        square_outline(20000),
        (
            Trace("A", "top", ((1000, 5000), (15000, 5000)), width, "NA"),
            Trace("B", layer_b, ((1000, 5000 + gap_centerlines), (15000, 5000 + gap_centerlines)), width, net_b or "NB"),
        ),
    )


def via_and_trace(edge_gap, via_d=400, width=250):
    off = via_d // 2 + width // 2 + edge_gap
    return Board(
        "vt",
        square_outline(20000),
        (Trace("T", "top", ((1000, 5000), (15000, 5000)), width, "NT"),),
        (Via("V", (8000, 5000 + off), via_d, net="NV"),),
    )


def test_parallel_traces_370_apart():
    b = two_traces(370)
    assert min_distance(b.traces[0], b.traces[1]) == 170


def test_overlap_is_zero():
    b = two_traces(50)
    assert min_distance(b.traces[0], b.traces[1]) == 0
    assert min_distance(Shape.circle((0, 0), 400), Shape.circle((100, 0), 400)) == 0
    # circle entirely inside a pad
    pad = Pad("P", rect(0, 0, 2000, 2000), Layer.TOP)
    assert min_distance(pad, Shape.circle((0, 0), 100)) == 0


def test_width_violation():
    b = Board("w", square_outline(20000), (Trace("T", "top", ((1000, 1000), (5000, 1000)), 150),))
    (v,) = check_board(b)
    assert (v.rule, v.measured, v.limit, v.features) == ("trace_width", 150, 200, ("T",))
    assert v.severity is Severity.ERROR


def test_via_clearance_violation():
    (v,) = check_board(via_and_trace(250))
    assert v.rule == "via_trace_clearance"
    assert v.limit == 290
    assert v.measured == pytest.approx(250, abs=1e-9)
    assert v.features == ("T", "V")


@pytest.mark.parametrize(
    "board, rule",
    [
        (Board("w", square_outline(20000), (Trace("T", "top", ((1000, 1000), (5000, 1000)), 199),)), "trace_width"),
        (two_traces(369), "trace_clearance"),
        (via_and_trace(289), "via_trace_clearance"),
    ],
)
def test_one_under_limit_fails(board, rule):
    assert [v.rule for v in check_board(board)] == [rule]


@pytest.mark.parametrize(
    "board",
    [
        Board("w", square_outline(20000), (Trace("T", "top", ((1000, 1000), (5000, 1000)), 200),)),
        two_traces(370),
        via_and_trace(290),
    ],
)
def test_exactly_at_limit_passes(board):
    assert check_board(board) == []


def test_same_net_and_other_layer_exempt():
    assert check_board(two_traces(250, net_b="NA")) == []
    assert check_board(two_traces(250, layer_b="bottom")) == []


def test_compliant_pro_mini_has_no_errors(pro_mini):
    assert check_board(pro_mini) == []


def test_index_matches_brute_force():
    rng = random.Random(11)
    traces = []
    for i in range(120):
        x, y = rng.randint(0, 30000), rng.randint(0, 30000)
        traces.append(
            Trace(f"T{i:03d}", rng.choice(["top", "bottom"]), ((x, y), (x + rng.randint(-3000, 3000), y + rng.randint(1, 3000))),
                  rng.randint(150, 400), f"N{i % 17}")
        )
    vias = [Via(f"V{i:02d}", (rng.randint(0, 30000), rng.randint(0, 30000)), 400, net=f"N{i % 17}") for i in range(40)]
    b = Board("rnd", square_outline(40000, -5000, -5000), tuple(traces), tuple(vias))
    fast = check_board(b)
    slow = check_board(b, use_index=False)
    assert fast == slow
    assert len(fast) > 10


def test_permutation_invariance():
    rng = random.Random(3)
    b = pro_mini_fixture(width=180)
    shuffled = Board(b.name, b.outline, tuple(rng.sample(b.traces, len(b.traces))), tuple(rng.sample(b.vias, len(b.vias))), b.footprints)
    assert check_board(b) == check_board(shuffled)
    assert len(check_board(b)) == 72


@given(st.integers(100, 400), st.integers(100, 400))
@settings(max_examples=50, deadline=None)
def test_monotone_in_clearance_limit(lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    b = via_and_trace(200)
    b2 = two_traces(420)
    for board in (b, b2):
        tight = check_board(board, DesignRuleSet(min_trace_clearance=hi, min_via_trace_clearance=hi))
        loose = check_board(board, DesignRuleSet(min_trace_clearance=lo, min_via_trace_clearance=lo))
        assert {v.sort_key() for v in loose} <= {v.sort_key() for v in tight}


# --- distance kernel against the sampling oracle -------------------------------------


def _random_pair(rng):
    def seg():
        a = (rng.uniform(0, 5000), rng.uniform(0, 5000))
        ang = rng.uniform(0, 2 * math.pi)
        L = rng.uniform(0, 4000)
        b = (a[0] + L * math.cos(ang), a[1] + L * math.sin(ang))
        r = rng.uniform(50, 500)
        return ("seg", a, b, r), Shape.stroke((a, b), 2 * r)

    def circ():
        c = (rng.uniform(0, 5000), rng.uniform(0, 5000))
        r = rng.uniform(50, 600)
        return ("circle", c, r), Shape.circle(c, 2 * r)

    makers = [seg, circ]
    return rng.choice(makers)(), rng.choice(makers)()


def test_kernel_agrees_with_sampling_oracle_sample():
    rng = random.Random(2024)
    for _ in range(100):
        (oa, sa), (ob, sb) = _random_pair(rng)
        assert abs(min_distance(sa, sb) - sampled_distance(oa, ob)) <= 1.0


@given(
    st.floats(0, 5000), st.floats(0, 5000), st.floats(0, 5000), st.floats(0, 5000), st.floats(20, 800),
    st.floats(0, 5000), st.floats(0, 5000), st.floats(20, 800),
)
@settings(max_examples=200)
def test_kernel_symmetric(ax, ay, bx, by, w, cx, cy, d):
    s = Shape.stroke(((ax, ay), (bx, by)), w)
    c = Shape.circle((cx, cy), d)
    assert min_distance(s, c) == min_distance(c, s)


@given(st.floats(-1e5, 1e5), st.floats(-1e5, 1e5), st.floats(0, 2 * math.pi))
@settings(max_examples=200)
def test_kernel_rigid_motion_invariant(dx, dy, theta):
    def tf(p):
        x, y = p
        return (x * math.cos(theta) - y * math.sin(theta) + dx, x * math.sin(theta) + y * math.cos(theta) + dy)

    pts_a = [(0, 0), (3000, 500), (3500, 2500)]
    pts_b = [(1000, 1500), (4000, 1800)]
    base = min_distance(Shape.stroke(pts_a, 250), Shape.stroke(pts_b, 300))
    moved = min_distance(Shape.stroke([tf(p) for p in pts_a], 250), Shape.stroke([tf(p) for p in pts_b], 300))
    assert abs(base - moved) <= 1.0


# --- packages -----------------------------------------------------------------------


def _parts(*classes):
    fps = tuple(
        FootprintInstance(f"U{i}", cls, (Pad(f"U{i}.1", rect(2000 + 3000 * i, 2000, 600, 600), "top"),))
        for i, cls in enumerate(classes)
    )
    return Board("pk", square_outline(20000), footprints=fps)


def test_no_lead_only_is_silent():
    assert check_packages(_parts(PackageClass.NO_LEAD, PackageClass.NO_LEAD)) == []


def test_through_hole_microphone_warns():
    (w,) = check_packages(_parts(PackageClass.NO_LEAD, PackageClass.THROUGH_HOLE))
    assert w.severity is Severity.WARNING and w.features == ("U1",)
    assert "through-hole" in w.message


def test_warning_flag_off():
    b = _parts(PackageClass.THROUGH_HOLE, PackageClass.LEADED)
    assert len(check_packages(b)) == 2
    assert check_packages(b, DesignRuleSet(warn_on_leaded=False)) == []


def test_rule_set_validation_and_overrides():
    with pytest.raises(ValueError):
        DesignRuleSet(min_trace_width=0)
    with pytest.raises(ValueError, match="unknown"):
        DesignRuleSet().with_overrides(bogus=1)
    r = DesignRuleSet().with_overrides(min_trace_width=250)
    assert r.min_trace_width == 250 and r.digest() != DesignRuleSet().digest()


def test_violation_dict_in_mm():
    (v,) = check_board(Board("w", square_outline(20000), (Trace("T", "top", ((1000, 1000), (5000, 1000)), 150),)))
    d = violation_to_dict(v)
    assert d["measured_mm"] == 0.15 and d["limit_mm"] == 0.2 and d["rule"] == "trace_width"
