import json
import random
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgn.constructions import bump_template
from pgn.errors import DegenerateWindow, NotConcave, TemplateFormatError, TimeOutOfWindow
from pgn.randomized import random_template, random_weights
from pgn.templates import (Delta0, IndependentShift, closeness, closeness_report, convexify, d2,
                           d2_at, delta_integral, delta_profile, heights_at, is_separated,
                           is_significant, labels_at, make_interval, new_template, sample,
                           sample_csv, shift_height, shift_template, template_from_json,
                           template_to_json, trivial_template, validate, vanishing_number,
                           vertices)
from pgn.weights import delta_total, new_weights, xi

W = new_weights(["-6/5", "1/2", "7/10"])
A, B, C = Fr(-6, 5), Fr(1, 2), Fr(7, 10)


def figure_template():
    """The three-interval template with Eall = {-1.2, 0.5, 0.7}."""
    return new_template(W, (-7, 7), {
        1: [make_interval(-4, 0, [(-2, [A]), (Fr(1, 17), [B])]),
            make_interval(1, Fr(-17, 10), [(2, [A]), (Fr(55, 19), [C])])],
        2: [make_interval(-3, Fr(-3, 5), [(2, [A, B]), (4, [A, C]), (7, [B, C])])]})


# ---------------------------------------------------------------- sequences

def test_convexify():
    pts = list(enumerate([0, -1, -2, -1, 0]))
    assert convexify(pts) == [0, -1, -2, -1, 0]
    assert convexify(list(enumerate([0, 0, -1, 0, 0]))) == [0, Fr(-1, 2), -1, Fr(-1, 2), 0]


def test_shift_height():
    assert shift_height([0, -3, -4, -3, 0], [0, 2, 2, 2, 0]) == [0, -1, -2, -1, 0]
    assert shift_height([0, -1, -2, -1, 0], [0] * 5) == [0, -1, -2, -1, 0]
    assert shift_height([0, -1, 0], [0, 1, 0]) == [0, 0, 0]
    with pytest.raises(NotConcave):
        shift_height([0, -1, 0], [0, -1, 0])


def test_vanishing_number():
    assert vanishing_number([0, -1, 0], 1) == 1
    assert vanishing_number([0, -1, -2, -1, 0], 1) == 0
    assert vanishing_number([0, -1, -2, -1, 0], 2) == Fr(1, 2)
    assert vanishing_number([0, -2, -2, 0], 1) == 1


# ---------------------------------------------------------------- validation and vertices

def test_figure_template_is_valid():
    assert validate(figure_template()) == []


def test_slope_law_violation():
    d = json.loads(template_to_json(new_template(W, (0, 4), {
        1: [make_interval(0, 0, [(1, [A]), (3, [B])])]})))
    seg = d["levels"][0]["intervals"][0]["segments"][1]
    seg["height"] = str(Fr(-6, 5) + Fr(6, 10) * 2)      # slope 0.6 under {1/2}
    errs = validate(template_from_json(json.dumps(d)))
    assert any("slope" in e for e in errs)


def test_compatibility_violation():
    f = new_template(W, (0, 4), {
        1: [make_interval(0, 0, [(2, [A])])],
        2: [make_interval(0, 0, [(2, [B, C])])]})
    assert any("nest" in e for e in validate(f))


def test_figure_vertices():
    vs = {(v.t, v.level): v for v in vertices(figure_template())}
    t0 = vs[(Fr(-2), 1)]
    assert (t0.kind, t0.label_from, t0.label_to, t0.impacted) == ("nonnull", (A,), (B,), (0, 1, 2))
    t1 = vs[(Fr(4), 2)]
    assert (t1.kind, t1.label_from, t1.label_to, t1.impacted) == ("nonnull", (A, C), (B, C),
                                                                   (0, 2, 3))


def test_vertices_of_simple_templates():
    assert vertices(trivial_template(W, (0, 1))) == []
    f = new_template(W, (0, 4), {1: [make_interval(1, 0, [(Fr(3, 2), [A]), (Fr(27, 10), [B])])]})
    assert validate(f) == []
    assert [v.kind for v in vertices(f)] == ["open", "nonnull", "close"]


def test_trivial_template_properties():
    f = trivial_template(W, (0, 5))
    assert is_significant(f, 3) and is_separated(f, 3)
    assert closeness(f, f, Fr(1, 100))
    assert delta_profile(f) == [(0, 5, delta_total(W))]
    assert Delta0(f) == delta_total(W)
    with pytest.raises(DegenerateWindow):
        Delta0(trivial_template(W, (1, 1)))


def test_bump_not_close_to_trivial():
    f = bump_template(W, 0, Fr(17, 10), (0, Fr(17, 10)))
    peak = d2_at(f, Fr(1, 2), 1)
    assert peak == Fr(9, 10)
    g = trivial_template(W, f.window)
    assert not closeness(f, g, peak / 2)
    assert closeness_report(f, g, peak + 1) == []


def test_bump_integral():
    f = bump_template(W, 0, Fr(17, 10), (0, Fr(17, 10)))
    assert delta_integral(f) == Fr(221, 50)
    assert delta_integral(f) == Fr(17, 10) * (delta_total(W) - xi(W))


def test_shift_zero_is_identity():
    f = figure_template()
    assert shift_template(f, [0, 0, 0, 0]) == f
    assert shift_template(f, IndependentShift(Fr(0), {})) == f


def test_figure_shift_shrinks_then_removes_interval():
    f = figure_template()
    peak = max(d2_at(f, t, 1) for t in (Fr(1), Fr(2), Fr(55, 19)))
    assert peak == Fr(17, 10)
    g1 = shift_template(f, [0, 1, 1, 0])
    g2 = shift_template(f, [0, 2, 2, 0])
    mid1 = [iv for iv in g1.intervals(1) if iv.start > -2 and iv.end < 4]
    mid2 = [iv for iv in g2.intervals(1) if iv.start > -2 and iv.end < 4]
    assert len(mid1) == 1 and mid1[0].end - mid1[0].start < Fr(55, 19) - 1
    assert mid2 == []
    assert validate(g1) == [] and validate(g2) == []


# ---------------------------------------------------------------- sampling and I/O

def test_sample():
    f = bump_template(W, 0, Fr(17, 10), (0, Fr(17, 10)))
    assert sample(f, []) == []
    (t, hs, labs), = sample(f, [0])
    assert hs == [0, 0]
    (t, hs, labs), = sample(f, [Fr(1, 2)])
    assert hs[0] == A * Fr(1, 2)
    with pytest.raises(TimeOutOfWindow):
        sample(f, [2])


def test_sample_csv_format():
    f = bump_template(W, 0, Fr(17, 10), (0, Fr(17, 10)))
    text = sample_csv(f, [0, Fr(1, 4), Fr(1)], exact=True)
    lines = text.splitlines()
    assert lines[0] == "t,fH1,fH2,labels1,labels2"
    assert lines[1].split(",")[:3] == ["0", "0", "0"]
    assert lines[2] == "1/4,-3/10,-3/20,-6/5,*"
    assert lines[3].endswith(",1/2,*")


def test_json_round_trip_is_canonical():
    text = template_to_json(figure_template())
    assert template_to_json(template_from_json(text)) == text
    assert json.loads(text)["weights"] == ["-6/5", "1/2", "7/10"]


def test_malformed_json():
    with pytest.raises(TemplateFormatError):
        template_from_json('{"window": ["0", "1"]}')
    with pytest.raises(TemplateFormatError):
        template_from_json("not json")


# ---------------------------------------------------------------- properties

@st.composite
def random_templates(draw):
    seed = draw(st.integers(0, 10 ** 6))
    rng = random.Random(seed)
    w = random_weights(rng, draw(st.sampled_from([3, 4])))
    return random_template(w, rng)


@settings(max_examples=40, deadline=None)
@given(random_templates())
def test_random_templates_validate(f):
    assert validate(f) == []
    assert template_to_json(template_from_json(template_to_json(f))) == template_to_json(f)


@settings(max_examples=40, deadline=None)
@given(random_templates(), st.fractions(min_value=0, max_value=3, max_denominator=8))
def test_constant_shift_closeness_and_entropy(f, c):
    n = f.n
    rho = [c * l * (n - l) / (n - 1) for l in range(n + 1)]
    g = shift_template(f, rho)
    bound = max(rho)
    assert validate(g) == []
    if bound > 0:
        assert closeness(f, g, 3 * bound)
    assert Delta0(g) >= Delta0(f)


@settings(max_examples=40, deadline=None)
@given(random_templates())
def test_heights_are_convex_sequences(f):
    for t in sorted({iv.start for _, _, iv in f.all_intervals()} | set(f.window)):
        a = heights_at(f, t)
        assert a[0] == 0 and a[-1] == 0
        assert all(d2(a, l) >= 0 for l in range(1, f.n))
        labs = labels_at(f, t)
        for l, E in labs.items():
            assert E is None or len(E) == l
