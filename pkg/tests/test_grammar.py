import pytest
from hypothesis import given, settings, strategies as st

from itlearn.grammar import (
    ParseError, content_symbols, parse_correction, parse_instruction,
    parse_refexp, pluralize, render_correction, render_instruction,
    render_refexp,
)
from itlearn.logic import (
    A, EVERY, Quantifier, RefForm, THE_N, atom, conj, parse_refform_text,
    symbols_of,
)

# prompt example pairs: surface form -> printed logical form
GOLDEN_PAIRS = [
    ("a block", "<_a_q x.block(x)>"),
    ("the one block", "<_the_1_q x.block(x)>"),
    ("the two plain objects", "<_the_2_q x.plain(x) & object(x)>"),
    ("every magenta sphere", "<_every_q x.magenta(x) & sphere(x)>"),
    ("a sphere to the left of every green cone",
     "<_a_q x._every_q x1.(green(x1) & cone(x1), sphere(x) & left(x,x1))>"),
    ("every sphere to the left of every green object",
     "<_every_q x._every_q x1.(green(x1) & object(x1), sphere(x) & left(x,x1))>"),
    ("a sphere to the right of the two green cones",
     "<_a_q x._the_2_q x1.(green(x1) & cone(x1), sphere(x) & right(x,x1))>"),
    ("the one sphere in front of every green cone",
     "<_the_1_q x._every_q x1.(green(x1) & cone(x1), sphere(x) & front(x,x1))>"),
    ("the two spheres behind a green cone",
     "<_the_2_q x._a_q x1.(green(x1) & cone(x1), sphere(x) & behind(x,x1))>"),
]


@pytest.mark.parametrize("surface,logical_form", GOLDEN_PAIRS)
def test_prompt_examples_parse_to_printed_forms(surface, logical_form):
    assert parse_refexp(surface) == parse_refform_text(logical_form)


def test_the_one_red_cube():
    got = parse_refexp("the one red cube")
    assert got == RefForm(Quantifier(THE_N, n=1), "x",
                          conj([atom("red", "x"), atom("cube", "x")]))


def test_the_two_granny_smiths():
    got = parse_refexp("the two granny smiths")
    assert got == RefForm(Quantifier(THE_N, n=2), "x", atom("grannysmith", "x"))


def test_granny_smith_apples_same_symbol():
    assert parse_refexp("the two granny smith apples") == \
        parse_refexp("the two granny smiths")


def test_all_cubes_equals_every_cube():
    assert parse_refexp("all cubes") == parse_refexp("every cube")


def test_unknown_words_become_symbols_not_errors():
    got = parse_refexp("a frobnic wug")
    assert {s.name for s in symbols_of(got.restrictor)} == {"frobnic", "wug"}


def test_unknown_plural_strips_s_when_expected():
    got = parse_refexp("the two wugs")
    assert {s.name for s in symbols_of(got.restrictor)} == {"wug"}


def test_unknown_determiner_is_error_with_position():
    with pytest.raises(ParseError):
        parse_refexp("whatever cube")


def test_empty_noun_is_error():
    with pytest.raises(ParseError):
        parse_refexp("the two")


def test_parse_instruction_example():
    t = parse_instruction("move every red cylinder to the left of the one cube")
    assert t.direct == parse_refexp("every red cylinder")
    assert t.relation == "left"
    assert t.indirect == parse_refexp("the one cube")


def test_parse_instruction_put_inside():
    t = parse_instruction("put the two granny smiths inside the basket")
    assert t.direct == parse_refexp("the two granny smiths")
    assert t.relation == "inside"
    assert t.indirect == RefForm(Quantifier(THE_N, n=1), "x", atom("basket", "x"))


def test_parse_instruction_existential_pair():
    t = parse_instruction("move a cube behind a cylinder")
    assert t.direct.quant == Quantifier(A)
    assert t.indirect.quant == Quantifier(A)
    assert t.relation == "behind"


def test_parse_instruction_missing_relation():
    with pytest.raises(ParseError):
        parse_instruction("move a cube a cylinder")


def test_parse_correction_examples():
    c = parse_correction("No. This is a cylinder.", ("o3",))
    assert c.refexp == RefForm(Quantifier(A), "x", atom("cylinder", "x"))
    assert c.designated == "o3"
    c2 = parse_correction("No. This is a golden delicious.", ("o2",))
    assert {s.name for s in symbols_of(c2.refexp.restrictor)} == {"goldendelicious"}


def test_correction_without_copula_is_error():
    with pytest.raises(ParseError):
        parse_correction("No. That cube.", ("o1",))


def test_correction_requires_single_designation():
    with pytest.raises(ParseError):
        parse_correction("No. This is a cube.", ("o1", "o2"))


def test_render_examples():
    assert render_refexp(parse_refexp("the two granny smiths")) == "the two granny smiths"
    assert render_refexp(parse_refexp("every red cylinder")) == "every red cylinder"
    assert render_refexp(parse_refexp("a sphere to the left of every green cone")) == \
        "a sphere to the left of every green cone"
    assert render_refexp(parse_refexp("an object")) == "an object"


def test_render_instruction_and_correction():
    t = parse_instruction("put the two granny smiths inside the one basket")
    assert render_instruction(t) == "put the two granny smiths inside the one basket"
    c = parse_correction("No. This is a russet.", ("o1",))
    assert render_correction(c) == "No. This is a russet."


def test_pluralize_irregulars():
    assert pluralize("grannysmith") == "granny smiths"
    assert pluralize("pinklady") == "pink ladies"
    assert pluralize("goldendelicious") == "golden deliciouses"
    assert pluralize("cube") == "cubes"


# -- round-trip property -------------------------------------------------------

_COLORS = ["red", "green", "blue", "cyan", "grey", "magenta", "yellow"]
_TEXTURES = ["plain", "dotted", "star"]
_HEADS = ["cube", "rectangle", "cylinder", "sphere", "cone", "object", "basket",
          "grannysmith", "russet"]
_RELS = ["left", "right", "front", "behind", "inside"]


def _quantifiers():
    return st.one_of(
        st.just(Quantifier(A)),
        st.just(Quantifier(EVERY)),
        st.builds(lambda n: Quantifier(THE_N, n=n), st.integers(1, 4)),
        st.builds(lambda n: Quantifier("exactly_n", n=n), st.integers(1, 4)),
        st.builds(lambda n: Quantifier("at_least_n", n=n), st.integers(1, 4)),
        st.builds(lambda n: Quantifier("at_most_n", n=n), st.integers(1, 4)),
        st.just(Quantifier("both")),
        st.builds(lambda n: Quantifier("all_but_n", n=n), st.integers(1, 3)),
        st.builds(lambda nm: Quantifier("n_of_the_m", n=min(nm), m=max(nm) + 1),
                  st.tuples(st.integers(1, 3), st.integers(1, 3))),
    )


def _simple_refexp(depth):
    mods = st.lists(st.sampled_from(_COLORS + _TEXTURES), max_size=2, unique=True)

    def build(quant, mods, head, pp):
        var = "x" if depth == 0 else f"x{depth}"
        atoms = [atom(s, var) for s in mods + [head]]
        if pp is None:
            return RefForm(quant, var, conj(atoms))
        rel, inner = pp
        body = conj(atoms + [atom(rel, var, inner.var)])
        from itlearn.logic import GQ
        return RefForm(quant, var, GQ(inner.quant, inner.var, inner.restrictor, body))

    pp = st.none() if depth >= 2 else st.one_of(
        st.none(),
        st.tuples(st.sampled_from(_RELS), st.deferred(lambda: _simple_refexp(depth + 1))),
    )
    return st.builds(build, _quantifiers(), mods, st.sampled_from(_HEADS), pp)


@settings(max_examples=300, deadline=None)
@given(_simple_refexp(0))
def test_round_trip_parse_render(r):
    assert parse_refexp(render_refexp(r)) == r


def test_content_symbols_in_surface_order():
    r = parse_refexp("a plain red sphere behind every green cone")
    assert content_symbols(r) == ["plain", "red", "sphere", "green", "cone"]


def test_parsing_total_over_task_distribution():
    # 10^4 sampled instructions, zero parse errors
    import numpy as np
    from itlearn.blocks import SceneSpec, generate_scene, generate_task
    parsed = 0
    rng = np.random.default_rng(123)
    for scene_idx in range(250):
        scene = generate_scene(50_000 + scene_idx,
                               SceneSpec(container=scene_idx % 3 == 0))
        for _ in range(40):
            t = generate_task(scene, rng)
            again = parse_instruction(t.raw)
            assert again == t
            parsed += 1
    assert parsed == 10_000
