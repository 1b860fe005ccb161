import itertools

import pytest
from hypothesis import given, settings, strategies as st

from itlearn.logic import (
    A, ALL_BUT_N, AT_LEAST_N, AT_MOST_N, BOTH, EVERY, EXACTLY_N, N_OF_THE_M,
    THE_N, And, EvaluationError, GQ, Implies, LogicError, Not, Or,
    Quantifier, RefForm, Symbol, atom, conj, eval_formula,
    format_formula, format_refform, herbrand_base, make_model,
    parse_formula_text, parse_refform_text, project_model,
    referent_of, satisfiers, substitute, well_formed,
)


def model_two_cubes():
    return make_model(["o1", "o2"], [Symbol("cube", 1)], [("cube", "o1"), ("cube", "o2")])


def test_herbrand_base_direct_expansion():
    base = herbrand_base(["o1", "o2"], [Symbol("cube", 1)])
    assert base == (("cube", ("o1",)), ("cube", ("o2",)))


def test_herbrand_base_two_symbols():
    base = herbrand_base(["o1"], [Symbol("red", 1), Symbol("cube", 1)])
    assert base == (("red", ("o1",)), ("cube", ("o1",)))


def test_herbrand_base_count_for_seven_objects_thirteen_symbols():
    objects = [f"o{i}" for i in range(7)]
    vocab = [Symbol(f"p{i}", 1) for i in range(13)]
    assert len(herbrand_base(objects, vocab)) == 91


def test_eval_atom_and_negation():
    m = model_two_cubes()
    assert eval_formula(m, {}, atom("cube", "o1")) is True
    assert eval_formula(m, {}, Not(atom("cube", "o1"))) is False


def test_eval_the_two_quantifier():
    m = model_two_cubes()
    phi = GQ(Quantifier(THE_N, n=2), "x", atom("cube", "x"), atom("cube", "x"))
    assert eval_formula(m, {}, phi) is True


def test_eval_unknown_symbol_names_it():
    m = model_two_cubes()
    with pytest.raises(EvaluationError, match="sphere"):
        eval_formula(m, {}, atom("sphere", "o1"))


def test_eval_unbound_variable():
    m = model_two_cubes()
    with pytest.raises(EvaluationError, match="x"):
        eval_formula(m, {}, atom("cube", "x"))


def test_project_model_definition_instance():
    m = make_model(["o1", "o2", "o3"], [Symbol("cube", 1)],
                   [("cube", "o1"), ("cube", "o3")])
    projected = project_model(m, atom("cube", "x"), "x")
    assert projected.objects == ("o1", "o3")


def test_project_model_disjoint_conjunction_empty():
    m = make_model(["o1", "o2"], [Symbol("red", 1), Symbol("cube", 1)],
                   [("red", "o1"), ("cube", "o2")])
    projected = project_model(m, conj([atom("red", "x"), atom("cube", "x")]), "x")
    assert projected.objects == ()


def test_project_model_nested_gq_matches_per_object_oracle():
    m = make_model(
        ["o1", "o2", "o3"],
        [Symbol("cube", 1), Symbol("red", 1), Symbol("left", 2)],
        [("cube", "o1"), ("cube", "o2"), ("red", "o3"),
         ("left", "o1", "o3"), ("left", "o2", "o1")],
    )
    # cubes that are to the left of a red thing
    phi = GQ(Quantifier(A), "x1", atom("red", "x1"),
             conj([atom("cube", "x"), atom("left", "x", "x1")]))
    projected = project_model(m, phi, "x")
    oracle = tuple(o for o in m.objects if eval_formula(m, {"x": o}, phi))
    assert projected.objects == oracle == ("o1",)


def test_projection_idempotent():
    m = make_model(["o1", "o2", "o3"], [Symbol("cube", 1)], [("cube", "o2")])
    phi = atom("cube", "x")
    once = project_model(m, phi, "x")
    twice = project_model(once, phi, "x")
    assert once.objects == twice.objects
    assert once.interpretation == twice.interpretation


def test_referent_every_denotes_maximal_set():
    m = model_two_cubes()
    r = RefForm(Quantifier(EVERY), "x", atom("cube", "x"))
    assert referent_of(m, r) == frozenset([frozenset(["o1", "o2"])])


def test_referent_existential_denotes_singletons():
    m = model_two_cubes()
    r = RefForm(Quantifier(A), "x", atom("cube", "x"))
    assert referent_of(m, r) == frozenset([frozenset(["o1"]), frozenset(["o2"])])


def test_referent_failure_is_empty_outer_set():
    m = make_model(["o1"], [Symbol("red", 1)], [])
    r = RefForm(Quantifier(THE_N, n=1), "x", atom("red", "x"))
    assert referent_of(m, r) == frozenset()


def _oracle_referent(model, quant, restrictor, var):
    """Direct set-comprehension over all subsets: members satisfy the
    restrictor and the quantifier's cardinality conditions hold."""
    sat = set(satisfiers(model, restrictor, var))
    k = len(sat)
    out = set()
    for size in range(len(model.objects) + 1):
        for combo in itertools.combinations(model.objects, size):
            a = frozenset(combo)
            if not a <= sat:
                continue
            n, m = quant.n, quant.m
            kind = quant.kind
            ok = {
                EXACTLY_N: lambda: len(a) == n,
                AT_MOST_N: lambda: len(a) <= n,
                AT_LEAST_N: lambda: len(a) >= n,
                A: lambda: len(a) == 1,
                EVERY: lambda: len(a) == k and k > 0,
                THE_N: lambda: len(a) == k and k == n,
                BOTH: lambda: len(a) == k and k == 2,
                ALL_BUT_N: lambda: len(a) == k - n and k > n,
                N_OF_THE_M: lambda: len(a) == n and k == m,
            }[kind]()
            if ok:
                out.add(a)
    return frozenset(out)


def _all_quantifiers(max_n):
    qs = [Quantifier(A), Quantifier(EVERY), Quantifier(BOTH)]
    for n in range(0, max_n + 1):
        for kind in (EXACTLY_N, AT_MOST_N, AT_LEAST_N, THE_N, ALL_BUT_N):
            qs.append(Quantifier(kind, n=n))
        for m in range(n, max_n + 1):
            qs.append(Quantifier(N_OF_THE_M, n=n, m=m))
    return qs


def test_referents_match_comprehension_oracle_exhaustively():
    restrictor = atom("p", "x")
    for size in range(0, 5):
        objects = [f"o{i}" for i in range(size)]
        for true_mask in itertools.product([False, True], repeat=size):
            facts = [("p", o) for o, t in zip(objects, true_mask) if t]
            if not objects:
                continue
            m = make_model(objects, [Symbol("p", 1)], facts)
            r_proj = project_model(m, restrictor, "x")
            for quant in _all_quantifiers(4):
                got = referent_of(m, RefForm(quant, "x", restrictor))
                want = _oracle_referent(m, quant, restrictor, "x")
                assert got == want, (quant, true_mask)


def test_referent_members_satisfy_restrictor():
    m = make_model(["o1", "o2", "o3"], [Symbol("p", 1)], [("p", "o1"), ("p", "o2")])
    for quant in _all_quantifiers(3):
        for member in referent_of(m, RefForm(quant, "x", atom("p", "x"))):
            for o in member:
                assert eval_formula(m, {}, atom("p", o))


def test_definite_referents_have_at_most_one_member():
    for size in range(1, 5):
        objects = [f"o{i}" for i in range(size)]
        for true_mask in itertools.product([False, True], repeat=size):
            facts = [("p", o) for o, t in zip(objects, true_mask) if t]
            m = make_model(objects, [Symbol("p", 1)], facts)
            for quant in [Quantifier(THE_N, n=2), Quantifier(BOTH), Quantifier(EVERY)]:
                assert len(referent_of(m, RefForm(quant, "x", atom("p", "x")))) <= 1
            for member in referent_of(m, RefForm(Quantifier(A), "x", atom("p", "x"))):
                assert len(member) == 1


# -- classical equivalences on random ground formulas ------------------------

def _ground_formulas(objects, symbols):
    leaves = st.sampled_from([atom(p, o) for p in symbols for o in objects])

    def extend(children):
        return st.one_of(
            children.map(Not),
            st.tuples(children, children).map(lambda ab: And(ab)),
            st.tuples(children, children).map(lambda ab: Or(ab)),
            st.tuples(children, children).map(lambda ab: Implies(*ab)),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@settings(max_examples=120, deadline=None)
@given(data=st.data())
def test_classical_equivalences(data):
    objects = ["o1", "o2"]
    symbols = ["p", "q"]
    phi = data.draw(_ground_formulas(objects, symbols))
    psi = data.draw(_ground_formulas(objects, symbols))
    mask = data.draw(st.tuples(*[st.booleans() for _ in range(4)]))
    facts = [(p, o) for (p, o), t in
             zip([(p, o) for p in symbols for o in objects], mask) if t]
    m = make_model(objects, [Symbol(p, 1) for p in symbols], facts)
    assert eval_formula(m, {}, Not(Not(phi))) == eval_formula(m, {}, phi)
    assert eval_formula(m, {}, Not(And((phi, psi)))) == \
        eval_formula(m, {}, Or((Not(phi), Not(psi))))
    assert eval_formula(m, {}, Implies(phi, psi)) == \
        eval_formula(m, {}, Or((Not(phi), psi)))


# -- serialization ------------------------------------------------------------

def test_format_matches_reference_notation():
    phi = GQ(Quantifier(THE_N, n=2), "x", atom("grannysmith", "x"), atom("object", "x"))
    assert format_formula(phi) == "_the_2_q x.(grannysmith(x), object(x))"


def test_refform_format_and_parse_round_trip():
    r = RefForm(Quantifier(THE_N, n=2), "x", atom("grannysmith", "x"))
    text = format_refform(r)
    assert text == "<_the_2_q x.grannysmith(x)>"
    assert parse_refform_text(text) == r


def test_formula_text_round_trip_nested():
    phi = GQ(Quantifier(A), "x1",
             conj([atom("green", "x1"), atom("cone", "x1")]),
             conj([atom("sphere", "x"), atom("left", "x", "x1")]))
    assert parse_formula_text(format_formula(phi)) == phi


def test_parse_formula_accepts_neg_and_wedge():
    got = parse_formula_text("neg(red(o1) ∧ cube(o1))")
    assert got == Not(And((atom("red", "o1"), atom("cube", "o1"))))


def test_wellformedness_rejects_rebinding():
    inner = GQ(Quantifier(A), "x", atom("p", "x"), atom("p", "x"))
    outer = GQ(Quantifier(A), "x", inner, atom("p", "x"))
    assert not well_formed(outer)
    assert well_formed(GQ(Quantifier(A), "x", atom("p", "x"), atom("p", "x")))


def test_substitute_respects_binding():
    inner = GQ(Quantifier(A), "x1", atom("p", "x1"), atom("q", "x1"))
    assert substitute(inner, "x1", "o1") == inner
    open_phi = conj([atom("p", "x"), atom("q", "x")])
    assert substitute(open_phi, "x", "o2") == conj([atom("p", "o2"), atom("q", "o2")])


def test_symbol_and_quantifier_validation():
    with pytest.raises(LogicError):
        Symbol("", 1)
    with pytest.raises(LogicError):
        Symbol("p", 3)
    with pytest.raises(LogicError):
        Quantifier(THE_N)  # missing n
    with pytest.raises(LogicError):
        Quantifier(A, n=1)
