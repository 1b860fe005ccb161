import math

import numpy as np
import pytest

from itlearn.belief import (
    InconsistencyError, add_neologism, begin_scene, belief_entropy, con_prior,
    initial_belief, map_confidence, map_model, posterior_entropy,
    posterior_entropy_conditioning, revise_with, snapshot, update_belief,
)
from itlearn.discourse import AnalysisMode, sentence_semantics
from itlearn.grammar import parse_refexp
from itlearn.grounding import GroundingConfig
from itlearn.logic import Not, atom, conj, eval_formula


def fresh_belief(n_objects=4, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    objects = [f"o{i + 1}" for i in range(n_objects)]
    embeddings = {o: tuple(rng.normal(size=dim)) for o in objects}
    return initial_belief(objects, embeddings, relation_atoms={},
                          grounding=GroundingConfig(dim=dim))


def test_add_neologism_defaults_to_half():
    b = add_neologism(fresh_belief(), "grannysmith")
    assert all(v == 0.5 for v in b.prior_weights.values())
    assert all(v == 0.5 for v in b.grounded_weights.values())
    assert all(e.labels["grannysmith"] == 0.5 for e in b.support)


def test_add_neologism_detector_scored_prior():
    b = add_neologism(fresh_belief(), "grannysmith", prior={"o1": 0.3})
    assert b.prior_weights[("grannysmith", ("o1",))] == 0.3
    assert b.prior_weights[("grannysmith", ("o2",))] == 0.5


def test_add_neologism_entropy_increment():
    b0 = add_neologism(fresh_belief(), "cube")
    h0 = belief_entropy(b0)
    b1 = add_neologism(b0, "red")
    assert belief_entropy(b1) - h0 == pytest.approx(len(b1.objects) * math.log(2))


def test_duplicate_neologism_is_noop():
    b = add_neologism(fresh_belief(), "cube")
    assert add_neologism(b, "cube") is b


def test_update_asserted_atom_pins_label():
    b = add_neologism(fresh_belief(), "grannysmith")
    b = update_belief(b, atom("grannysmith", "o1"))
    assert b.support[0].labels["grannysmith"] == 1.0
    assert b.support[1].labels["grannysmith"] == 0.5


def test_update_negated_atom_pins_label_to_zero():
    b = add_neologism(fresh_belief(), "grannysmith")
    b = update_belief(b, Not(atom("grannysmith", "o2")))
    assert b.support[1].labels["grannysmith"] == 0.0


def test_update_is_idempotent():
    b = add_neologism(fresh_belief(), "cube")
    phi = atom("cube", "o1")
    once = update_belief(b, phi)
    twice = update_belief(once, phi)
    assert once == twice


def test_update_order_insensitive_for_commuting_assertions():
    b = add_neologism(add_neologism(fresh_belief(), "cube"), "red")
    phi, psi = atom("cube", "o1"), Not(atom("red", "o2"))
    ab = update_belief(update_belief(b, phi), psi)
    ba = update_belief(update_belief(b, psi), phi)
    assert set(ab.theory) == set(ba.theory)
    assert ab.support == ba.support
    assert ab.grounded_weights == ba.grounded_weights


def test_con_of_theory_member_is_one():
    b = add_neologism(fresh_belief(), "cube")
    phi = atom("cube", "o1")
    b = update_belief(b, phi)
    assert con_prior(b, phi) == pytest.approx(1.0)


def test_granny_smith_designation_pins_conditionals():
    # four apples; "the two granny smiths" pointed at {o1, o2}
    b = add_neologism(fresh_belief(4), "grannysmith")
    r = parse_refexp("the two granny smiths")
    phi = sentence_semantics(r, [frozenset(["o1", "o2"])], b.objects, AnalysisMode("secure"))
    b = update_belief(b, phi)
    for o in ("o1", "o2"):
        assert con_prior(b, atom("grannysmith", o)) == pytest.approx(1.0)
    for o in ("o3", "o4"):
        assert con_prior(b, atom("grannysmith", o)) == pytest.approx(0.0)


def test_inconsistency_error_then_recovery_drops_oldest():
    b = add_neologism(fresh_belief(), "cube")
    b = update_belief(b, atom("cube", "o1"))
    with pytest.raises(InconsistencyError):
        update_belief(b, Not(atom("cube", "o1")))
    revised, dropped = revise_with(b, Not(atom("cube", "o1")))
    assert dropped == [atom("cube", "o1")]
    assert revised.support[0].labels["cube"] == 0.0


def test_map_model_satisfies_theory():
    b = add_neologism(add_neologism(fresh_belief(), "cube"), "red")
    phi = conj([atom("cube", "o1"), Not(atom("red", "o3"))])
    b = update_belief(b, phi)
    m = map_model(b)
    assert eval_formula(m, {}, phi)
    assert 0.0 < map_confidence(b) <= 1.0


def test_posterior_entropy_matches_full_update():
    b = add_neologism(add_neologism(fresh_belief(), "cube"), "red")
    b = update_belief(b, Not(atom("red", "o1")))
    for phi in [atom("cube", "o2"),
                conj([atom("cube", "o1"), atom("red", "o2")]),
                Not(conj([atom("cube", "o3"), atom("red", "o3")]))]:
        shortcut = posterior_entropy(b, phi)
        full = belief_entropy(update_belief(b, phi))
        assert shortcut == pytest.approx(full, abs=1e-9)


def test_posterior_entropy_matches_full_update_on_cardinality_theory():
    # twelve coupled atoms: the cardinality dynamic program serves this path
    from itlearn.discourse import presupposition
    from itlearn.grammar import parse_refexp
    b = add_neologism(add_neologism(fresh_belief(6), "dotted"), "object")
    presup = presupposition(parse_refexp("the two dotted objects"))
    b = update_belief(b, presup)
    for phi in [atom("dotted", "o1"),
                conj([atom("dotted", "o2"), atom("object", "o2")]),
                Not(conj([atom("dotted", "o3"), atom("object", "o3")]))]:
        assert posterior_entropy(b, phi) == pytest.approx(
            belief_entropy(update_belief(b, phi)), abs=1e-9)


def test_posterior_conditioning_never_raises_entropy_in_expectation():
    b = add_neologism(fresh_belief(2), "cube")
    h = belief_entropy(b)
    post_true = posterior_entropy_conditioning(b, atom("cube", "o1"))
    post_false = posterior_entropy_conditioning(b, Not(atom("cube", "o1")))
    assert 0.5 * post_true + 0.5 * post_false <= h + 1e-9


def test_begin_scene_archives_support_and_resets_theory():
    b = add_neologism(fresh_belief(3), "cube")
    b = update_belief(b, atom("cube", "o1"))
    rng = np.random.default_rng(5)
    new_objects = ["n1", "n2"]
    emb = {o: tuple(rng.normal(size=4)) for o in new_objects}
    b2 = begin_scene(b, new_objects, emb, relation_atoms={})
    assert len(b2.memory) == 3
    assert b2.theory == ()
    assert b2.objects == ("n1", "n2")
    assert set(b2.vocabulary) == {"cube"}
    # archived evidence drives predictions for the new scene
    assert set(b2.grounded_weights) == {("cube", ("n1",)), ("cube", ("n2",))}


def test_begin_scene_prior_fn():
    b = add_neologism(fresh_belief(2), "plain")
    rng = np.random.default_rng(6)
    emb = {"n1": tuple(rng.normal(size=4))}
    b2 = begin_scene(b, ["n1"], emb, relation_atoms={},
                     prior_fn=lambda sym, o: 0.7 if sym == "plain" else 0.5)
    assert b2.prior_weights[("plain", ("n1",))] == 0.7


def test_snapshot_is_json_ready_and_deterministic():
    import json
    b = add_neologism(fresh_belief(2), "cube")
    b = update_belief(b, atom("cube", "o1"))
    s1 = json.dumps(snapshot(b), sort_keys=True)
    s2 = json.dumps(snapshot(b), sort_keys=True)
    assert s1 == s2
    assert "cube(o1)" in s1


def test_update_requires_known_symbols():
    b = fresh_belief()
    with pytest.raises(ValueError, match="neologism"):
        update_belief(b, atom("cube", "o1"))


def test_update_requires_closed_formula():
    b = add_neologism(fresh_belief(), "cube")
    with pytest.raises(ValueError, match="closed"):
        update_belief(b, atom("cube", "x"))
