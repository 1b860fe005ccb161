import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from itlearn.grounding import (
    GroundingConfig, GroundingUnavailable, LITERAL, PrototypePair,
    SupportEntry, admission_bounds, bernoulli_entropy, build_supports,
    compute_prototypes, predict_one, prototypes_for, sigmoid,
)


def entry(vec, y):
    return SupportEntry(tuple(vec), {"p": y})


def test_bernoulli_entropy_values():
    assert bernoulli_entropy(0.5) == pytest.approx(math.log(2))
    assert bernoulli_entropy(0.0) == 0.0
    assert bernoulli_entropy(1.0) == 0.0
    assert bernoulli_entropy(0.9) == pytest.approx(0.3251, abs=1e-4)
    # 0.9 plus 0.5: hand-computed total in nats
    assert bernoulli_entropy(0.9) + bernoulli_entropy(0.5) == pytest.approx(1.0182, abs=1e-4)


def test_admission_bounds_reproduce_tau():
    lo, hi = admission_bounds(0.65)
    assert lo == pytest.approx(0.354, abs=1e-3)
    assert hi == pytest.approx(0.646, abs=1e-3)


def test_support_admission_examples():
    cfg = GroundingConfig()
    entries = [entry([1, 0], 0.9), entry([0, 1], 0.6), entry([1, 1], 0.2)]
    pos, neg = build_supports(entries, "p", cfg)
    assert pos == [entries[0]]          # H(0.9) ~ 0.325 <= 0.65
    assert neg == [entries[2]]          # H(0.2) ~ 0.500 <= 0.65
    assert entries[1] not in pos + neg  # H(0.6) ~ 0.673 > 0.65


def test_admission_boundary_values():
    cfg = GroundingConfig()
    inside_pos, _ = build_supports([entry([1, 0], 0.646)], "p", cfg)
    assert len(inside_pos) == 1
    _, inside_neg = build_supports([entry([1, 0], 0.354)], "p", cfg)
    assert len(inside_neg) == 1
    out_pos, out_neg = build_supports([entry([1, 0], 0.645)], "p", cfg)
    assert not out_pos and not out_neg


def test_single_positive_prototype_is_the_embedding():
    e = entry([2.0, 0.0], 1.0)
    pair = compute_prototypes([e], [], [e], "p")
    assert np.allclose(pair.positive, [2.0, 0.0])


def test_two_positive_prototype_is_mean():
    e1, e2 = entry([2.0, 0.0], 1.0), entry([0.0, 2.0], 1.0)
    pair = compute_prototypes([e1, e2], [], [e1, e2], "p")
    assert np.allclose(pair.positive, [1.0, 1.0])


def test_fallback_uses_largest_entropy_for_positive_side():
    high = entry([1.0, 0.0], 0.4)   # H ~ 0.673 (largest)
    low = entry([0.0, 1.0], 0.05)   # H ~ 0.199 (smallest)
    pair = compute_prototypes([], [low], [high, low], "p")
    assert pair.positive_fallback
    assert np.allclose(pair.positive, [1.0, 0.0])


def test_fallback_uses_smallest_entropy_for_negative_side():
    high = entry([1.0, 0.0], 0.6)
    low = entry([0.0, 1.0], 0.95)
    pair = compute_prototypes([entry([1, 1], 0.9)], [], [high, low], "p")
    assert pair.negative_fallback
    assert np.allclose(pair.negative, [0.0, 1.0])


def test_empty_support_is_an_error():
    with pytest.raises(GroundingUnavailable):
        compute_prototypes([], [], [], "p")


def test_predict_equidistant_is_half():
    cfg = GroundingConfig()
    pair = PrototypePair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert predict_one(np.array([1.0, 1.0]), pair, cfg) == pytest.approx(0.5)


def test_predict_at_positive_prototype():
    cfg = GroundingConfig(scale=5.0)
    pair = PrototypePair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    got = predict_one(np.array([1.0, 0.0]), pair, cfg)
    assert got == pytest.approx(sigmoid(5.0), abs=1e-9)
    assert got == pytest.approx(0.9933, abs=1e-4)


def test_predict_at_negative_prototype_symmetric():
    cfg = GroundingConfig(scale=5.0)
    pair = PrototypePair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert predict_one(np.array([0.0, 1.0]), pair, cfg) == pytest.approx(0.0067, abs=1e-4)


def test_zero_norm_query_is_error():
    pair = PrototypePair(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        predict_one(np.array([0.0, 0.0]), pair, GroundingConfig())


def test_identical_prototypes_tie_at_half():
    pair = PrototypePair(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    assert predict_one(np.array([3.0, 0.1]), pair, GroundingConfig()) == 0.5
    assert predict_one(np.array([3.0, 0.1]), pair, GroundingConfig(sign_mode=LITERAL)) == 0.5


def test_literal_mode_matches_printed_formula():
    cfg = GroundingConfig(sign_mode=LITERAL)
    z_pos = np.array([1.0, 0.0])
    z_neg = np.array([0.0, 1.0])
    pair = PrototypePair(z_pos, z_neg)
    x = np.array([1.0, 0.0])
    diff = z_neg - z_pos
    want = sigmoid(float(diff @ x) / (np.linalg.norm(diff) * np.linalg.norm(x)))
    assert predict_one(x, pair, cfg) == pytest.approx(want)
    # the literal sign increases toward the negative prototype
    assert predict_one(z_neg, pair, cfg) > 0.5 > predict_one(z_pos, pair, cfg)


def test_corrected_mode_prototype_sanity():
    cfg = GroundingConfig()
    rng = np.random.default_rng(0)
    for _ in range(50):
        z_pos = rng.normal(size=4)
        z_neg = rng.normal(size=4)
        if np.allclose(z_pos, z_neg):
            continue
        pair = PrototypePair(z_pos, z_neg)
        assert predict_one(z_pos, pair, cfg) > 0.5 > predict_one(z_neg, pair, cfg)


def test_adding_identical_positive_exemplar_never_decreases_prediction():
    # production supports always carry prior-valued entries from the current
    # scene, so the draw includes at least one mid-range label
    cfg = GroundingConfig()
    rng = np.random.default_rng(1)
    for _ in range(30):
        entries = [entry(rng.normal(size=4), float(rng.uniform(0, 1))) for _ in range(3)]
        entries.append(entry(rng.normal(size=4), 0.5))
        x = rng.normal(size=4)
        before = predict_one(x, prototypes_for(entries, "p", cfg), cfg)
        entries.append(entry(x, 1.0))
        after = predict_one(x, prototypes_for(entries, "p", cfg), cfg)
        assert after >= before - 1e-9


@settings(max_examples=60, deadline=None)
@given(st.permutations(list(range(5))))
def test_prototypes_permutation_invariant(order):
    rng = np.random.default_rng(9)
    entries = [entry(rng.normal(size=3), y) for y in (0.9, 0.8, 0.2, 0.1, 0.7)]
    base = prototypes_for(entries, "p", GroundingConfig())
    shuffled = prototypes_for([entries[i] for i in order], "p", GroundingConfig())
    assert np.allclose(base.positive, shuffled.positive)
    assert np.allclose(base.negative, shuffled.negative)


def test_config_validation():
    with pytest.raises(ValueError):
        GroundingConfig(tau=0.8)
    with pytest.raises(ValueError):
        GroundingConfig(scale=0.0)
    with pytest.raises(ValueError):
        GroundingConfig(sign_mode="upside_down")
