import math

import numpy as np
import pytest

from src.errors import DegenerateSupport, InvalidDistribution, InvalidTransform
from src.transforms import (
    Greedy,
    LengthPenalty,
    Nucleus,
    Stochastic,
    Temperature,
    TopK,
    TransformSpec,
    parse_transform,
)


def _random_distribution(rng, size, zeros=True):
    p = rng.random(size)
    if zeros:
        p *= rng.random(size) < 0.7
    if not p.any():
        p[rng.integers(size)] = 1.0
    return p / p.sum()


def test_topk_example():
    out = TransformSpec.of(TopK(2)).apply([0.5, 0.3, 0.2])
    np.testing.assert_allclose(out, [0.625, 0.375, 0.0])


def test_nucleus_includes_crossing_element():
    out = TransformSpec.of(Nucleus(0.9)).apply([0.5, 0.3, 0.15, 0.05])
    np.testing.assert_allclose(out, [10 / 19, 6 / 19, 3 / 19, 0.0])


def test_nucleus_exact_boundary_and_full_mass():
    out = TransformSpec.of(Nucleus(0.8)).apply([0.5, 0.3, 0.2])
    np.testing.assert_allclose(out, [0.625, 0.375, 0.0])
    p = [0.1, 0.2, 0.3, 0.4]
    np.testing.assert_allclose(TransformSpec.of(Nucleus(1.0)).apply(p), p)


def test_length_penalty_example():
    out = TransformSpec.of(LengthPenalty(math.log(2.0))).apply([0.5, 0.5])
    np.testing.assert_allclose(out, [1 / 3, 2 / 3])


def test_length_penalty_keeps_zero_eos():
    out = TransformSpec.of(LengthPenalty(5.0)).apply([0.4, 0.6, 0.0])
    np.testing.assert_allclose(out, [0.4, 0.6, 0.0])


def test_greedy_ties_go_to_lowest_id():
    out = TransformSpec.of(Greedy()).apply([0.2, 0.4, 0.4])
    np.testing.assert_array_equal(out, [0.0, 1.0, 0.0])


def test_topk_ties_keep_lower_ids():
    out = TransformSpec.of(TopK(2)).apply([0.25, 0.25, 0.25, 0.25])
    np.testing.assert_allclose(out, [0.5, 0.5, 0.0, 0.0])


def test_temperature_limits():
    p = np.array([0.1, 0.6, 0.3, 0.0])
    np.testing.assert_allclose(TransformSpec.of(Temperature(1.0)).apply(p), p)
    sharp = TransformSpec.of(Temperature(0.01)).apply(p)
    assert sharp[1] == pytest.approx(1.0)
    flat = TransformSpec.of(Temperature(1e6)).apply(p)
    np.testing.assert_allclose(flat[:3], 1 / 3, atol=1e-5)
    assert flat[3] == 0.0


def test_every_transform_returns_a_distribution():
    rng = np.random.default_rng(0)
    transforms = [
        Stochastic(),
        Greedy(),
        TopK(1),
        TopK(3),
        TopK(100),
        Nucleus(0.5),
        Nucleus(0.95),
        Temperature(0.3),
        Temperature(2.5),
        LengthPenalty(-3.0),
        LengthPenalty(4.0),
    ]
    for _ in range(200):
        p = _random_distribution(rng, int(rng.integers(1, 12)))
        for t in transforms:
            out = TransformSpec.of(t).apply(p)
            assert out.shape == p.shape
            assert np.all(out >= 0)
            assert out.sum() == pytest.approx(1.0, abs=1e-9)
            # support never grows
            assert np.all(out[p == 0] == 0)


def test_truncation_keeps_most_probable_tokens():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = _random_distribution(rng, 8, zeros=False)
        for t in (TopK(3), Nucleus(0.7)):
            out = TransformSpec.of(t).apply(p)
            kept = p[out > 0]
            dropped = p[out == 0]
            if dropped.size:
                assert kept.min() >= dropped.max()
            np.testing.assert_allclose(out[out > 0], kept / kept.sum())


def test_temperature_below_one_sharpens():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = _random_distribution(rng, 6, zeros=False)
        out = TransformSpec.of(Temperature(0.5)).apply(p)
        top = int(np.argmax(p))
        assert out[top] >= p[top] - 1e-12
        assert int(np.argmax(out)) == top


def test_apply_validates_input():
    spec = TransformSpec.of(Stochastic())
    with pytest.raises(InvalidDistribution):
        spec.apply([0.5, 0.4])
    with pytest.raises(InvalidDistribution):
        spec.apply([1.2, -0.2])
    with pytest.raises(InvalidDistribution):
        spec.apply([])


def test_parameter_validation():
    for bad in (lambda: TopK(0), lambda: TopK(2.5), lambda: Nucleus(0.0), lambda: Nucleus(1.5),
                lambda: Temperature(0.0), lambda: Temperature(-1.0), lambda: LengthPenalty(float("inf"))):
        with pytest.raises(InvalidTransform):
            bad()


def test_parse_grammar_and_aliases():
    spec = parse_transform("topk:40+temp:0.9")
    assert spec.kinds == ("topk", "temp")
    assert str(spec) == "topk:40+temp:0.9"
    assert parse_transform("top_p:0.9") == TransformSpec.of(Nucleus(0.9))
    assert parse_transform("temperature:0.5").steps == (Temperature(0.5),)
    assert parse_transform("length_penalty:2").steps == (LengthPenalty(2.0),)
    assert parse_transform("stochastic").is_identity
    assert not parse_transform("greedy").is_identity


def test_parse_rejects_bad_strings():
    for text in ("", "beam:4", "greedy:1", "topk", "topk:x", "topk:2.5", "nucleus:", "temp:0"):
        with pytest.raises(InvalidTransform):
            parse_transform(text)


def test_chain_applies_left_to_right():
    p = np.array([0.5, 0.3, 0.15, 0.05])
    chained = parse_transform("topk:2+temp:0.5").apply(p)
    manual = TransformSpec.of(Temperature(0.5)).apply(TransformSpec.of(TopK(2)).apply(p))
    np.testing.assert_allclose(chained, manual)


def test_renormalize_rejects_empty_support():
    from src.transforms.base import log_support, renormalize

    with pytest.raises(DegenerateSupport):
        renormalize(np.zeros(3))
    with pytest.raises(DegenerateSupport):
        log_support(np.zeros(3))


def test_transform_equality_and_rendering():
    assert Temperature(0.5) == Temperature(0.5)
    assert Temperature(0.5) != LengthPenalty(0.5)
    assert len({TopK(3), TopK(3), Nucleus(0.9)}) == 2
    assert str(Nucleus(0.95)) == "nucleus:0.95"
    assert str(Greedy()) == "greedy"
    assert repr(TopK(4)) == "TopK('topk:4')"
