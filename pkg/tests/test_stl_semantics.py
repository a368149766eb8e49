import numpy as np
import pytest

from vfsplan import stl
from vfsplan.stl import (
    And,
    Eventually,
    Globally,
    Interval,
    Not,
    Or,
    Predicate,
    Signal,
    Until,
    horizon,
    parse_formula,
    robustness,
    satisfies,
)

from _oracles import random_formula, random_signal, rho_naive

CHANNELS = ["a", "b", "x"]


def const_signal(**channels):
    return Signal({k: v if isinstance(v, (list, tuple)) else [v] for k, v in channels.items()})


# -- horizon ----------------------------------------------------------------

def test_horizon_predicate_is_zero():
    assert horizon(parse_formula("x>0.8")) == 0


def test_horizon_nested_temporal():
    assert horizon(parse_formula("F[0,2] G[0,5] R>0.8")) == 7


def test_horizon_until():
    assert horizon(parse_formula("a>0 U[1,3] b>0")) == 3


def test_horizon_max_over_branches():
    f = parse_formula("F[0,4] a>0 & G[0,2] b>0")
    assert horizon(f) == 4


# -- robustness, frozen examples --------------------------------------------

def test_predicate_on_constant():
    sig = const_signal(x=0.5)
    assert robustness(sig, parse_formula("x>0")) == pytest.approx(0.5)


def test_eventually_window_max():
    sig = Signal({"x": [0.1, 0.5, 0.9]})
    # oracle: max over the window of x_t - 0.8
    assert robustness(sig, parse_formula("F[0,2] x>0.8")) == pytest.approx(0.1)


def test_until_example():
    sig = Signal({"a": [0.9, 0.9, 0.2], "b": [0.0, 0.0, 0.7]})
    f = parse_formula("a>0.5 U[0,2] b>0.5")
    # brute force over t' in {0,1,2}: candidates -0.5, -0.5, -0.3
    assert rho_naive(f, sig, 0) == pytest.approx(-0.3)
    assert robustness(sig, f) == pytest.approx(-0.3)


def test_lower_bound_comparison_flips_sign():
    sig = const_signal(x=0.3)
    assert robustness(sig, parse_formula("x<=0.8")) == pytest.approx(0.5)
    assert robustness(sig, parse_formula("x<0.8")) == pytest.approx(0.5)


# -- boolean semantics -------------------------------------------------------

def test_satisfies_trivial():
    assert satisfies(const_signal(x=1.0), parse_formula("x>0"))
    assert not satisfies(Signal({"x": [0.0, 0.0, 0.0]}), parse_formula("F[0,2] x>0.5"))


def test_strictness_matters_only_for_booleans():
    sig = const_signal(x=0.8)
    ge = parse_formula("x>=0.8")
    gt = parse_formula("x>0.8")
    assert satisfies(sig, ge) and not satisfies(sig, gt)
    assert robustness(sig, ge) == robustness(sig, gt) == 0.0


def test_until_needs_left_to_hold_through_the_hit():
    # left fails exactly at the time the right side becomes true
    sig = Signal({"a": [1.0, -1.0], "b": [-1.0, 1.0]})
    f = parse_formula("a>0 U[0,1] b>0")
    assert not satisfies(sig, f)
    assert robustness(sig, f) < 0


# -- errors -------------------------------------------------------------------

def test_signal_too_short_names_range():
    sig = Signal({"x": [0.0, 0.0]})
    with pytest.raises(stl.SignalTooShortError, match=r"\[0, 7\]"):
        robustness(sig, parse_formula("F[0,2] G[0,5] x>0"))


def test_unknown_channel():
    sig = Signal({"x": [0.0]})
    with pytest.raises(stl.UnknownChannelError, match="y"):
        robustness(sig, parse_formula("y>0"))
    with pytest.raises(stl.UnknownChannelError):
        satisfies(sig, parse_formula("y>0"))


def test_mid_signal_evaluation_respects_horizon():
    sig = Signal({"x": [0.0, 1.0, 2.0, 3.0]})
    f = parse_formula("F[0,2] x>1.5")
    assert satisfies(sig, f, t=1)
    with pytest.raises(stl.SignalTooShortError):
        robustness(sig, f, t=2)


# -- cross-checks against the scalar oracle ----------------------------------

def test_row_evaluator_matches_naive_recursion():
    rng = np.random.default_rng(42)
    for _ in range(300):
        f = random_formula(rng, CHANNELS, depth=int(rng.integers(0, 4)))
        sig = random_signal(rng, CHANNELS, horizon(f) + 3)
        for t in range(sig.length - horizon(f)):
            assert robustness(sig, f, t) == pytest.approx(rho_naive(f, sig, t), abs=1e-12)


def test_sign_soundness_sample():
    rng = np.random.default_rng(3)
    for _ in range(500):
        f = random_formula(rng, CHANNELS, depth=int(rng.integers(0, 4)))
        sig = random_signal(rng, CHANNELS, horizon(f) + 3)
        rho = robustness(sig, f)
        sat = satisfies(sig, f)
        if rho > 0:
            assert sat
        elif rho < 0:
            assert not sat


def test_negation_antisymmetry_exact():
    rng = np.random.default_rng(11)
    for _ in range(200):
        f = random_formula(rng, CHANNELS, depth=2)
        sig = random_signal(rng, CHANNELS, horizon(f) + 3)
        assert robustness(sig, Not(f)) == -robustness(sig, f)


def test_de_morgan_or_exact():
    rng = np.random.default_rng(13)
    for _ in range(200):
        a = random_formula(rng, CHANNELS, depth=2)
        b = random_formula(rng, CHANNELS, depth=2)
        f = Or(a, b)
        g = Not(And(Not(a), Not(b)))
        sig = random_signal(rng, CHANNELS, max(horizon(f), horizon(g)) + 3)
        assert robustness(sig, f) == robustness(sig, g)


def test_globally_is_negated_eventually_exact():
    rng = np.random.default_rng(17)
    for _ in range(200):
        child = random_formula(rng, CHANNELS, depth=2)
        iv = Interval(int(rng.integers(0, 3)), int(rng.integers(3, 6)))
        g = Globally(iv, child)
        desugared = Not(Eventually(iv, Not(child)))
        sig = random_signal(rng, CHANNELS, horizon(g) + 3)
        assert robustness(sig, g) == robustness(sig, desugared)
        assert satisfies(sig, g) == satisfies(sig, desugared)


def test_horizon_sufficiency():
    rng = np.random.default_rng(19)
    for _ in range(200):
        f = random_formula(rng, CHANNELS, depth=3)
        h = horizon(f)
        sig = random_signal(rng, CHANNELS, h + 3)
        before = robustness(sig, f)
        mutated = {}
        for name in sig.names:
            vals = sig.channel(name).copy()
            vals[h + 1 :] = rng.uniform(-5, 5, size=vals[h + 1 :].shape)
            mutated[name] = vals
        assert robustness(Signal(mutated), f) == before


def test_monotonicity_of_negation_free_fragment():
    rng = np.random.default_rng(23)
    for _ in range(200):
        f = random_formula(rng, CHANNELS, depth=3, negation_free=True)
        sig = random_signal(rng, CHANNELS, horizon(f) + 3)
        bumped = {
            name: sig.channel(name) + rng.uniform(0, 1, size=sig.length)
            for name in sig.names
        }
        assert robustness(Signal(bumped), f) >= robustness(sig, f)


# -- signal csv ---------------------------------------------------------------

def test_signal_csv_roundtrip(tmp_path):
    sig = Signal({"R": [0.1, 0.2, 0.3], "J": [-1.0, 0.0, 1.0]})
    path = tmp_path / "sig.csv"
    stl.write_signal_csv(sig, path)
    back = stl.read_signal_csv(path)
    assert back.names == sig.names
    for name in sig.names:
        np.testing.assert_array_equal(back.channel(name), sig.channel(name))


def test_signal_rejects_ragged_channels():
    with pytest.raises(ValueError):
        Signal({"a": [1.0, 2.0], "b": [1.0]})
