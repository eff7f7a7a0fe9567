import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausscorr.channels import (
    BernoulliXorChannel,
    FiniteChannel,
    GaussianChannel,
    conditional_mean,
    enumerate_expectation,
    gaussian_as_channel,
    lemma2_check,
)
from gausscorr.errors import ChannelError, PreconditionError
from gausscorr.functions import SMOOTH_CORPUS
from gausscorr.inequality import lemma1_check
from gausscorr.mehler import cross_moment
from gausscorr.hermite import project

XOR = BernoulliXorChannel(1, 0.5, 0.1)
FLIP = {0: 1.0, 1: 0.0}


def identity(o):
    return float(o)


def test_conditional_mean_examples():
    h = conditional_mean(XOR, identity)
    assert abs(h(0) - 0.1) < 1e-15 and abs(h(1) - 0.9) < 1e-15
    one = conditional_mean(XOR, lambda o: 1.0)
    assert one(0) == pytest.approx(1.0, abs=1e-15) and one(1) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ChannelError):
        h(5)


def test_gaussian_conditional_mean_of_identity():
    h = conditional_mean(gaussian_as_channel(1.0, 0.5), "identity")
    z = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(h(z), z, atol=1e-13)
    # tanh against an independent 1-D Gauss-Hermite rule from numpy
    x, w = np.polynomial.hermite_e.hermegauss(200)
    w = w / w.sum()
    ht = conditional_mean(gaussian_as_channel(2.0, 0.3), "tanh:1")
    s = np.sqrt((1 - 0.3) * 4.0)
    ref = [np.dot(w, np.tanh(zz + s * x)) for zz in z]
    np.testing.assert_allclose(ht(z), ref, atol=1e-10)


def test_bernoulli_xor_anchor():
    r = lemma2_check(XOR, identity, FLIP)
    assert abs(r.lhs - 0.0081) < 1e-12
    assert abs(r.rhs - 0.1681) < 1e-12
    assert r.slack > 0 and not r.equality
    assert r.engine == "enumeration"


def test_enumeration_examples():
    assert abs(enumerate_expectation(XOR, identity, identity) - 0.41) < 1e-12
    # q = 0.5 makes each output independent of the latent bit
    ch = BernoulliXorChannel(1, 0.5, 0.5)
    g1, g2 = {0: -1.0, 1: 1.0}, {0: 2.0, 1: 3.0}
    assert abs(enumerate_expectation(ch, g1, g2) - 0.0) < 1e-15
    # bit parity on two bits
    ch2 = BernoulliXorChannel(2, 0.3, 0.2).to_channel()
    parity = [float(bin(s).count("1") % 2) for s in range(4)]
    h = conditional_mean(ch2, parity).values
    route = float(ch2.latent_probs @ (h * h))
    assert abs(enumerate_expectation(ch2, parity, parity) - route) < 1e-12


def test_identical_functions_give_equality():
    r = lemma2_check(XOR, identity, identity)
    assert r.equality and r.slack == 0.0


def test_gaussian_as_channel_decomposition():
    ch = gaussian_as_channel(1.0, 0.5)
    assert (ch.latent_var, ch.noise_var) == (0.5, 0.5)
    ch = gaussian_as_channel(2.0, 0.25)
    assert ch.latent_var + ch.noise_var == pytest.approx(4.0)
    assert ch.sigma == pytest.approx(2.0) and ch.rho == pytest.approx(0.25)
    for rho in (0.0, -0.5, 1.0):
        with pytest.raises(PreconditionError):
            gaussian_as_channel(1.0, rho)
    with pytest.raises(PreconditionError):
        GaussianChannel(0.0, 1.0)


def test_gaussian_channel_linear_vs_cube_matches_mehler():
    r = lemma2_check(gaussian_as_channel(1.0, 0.5), "identity", "poly:0,0,0,1")
    s1, s3 = project("identity", 1.0, 40), project("poly:0,0,0,1", 1.0, 40)
    assert abs(r.lhs - cross_moment(s1, s3, 0.5) ** 2) < 1e-8
    assert abs(r.rhs - cross_moment(s1, s1, 0.5) * cross_moment(s3, s3, 0.5)) < 1e-8


@pytest.mark.parametrize("g1", SMOOTH_CORPUS)
@pytest.mark.parametrize("g2", SMOOTH_CORPUS)
@pytest.mark.parametrize("rho", [0.3, 0.7])
def test_gaussian_bridge(g1, g2, rho):
    a = lemma2_check(gaussian_as_channel(1.0, rho), g1, g2)
    b = lemma1_check(g1, g2, (1.0, rho))
    for x, y in ((a.lhs, b.lhs), (a.rhs, b.rhs), (a.slack, b.slack)):
        assert abs(x - y) <= 1e-8


def test_validation():
    with pytest.raises(ChannelError):
        FiniteChannel((0, 1), [0.5, 0.6], (0, 1), [[1, 0], [0, 1]])
    with pytest.raises(ChannelError):
        FiniteChannel((0, 1), [0.5, 0.5], (0, 1), [[0.9, 0.2], [0, 1]])
    with pytest.raises(ChannelError):
        FiniteChannel((0,), [1.0], (0, 1), [[-0.1, 1.1]])
    with pytest.raises(ChannelError, match="undefined on output symbol 1"):
        lemma2_check(XOR, {0: 1.0}, identity)
    with pytest.raises(ChannelError):
        BernoulliXorChannel(1, 1.5, 0.1)
    with pytest.raises(ChannelError):
        BernoulliXorChannel(0, 0.5, 0.1)


def test_enumeration_cap():
    big = BernoulliXorChannel(7, 0.5, 0.1)  # 2**21 joint outcomes
    with pytest.raises(ChannelError, match="exceed"):
        enumerate_expectation(big, identity, identity)


def test_json_forms():
    spec = {"latent": {"a": 0.25, "b": 0.75},
            "conditional": {"a": {"x": 1.0}, "b": {"x": 0.5, "y": 0.5}}}
    ch = FiniteChannel.from_dict(spec)
    assert ch.outputs == ("x", "y")
    np.testing.assert_allclose(ch.transition, [[1, 0], [0.5, 0.5]])
    again = FiniteChannel.from_dict(ch.to_dict())
    np.testing.assert_array_equal(again.transition, ch.transition)
    short = FiniteChannel.from_dict({"n_bits": 1, "p": 0.5, "q": 0.1})
    np.testing.assert_allclose(short.transition, [[0.9, 0.1], [0.1, 0.9]])
    with pytest.raises(ChannelError):
        FiniteChannel.from_dict({"latent": {"a": 1.0}, "conditional": {}})


@st.composite
def channels(draw):
    if draw(st.booleans()):
        n = draw(st.integers(1, 3))
        ch = BernoulliXorChannel(n, draw(st.floats(0, 1)), draw(st.floats(0, 1))).to_channel()
    else:
        k, m = draw(st.integers(1, 8)), draw(st.integers(1, 8))
        p = np.array(draw(st.lists(st.floats(0.01, 1), min_size=k, max_size=k)))
        t = np.array(draw(st.lists(st.floats(0, 1), min_size=k * m, max_size=k * m))).reshape(k, m) + 1e-3
        ch = FiniteChannel(tuple(range(k)), p / p.sum(), tuple(range(m)), t / t.sum(axis=1, keepdims=True))
    size = len(ch.outputs)
    tab = st.lists(st.floats(-1, 1), min_size=size, max_size=size)
    return ch, draw(tab), draw(tab)


@settings(max_examples=200, deadline=None)
@given(channels())
def test_channel_check_and_route_equivalence(args):
    ch, g1, g2 = args
    r = lemma2_check(ch, g1, g2)
    assert r.slack >= -1e-12
    h1, h2 = conditional_mean(ch, g1).values, conditional_mean(ch, g2).values
    assert abs(enumerate_expectation(ch, g1, g2) - ch.latent_probs @ (h1 * h2)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(channels(), st.sampled_from([-2.0, 0.5, 1.0]))
def test_if_direction_is_exact(args, c):
    ch, g, _ = args
    r = lemma2_check(ch, [c * v for v in g], g)
    assert r.equality and abs(r.slack) <= 1e-12
