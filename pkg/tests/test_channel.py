import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from lightinject.channel import (
    ChannelParams,
    observe,
    simulate_gain,
    simulate_qber,
    total_transmittance,
)
from lightinject.core import Decibel, DomainError, IntensitySet, transmittance_to_db
from lightinject.decoy import delta_loss_to_k


def channel_with_eta(eta, y0=2.6e-5, e_d=0.01):
    """Channel whose total transmittance is exactly ``eta`` (lossless link)."""
    return ChannelParams(Decibel(0.0), detector_efficiency=eta, background_rate=y0, misalignment_error=e_d)


def poisson_gain(mu, eta, y0, nmax=25):
    n = np.arange(nmax + 1)
    yn = 1 - (1 - y0) * (1 - eta) ** n
    return float(np.sum(poisson.pmf(n, mu) * yn))


@pytest.fixture
def eta06():
    return channel_with_eta(0.06)


@pytest.mark.parametrize(
    "link, eta_d, expected",
    [(10.0, 0.6, 0.06), (0.0, 1.0, 1.0), (20.0, 0.6, 0.006)],
)
def test_total_transmittance(link, eta_d, expected):
    ch = ChannelParams(Decibel(link), detector_efficiency=eta_d)
    assert total_transmittance(ch) == pytest.approx(expected, rel=1e-12)


def test_total_loss_composition():
    ch = ChannelParams(Decibel(10.0))
    assert ch.total_loss.value == pytest.approx(12.2185, abs=1e-4)
    back = ChannelParams.from_total_loss(Decibel(12.22))
    assert back.link_loss.value == pytest.approx(12.22 - 2.218487496163564, abs=1e-12)


def test_from_total_loss_below_detector_floor():
    ch = ChannelParams.from_total_loss(Decibel(2.0))
    assert ch.link_loss.value == 0.0
    assert total_transmittance(ch) == pytest.approx(10 ** -0.2, rel=1e-12)


def test_gain_examples(eta06):
    assert simulate_gain(0.0, eta06) == pytest.approx(2.6e-5, abs=1e-18)
    # 50-digit Poisson sum: 0.029579698035364084
    assert simulate_gain(0.5, eta06) == pytest.approx(0.029579698035364084, rel=1e-12)
    assert simulate_gain(0.5, eta06) == pytest.approx(0.029580, abs=1e-6)
    assert simulate_gain(1e6, eta06) == 1.0


def test_qber_examples(eta06):
    assert simulate_qber(0.0, eta06) == pytest.approx(0.5, abs=1e-15)
    assert simulate_qber(0.5, eta06) == pytest.approx(0.01043096059148531, rel=1e-12)
    assert simulate_qber(0.5, eta06) == pytest.approx(0.010430, abs=1e-5)
    # the limit is e_d + e_0*Y0; background only shifts it by 1.3e-5
    assert simulate_qber(1e4, eta06) == pytest.approx(0.01 + 0.5 * 2.6e-5, abs=1e-12)
    assert simulate_qber(1e4, eta06) == pytest.approx(0.01, abs=1e-4)


@pytest.mark.parametrize("fn", [simulate_gain, simulate_qber])
def test_negative_intensity(fn, eta06):
    with pytest.raises(DomainError):
        fn(-0.1, eta06)


def test_gain_increasing_and_concave(eta06):
    mu = np.linspace(0, 5, 2001)
    q = simulate_gain(mu, eta06)
    d1 = np.diff(q)
    assert np.all(d1 > 0)
    assert np.all(np.diff(d1) < 1e-10)


def test_qber_decreasing(eta06):
    e = simulate_qber(np.linspace(0, 5, 2001), eta06)
    assert np.all(np.diff(e) < 0)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(1e-4, 1.0), st.floats(0, 1e-3))
def test_gain_matches_poisson_oracle(mu, eta, y0):
    ch = channel_with_eta(eta, y0=y0)
    assert simulate_gain(mu, ch) == pytest.approx(poisson_gain(mu, eta, y0), abs=1e-10)


def test_observe_unscaled_and_vacuum(eta06):
    s = IntensitySet(0.5, 0.1)
    obs = observe(s, 1.0, eta06)
    assert obs.gain["signal"] == simulate_gain(0.5, eta06)
    for k in (1.0, 3.0, 50.0):
        o = observe(s, k, eta06)
        assert o.gain["decoy2"] == pytest.approx(2.6e-5, abs=1e-18)
        assert o.qber["decoy2"] == pytest.approx(0.5, abs=1e-15)


def test_observe_doubling_at_3db(eta06):
    k = delta_loss_to_k(Decibel(3.01))
    assert k == pytest.approx(2.0, abs=1e-3)
    s = IntensitySet(0.4, 0.1)
    obs = observe(s, k, eta06)
    assert obs.gain["signal"] == pytest.approx(simulate_gain(0.8, eta06), rel=1e-3)


@given(st.floats(1.0, 100.0))
def test_observe_scale_equals_prescaled(k):
    ch = ChannelParams(Decibel(10.0))
    s = IntensitySet(0.6, 0.1)
    a, b = observe(s, k, ch), observe(s.scaled(k), 1.0, ch)
    assert dict(a.gain) == dict(b.gain)
    assert dict(a.qber) == dict(b.qber)


def test_observed_stats_invariants():
    ch = ChannelParams(Decibel(20.0))
    obs = observe(IntensitySet(0.8, 0.2), 2.0, ch)
    for lab in ("signal", "decoy1", "decoy2"):
        assert ch.background_rate <= obs.gain[lab] <= 1
        assert 0 < obs.qber[lab] <= 0.5
    assert obs.gain["signal"] > obs.gain["decoy1"] > obs.gain["decoy2"]


def test_observe_rejects_bad_scale(eta06):
    with pytest.raises(DomainError):
        observe(IntensitySet(0.5, 0.1), 0.0, eta06)


@pytest.mark.parametrize("kw", [
    dict(detector_efficiency=0.0), dict(detector_efficiency=1.1), dict(background_rate=-1e-6),
    dict(misalignment_error=0.5), dict(error_correction_efficiency=0.9),
])
def test_channel_params_invariants(kw):
    with pytest.raises(DomainError):
        ChannelParams(Decibel(10.0), **kw)


def test_channel_params_rejects_raw_float():
    with pytest.raises(TypeError):
        ChannelParams(10.0)
