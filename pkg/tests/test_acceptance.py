"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` (or execute this file) to get one
PASS/FAIL line per criterion in the terminal summary.
"""
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from lightinject.channel import ChannelParams, observe
from lightinject.core import Decibel, IntensitySet, binary_entropy, db_to_transmittance, transmittance_to_db
from lightinject.countermeasures import DefenseStack, residual_attack_strength
from lightinject.decoy import delta_loss_to_k, estimate_e1, estimate_q1, evaluate_scenarios, secure_key_rate
from lightinject.modulator import (
    PUBLISHED_RECORDS,
    RecoveryMode,
    SeriesPhase,
    extinction_penalty,
    fit_model,
    load_published_dataset,
    loss_increase,
    recovery_excess_loss,
)
from lightinject.optimizer import optimize_intensities

from oracles import poisson_gain, true_e1, true_q1

pytestmark = pytest.mark.acceptance

REFERENCE_TOTAL_LOSS = Decibel(12.22)


def criterion(n, title):
    return pytest.mark.criterion(n=n, title=title)


@pytest.fixture(scope="module")
def published_setup():
    ch = ChannelParams.from_total_loss(REFERENCE_TOTAL_LOSS)
    return ch, optimize_intensities(ch).intensities


@criterion(1, "zero-key threshold at 12.22 dB lies in [4, 6] dB, no key from 5 dB on, < 60 s")
def test_threshold_reproduction():
    t0 = time.perf_counter()
    ch = ChannelParams.from_total_loss(REFERENCE_TOTAL_LOSS)
    assert (ch.detector_efficiency, ch.background_rate, ch.misalignment_error,
            ch.error_correction_efficiency) == (0.6, 2.6e-5, 0.01, 1.12)
    s = optimize_intensities(ch).intensities

    def secure(d):
        return evaluate_scenarios(s, ch, Decibel(d)).secure

    assert secure(0.0) > 0
    assert all(secure(d) <= 0 for d in np.arange(5.0, 15.0001, 0.05))
    crossing = brentq(secure, 0.0, 6.0, xtol=1e-9)
    print(f"zero crossing at dLoss = {crossing:.4f} dB")
    assert 4.0 <= crossing <= 6.0
    assert time.perf_counter() - t0 < 60.0


@criterion(2, "unaware >= baseline >= secure for dLoss in {1, 3} dB, total loss 2-30 dB")
def test_curve_ordering():
    strict_at_3 = 0
    checked = 0
    for total in np.arange(2.0, 30.0001, 0.5):
        ch = ChannelParams.from_total_loss(Decibel(float(total)))
        s = optimize_intensities(ch).intensities
        for d in (1.0, 3.0):
            r = evaluate_scenarios(s, ch, Decibel(d))
            if r.baseline <= 0:
                continue
            checked += 1
            assert r.unaware_estimate >= r.baseline >= r.secure, (total, d, r)
            if d == 3.0 and r.unaware_estimate > r.baseline > r.secure:
                strict_at_3 += 1
    assert checked > 0 and strict_at_3 >= 1


@criterion(3, "dLoss = 0 reproduces the baseline to 1e-12 relative on the full loss grid")
def test_no_attack_coincidence():
    for total in np.arange(2.0, 40.0001, 0.5):
        ch = ChannelParams.from_total_loss(Decibel(float(total)))
        s = optimize_intensities(ch).intensities
        r = evaluate_scenarios(s, ch, Decibel(0.0))
        scale = abs(r.baseline)
        assert abs(r.unaware_estimate - r.baseline) <= 1e-12 * scale
        assert abs(r.secure - r.baseline) <= 1e-12 * scale


@criterion(4, "Q1/e1 bounds sound against the photon-number oracle over 1000 random draws")
def test_bound_soundness():
    rng = np.random.default_rng(20231019)
    for _ in range(1000):
        eta = rng.uniform(1e-4, 0.1)
        mu = rng.uniform(0.1, 1.0)
        nu1 = rng.uniform(0.01, mu)
        y0 = rng.uniform(1e-6, 1e-4)
        e_d = rng.uniform(0.0, 0.05)
        ch = ChannelParams(Decibel(0.0), detector_efficiency=eta, background_rate=y0, misalignment_error=e_d)
        s = IntensitySet(mu, nu1, 0.0)
        stats = observe(s, 1.0, ch)
        # the forward model is itself the truncated Poisson mixture
        assert stats.gain["signal"] == pytest.approx(poisson_gain(mu, eta, y0, 25), abs=1e-12)
        q1, y1 = estimate_q1(stats, s, ch)
        assert q1 <= true_q1(mu, eta, y0) + 1e-12
        if y1 > 0:
            assert estimate_e1(stats, s, y1) >= true_e1(eta, y0, e_d) - 1e-12


@criterion(5, "entropy and dB identities to 1e-12; k(19.53 dB) = 89.7 +- 0.1")
def test_identities():
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(0.5) - 1.0) <= 1e-12
    x = np.linspace(0, 1, 1001)
    h = binary_entropy(x)
    assert np.max(np.abs(h - binary_entropy(1 - x))) <= 1e-12
    assert np.max(h) <= 1.0 + 1e-12 and abs(h[500] - 1.0) <= 1e-12
    t = np.geomspace(1e-3, 1.0, 1000)
    back = np.array([db_to_transmittance(transmittance_to_db(v)) for v in t])
    assert np.max(np.abs(back / t - 1)) <= 1e-12
    assert abs(delta_loss_to_k(Decibel(19.53)) - 89.7) <= 0.1


@criterion(6, "calibration reproduces printed dLoss within 0.05 dB; extinction and dark recovery exact")
def test_modulator_calibration():
    series = load_published_dataset()
    rec = {s.sample_id: s for s in series if s.phase is SeriesPhase.RECOVERY}
    fits = {s.sample_id: (s, fit_model(s, rec.get(s.sample_id)))
            for s in series if s.phase is SeriesPhase.ALTERATION}
    for sid, printed in (("PM-5", 19.53), ("PM-1", 7.19), ("IM-2", 1.31), ("IM-1", 0.39)):
        s, fit = fits[sid]
        got = loss_increase(fit.model, s.powers[-1]).value
        print(f"{sid}: fitted {got:.4f} dB at {s.powers[-1]:g} uW (printed {printed})")
        assert abs(got - printed) <= 0.05
    assert extinction_penalty(PUBLISHED_RECORDS["IM-1"]).value == pytest.approx(21.23, abs=1e-12)
    assert extinction_penalty(PUBLISHED_RECORDS["IM-2"]).value == pytest.approx(6.50, abs=1e-12)
    pm1 = fits["PM-1"][1].model
    left = recovery_excess_loss(pm1, Decibel(7.19), 3 * 86400.0, RecoveryMode.DARK).value
    assert left == pytest.approx(5.63, abs=1e-12)


@criterion(7, "optimizer within 1e-6 of the 32x32 exhaustive maximum, feasible, deterministic")
def test_optimizer(published_setup):
    for total in (5.0, 12.22, 20.0):
        ch = ChannelParams.from_total_loss(Decibel(total))
        res = optimize_intensities(ch)
        best = -np.inf
        for m in np.linspace(0.05, 1.0, 32):
            for v in np.linspace(0.005, 0.5, 32):
                if v < m:
                    s = IntensitySet(m, v)
                    best = max(best, secure_key_rate(observe(s, 1.0, ch), s, ch))
        print(f"{total} dB: optimizer {res.rate:.9g}, exhaustive {best:.9g}")
        assert res.rate >= best - 1e-6
        assert res.intensities.mu_s > res.intensities.nu_1 > 0
        assert optimize_intensities(ch) == res


@criterion(8, "secure rate, loss response and residual attack strength monotone on 50-point grids")
def test_monotonicity(published_setup):
    ch, s = published_setup
    secure = [evaluate_scenarios(s, ch, Decibel(d)).secure for d in np.linspace(0, 6, 50)]
    assert np.all(np.diff(secure) <= 0)
    alt = next(x for x in load_published_dataset() if x.sample_id == "PM-5" and x.phase is SeriesPhase.ALTERATION)
    model = fit_model(alt).model
    dl = [loss_increase(model, p).value for p in np.linspace(0, 10000, 50)]
    assert np.all(np.diff(dl) >= 0) and max(dl) <= model.delta_loss_max.value + 1e-12
    res = [residual_attack_strength(2000.0, DefenseStack(Decibel(d)), model).value for d in np.linspace(0, 60, 50)]
    assert np.all(np.diff(res) <= 0)


@criterion(9, "sweep-delta emits byte-identical CSV for identical config")
def test_cli_determinism(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text("total_loss_db = 12.22\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "lightinject", "sweep-delta", "--config", str(cfg),
                        "--out", str(out)], check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
