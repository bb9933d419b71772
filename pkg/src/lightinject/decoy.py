"""Vacuum + weak decoy-state bounds and the asymptotic key rate under attack.

The attack multiplies every emitted intensity by ``k = 10**(dLoss/10)``.
Alice and Bob always observe ``Q_{k mu}`` and ``E_{k mu}``; what differs
between the scenarios is which intensities they plug into the bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, ObservedStats, observe, simulate_gain, simulate_qber
from .core import Decibel, DomainError, IntensitySet, binary_entropy, require_db

__all__ = [
    "DecoyEstimates",
    "KeyRateReport",
    "estimate_q1",
    "estimate_e1",
    "estimate",
    "key_rate",
    "secure_key_rate",
    "evaluate_scenarios",
    "delta_loss_to_k",
    "eve_tap_fraction",
    "grid_rate",
]


@dataclass(frozen=True)
class DecoyEstimates:
    q1_lower: float
    y1_lower: float
    e1_upper: float


@dataclass(frozen=True)
class KeyRateReport:
    """Key rates per pulse for one attack strength.

    ``baseline`` is the rate without attack, ``unaware_estimate`` what Alice
    and Bob compute when they ignore the brightening, ``secure`` the rate a
    correct analysis with intensities ``k*mu`` certifies.
    """

    baseline: float
    unaware_estimate: float
    secure: float
    delta_loss: Decibel
    total_loss: Decibel

    @property
    def k(self) -> float:
        return delta_loss_to_k(self.delta_loss)


# Array kernels.  The typed functions below and the optimizer share these.

def _y1_bound(q_mu, q_nu1, q_nu2, mu, nu1, nu2, y0):
    denom = mu * nu1 - mu * nu2 - nu1**2 + nu2**2
    if np.any(np.asarray(denom) <= 0):
        raise DomainError("invalid decoy configuration: mu*nu1 - mu*nu2 - nu1^2 + nu2^2 <= 0")
    bracket = (
        q_nu1 * np.exp(nu1)
        - q_nu2 * np.exp(nu2)
        - (nu1**2 - nu2**2) / mu**2 * (q_mu * np.exp(mu) - y0)
    )
    return np.maximum(mu * bracket / denom, 0.0)


def _e1_bound(e_nu1, q_nu1, e_nu2, q_nu2, nu1, nu2, y1):
    num = e_nu1 * q_nu1 * np.exp(nu1) - e_nu2 * q_nu2 * np.exp(nu2)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.maximum(num, 0.0) / ((nu1 - nu2) * y1)
    return e1


def _key_rate(q_mu, e_mu, q1, e1, f_e):
    e1 = np.clip(np.nan_to_num(e1, nan=0.5, posinf=0.5), 0.0, 0.5)
    return 0.5 * (-q_mu * f_e * binary_entropy(e_mu) + q1 * (1.0 - binary_entropy(e1)))


def grid_rate(mu, nu1, ch: ChannelParams, nu2=0.0, k: float = 1.0, aware: bool = True):
    """Key rate for arrays of assumed intensities, emitted at ``k`` times those.

    With ``aware=False`` the bounds use the assumed intensities; otherwise
    they use the true emitted ones.  Broadcasting follows numpy rules.
    """
    mu, nu1, nu2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mu, nu1, nu2)))
    q = {lab: simulate_gain(k * x, ch) for lab, x in (("s", mu), ("1", nu1), ("2", nu2))}
    e = {lab: simulate_qber(k * x, ch) for lab, x in (("s", mu), ("1", nu1), ("2", nu2))}
    a_mu, a_nu1, a_nu2 = (mu, nu1, nu2) if not aware else (k * mu, k * nu1, k * nu2)
    y1 = _y1_bound(q["s"], q["1"], q["2"], a_mu, a_nu1, a_nu2, ch.background_rate)
    q1 = y1 * a_mu * np.exp(-a_mu)
    e1 = np.where(y1 > 0, _e1_bound(e["1"], q["1"], e["2"], q["2"], a_nu1, a_nu2, y1), 0.5)
    r = _key_rate(q["s"], e["s"], q1, e1, ch.error_correction_efficiency)
    return float(r) if np.ndim(r) == 0 else r


# Typed API

def estimate_q1(stats: ObservedStats, assumed: IntensitySet, ch: ChannelParams) -> tuple[float, float]:
    """Lower bounds ``(Q1, Y1)`` on the single-photon gain and yield.

    ``Y0`` is taken from ``ch.background_rate``.  Negative bounds are floored
    at zero, meaning no single-photon contribution can be certified.
    """
    mu, nu1, nu2 = assumed.mu_s, assumed.nu_1, assumed.nu_2
    g = stats.gain
    y1 = float(_y1_bound(g["signal"], g["decoy1"], g["decoy2"], mu, nu1, nu2, ch.background_rate))
    q1 = y1 * mu * math.exp(-mu)
    return q1, y1


def estimate_e1(stats: ObservedStats, assumed: IntensitySet, y1_lower: float) -> float:
    """Upper bound on the single-photon error rate.

    Uses ``(E_nu1 Q_nu1 e^nu1 - E_nu2 Q_nu2 e^nu2) / ((nu1 - nu2) Y1)``.
    Raises :class:`DomainError` if ``y1_lower`` is not positive.
    """
    if not y1_lower > 0:
        raise DomainError("single-photon yield bound is zero; e1 is undefined")
    g, e = stats.gain, stats.qber
    return float(
        _e1_bound(e["decoy1"], g["decoy1"], e["decoy2"], g["decoy2"],
                  assumed.nu_1, assumed.nu_2, y1_lower)
    )


def estimate(stats: ObservedStats, assumed: IntensitySet, ch: ChannelParams) -> DecoyEstimates:
    q1, y1 = estimate_q1(stats, assumed, ch)
    e1 = estimate_e1(stats, assumed, y1) if y1 > 0 else 0.5
    return DecoyEstimates(q1_lower=q1, y1_lower=y1, e1_upper=e1)


def key_rate(q_signal: float, e_signal: float, q1: float, e1: float, f_e: float) -> float:
    """Asymptotic lower bound ``1/2 * (-Q f H2(E) + Q1 (1 - H2(e1)))``.

    ``e1`` is clamped into ``[0, 0.5]`` first.  The result may be negative.
    """
    for name, p in (("q_signal", q_signal), ("e_signal", e_signal), ("q1", q1)):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {p}")
    if f_e < 1.0:
        raise DomainError(f"f_e must be >= 1, got {f_e}")
    return float(_key_rate(q_signal, e_signal, q1, e1, f_e))


def secure_key_rate(stats: ObservedStats, assumed: IntensitySet, ch: ChannelParams) -> float:
    """Key rate obtained by running the bounds on ``stats`` with ``assumed`` intensities."""
    est = estimate(stats, assumed, ch)
    return key_rate(
        stats.gain["signal"], stats.qber["signal"], est.q1_lower, est.e1_upper,
        ch.error_correction_efficiency,
    )


def delta_loss_to_k(delta_loss: Decibel) -> float:
    delta_loss = require_db(delta_loss, "delta_loss")
    if delta_loss.value < 0:
        raise DomainError(f"delta_loss must be non-negative, got {delta_loss}")
    return 10.0 ** (delta_loss.value / 10.0)


def eve_tap_fraction(k: float) -> float:
    """Beam-splitter fraction Eve keeps so Bob still receives intensity ``mu``."""
    if not k >= 1.0:
        raise DomainError(f"k must be >= 1, got {k}")
    return 1.0 - 1.0 / k


def evaluate_scenarios(intensities: IntensitySet, ch: ChannelParams, delta_loss: Decibel) -> KeyRateReport:
    k = delta_loss_to_k(delta_loss)
    base_stats = observe(intensities, 1.0, ch)
    attacked = observe(intensities, k, ch)
    return KeyRateReport(
        baseline=secure_key_rate(base_stats, intensities, ch),
        unaware_estimate=secure_key_rate(attacked, intensities, ch),
        secure=secure_key_rate(attacked, intensities.scaled(k), ch),
        delta_loss=delta_loss,
        total_loss=ch.total_loss,
    )
