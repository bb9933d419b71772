"""Asymptotic forward model of what Alice and Bob observe per intensity.

Gains and QBERs follow the usual weak-coherent-pulse picture: an
``n``-photon pulse is detected with yield ``Y_n = 1 - (1 - Y0)(1 - eta)^n``
and its error-weighted yield is ``e0*Y0 + ed*(1 - (1 - eta)^n)``.  Summing
over the Poisson photon-number distribution gives the closed forms used
below.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .core import Decibel, DomainError, IntensitySet, db_to_transmittance, require_db

__all__ = [
    "LABELS",
    "ChannelParams",
    "ObservedStats",
    "total_transmittance",
    "simulate_gain",
    "simulate_qber",
    "observe",
    "published_channel",
]

LABELS = ("signal", "decoy1", "decoy2")


@dataclass(frozen=True)
class ChannelParams:
    """Link and detector parameters.

    Attributes
    ----------
    link_loss : Decibel
        Fibre/free-space loss between Alice and Bob's detector.
    detector_efficiency : float
        Detection efficiency ``eta_d`` in ``(0, 1]``.
    background_rate : float
        Background (dark count) probability per pulse, ``Y0``.
    misalignment_error : float
        Probability ``e_d`` that a signal photon hits the wrong detector.
    error_correction_efficiency : float
        Inefficiency factor ``f_e >= 1`` of error correction.
    background_error : float
        Error probability of background clicks, ``e_0``.
    """

    link_loss: Decibel
    detector_efficiency: float = 0.6
    background_rate: float = 2.6e-5
    misalignment_error: float = 0.01
    error_correction_efficiency: float = 1.12
    background_error: float = 0.5

    def __post_init__(self) -> None:
        require_db(self.link_loss, "link_loss")
        if self.link_loss.value < 0:
            raise DomainError(f"link loss must be non-negative, got {self.link_loss}")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise DomainError("detector_efficiency must lie in (0, 1]")
        if not 0.0 <= self.background_rate < 1.0:
            raise DomainError("background_rate must lie in [0, 1)")
        if not 0.0 <= self.misalignment_error < 0.5:
            raise DomainError("misalignment_error must lie in [0, 0.5)")
        if not self.error_correction_efficiency >= 1.0:
            raise DomainError("error_correction_efficiency must be >= 1")
        if not 0.0 <= self.background_error <= 0.5:
            raise DomainError("background_error must lie in [0, 0.5]")

    @classmethod
    def from_total_loss(cls, total_loss: Decibel, **kwargs) -> "ChannelParams":
        """Build a channel whose link loss plus detector loss equals ``total_loss``.

        Totals below the detector loss alone are realised with a lossless
        link and the detector efficiency raised to match; only the product
        of the two enters the forward model.
        """
        total_loss = require_db(total_loss, "total_loss")
        if total_loss.value < 0:
            raise DomainError(f"total loss must be non-negative, got {total_loss}")
        eta_d = kwargs.pop("detector_efficiency", 0.6)
        link = total_loss.value + 10.0 * np.log10(eta_d)
        if link < 0:
            return cls(link_loss=Decibel(0.0),
                       detector_efficiency=10.0 ** (-total_loss.value / 10.0), **kwargs)
        return cls(link_loss=Decibel(link), detector_efficiency=eta_d, **kwargs)

    @property
    def total_loss(self) -> Decibel:
        return Decibel(self.link_loss.value - 10.0 * np.log10(self.detector_efficiency))


def published_channel(link_loss: Decibel = Decibel(10.0)) -> ChannelParams:
    """Channel with the published simulation parameters (10 dB link by default)."""
    return ChannelParams(link_loss=link_loss)


@dataclass(frozen=True)
class ObservedStats:
    """Per-intensity gain and QBER keyed by ``signal``/``decoy1``/``decoy2``."""

    gain: Mapping[str, float]
    qber: Mapping[str, float]

    def __post_init__(self) -> None:
        for name in ("gain", "qber"):
            m = dict(getattr(self, name))
            missing = set(LABELS) - set(m)
            if missing:
                raise KeyError(f"{name} missing labels {sorted(missing)}")
            object.__setattr__(self, name, MappingProxyType(m))


def total_transmittance(ch: ChannelParams) -> float:
    return ch.detector_efficiency * db_to_transmittance(ch.link_loss)


def _check_intensity(intensity) -> np.ndarray:
    arr = np.asarray(intensity, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"intensity must be non-negative, got {intensity!r}")
    return arr


def _gain(mu: np.ndarray, eta: float, y0: float) -> np.ndarray:
    # -expm1 keeps 1 - exp(-x) accurate for the tiny eta*mu of lossy links
    return np.minimum(-np.expm1(-eta * mu) + y0 * np.exp(-eta * mu), 1.0)


def simulate_gain(intensity, ch: ChannelParams):
    """Overall gain ``Q`` for pulses of mean photon number ``intensity``.

    Equals ``1 - (1 - Y0) exp(-eta * intensity)``, the Poisson average of the
    per-photon-number yields, clamped at 1.
    """
    mu = _check_intensity(intensity)
    q = _gain(mu, total_transmittance(ch), ch.background_rate)
    return float(q) if q.ndim == 0 else q


def simulate_qber(intensity, ch: ChannelParams):
    """Overall QBER ``E`` for pulses of mean photon number ``intensity``."""
    mu = _check_intensity(intensity)
    eta = total_transmittance(ch)
    q = _gain(mu, eta, ch.background_rate)
    eq = ch.background_error * ch.background_rate - ch.misalignment_error * np.expm1(-eta * mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(q > 0, eq / q, 0.0)
    return float(e) if e.ndim == 0 else e


def observe(intensities: IntensitySet, scale: float, ch: ChannelParams) -> ObservedStats:
    """Statistics measured when every emitted intensity is multiplied by ``scale``."""
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    eff = {label: scale * mu for label, mu in intensities.as_dict().items()}
    return ObservedStats(
        gain={label: simulate_gain(mu, ch) for label, mu in eff.items()},
        qber={label: simulate_qber(mu, ch) for label, mu in eff.items()},
    )
