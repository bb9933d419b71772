"""Shared domain types and scalar helpers: intensities, decibels, binary entropy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

__all__ = [
    "DomainError",
    "Decibel",
    "IntensitySet",
    "binary_entropy",
    "db_to_transmittance",
    "transmittance_to_db",
]


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


@dataclass(frozen=True, order=True)
class Decibel:
    """A loss or attenuation in dB.

    Plain floats are deliberately not accepted where a ``Decibel`` is
    expected; wrap them explicitly so linear and logarithmic quantities
    cannot be mixed up.
    """

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not math.isfinite(v):
            raise DomainError(f"decibel value must be finite, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "Decibel") -> "Decibel":
        if not isinstance(other, Decibel):
            return NotImplemented
        return Decibel(self.value + other.value)

    def __sub__(self, other: "Decibel") -> "Decibel":
        if not isinstance(other, Decibel):
            return NotImplemented
        return Decibel(self.value - other.value)

    def __str__(self) -> str:
        return f"{self.value:g} dB"


def require_db(x: object, name: str = "value") -> Decibel:
    if not isinstance(x, Decibel):
        raise TypeError(f"{name} must be a Decibel, got {type(x).__name__}")
    return x


@dataclass(frozen=True)
class IntensitySet:
    """Signal and decoy mean photon numbers, ``mu_s > nu_1 > nu_2 >= 0``."""

    mu_s: float
    nu_1: float
    nu_2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("mu_s", "nu_1", "nu_2"):
            v = getattr(self, name)
            if not isinstance(v, Real) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not (self.mu_s > self.nu_1 > self.nu_2 >= 0.0):
            raise DomainError(
                "intensities must satisfy mu_s > nu_1 > nu_2 >= 0, got "
                f"({self.mu_s}, {self.nu_1}, {self.nu_2})"
            )

    def scaled(self, k: float) -> "IntensitySet":
        """Every intensity multiplied by ``k`` (``k > 0``)."""
        if not k > 0:
            raise DomainError(f"scale must be positive, got {k}")
        return IntensitySet(k * self.mu_s, k * self.nu_1, k * self.nu_2)

    def as_dict(self) -> dict[str, float]:
        return {"signal": self.mu_s, "decoy1": self.nu_1, "decoy2": self.nu_2}


def binary_entropy(x):
    """Binary Shannon entropy in bits, with ``0 log 0 = 0``.

    Accepts a scalar or an array; raises :class:`DomainError` for values
    outside ``[0, 1]``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError(f"binary entropy needs 0 <= x <= 1, got {x!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1.0 - arr) * np.log2(1.0 - arr)
    h = np.where((arr == 0.0) | (arr == 1.0), 0.0, h)
    return float(h) if h.ndim == 0 else h


def db_to_transmittance(loss: Decibel) -> float:
    loss = require_db(loss, "loss")
    if loss.value < 0:
        raise DomainError(f"loss must be non-negative, got {loss}")
    return 10.0 ** (-loss.value / 10.0)


def transmittance_to_db(t: float) -> Decibel:
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"transmittance must lie in (0, 1], got {t}")
    # -0.0 for t == 1 would print oddly
    return Decibel(-10.0 * math.log10(t) + 0.0)
