"""Transmitter-side defences against light injection.

Isolator and band filter attenuate the injected beam before it reaches the
modulator; an incident-light monitor raises an alarm above a fixed power
threshold.  Attenuations are those at the injection wavelength and are
inputs, not defaults: short-wavelength isolation of telecom parts is
essentially uncharacterised.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import Decibel, DomainError, require_db
from .modulator import PhotorefractiveModel, loss_increase

__all__ = [
    "MonitorPosition",
    "DefenseStack",
    "power_at_modulator",
    "monitor_detects",
    "residual_attack_strength",
    "minimum_defense_db",
]


class MonitorPosition(str, enum.Enum):
    BEFORE_DEFENSES = "before_defenses"
    AFTER_DEFENSES = "after_defenses"


@dataclass(frozen=True)
class DefenseStack:
    """Attenuation at the injection wavelength plus monitor settings (powers in uW).

    A magnetically degraded isolator is represented by simply lowering
    ``isolator_db``.
    """

    isolator_db: Decibel = Decibel(0.0)
    filter_db: Decibel = Decibel(0.0)
    monitor_threshold: float = 1.0
    monitor_noise_floor: float = 0.0

    def __post_init__(self) -> None:
        require_db(self.isolator_db, "isolator_db")
        require_db(self.filter_db, "filter_db")
        if self.isolator_db.value < 0 or self.filter_db.value < 0:
            raise DomainError("attenuations must be non-negative")
        if not self.monitor_threshold > self.monitor_noise_floor >= 0:
            raise DomainError("need monitor_threshold > monitor_noise_floor >= 0")

    @property
    def total_db(self) -> Decibel:
        return self.isolator_db + self.filter_db


def power_at_modulator(injected: float, stack: DefenseStack) -> float:
    if injected < 0:
        raise DomainError(f"injected power must be non-negative, got {injected}")
    return injected * 10.0 ** (-stack.total_db.value / 10.0)


def monitor_detects(injected: float, stack: DefenseStack,
                    monitor_position: MonitorPosition = MonitorPosition.BEFORE_DEFENSES) -> bool:
    if injected < 0:
        raise DomainError(f"injected power must be non-negative, got {injected}")
    if MonitorPosition(monitor_position) is MonitorPosition.BEFORE_DEFENSES:
        seen = injected
    else:
        seen = power_at_modulator(injected, stack)
    return seen > stack.monitor_threshold


def residual_attack_strength(injected: float, stack: DefenseStack,
                             model: PhotorefractiveModel) -> Decibel:
    """Loss increase Eve can still induce through the defences."""
    return loss_increase(model, power_at_modulator(injected, stack))


def minimum_defense_db(injected: float, model: PhotorefractiveModel, budget: Decibel) -> Decibel | None:
    """Smallest total attenuation keeping the induced loss strictly below ``budget``.

    Returns ``Decibel(0)`` when no defence is needed and ``None`` when no
    finite attenuation suffices (a zero budget, since the response is
    positive for any power reaching the crystal).  At the returned value the
    residual equals the budget; anything above it is strictly below.
    """
    budget = require_db(budget, "budget")
    if injected < 0 or budget.value < 0:
        raise DomainError("injected power and budget must be non-negative")
    if injected == 0:
        return Decibel(0.0) if budget.value > 0 else None
    if budget.value == 0:
        return None
    if budget.value >= model.delta_loss_max.value:
        return Decibel(0.0)
    # invert dL_max (1 - exp(-P/p0)) = budget
    p_allowed = -model.p0 * math.log1p(-budget.value / model.delta_loss_max.value)
    return Decibel(max(0.0, 10.0 * math.log10(injected / p_allowed)))
