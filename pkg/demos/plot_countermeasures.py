"""
How much isolation is enough?
=============================

Attenuating the injected light before it reaches the modulator limits the
loss change Eve can induce.  Compare that residual with the attack strength
at which the secure key vanishes.
"""

import numpy as np
from scipy.optimize import brentq

from lightinject import (
    ChannelParams,
    Decibel,
    DefenseStack,
    MonitorPosition,
    evaluate_scenarios,
    fit_model,
    load_published_dataset,
    minimum_defense_db,
    monitor_detects,
    optimize_intensities,
    residual_attack_strength,
)
from lightinject.modulator import SeriesPhase

alt = next(s for s in load_published_dataset() if s.sample_id == "PM-5" and s.phase is SeriesPhase.ALTERATION)
model = fit_model(alt).model

# Attack strength that kills the key at the published operating point
ch = ChannelParams.from_total_loss(Decibel(12.22))
s = optimize_intensities(ch).intensities
fatal = brentq(lambda d: evaluate_scenarios(s, ch, Decibel(d)).secure, 0, 10)
print(f"secure key vanishes above dLoss = {fatal:.2f} dB")

for total in (0, 10, 20, 30, 40):
    stack = DefenseStack(Decibel(total), Decibel(0.0), monitor_threshold=1.0)
    r = residual_attack_strength(2000.0, stack, model)
    seen = monitor_detects(2000.0, stack, MonitorPosition.AFTER_DEFENSES)
    print(f"{total:2d} dB isolation: residual {r.value:7.4f} dB, monitor behind isolator alarms: {seen}")

for budget in (1.0, 0.1, 0.01):
    need = minimum_defense_db(2000.0, model, Decibel(budget))
    print(f"keep induced loss below {budget:g} dB at 2 mW: >= {need.value:.1f} dB attenuation")

# A zero budget cannot be met by any finite attenuation
print("no finite stack guarantees zero change:", minimum_defense_db(2000.0, model, Decibel(0.0)) is None)
