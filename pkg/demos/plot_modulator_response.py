"""
Photorefractive response of the tested modulators
=================================================

Fit the saturating loss curve to each sample's stepped-illumination data,
then look at recovery and at the half-wave-voltage shift.
"""

import math

import numpy as np

from lightinject import (
    PUBLISHED_RECORDS,
    Decibel,
    RecoveryMode,
    extinction_penalty,
    fit_model,
    load_published_dataset,
    loss_increase,
    phase_remap_delta,
    recovery_excess_loss,
)
from lightinject.modulator import SeriesPhase

series = load_published_dataset()
recovery = {s.sample_id: s for s in series if s.phase is SeriesPhase.RECOVERY}
fits = {s.sample_id: fit_model(s, recovery.get(s.sample_id))
        for s in series if s.phase is SeriesPhase.ALTERATION}

for sid, fit in fits.items():
    m = fit.model
    print(f"{sid}: dL_max {m.delta_loss_max.value:6.2f} dB, p0 {m.p0:7.1f} uW, "
          f"loss at 2 mW {loss_increase(m, 2000).value:6.2f} dB, tau {m.recovery_tau:7.1f} s",
          " ".join(fit.flags))

# Under 50 uW illumination PM-5 is back within a few minutes...
pm5 = fits["PM-5"].model
for t in (0, 60, 120, 240, 300):
    print(f"PM-5 excess after {t:3d} s: {recovery_excess_loss(pm5, Decibel(19.53), t).value:.3f} dB")

# ...but left alone in the dark it barely moves.
pm1 = fits["PM-1"].model
left = recovery_excess_loss(pm1, Decibel(7.19), 3 * 86400, RecoveryMode.DARK)
print(f"PM-1 after 3 days in the dark: {left.value:.2f} dB")

# A higher half-wave voltage shrinks the encoded phase span below pi
for sid in ("PM-1", "PM-5"):
    r = PUBLISHED_RECORDS[sid]
    print(f"{sid}: phase span {phase_remap_delta(r.vpi_before, r.vpi_after) / math.pi:.4f} pi")

for sid in ("IM-1", "IM-2"):
    print(f"{sid}: extinction ratio drops by {extinction_penalty(PUBLISHED_RECORDS[sid]).value:.2f} dB")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    P = np.linspace(0, 2000, 200)
    alt = {s.sample_id: s for s in series if s.phase is SeriesPhase.ALTERATION}
    for sid in ("PM-1", "PM-5", "IM-2"):
        line, = plt.plot(P, [loss_increase(fits[sid].model, p).value for p in P], label=sid)
        s = alt[sid]
        keep = s.powers <= 2000
        plt.plot(s.powers[keep], s.losses[keep], "o", color=line.get_color())
    plt.xlabel("injected power (uW)")
    plt.ylabel("insertion loss increase (dB)")
    plt.legend()
    plt.savefig("modulator_response.png", dpi=120)
