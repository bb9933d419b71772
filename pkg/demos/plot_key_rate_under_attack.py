"""
Key rate of a decoy-state BB84 link under light injection
=========================================================

Eve brightens every pulse leaving Alice by a factor ``k`` after the system
has been calibrated.  This script computes the three key-rate curves:
what the link would give without attack, what Alice and Bob believe they
get, and what a correct analysis with the brightened intensities certifies.
"""

import numpy as np

from lightinject import ChannelParams, Decibel, evaluate_scenarios, optimize_intensities

# Published simulation setting: Y0 = 2.6e-5, e_d = 1%, f_e = 1.12, eta_d = 0.6.
# A 10 dB link plus the detector gives a total loss of ~12.22 dB.
ch = ChannelParams.from_total_loss(Decibel(12.22))
opt = optimize_intensities(ch)
print("optimal intensities without attack:", opt.intensities, "rate", opt.rate)

# Sweep the attack strength at fixed loss
deltas = np.linspace(0, 6, 61)
reports = [evaluate_scenarios(opt.intensities, ch, Decibel(d)) for d in deltas]
secure = np.array([r.secure for r in reports])
unaware = np.array([r.unaware_estimate for r in reports])
first_zero = deltas[np.argmax(secure <= 0)]
print(f"secure key vanishes at dLoss ~ {first_zero:.1f} dB")
print(f"at 3 dB Alice and Bob overestimate the key by x{unaware[30] / max(secure[30], 1e-300):.1f}")

# Same comparison against total loss, re-optimizing intensities at each point
losses = np.arange(2, 40.5, 0.5)
curves = {0.0: [], 1.0: [], 3.0: []}
for L in losses:
    c = ChannelParams.from_total_loss(Decibel(float(L)))
    s = optimize_intensities(c).intensities
    for d in curves:
        curves[d].append(evaluate_scenarios(s, c, Decibel(d)))

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    a.semilogy(losses, [max(r.baseline, 1e-12) for r in curves[0.0]], "k", label="no attack")
    for d, style in ((1.0, "-"), (3.0, "--")):
        a.semilogy(losses, [max(r.unaware_estimate, 1e-12) for r in curves[d]], "r" + style,
                   label=f"estimated, {d:g} dB")
        a.semilogy(losses, [max(r.secure, 1e-12) for r in curves[d]], "b" + style,
                   label=f"secure, {d:g} dB")
    a.set_xlabel("total loss (dB)")
    a.set_ylabel("key rate per pulse")
    a.set_ylim(1e-7, 1)
    a.legend(fontsize=7)
    b.plot(deltas, [r.baseline for r in reports], "k", label="no attack")
    b.plot(deltas, unaware, "r", label="estimated")
    b.plot(deltas, np.maximum(secure, 0), "b", label="secure")
    b.set_xlabel("dLoss (dB)")
    b.legend()
    fig.tight_layout()
    fig.savefig("key_rate_under_attack.png", dpi=120)
