"""
Jamming the channel
===================

A defender can mask the channel by nudging the fan speed at random: one
second of a random offset in [-threshold, threshold] RPM, one second clear,
repeating on its own clock. This shows how the error rate grows with the
jamming amplitude.
"""

import numpy as np

from airviber.channel import JammerParams, apply_jammer
from airviber.harness import run_ber
from airviber.modem import modulate_fsk

clean = modulate_fsk([1, 0, 1, 1])
jammed = apply_jammer(clean, JammerParams(threshold=300, seed=3))
print("clean commands :", [int(r) for r in clean.rpms])
print("jammed commands:", [int(r) for r in jammed.rpms])

for threshold in (0, 150, 300, 450, 600):
    jam = {"threshold": threshold} if threshold else None
    bers = [run_ber(n_bits=256, trials=1, seed=s, jammer=jam).rows[0].ber for s in range(5)]
    print(f"threshold {threshold:4d} RPM: BER {np.mean(bers):.3f} (seeds {min(bers):.3f}..{max(bers):.3f})")
