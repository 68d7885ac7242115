"""
Amplitude keying near a surface resonance
=========================================

With ASK each bit is a single speed held for the whole bit. On its own the
amplitude only grows with the square of the frequency, but a surface with a
self-resonance close to one of the two speeds amplifies that one much more.
"""

import numpy as np

from airviber.channel import ChannelParams, transmit
from airviber.modem import AskParams, modulate_ask
from airviber.physics import FanModel

ask = AskParams(rpm0=2000, rpm1=2600, bit_duration=4.0)
schedule = modulate_ask([0, 1, 0, 1], ask)
fan = FanModel()
n_bit = int(ask.bit_duration * 500)

for gain in (0.0, 4.0):
    params = ChannelParams(snr_db=float("inf"), quantization_step=None,
                           resonance_gain=gain, resonance_hz=2600 / 60)
    z = transmit(schedule, fan, params).samples[:, 2] - 9.81
    # amplitude over the settled second half of each bit
    amps = [np.abs(z[k * n_bit + n_bit // 2:(k + 1) * n_bit]).max() for k in range(4)]
    print(f"resonance gain {gain}: per-bit amplitudes " + ", ".join(f"{a:.3f}" for a in amps)
          + f"  ratio {amps[1] / amps[0]:.2f}")
print(f"square law alone predicts {(2600 / 2000) ** 2:.2f}")
