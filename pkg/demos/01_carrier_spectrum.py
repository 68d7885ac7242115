"""
Fan speed as a carrier
======================

A fan's rotating unbalance shakes whatever it is mounted on at its shaft
frequency, RPM/60. Here we spin the simulated fan at a constant 3000 RPM and
look for the line in the accelerometer spectrum.
"""

import numpy as np

from airviber.channel import ChannelParams, transmit
from airviber.core import RpmSchedule
from airviber.harness import psd
from airviber.physics import INCH_M, OUNCE_KG, FanModel, centrifugal_force, rpm_to_hz

# Ten seconds at 3000 RPM, recorded at 500 Hz through a quiet desk.
schedule = RpmSchedule(((10.0, 3000),))
trace = transmit(schedule, FanModel(), ChannelParams(snr_db=45.02))

spectrum = psd(trace)
print(f"expected carrier: {rpm_to_hz(3000):.2f} Hz")
print(f"measured peak:    {spectrum.peak_hz(min_hz=1):.2f} Hz (bins are {spectrum.bin_hz:.2f} Hz wide)")

# The strongest few bins, to show how narrow the line is.
top = np.argsort(spectrum.magnitudes)[::-1][:5]
for k in sorted(top):
    print(f"  {spectrum.frequencies[k]:6.2f} Hz  {10 * np.log10(spectrum.magnitudes[k]):7.1f} dB")

# The driving force grows with the square of the speed. A 0.1 oz blade
# imbalance 2 in from the hub:
for rpm in (2600, 3000, 3260):
    f = centrifugal_force(0.1 * OUNCE_KG, 2 * INCH_M, rpm)
    print(f"{rpm} RPM -> {f:.2f} N")
