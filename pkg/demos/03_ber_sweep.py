"""
Bit error rate against SNR
==========================

Each trial sends 32 random bits in one frame through the simulated channel
and scores only the payload. Every SNR row reuses the same payloads and noise
realisations, so the rows differ only in noise level.
"""

from airviber.harness import run_ber

sweep = run_ber(n_bits=32, trials=20, snrs=[0, 5, 10, 15, 20, 30, 45], seed=0)
print(f"{'SNR':>6} {'BER':>8} {'detected':>9}")
for row in sweep.rows:
    print(f"{row.snr_db:6.1f} {row.ber:8.4f} {row.frames_detected:5d}/{row.frames_sent}")

# The same harness can sweep the shipped location profiles instead.
print()
for row in run_ber(trials=10, locations=[str(i) for i in range(9)] + ["cpu"]).rows:
    print(f"location {row.label:>3} ({row.snr_db:5.2f} dB): BER {row.ber:.3f}")
