"""
Noise budget of a 400ZR receiver
================================

Where the -33.5 dBm receiver noise comes from, and how it relates to the
pre-FEC BER threshold of the concatenated FEC.
"""
import numpy as np

from gss4d.noise import NoiseBudget, ber_16qam, rx_noise_power, snr_for_ber

# BER of Gray-coded 16QAM over a few SNR values
for snr in (10.0, 12.0, 13.5, 15.0):
    print(f"SNR {snr:5.1f} dB -> BER {ber_16qam(snr):.4e}")

# The FEC is error free below 1.25e-2, so that BER fixes the receiver SNR
snr = snr_for_ber(1.25e-2)
print(f"\nSNR at the FEC threshold: {snr:.4f} dB")

# With -20 dBm at the receiver input the noise sits that far below the signal
print(f"RX noise power: {rx_noise_power(-20.0, snr):.4f} dBm")

# The same numbers through the budget object used by the link model
budget = NoiseBudget()
print(f"budget: TX OSNR {budget.tx_osnr_db} dB, RX noise {budget.rx_noise_power_dbm:.4f} dBm")

# BER curve sampled finely enough to read off the threshold by eye
grid = np.arange(12.0, 15.01, 0.25)
print("\n".join(f"{s:6.2f} {ber_16qam(s):.3e}" for s in grid))
