"""
One span, one constellation, one search
=======================================

Simulate PM-16QAM over 160 km of SMF, sweep the launch power, then run a
short GSS search at the best power. Budgets here are tiny so the script
finishes in a few minutes; the CLI runs the real campaigns.
"""
import numpy as np

from gss4d.channel import SSFMConfig
from gss4d.constellation import ShapingConfig, build_gss, pm16qam
from gss4d.metrics import papr_symbols
from gss4d.optimizer import GSSSearchConfig, PatternSearchConfig, optimize_gss
from gss4d.system import SystemConfig, simulate_link

# Coarse SSFM steps keep this interactive; the error is far below the MI stderr
sys = SystemConfig(distance_km=160.0, n_symbols=2**14, ssfm=SSFMConfig(max_step_km=4.0, max_nl_phase_rad=1e-2))

# MI against launch power: linear noise on the left, Kerr distortion on the right
powers = np.arange(6.0, 19.0, 2.0)
mis = []
for p in powers:
    res = simulate_link(pm16qam(), sys.at(power_dbm=p), seed=1)
    mis.append(res.mi.mi_bits_per_4d)
    print(f"{p:5.1f} dBm  MI {res.mi.mi_bits_per_4d:.4f} +- {res.mi.stderr:.4f}  waveform PAPR {res.papr_waveform_db:.2f} dB")
p_star = powers[int(np.argmax(mis))]
print(f"P* (PM-16QAM) = {p_star} dBm")

# AWGN surrogate first, then the link itself
sys_opt = sys.at(power_dbm=p_star)
sigma2 = simulate_link(pm16qam(), sys_opt, seed=2).mi.sigma2
search = GSSSearchConfig(search=PatternSearchConfig(max_evals=200), surrogate_evals=4000)
result = optimize_gss(sys_opt, 2, search=search, surrogate_sigma2=sigma2)
C = build_gss(result.params, ShapingConfig())

# Fresh seed for the comparison, paired across the two constellations
gss = simulate_link(C, sys_opt, seed=3).mi
ref = simulate_link(pm16qam(), sys_opt, seed=3).mi
print(f"\nGSS-4     MI {gss.mi_bits_per_4d:.4f}  PAPR {papr_symbols(C):.3f}")
print(f"PM-16QAM  MI {ref.mi_bits_per_4d:.4f}  PAPR {papr_symbols(pm16qam()):.3f}")
print(f"shell radii {np.unique(np.round(np.linalg.norm(C.points, axis=1), 4))}")
