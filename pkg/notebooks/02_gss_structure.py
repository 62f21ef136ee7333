"""
Building a 4D geometric shell shaped constellation
==================================================

A GSS constellation is defined by a handful of points in the first orthant.
The X-Y swap and the 16 sign patterns generate the rest.
"""
import numpy as np

from gss4d.constellation import ShapingConfig, build_gss, pm16qam, validate_gss
from gss4d.metrics import papr_symbols
from gss4d.optimizer import gss_bounds, init_halfway

cfg = ShapingConfig(m=8, k=4)
bounds = gss_bounds(cfg)
print(f"free parameters: {bounds.size}")  # 4 radii + 3 angles per reduced point

# Random parameters inside the bounds give a valid, if poor, constellation
rng = np.random.default_rng(0)
params = rng.uniform(bounds.lower, bounds.upper)
params[: cfg.k] = [0.3, 0.6, 0.8, 1.0]  # distinct shells
C = build_gss(params, cfg)
print(f"points: {C.M}, mean energy: {C.mean_energy:.6f}")

report = validate_gss(C, cfg)
print("\n".join(report.lines()))

# Symbol-level PAPR: peak 4D energy over mean 4D energy
print(f"\nPAPR GSS (random)   {papr_symbols(C):.4f}")
print(f"PAPR PM-16QAM       {papr_symbols(pm16qam()):.4f}")

# The optimizer starts from the middle of the box
x0 = init_halfway(bounds)
print(f"\nhalfway start: radii {x0[:4]}, angles pi/4")
