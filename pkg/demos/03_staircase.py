"""The devil's staircase of a twist family.

Sweeping tau through the forced Arnold family gives a monotone
rotation-number graph; mode-locking shows up as plateaus.  The rho = 0
plateau of the unforced family has exact width K/pi.
"""

import math

import numpy as np

from toruslock import GOLDEN_MEAN, Omega, arnold_family, detect_plateaus, \
    sweep_family

fam = arnold_family(Omega.irrational(GOLDEN_MEAN), K=0.5, b=0.0)
taus = np.linspace(-0.2, 0.2, 201)
data = sweep_family(fam, taus, n_max=5000)
plats = detect_plateaus(data, level_tol=5e-4)

print("tau in [-0.2, 0.2], 201 samples")
for p in plats:
    print(f"  plateau at rho = {p.level_rational}  over "
          f"[{p.tau_lo:+.4f}, {p.tau_hi:+.4f}]  width {p.width:.4f}")
print(f"analytic width of the rho=0 plateau: K/pi = {0.5 / math.pi:.4f}")
