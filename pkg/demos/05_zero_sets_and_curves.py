"""Zero sets of the first-return displacement and curve pairs.

A theta-independent profile with values +0.1 at x=0 and -0.1 at x=1/2 has
zero circles exactly at x = 1/4 and 3/4; the corridor between them carries
the closed curve pair directly.  A pinched two-strand band shows the other
mechanism: the corridor dies at a right critical vertex and the curve jumps
to the next strand with one vertical segment per period.
"""

import numpy as np

from toruslock import Omega, PwaField, QpfSystem, build_curves, \
    sweep_zero_set, triangulate

# corridor case
n = 9
tri = triangulate(1, (0, 1), n, seed=4)
prof = np.where(tri.rows < 0.5, 1.0 - 4 * tri.rows, -3.0 + 4 * tri.rows) * 0.1
pf = PwaField(tri, np.tile(prof, (n, 1)))
arr = sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0, n_columns=128)
pair = build_curves(arr, seed=1)
print(f"corridor: components {[c['winding'] for c in arr.components]}, "
      f"closure {pair.closure}, verticals "
      f"{sum(v is not None for v in pair.verticals)}")

# pinched band: inessential negative region covering every fibre
n = 32
tri = triangulate(1, (0, 1), n, seed=8)
TH, X = np.meshgrid(tri.cols, tri.rows, indexing="ij")
g = np.clip(1 - np.abs(TH - 0.5) / 0.3, 0, 1)
v = np.sin(2 * np.pi * (2 * X - TH - 0.137)) \
    + 1.6 * g * (1 + np.cos(2 * np.pi * (X - 0.313))) / 2
pf = PwaField(tri, 0.04 * v)
arr = sweep_zero_set(QpfSystem(Omega.rational(0, 1), pf), 0, n_columns=256)
pair = build_curves(arr, seed=2)
print(f"band: critical vertices "
      f"{[(round(c.theta, 3), c.side) for c in arr.cvs]}, "
      f"closure {pair.closure}, verticals "
      f"{sum(v is not None for v in pair.verticals)}, "
      f"targets {len(pair.targets)}")
