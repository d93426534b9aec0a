"""Rotation numbers of forced circle maps.

Rigid rotations are detected exactly; everything else gets the elementary
finite-orbit certificate |estimate - rho| <= 2/n.  The forced Arnold family
phi(theta, x) = tau + (K/2pi) sin(2pi x) + b sin(2pi theta) is the built-in
testbed.
"""

import numpy as np

from toruslock import (GOLDEN_MEAN, Omega, QpfSystem, arnold_field,
                       constant_field, fibred_rotation_number)

golden = Omega.irrational(GOLDEN_MEAN)

# a rigid rotation: exact value, zero half-width
est = fibred_rotation_number(QpfSystem(golden, constant_field(0.3)))
print(f"rigid c=0.3        rho = {est.value}  (half-width {est.half_width})")

# theta-only forcing averages out along the equidistributed base orbit
sys_b = QpfSystem(golden, arnold_field(tau=0.0, K=0.0, b=0.1))
est = fibred_rotation_number(sys_b, n_max=100_000)
print(f"b sin(2 pi theta)  rho = {est.value:+.2e}  "
      f"(spread over fibres {est.per_theta_spread:.2e})")

# the unforced Arnold map locks at rho = 0 while tau is inside the tongue
for tau in (0.0, 0.05, 0.1, 0.2):
    sys_t = QpfSystem(golden, arnold_field(tau=tau, K=0.5, b=0.0))
    est = fibred_rotation_number(sys_t, n_max=50_000)
    print(f"Arnold tau={tau:4.2f}   rho = {est.value:.6f} "
          f"+/- {est.half_width:.1e}")

# rational base: the estimate runs through the exact first-return map
sys_r = QpfSystem(Omega.rational(1, 2), constant_field(0.25))
est = fibred_rotation_number(sys_r, n_max=2000)
print(f"omega=1/2, c=0.25  rho = {est.value}  (first-return PL map)")
