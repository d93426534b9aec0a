"""Arnold tongue boundaries by monotone bisection.

For an integer target m the boundary parameters solve
min_x (G_tau(x) - x) = m and max_x (G_tau(x) - x) = m: one-dimensional
root-finding in tau, no long orbits.  For the unforced Arnold map the answer
is known in closed form (tau = +/- K/2pi), which makes a nice check.
"""

import math

import numpy as np

from toruslock import tongue_boundary

for K in (0.25, 0.5, 0.75):
    def family(alpha, tau, K=K):
        def lift(x):
            x = np.asarray(x, dtype=float)
            return x + tau + K / (2 * math.pi) * np.sin(2 * math.pi * x)
        return lift

    tb = tongue_boundary(family, [0.0], target=0, tol=1e-10)
    want = K / (2 * math.pi)
    print(f"K={K}: tau+ = {tb.tau_plus[0]:+.9f}   analytic {want:+.9f}   "
          f"width {tb.width():.6f}")
