"""End-to-end mode-locking certificate for a rigid irrational system.

The pipeline perturbs (golden mean, x -> x + 0.25) by less than eps into a
certified mode-locked system: the base becomes a continued-fraction
convergent p/q, a 1/q-periodic correction pins every fibre rotation number,
surgeries give the first-return displacement both signs on every fibre, and
a curve pair bounding an invariant annulus is extracted from the zero set
and certified at a shifted base rotation.  Expect roughly a minute.
"""

import json

from toruslock import GOLDEN_MEAN, Omega, QpfSystem, constant_field, \
    mode_lock_pipeline, verify_certificate

sys_in = QpfSystem(Omega.irrational(GOLDEN_MEAN), constant_field(0.25))
res = mode_lock_pipeline(sys_in, eps=0.2, seed=11)
cert = res.certificate

print(f"base rotation:   {GOLDEN_MEAN:.9f} -> {cert.omega_prime:.9f} "
      f"(convergent {cert.base_pq[0]}/{cert.base_pq[1]} + shift)")
print(f"claimed rho:     {float(cert.claimed_rotation):.9f}")
print(f"margin:          {cert.margin:.3g}")
print(f"perturbation:    {res.perturbation:.3g} < 0.2")

# certificates re-verify from their serialized payload alone
payload = json.loads(json.dumps(cert.to_obj()))
print(f"re-verification: {verify_certificate(payload)}")
