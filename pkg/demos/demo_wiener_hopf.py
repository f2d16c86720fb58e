"""Wiener-Hopf normalisation for the lattice compound Poisson fixture.

The ascending factor is estimated through excursion sampling (the ladder
jump representation of the Laplace exponent); the descending factor comes
from the exact dual ladder tables by geometric epoch mixing.  Their product
must recover the transform argument itself.
"""

import levyladder as ll
from levyladder.rng import RngPolicy

policy = RngPolicy(seed=23)

rep = ll.wiener_hopf_check(ll.P3, (0.25, 0.5, 1.0, 2.0, 4.0), 100_000, policy, fixture="P3")
print("kappa(a,0) * kappahat(a,0) = a   (MC route x exact route)")
for row in rep.details:
    print(f"  a={row['a']:<5g} kappa={row['kappa']:.5f} kappahat={row['kappahat']:.5f} "
          f"product={row['product']:.5f} rel err={row['rel_err']:.2%}")
print(f"overall: {'PASS' if rep.passed else 'FAIL'} "
      f"(excursion censoring {rep.censored_mass:.4%})")
