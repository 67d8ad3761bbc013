"""Interaction eigenvalues of suspension-bridge double pulses at c = 1.2.

The small eigenvalue nu of A_0 is positive for double pulse 0 and negative
for double pulse 1.  Its sign decides whether the interaction pair of the
quadratic problem is real (unstable) or imaginary with negative signature,
and ||U'|| sqrt(|nu| / d'') predicts its size.
"""

import numpy as np

from kreinmat.bridge import (a0_spectrum, construct_multipulse, family_around,
                             interaction_prediction, quadratic_spectrum,
                             verify_krein_diagonal)

c = 1.2
fam = family_around(c)
prim = fam.at(c)
d2, nux = fam.d2_at(c), fam.norm_ux(c)
print(f"d''(c) = {d2:.4f}   ||U'|| = {nux:.4f}")

for m in (2, 3):
    for k in (0, 1):
        p = construct_multipulse(prim, m, (k,))
        nu = a0_spectrum(p).nus[0]
        pred = interaction_prediction(nux, d2, [nu])[0]
        spec = quadratic_spectrum(p)
        pts = sorted((e for e in spec.eigenvalues if e.tag == "point"), key=lambda e: abs(e.lam))
        got = max(pts[:2], key=lambda e: e.lam.real + e.lam.imag)
        print(f"m={m} k={k}  X_min={p.x_min:.3f}  nu={nu:+.3e}  predicted {pred.lam:.5f}  "
              f"computed {got.lam:.5f}  krein index {got.krein_index}")

for m in (2, 3, 4):
    r = verify_krein_diagonal(construct_multipulse(prim, m, (1,)), prim, d2)
    print(f"m={m}  off-diagonal ratio {r.offdiag_ratio:.4f}  fitted d'' {r.d2_fit:.3f}  "
          f"|K_1| {r.k1_norm:.2e}")
