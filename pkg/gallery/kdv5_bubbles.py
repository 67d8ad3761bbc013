"""Where the KdV5 instability bubbles come from.

At zero amplitude a negative-signature dispersion curve crosses a positive
one at two values of mu.  For a small wave the Krein eigenvalue zeros near
the second crossing merge and leave the real axis, and the Bloch scan shows
a bubble of unstable spectrum there.
"""

import numpy as np

from kreinmat.kdv5 import (Kdv5Params, bloch_scan, default_scan_grid,
                           kdv5_krein_curves, predict_collisions, solve_periodic_wave)

P = Kdv5Params()
for c in predict_collisions(P):
    print(f"collision at mu = {c.mu:.6f} (n = {c.n_neg} meets n = {c.n_pos}, z = {c.z:.4f})")

window = np.linspace(-0.16, -0.08, 801)
for amp in (0.0, 0.005, 0.01, 0.02, 0.023):
    wave = solve_periodic_wave(P, amp)
    curves = kdv5_krein_curves(wave, 0.3585, window)
    zs = ", ".join(f"{z.z:.5f} ({z.signature})" for z in curves.zeros) or "none"
    print(f"amplitude {amp:<6} ell - 1 = {wave.ell - 1:+.2e}  zeros: {zs}")

wave = solve_periodic_wave(P, 0.023)
res = bloch_scan(wave, default_scan_grid(P), refine_edges=1e-7)
for b in res.bubbles:
    print(f"bubble [{b.mu_lo:.5f}, {b.mu_hi:.5f}]  max Re {b.max_real:.2e} "
          f"at Im {b.imag_at_peak:+.4f}")
