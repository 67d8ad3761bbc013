"""Krein matrix of a small linear pencil, step by step.

A_0 = diag(-1, -2) with A_1 = J has two imaginary eigenvalues +-i sqrt 2,
both of negative signature.  The single Krein eigenvalue crosses zero at
z = +-sqrt 2 with negative slope, and the index formula matches the census.
"""

import numpy as np

from kreinmat import polynomial_spectrum, validate_pencil
from kreinmat.hki import census_check, hki_for
from kreinmat.kreinmatrix import locate_zeros, select_subspace, trace_branches

J = np.array([[0.0, 1.0], [-1.0, 0.0]])

pencil = validate_pencil((np.diag([-1.0, -2.0]), J))
spec = polynomial_spectrum(pencil)
for e in spec.eigenvalues:
    print(f"lambda = {e.lam:.6f}  krein index {e.krein_index}")

S = select_subspace(pencil.coefficients[0])
print("S spans", S.size, "directions (negative space of A_0)")
curves = locate_zeros(trace_branches(pencil, S, np.linspace(-3, 3, 601)), pencil, S)
for z in curves.zeros:
    print(f"zero at z = {z.z:+.12f}  slope {z.slope:+.4f}  -> {z.signature}")
print("sqrt 2 =", np.sqrt(2))

rep = hki_for(pencil)
ok, detail = census_check(rep, spec)
print("K_Ham formula", rep.K_Ham_formula, "census", detail["k_r"], detail["k_c"],
      detail["k_i_minus"], "agree:", ok)
