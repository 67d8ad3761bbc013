import json
import warnings

import numpy as np
import pytest

from kreinmat.errors import NearZeroEigenvalue, ResonanceDetected
from kreinmat.hki import census_check, hki_linear, negative_index
from kreinmat.kdv5 import (Kdv5Params, PeriodicWave, bloch_index, bloch_pencil, bloch_scan,
                           default_scan_grid, dispersion, dispersion_curves,
                           kdv5_krein_curves, predict_collisions,
                           solve_periodic_wave)
from kreinmat.pencil import pencil_eigenvalues, polynomial_spectrum

P = Kdv5Params()
MU1 = 0.1 * (5 - np.sqrt(5 * (2 * np.sqrt(129) - 21)))
MU2 = 1 - np.sqrt(10) / 5
MU_CH = 2 - np.sqrt(3)


@pytest.fixture(scope="module")
def flat():
    return solve_periodic_wave(P, 0.0)


@pytest.fixture(scope="module")
def wave():
    return solve_periodic_wave(P, 0.023)


def test_dispersion_values():
    assert abs(dispersion(1, 0.0)) < 1e-15
    assert abs(dispersion(-1, 0.0)) < 1e-15
    assert dispersion(-2, 0.0) == pytest.approx(0.4, abs=1e-14)
    assert dispersion(-2, MU_CH - 1e-4) > 0 > dispersion(-2, MU_CH + 1e-4)
    for mu in (1e-3, 0.01, 0.05):
        assert dispersion(1, mu) * dispersion(-1, mu) < 0


def test_dispersion_curves_signature():
    rows = dispersion_curves([0.1, 0.3], range(-2, 3))
    for mu, n, z, d, sig in rows:
        assert z == pytest.approx(-(n + mu) * d)
        assert (sig == "negative") == (d < 0)


def test_collisions_closed_form():
    cols = predict_collisions(P)
    pairs = {(c.n_neg, c.n_pos): c.mu for c in cols}
    assert pairs[(1, -2)] == pytest.approx(MU1, abs=1e-8)
    assert pairs[(-2, 0)] == pytest.approx(MU2, abs=1e-8)
    for c in cols:
        assert dispersion(c.n_neg, c.mu) < 0 <= dispersion(c.n_pos, c.mu)


def test_resonance_detected():
    # d(2, 0) = 0 when 2/15*16 + 4b = 2/15 + b, i.e. b = -2/3
    with pytest.raises(ResonanceDetected):
        Kdv5Params(b=-2.0 / 3.0).check_resonance()


def test_flat_state(flat):
    assert flat.ell == 1.0
    assert np.all(flat.fourier_coeffs == 0)


def test_wave_residual_and_symmetry(wave):
    U = wave.fourier_coeffs
    assert wave.residual_norm <= 1e-12
    assert np.allclose(U, U[::-1]) and np.allclose(U.imag, 0)
    assert wave.coefficient(1).real == pytest.approx(0.023 / 2)


def test_ell_correction_order():
    amps = 0.03 / 2.0 ** np.arange(4)
    dl = [abs(solve_periodic_wave(P, a).ell - 1.0) for a in amps]
    slope = np.polyfit(np.log(amps), np.log(dl), 1)[0]
    # O(eps) bound holds; the observed correction is quadratic
    assert all(d <= 1.0 * a for d, a in zip(dl, amps))
    assert slope == pytest.approx(2.0, abs=0.05)


def test_wave_json_roundtrip(wave):
    back = PeriodicWave.from_json(json.loads(json.dumps(wave.to_json())))
    assert np.array_equal(back.fourier_coeffs, wave.fourier_coeffs)
    assert back.ell == wave.ell


def test_flat_spectrum_closed_form(flat):
    for mu in (0.05, 0.2, 0.37, 0.5):
        pen = bloch_pencil(flat, mu)
        n = pen.modes
        lam = np.sort_complex(pencil_eigenvalues(pen))
        exact = np.sort_complex(-1j * (n + mu) * dispersion(n, mu))
        assert np.max(np.abs(lam - exact)) <= 1e-10 * max(1, np.abs(exact).max())
        assert np.allclose(pen.A0, np.diag(dispersion(n, mu)))


def _count(flat, mu):
    return int(np.sum(np.linalg.eigvalsh(bloch_pencil(flat, mu).A0) < 0))


def test_index_transition(flat):
    for mu in np.arange(0.05, 0.26, 0.01):
        assert _count(flat, mu) == 1
    for mu in np.arange(0.28, 0.495, 0.01):
        assert _count(flat, mu) == 2
    a, b = 0.25, 0.28
    while b - a > 1e-7:
        m = 0.5 * (a + b)
        a, b = (m, b) if _count(flat, m) == 1 else (a, m)
    assert a <= MU_CH + 1e-6 and b >= MU_CH - 1e-6 and b - a < 1e-6


def test_bloch_index_near_transition(flat, wave):
    for mu in (MU_CH - 1e-6, MU_CH + 1e-6, 0.1, 0.3):
        assert bloch_index(flat, mu) == _count(flat, mu)
    assert bloch_index(wave, 0.1) == 1


def test_flat_krein_zeros(flat):
    mu = 0.1
    curves = kdv5_krein_curves(flat, mu, np.linspace(-1.0, 1.0, 401))
    n = np.arange(-4, 5)
    d = dispersion(n, mu)
    neg = n[d < 0]
    expect = sorted(-(k + mu) * dispersion(k, mu) for k in neg)
    got = [z.z for z in curves.zeros]
    assert np.allclose(got, expect, atol=1e-10)
    for zr in curves.zeros:
        k = neg[np.argmin(np.abs(-(neg + mu) * dispersion(neg, mu) - zr.z))]
        assert zr.slope == pytest.approx(dispersion(k, mu), abs=1e-8)


def test_index_at_amplitude(wave):
    pen = bloch_pencil(wave, 0.1)
    assert negative_index(pen.A0) == 1


@pytest.mark.parametrize("mu", [0.1, 0.2045, 0.3, 0.359, 0.45])
def test_census(wave, mu):
    pen = bloch_pencil(wave, mu)
    rep = hki_linear(pen.A0, pen.A1)
    ok, detail = census_check(rep, polynomial_spectrum(pen))
    assert ok, detail


def test_star_even(wave):
    lam = pencil_eigenvalues(bloch_pencil(wave, 0.3585))
    mirror = -lam.conj()
    assert max(np.min(np.abs(lam - m)) for m in mirror) < 1e-12 * np.abs(lam).max()


def test_truncation_convergence(wave):
    w48 = solve_periodic_wave(Kdv5Params(M=48), 0.023)
    for mu in (0.2045, 0.359):
        a = bloch_scan(wave, [mu]).max_real[0]
        b = bloch_scan(w48, [mu], M=48).max_real[0]
        assert a > 1e-5
        assert abs(a - b) < 1e-8


def test_flat_scan_stable(flat):
    r = bloch_scan(flat, np.linspace(1e-3, 0.5, 50))
    assert r.max_real.max() < 1e-12 and not r.bubbles


def test_scan_csv(wave):
    r = bloch_scan(wave, [0.1, 0.2])
    lines = r.to_csv().splitlines()
    assert lines[0] == "mu,max_re_lambda,im_lambda_at_max" and len(lines) == 3


def test_default_grid():
    g = default_scan_grid(P)
    assert g.size == 400 and g[0] == 1e-3 and g[-1] == 0.5
