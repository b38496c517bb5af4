"""Exit criteria of the build, one test per criterion.

Each test carries its own tolerance and runtime budget; the terminal
summary prints one PASS/FAIL line per criterion.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import linregress

from rabipair.analytic import (analytic_matrix, closed_form_energies, coherent_overlap,
                               compare_analytic_numeric)
from rabipair.dynamics import (default_cutoff, dominant_peak, initial_amplitudes, norm_series,
                               population_series, simulate, spectral_peaks, time_grid,
                               windowed_record, InitialCondition)
from rabipair.linalg import converged_ground, eigendecompose, solve
from rabipair.model import ModelParams, symmetry_partner
from rabipair.observables import observable_surface, photon_number_of
from rabipair.surfaces import PERIOD, solve_relative_motion, term_surface

from oracles import (coherent_vector, eigenvalues_by_charpoly, even_fft_peak, harmonic_ground,
                     propagate_population, random_hermitian, rwa_hamiltonian)

pytestmark = pytest.mark.acceptance

FROZEN = Path(__file__).with_name("frozen_targets.json")


def _frozen(key, value):
    """Stored value for ``key``; records ``value`` the first time it is seen."""
    data = json.loads(FROZEN.read_text()) if FROZEN.exists() else {}
    if key not in data:
        data[key] = value
        FROZEN.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    return data[key]


@pytest.mark.criterion(1, "decoupled limit: u0 = -delta for all phi")
def test_decoupled_limit(budget):
    with budget(1):
        s = term_surface([0.0], np.linspace(0, 2 * math.pi, 64), 1.0)
    assert np.max(np.abs(s.values + 1.0)) <= 1e-9


@pytest.mark.criterion(2, "zero splitting: u0 = -4 f^2 max(cos^2, sin^2)")
def test_zero_splitting(budget):
    phi = np.linspace(0, math.pi, 64)
    with budget(30):
        for f in (0.3, 0.8):
            s = term_surface([f], phi, 0.0, tol=1e-10)
            exact = -4 * f * f * np.maximum(np.cos(phi) ** 2, np.sin(phi) ** 2)
            assert np.max(np.abs(s.values[0] - exact)) <= 1e-7


@pytest.mark.criterion(3, "quarter-period spectral symmetry on 20 random points")
def test_quarter_period(budget):
    rng = np.random.default_rng(2024)
    with budget(60):
        for _ in range(20):
            p = ModelParams(f=rng.uniform(0, 1.5), delta=rng.uniform(0, 2),
                            phi=rng.uniform(0, 2 * math.pi))
            eig, n_used = converged_ground(p, 1e-10)
            partner = solve(symmetry_partner(p.replace(n_max=n_used)))
            assert np.max(np.abs(np.sort(eig.values[:8]) - np.sort(partner.values[:8]))) <= 1e-8


@pytest.mark.criterion(4, "well depth at f = 1 is about 4 delta")
def test_well_depth(budget):
    phi = np.linspace(0, math.pi / 2, 33)
    with budget(60):
        s = term_surface([1.0], phi, 1.0, tol=1e-10)
    u_min = float(np.min(s.values))
    assert abs(u_min + 4.0) <= 0.5
    # grid contains phi = 0, where the minimum sits by mirror symmetry
    assert int(np.argmin(s.values[0])) == 0
    assert u_min == pytest.approx(_frozen("min_u0_f1_delta1", u_min), abs=1e-6)


@pytest.mark.criterion(5, "ground photon number about three at f = 1")
def test_photon_number(budget):
    with budget(60):
        eig, _ = converged_ground(ModelParams(f=1.0, delta=1.0, phi=0.0), 1e-10)
        n_usc, _ = photon_number_of(eig)
        eig0, _ = converged_ground(ModelParams(f=0.7, delta=0.0, phi=0.0), 1e-10)
        n_exact, _ = photon_number_of(eig0)
    assert 2.0 <= n_usc <= 4.5
    assert abs(n_exact - 4 * 0.49) <= 1e-6


@pytest.mark.criterion(6, "entanglement bounds and USC plateau")
def test_entanglement(budget):
    f = np.linspace(0, 1, 21)
    phi = np.linspace(0, math.pi, 21)
    with budget(300):
        s = observable_surface(f, phi, 1.0, "entanglement")
    assert np.all((s.values >= 0) & (s.values <= 1))
    assert np.max(np.abs(s.values[0])) <= 1e-10
    assert np.max(s.values[f >= 0.8 - 1e-12]) > 0.5


@pytest.mark.criterion(7, "dynamics: start, norm, even spectrum, linear weak-coupling line")
def test_dynamics(budget):
    nbar = 25.0
    n_max = default_cutoff(nbar)
    init = InitialCondition.from_nbar(nbar)
    with budget(600):
        eig = solve(ModelParams(f=0.5, delta=1.0, phi=0.0, n_max=n_max))
        amps = initial_amplitudes(eig, init)
        t = time_grid(400.0, 2**12)
        assert abs(population_series(eig, amps, [0.0]).values[0] - 1.0) <= 1e-10
        assert np.max(np.abs(norm_series(eig, amps, t) - 1.0)) < 1e-9

        f_values = [0.01, 0.02, 0.03, 0.04, 0.05]
        peaks, rwa = [], []
        for f in f_values:
            run = simulate(ModelParams(f=f, delta=1.0, phi=0.0, n_max=n_max), nbar)
            buf, _ = windowed_record(run.series)
            assert np.array_equal(buf[1:], buf[:0:-1])
            peaks.append(run.dominant_peak)
            dt = 0.1
            psi0 = np.kron(coherent_vector(math.sqrt(nbar), n_max), [0, 0, 0, 1])
            ref = propagate_population(rwa_hamiltonian(f, 1.0, 0.0, n_max), psi0, dt, 4000)
            rwa.append(even_fft_peak(ref, dt, (0.02, 1.0)))
    fit = linregress(f_values, peaks)
    assert fit.rvalue**2 > 0.99
    for p, r in zip(peaks, rwa):
        assert abs(p - r) <= 0.1 * r


@pytest.mark.criterion(8, "more spectral lines at f = 0.3 than at f = 0.02")
def test_frequency_doubling(budget):
    n_max = default_cutoff(25.0)
    with budget(600):
        counts = [len(spectral_peaks(simulate(ModelParams(f=f, delta=1.0, phi=0.0, n_max=n_max),
                                              25.0).spectrum, 0.05))
                  for f in (0.02, 0.3)]
    assert counts[1] > counts[0]


@pytest.mark.criterion(9, "closed form tracks the numeric ground term at f = 0.8")
def test_analytic_vs_numeric(budget):
    with budget(120):
        rep = compare_analytic_numeric(0.8, 1.0, np.linspace(0, math.pi, 201))
    assert rep.max_deviation <= 0.1 * rep.well_depth
    assert rep.minima_match(steps=1)


@pytest.mark.criterion(10, "closed form equals the 4x4 spectrum; overlap equals Fock sum")
def test_internal_consistency(budget):
    rng = np.random.default_rng(10)
    with budget(10):
        for _ in range(100):
            f, delta, phi = rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2 * math.pi)
            np.testing.assert_allclose(np.sort(closed_form_energies(f, delta, phi)),
                                       analytic_matrix(f, delta, phi).energies, atol=1e-10, rtol=0)
        for _ in range(100):
            u, v = rng.uniform(-2, 2, 2) + 1j * rng.uniform(-2, 2, 2)
            ref = np.vdot(coherent_vector(v, 90), coherent_vector(u, 90))
            assert abs(coherent_overlap(v, u) - ref) <= 1e-10


@pytest.mark.criterion(11, "relative motion: ring spectrum and harmonic well bottom")
def test_relative_motion(budget):
    mu = 10.0
    with budget(30):
        errs = []
        for n in (128, 256):
            res = solve_relative_motion(ModelParams(f=0.0, delta=1.0), 0, mu, n_grid=n, n_levels=5)
            ring = -1.0 + np.array([0, 16, 16, 64, 64]) / mu
            errs.append(np.abs(res.levels - ring))
            # leading error of the three-point Laplacian, k^4 h^2 / (12 mu)
            k = np.array([0, 4, 4, 8, 8])
            assert np.all(errs[-1] <= 1.1 * k**4 * (PERIOD / n) ** 2 / (12 * mu) + 1e-12)
        ratio = errs[0][1:] / errs[1][1:]
        assert np.all(np.abs(ratio - 4) < 0.1)

        p = ModelParams(f=1.0, delta=1.0)
        res = solve_relative_motion(p, 0, 1e4)
        # independent curvature at the phi = 0 minimum from a 5-point stencil
        h = 1e-2
        u = [solve(p.replace(phi=k * h, n_max=60)).values[0] for k in (-2, -1, 0, 1, 2)]
        curv = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
        ref = harmonic_ground(u[2], curv, 1e4)
    assert abs((res.levels[0] - u[2]) - (ref - u[2])) <= 0.05 * (ref - u[2])


@pytest.mark.criterion(12, "eigensolver matches the characteristic polynomial on 6x6")
def test_eigensolver_oracle(budget):
    rng = np.random.default_rng(12)
    with budget(10):
        for _ in range(50):
            a = random_hermitian(rng, 6)
            np.testing.assert_allclose(eigendecompose(a).values, eigenvalues_by_charpoly(a),
                                       atol=1e-8, rtol=0)
