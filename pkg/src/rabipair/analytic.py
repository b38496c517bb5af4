"""Displaced-coherent-state approximation of the lowest levels.

At delta = 0 both qubits can be diagonalised in the sx basis and the field
only sees a linear drive, removed by a displacement D(u).  For the spin
configuration with sx eigenvalues (s1, s2) the drive amplitude is
``beta = f (s1 e^{i phi} + s2 e^{-i phi})`` and the displacement that
cancels the linear terms is ``u = -conj(beta)``, with energy ``-|beta|^2``.
A nonzero delta flips single qubits in the sx basis and mixes the four
displaced configurations through coherent-state overlaps.
"""
from __future__ import annotations

import cmath
import dataclasses
import math

import numpy as np
from scipy.special import eval_laguerre

from .linalg import converged_ground
from .model import ModelParams

# sx eigenvalues of (qubit 1, qubit 2) for the four ansatz channels
SX_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

# channels connected by a single qubit flip; (1,4) and (2,3) are not
FLIP_PAIRS = ((0, 1), (0, 2), (1, 3), (2, 3))


@dataclasses.dataclass(frozen=True)
class Displacements:
    u1: complex
    u2: complex
    u3: complex
    u4: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3, self.u4], dtype=complex)


def displacement_params(f: float, phi: float) -> Displacements:
    """Field displacement for each sx spin configuration.

    u1 = -u4 = -2 f cos(phi) is real, u2 = -u3 = 2i f sin(phi) is imaginary.
    """
    if f < 0:
        raise ValueError(f"f must be >= 0, got {f}")
    c = 2.0 * f * math.cos(phi)
    s = 2.0 * f * math.sin(phi)
    return Displacements(complex(-c, 0.0), complex(0.0, s), complex(0.0, -s), complex(c, 0.0))


def coherent_overlap(v: complex, u: complex) -> complex:
    """<v|u> = exp(-|u - v|^2 / 2) * exp((u v* - v u*) / 2)."""
    u = complex(u)
    v = complex(v)
    return cmath.exp(-0.5 * abs(u - v) ** 2 + 0.5 * (u * v.conjugate() - v * u.conjugate()))


def displaced_number_overlap(v: complex, u: complex, n: int) -> complex:
    """<n, v|n, u> for displaced number states |n, u> = D(u)|n>."""
    u = complex(u)
    v = complex(v)
    x = abs(u - v) ** 2
    return coherent_overlap(v, u) * eval_laguerre(n, x)


@dataclasses.dataclass(frozen=True)
class AnalyticManifold:
    n: int
    matrix: np.ndarray
    energies: np.ndarray
    displacements: Displacements


def analytic_matrix(f: float, delta: float, phi: float, n: int = 0, *,
                    overlap_phase: bool = False) -> AnalyticManifold:
    """4x4 Hamiltonian in the displaced basis of Fock manifold ``n``.

    Diagonal entries are ``n - |u_i|^2``; entries between channels differing
    by one qubit flip are ``delta/2 * <n, u_i|n, u_j>``.  With the default
    ``overlap_phase=False`` only the real factor
    ``exp(-|u_i - u_j|^2/2) L_n(|u_i - u_j|^2)`` of the overlap is kept,
    which is the form whose eigenvalues are the closed-form energies.
    ``overlap_phase=True`` keeps the full complex overlaps, i.e. the exact
    projection of the Hamiltonian onto the four displaced states.
    """
    if n < 0:
        raise ValueError(f"manifold index must be >= 0, got {n}")
    d = displacement_params(f, phi)
    u = d.as_array()
    m = np.diag(n - np.abs(u) ** 2).astype(complex)
    for i, j in FLIP_PAIRS:
        if overlap_phase:
            ov = displaced_number_overlap(u[i], u[j], n)
        else:
            x = abs(u[i] - u[j]) ** 2
            ov = math.exp(-0.5 * x) * eval_laguerre(n, x)
        m[i, j] = 0.5 * delta * ov
        m[j, i] = np.conj(m[i, j])
    assert np.array_equal(m, m.conj().T)
    energies = np.linalg.eigvalsh(m)
    return AnalyticManifold(n=n, matrix=m, energies=energies, displacements=d)


def closed_form_energies(f: float, delta: float, phi: float) -> np.ndarray:
    """E1..E4 of the lowest manifold, in that order (not sorted)."""
    root = math.sqrt(4.0 * f**4 * math.cos(2.0 * phi) ** 2 + delta**2 * math.exp(-4.0 * f**2))
    return np.array([
        -2.0 * f**2 - root,
        -4.0 * f**2 * math.sin(phi) ** 2,
        -4.0 * f**2 * math.cos(phi) ** 2,
        -2.0 * f**2 + root,
    ])


def analytic_ground(f: float, delta: float, phi) -> np.ndarray | float:
    """Closed-form ground energy E1; vectorised over ``phi``."""
    phi = np.asarray(phi, dtype=float)
    e = -2.0 * f**2 - np.sqrt(4.0 * f**4 * np.cos(2.0 * phi) ** 2 + delta**2 * np.exp(-4.0 * f**2))
    return float(e) if e.ndim == 0 else e


def local_minima(values, periodic: bool = False) -> np.ndarray:
    """Indices of local minima of a sampled curve.

    Plateaus count once, at their first index.  On an open grid the end
    points qualify when they are below (or equal to) their single neighbour.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    idx = []
    for i in range(n):
        if periodic:
            left, right = y[(i - 1) % n], y[(i + 1) % n]
        else:
            left = y[i - 1] if i > 0 else np.inf
            right = y[i + 1] if i < n - 1 else np.inf
        if y[i] < left and y[i] <= right:
            idx.append(i)
    return np.array(idx, dtype=int)


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    phi: np.ndarray
    numeric: np.ndarray
    analytic: np.ndarray
    deviation: np.ndarray
    n_max_used: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))

    @property
    def mean_deviation(self) -> float:
        return float(np.mean(self.deviation))

    @property
    def well_depth(self) -> float:
        """Depth of the numeric ground term, measured from zero energy."""
        return float(-np.min(self.numeric))

    def minima(self, which: str = "numeric", atol: float = 1e-9) -> np.ndarray:
        """Grid indices of the global-depth minima of one curve."""
        y = self.numeric if which == "numeric" else self.analytic
        idx = local_minima(y)
        return idx[y[idx] <= np.min(y) + atol]

    def minima_match(self, steps: int = 1) -> bool:
        a = self.minima("numeric")
        b = self.minima("analytic")
        if a.size != b.size:
            return False
        return bool(np.all(np.abs(np.sort(a) - np.sort(b)) <= steps))


def compare_analytic_numeric(f: float, delta: float, phi_grid, *, n_max: int = 20,
                             tol: float = 1e-10) -> ComparisonReport:
    """Ground energy from exact diagonalisation against the closed form E1."""
    phi = np.asarray(phi_grid, dtype=float)
    numeric = np.empty(phi.size)
    used = np.empty(phi.size, dtype=int)
    n_start = n_max
    for i, p in enumerate(phi):
        eig, used[i] = converged_ground(ModelParams(f=f, delta=delta, phi=p, n_max=n_start), tol)
        numeric[i] = eig.values[0]
    analytic = np.atleast_1d(analytic_ground(f, delta, phi))
    return ComparisonReport(phi=phi, numeric=numeric, analytic=analytic,
                            deviation=np.abs(numeric - analytic), n_max_used=used)
