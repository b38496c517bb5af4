"""Potential terms u_nu(phi), transition frequencies and relative motion.

A term is the nu-th eigenvalue of the fast Hamiltonian viewed as a function
of the relative coordinate; it is the potential felt by the slow relative
motion of the qubits.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .linalg import N_TRACK, EigenSystem, converged_ground
from .model import ModelParams

PERIOD = math.pi / 2
MIN_POINTS_PER_OSCILLATION = 8


class GridPointError(RuntimeError):
    """A computation failed at one (f, phi) grid point."""

    def __init__(self, f, phi, cause):
        super().__init__(f"failed at f={f!r}, phi={phi!r}: {cause}")
        self.f = f
        self.phi = phi
        self.cause = cause


@dataclasses.dataclass(frozen=True)
class Surface:
    """Scalar observable sampled on an (f, phi) grid.

    ``values[i, j]`` belongs to ``f_grid[i]`` and ``phi_grid[j]``.
    ``n_max_used`` holds the converged Fock cutoff per point and
    ``degenerate`` marks points whose state sits within 1e-8 of a neighbour.
    """

    f_grid: np.ndarray
    phi_grid: np.ndarray
    values: np.ndarray
    label: str
    nu: int
    n_max_used: np.ndarray | None = None
    degenerate: np.ndarray | None = None

    def __post_init__(self):
        shape = (np.size(self.f_grid), np.size(self.phi_grid))
        if np.shape(self.values) != shape:
            raise ValueError(f"values shape {np.shape(self.values)} does not match grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("surface values must be finite")

    def rows(self):
        """Yield (f, phi, nu, value) in grid order."""
        for i, f in enumerate(self.f_grid):
            for j, phi in enumerate(self.phi_grid):
                yield float(f), float(phi), self.nu, float(self.values[i, j])


def grid_map(func: Callable, points: Sequence, workers: int | None = None) -> list:
    """Evaluate ``func`` over ``points`` keeping input order.

    ``workers > 1`` fans the calls out to a thread pool; LAPACK releases the
    GIL so this gives real concurrency.  Results are gathered by index, so
    the output never depends on completion order.
    """
    if workers is None or workers <= 1:
        return [func(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, points))


def _converged(f, delta, phi, n_max, tol):
    try:
        return converged_ground(ModelParams(f=f, delta=delta, phi=phi, n_max=n_max), tol)
    except Exception as exc:
        raise GridPointError(f, phi, exc) from exc


def spectrum_grid(f_grid, phi_grid, delta: float, *, n_max: int = 20, tol: float = 1e-9,
                  workers: int | None = None,
                  reduce: Callable[[EigenSystem], np.ndarray] | None = None):
    """Converged eigensystems on a grid, reduced by ``reduce`` at each point.

    Returns ``(results, n_used)`` where ``results[i][j]`` is
    ``reduce(eig)`` (default: the tracked lowest eigenvalues).
    """
    f_grid = np.atleast_1d(np.asarray(f_grid, dtype=float))
    phi_grid = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    if f_grid.size == 0 or phi_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if reduce is None:
        def reduce(eig):
            return eig.values[:N_TRACK].copy()

    points = [(f, p) for f in f_grid for p in phi_grid]

    def one(point):
        eig, used = _converged(point[0], delta, point[1], n_max, tol)
        return reduce(eig), used

    out = grid_map(one, points, workers)
    shape = (f_grid.size, phi_grid.size)
    results = [[out[i * shape[1] + j][0] for j in range(shape[1])] for i in range(shape[0])]
    used = np.array([o[1] for o in out], dtype=int).reshape(shape)
    return results, used


def term_values(params: ModelParams, nu_max: int, phi_grid, *, tol: float = 1e-9,
                workers: int | None = None) -> list[Surface]:
    """Terms u_0..u_{nu_max} at ``params.f`` along ``phi_grid``."""
    if not 0 <= nu_max < N_TRACK:
        raise ValueError(f"nu_max must be in [0, {N_TRACK - 1}], got {nu_max}")
    vals, used = spectrum_grid([params.f], phi_grid, params.delta, n_max=params.n_max,
                               tol=tol, workers=workers)
    arr = np.array(vals)  # (1, n_phi, N_TRACK)
    f_grid = np.array([params.f])
    phi_grid = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    return [Surface(f_grid, phi_grid, arr[:, :, nu], "term", nu, used) for nu in range(nu_max + 1)]


def term_surface(f_grid, phi_grid, delta: float, nu: int = 0, *, n_max: int = 20,
                 tol: float = 1e-9, workers: int | None = None) -> Surface:
    """u_nu over an (f, phi) grid."""
    if not 0 <= nu < N_TRACK:
        raise ValueError(f"nu must be in [0, {N_TRACK - 1}], got {nu}")
    vals, used = spectrum_grid(f_grid, phi_grid, delta, n_max=n_max, tol=tol, workers=workers)
    values = np.array(vals)[:, :, nu]
    return Surface(np.atleast_1d(np.asarray(f_grid, dtype=float)),
                   np.atleast_1d(np.asarray(phi_grid, dtype=float)),
                   values, "term", nu, used)


def transition_surface(f_grid, phi_grid, delta: float, nu1: int, nu2: int, *,
                       omega: float = 1.0, n_max: int = 20, tol: float = 1e-9,
                       workers: int | None = None) -> Surface:
    """omega * (u_nu2 - u_nu1) over an (f, phi) grid."""
    if not (0 <= nu1 <= nu2 < N_TRACK):
        raise ValueError(f"need 0 <= nu1 <= nu2 < {N_TRACK}, got ({nu1}, {nu2})")
    vals, used = spectrum_grid(f_grid, phi_grid, delta, n_max=n_max, tol=tol, workers=workers)
    arr = np.array(vals)
    values = omega * (arr[:, :, nu2] - arr[:, :, nu1])
    return Surface(np.atleast_1d(np.asarray(f_grid, dtype=float)),
                   np.atleast_1d(np.asarray(phi_grid, dtype=float)),
                   values, f"transition_{nu1}_{nu2}", nu2, used)


def transition_frequency(params: ModelParams, nu1: int, nu2: int, phi_grid, *,
                         tol: float = 1e-9, workers: int | None = None) -> Surface:
    return transition_surface([params.f], phi_grid, params.delta, nu1, nu2,
                              omega=params.omega, n_max=params.n_max, tol=tol, workers=workers)


# -- relative motion --------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RelativeMotionResult:
    """Levels of the relative motion on one period of the term.

    ``wavefunctions[:, m]`` is normalised so that ``sum |psi|^2 * h = 1``
    with ``h`` the grid spacing.
    """

    mu: float
    levels: np.ndarray
    grid: np.ndarray
    wavefunctions: np.ndarray
    potential: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])


def count_oscillations(potential) -> int:
    """Number of local minima of a periodic sampled potential (>= 1)."""
    y = np.asarray(potential, dtype=float)
    left = np.roll(y, 1)
    right = np.roll(y, -1)
    spread = np.ptp(y)
    if spread <= 1e-9 * max(1.0, np.max(np.abs(y))):
        return 1
    return max(1, int(np.sum((y < left) & (y <= right))))


def solve_periodic_schrodinger(potential, mu: float, period: float = PERIOD,
                               n_levels: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Lowest levels of ``-(1/mu) d^2/dphi^2 + V`` with periodic boundaries.

    ``potential`` holds V at ``phi_i = i * period / n`` for i = 0..n-1.  The
    second derivative is the three-point central difference, wrapping at the
    cell boundary.  Returns ``(levels, vectors)`` with vectors normalised to
    unit grid quadrature.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    v = np.asarray(potential, dtype=float)
    n = v.size
    if n < 3:
        raise ValueError("need at least 3 grid points")
    points = n / count_oscillations(v)
    if points < MIN_POINTS_PER_OSCILLATION:
        raise ValueError(
            f"grid too coarse: {points:.1f} points per potential oscillation "
            f"(need {MIN_POINTS_PER_OSCILLATION})")
    h = period / n
    kin = 1.0 / (mu * h * h)
    mat = np.diag(v + 2.0 * kin)
    idx = np.arange(n)
    mat[idx, (idx + 1) % n] -= kin
    mat[idx, (idx - 1) % n] -= kin
    k = min(n_levels, n)
    levels, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, k - 1])
    vecs = vecs / math.sqrt(h)
    # deterministic sign: largest-magnitude amplitude positive
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(k)]
    vecs = vecs * np.sign(lead)[None, :]
    return levels, vecs


def solve_relative_motion(params: ModelParams, nu: int, mu: float, n_grid: int = 512, *,
                          n_levels: int = 8, tol: float = 1e-9,
                          workers: int | None = None) -> RelativeMotionResult:
    """Relative-motion levels in the term u_nu, in units of omega.

    ``mu = M lambda^2 omega / pi^2`` is the dimensionless mass.  Constant
    kinetic offsets from the centre-of-mass and transverse motion are
    dropped.  The term is sampled on ``n_grid`` points of [0, pi/2).
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if n_grid < 64:
        raise ValueError(f"n_grid must be >= 64, got {n_grid}")
    grid = np.arange(n_grid) * (PERIOD / n_grid)
    surf = term_surface([params.f], grid, params.delta, nu, n_max=params.n_max, tol=tol,
                        workers=workers)
    potential = surf.values[0]
    levels, vecs = solve_periodic_schrodinger(potential, mu, PERIOD, n_levels)
    return RelativeMotionResult(mu=mu, levels=levels, grid=grid, wavefunctions=vecs,
                                potential=potential)
