"""Hermitian eigendecomposition with residual checks, and Fock-cutoff control."""
from __future__ import annotations

import dataclasses
import logging

import numpy as np
import scipy.linalg

from .model import ModelParams, build_hamiltonian

log = logging.getLogger(__name__)

TOL_RESID = 1e-10
TOL_ORTH = 1e-10
N_TRACK = 8
CUTOFF_STEP = 10
CUTOFF_CAP = 400


class EigensolverError(RuntimeError):
    """Raised when a decomposition fails or misses its accuracy contract."""

    def __init__(self, message, dim=None, residual=None):
        super().__init__(message)
        self.dim = dim
        self.residual = residual


class CutoffError(EigensolverError):
    """Raised when the Fock cutoff grows past its cap without converging."""

    def __init__(self, message, n_max, last_delta):
        super().__init__(message, residual=last_delta)
        self.n_max = n_max
        self.last_delta = last_delta


@dataclasses.dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray
    n_max: int | None = None

    def __len__(self):
        return self.values.size

    @property
    def dim(self) -> int:
        return self.values.size

    def state(self, nu: int) -> np.ndarray:
        return self.vectors[:, nu]

    def degenerate_block(self, nu: int, tol: float = 1e-8) -> np.ndarray:
        """Indices of all states within ``tol`` of state ``nu`` (contiguous)."""
        e = self.values
        lo = nu
        while lo > 0 and e[nu] - e[lo - 1] < tol:
            lo -= 1
        hi = nu
        while hi + 1 < e.size and e[hi + 1] - e[nu] < tol:
            hi += 1
        return np.arange(lo, hi + 1)


def _check_hermitian(h):
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    skew = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    if skew > 1e-12 * scale:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {skew:.3e})")


def _canonical_order(values, vectors, tie_tol):
    """Break ties between equal eigenvalues deterministically and fix phases.

    Within a degenerate cluster, columns are ordered by the index of their
    first significant amplitude.  Each column is rotated so that this
    amplitude is real and positive.
    """
    d = values.size
    amp = np.abs(vectors)
    thresh = 1e-8 * amp.max(axis=0)
    first = np.argmax(amp > thresh[None, :], axis=0)

    order = np.arange(d)
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and values[stop] - values[start] <= tie_tol * max(1.0, abs(values[start])):
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            order[start:stop] = block[np.argsort(first[block], kind="stable")]
        start = stop

    values = values[order]
    vectors = vectors[:, order]
    first = first[order]
    lead = vectors[first, np.arange(d)]
    vectors = vectors * (np.abs(lead) / lead)[None, :]
    return values, vectors


def eigendecompose(h: np.ndarray, *, tol_resid: float = TOL_RESID,
                   tol_orth: float = TOL_ORTH, n_max: int | None = None) -> EigenSystem:
    """Full eigensystem of a dense Hermitian matrix.

    Uses LAPACK's Householder tridiagonalisation followed by a
    divide-and-conquer tridiagonal solver, then verifies

    * ``||H v_j - lambda_j v_j|| <= tol_resid * ||H||_F`` for every column,
    * ``max |V^dag V - I| <= tol_orth``.

    Raises
    ------
    ValueError
        If ``h`` is not square, finite and Hermitian.
    EigensolverError
        If LAPACK fails or the result misses either tolerance.
    """
    h = np.asarray(h)
    _check_hermitian(h)
    dim = h.shape[0]
    try:
        values, vectors = scipy.linalg.eigh(h, driver="evd", check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed for dimension {dim}: {exc}", dim=dim) from exc

    values, vectors = _canonical_order(values, vectors, tie_tol=1e-12)

    fro = float(np.linalg.norm(h)) or 1.0
    resid = float(np.max(np.linalg.norm(h @ vectors - vectors * values, axis=0))) if dim else 0.0
    if resid > tol_resid * fro:
        raise EigensolverError(
            f"residual {resid:.3e} exceeds {tol_resid:g}*||H||_F for dimension {dim}",
            dim=dim, residual=resid)
    orth = float(np.max(np.abs(vectors.conj().T @ vectors - np.eye(dim)))) if dim else 0.0
    if orth > tol_orth:
        raise EigensolverError(
            f"orthonormality defect {orth:.3e} exceeds {tol_orth:g} for dimension {dim}",
            dim=dim, residual=orth)
    return EigenSystem(values=values, vectors=vectors, n_max=n_max)


def solve(params: ModelParams) -> EigenSystem:
    """Eigensystem of the Hamiltonian at the cutoff stored in ``params``."""
    return eigendecompose(build_hamiltonian(params), n_max=params.n_max)


def converged_ground(params: ModelParams, tol: float = 1e-9, *, n_track: int = N_TRACK,
                     step: int = CUTOFF_STEP, cap: int = CUTOFF_CAP,
                     history: list | None = None) -> tuple[EigenSystem, int]:
    """Grow the Fock cutoff until the lowest ``n_track`` levels settle.

    Starting at ``params.n_max`` the cutoff is raised by ``step`` until no
    tracked eigenvalue moves by ``tol`` or more between consecutive cutoffs.
    Returns the eigensystem at the last cutoff and that cutoff.  When given,
    ``history`` receives ``(n_max, lowest values)`` for every cutoff tried.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    n = params.n_max
    prev = solve(params.replace(n_max=n))
    if history is not None:
        history.append((n, prev.values[:n_track].copy()))
    last_delta = float("inf")
    while n + step <= cap:
        n += step
        cur = solve(params.replace(n_max=n))
        if history is not None:
            history.append((n, cur.values[:n_track].copy()))
        m = min(n_track, prev.dim)
        last_delta = float(np.max(np.abs(cur.values[:m] - prev.values[:m])))
        if m == n_track and last_delta < tol:
            return cur, n
        prev = cur
    raise CutoffError(
        f"lowest {n_track} levels not converged to {tol:g} by n_max={n} "
        f"(last change {last_delta:.3e}) at f={params.f}, delta={params.delta}, phi={params.phi}",
        n_max=n, last_delta=last_delta)
