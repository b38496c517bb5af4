"""Stationary-state correlations: mean photon number and qubit entanglement."""
from __future__ import annotations

import dataclasses

import numpy as np
from scipy.stats import entropy as shannon_entropy

from .linalg import EigenSystem
from .surfaces import Surface, spectrum_grid

DEGENERACY_GAP = 1e-8
UP, DOWN = 0, 1


@dataclasses.dataclass(frozen=True)
class StateExpansion:
    """Coefficients C[n, s1, s2] of a state over |n> chi_s1 chi_s2.

    Spin labels are 0 = up, 1 = down, so channel q of the flattened basis
    maps to ``(s1, s2) = divmod(q - 1, 2)``.
    """

    coefficients: np.ndarray
    nu: int = 0

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.ndim != 3 or c.shape[1:] != (2, 2):
            raise ValueError(f"coefficients must have shape (n+1, 2, 2), got {c.shape}")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"expansion is not normalised (sum |C|^2 = {norm!r})")

    @classmethod
    def from_vector(cls, vector, nu: int = 0) -> "StateExpansion":
        v = np.asarray(vector)
        return cls(v.reshape(-1, 2, 2), nu)

    @classmethod
    def from_eigensystem(cls, eig: EigenSystem, nu: int = 0) -> "StateExpansion":
        return cls.from_vector(eig.vectors[:, nu], nu)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


def photon_number(expansion: StateExpansion) -> float:
    """<a^dag a> = sum_n n |C[n, s1, s2]|^2."""
    p = expansion.probabilities.sum(axis=(1, 2))
    return float(np.arange(p.size) @ p)


def qubit1_marginal(expansion: StateExpansion) -> np.ndarray:
    """(p_up, p_down) of the first qubit, summed over field and qubit 2."""
    return expansion.probabilities.sum(axis=(0, 2))


def binary_entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    return float(shannon_entropy(np.asarray(p, dtype=float), base=2))


def entanglement(expansion: StateExpansion) -> float:
    """Entropy (bits) of the first qubit's diagonal marginal."""
    return binary_entropy(qubit1_marginal(expansion))


def _block_average(eig, nu, fn):
    block = eig.degenerate_block(nu, DEGENERACY_GAP)
    vals = [fn(StateExpansion.from_eigensystem(eig, k)) for k in block]
    return np.mean(vals, axis=0), block.size > 1


def photon_number_of(eig: EigenSystem, nu: int = 0, aggregate: bool = True) -> tuple[float, bool]:
    """Photon number of state ``nu``; averaged over its degenerate block if asked.

    Returns ``(value, degenerate)``.  The block average is basis independent.
    """
    if aggregate:
        val, deg = _block_average(eig, nu, photon_number)
        return float(val), deg
    return photon_number(StateExpansion.from_eigensystem(eig, nu)), eig.degenerate_block(nu).size > 1


def entanglement_of(eig: EigenSystem, nu: int = 0, aggregate: bool = True) -> tuple[float, bool]:
    """Entanglement of state ``nu``.

    With ``aggregate`` the first-qubit marginals are averaged over the
    degenerate block (the equal mixture of the block) before taking the
    entropy, which makes the result independent of the basis inside it.
    """
    if aggregate:
        p, deg = _block_average(eig, nu, qubit1_marginal)
        return binary_entropy(p), deg
    return entanglement(StateExpansion.from_eigensystem(eig, nu)), eig.degenerate_block(nu).size > 1


OBSERVABLES = {
    "photon": photon_number_of,
    "entanglement": entanglement_of,
}


def observable_surface(f_grid, phi_grid, delta: float, which: str, nu: int = 0, *,
                       n_max: int = 20, tol: float = 1e-9, aggregate: bool = True,
                       workers: int | None = None) -> Surface:
    """Photon number or entanglement of state ``nu`` over an (f, phi) grid."""
    try:
        fn = OBSERVABLES[which]
    except KeyError:
        raise ValueError(f"unknown observable {which!r}; choose from {sorted(OBSERVABLES)}") from None

    def reduce(eig):
        return fn(eig, nu, aggregate)

    res, used = spectrum_grid(f_grid, phi_grid, delta, n_max=n_max, tol=tol, workers=workers,
                              reduce=reduce)
    values = np.array([[r[0] for r in row] for row in res])
    degenerate = np.array([[r[1] for r in row] for row in res], dtype=bool)
    return Surface(np.atleast_1d(np.asarray(f_grid, dtype=float)),
                   np.atleast_1d(np.asarray(phi_grid, dtype=float)),
                   values, which, nu, used, degenerate)
