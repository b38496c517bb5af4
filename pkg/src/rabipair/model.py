"""Model parameters, basis indexing and the truncated Hamiltonian matrix.

The fast (qubits + field) Hamiltonian at fixed relative coordinate phi is

    H = delta/2 (sz x I + I x sz) + a^dag a
        + f [(a e^{i phi} + a^dag e^{-i phi}) sx x I
             + (a e^{-i phi} + a^dag e^{i phi}) I x sx]

with all energies measured in units of the photon energy omega.  The
product basis is |k> x chi_q with chi_1 = up-up, chi_2 = up-down,
chi_3 = down-up, chi_4 = down-down, flattened spin-major inside each Fock
level: ``index = 4*k + (q - 1)``.
"""
from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
N_SPIN = 4

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
I2 = np.eye(2)

# two-qubit operators in the chi_1..chi_4 ordering
SZ_SUM = np.kron(SIGMA_Z, I2) + np.kron(I2, SIGMA_Z)
SX_1 = np.kron(SIGMA_X, I2)
SX_2 = np.kron(I2, SIGMA_X)


def reduce_phase(phi: float) -> float:
    """Reduce an angle into [0, 2*pi)."""
    r = math.fmod(phi, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Dimensionless control parameters of the two-qubit cavity model.

    Attributes
    ----------
    f : float
        Qubit-field coupling constant, f >= 0.
    delta : float
        Qubit splitting in units of the photon energy, delta >= 0.
    phi : float
        Relative coordinate pi*x/lambda in radians.  Stored reduced modulo
        2*pi.  phi = 0 (coincident qubits) is accepted although the model
        is only physical for separations well above the atomic size.
    n_max : int
        Highest Fock occupation kept in the basis.
    omega : float
        Photon energy; used only when formatting output.
    """

    f: float
    delta: float = 1.0
    phi: float = 0.0
    n_max: int = 20
    omega: float = 1.0

    def __post_init__(self):
        for name in ("f", "delta", "phi", "omega"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.f < 0:
            raise ValueError(f"f must be >= 0, got {self.f}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "n_max", int(self.n_max))
        object.__setattr__(self, "phi", reduce_phase(float(self.phi)))

    @property
    def dim(self) -> int:
        return dimension(self.n_max)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


class BasisIndex(NamedTuple):
    k: int  # Fock occupation
    q: int  # spin channel, 1..4


def dimension(n_max: int) -> int:
    return N_SPIN * (n_max + 1)


def flatten(k: int, q: int) -> int:
    if k < 0 or not 1 <= q <= N_SPIN:
        raise ValueError(f"invalid basis label (k={k}, q={q})")
    return N_SPIN * k + (q - 1)


def unflatten(index: int) -> BasisIndex:
    if index < 0:
        raise ValueError(f"negative basis index {index}")
    k, r = divmod(index, N_SPIN)
    return BasisIndex(k, r + 1)


def symmetry_partner(params: ModelParams) -> ModelParams:
    """Shift phi by a quarter turn; the spectrum is unchanged by this map."""
    return params.replace(phi=params.phi + math.pi / 2)


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """Dense Hermitian matrix of the truncated Hamiltonian, in units of omega.

    Diagonal Fock block k is ``k*I4 + delta/2*(sz x I + I x sz)``.  The block
    (k, k+1) is ``f*sqrt(k+1)*(e^{i phi} sx x I + e^{-i phi} I x sx)``, i.e.
    the annihilation part; the lower blocks are its conjugate transpose, so
    the result is Hermitian bit for bit.
    """
    n = params.n_max
    dim = dimension(n)
    h = np.zeros((dim, dim), dtype=np.complex128)

    spin_diag = 0.5 * params.delta * SZ_SUM
    for k in range(n + 1):
        s = slice(N_SPIN * k, N_SPIN * (k + 1))
        h[s, s] = spin_diag + k * np.eye(N_SPIN)

    if params.f != 0.0:
        phase = complex(math.cos(params.phi), math.sin(params.phi))
        coupling = phase * SX_1 + phase.conjugate() * SX_2
        for k in range(n):
            rows = slice(N_SPIN * k, N_SPIN * (k + 1))
            cols = slice(N_SPIN * (k + 1), N_SPIN * (k + 2))
            block = params.f * math.sqrt(k + 1) * coupling
            h[rows, cols] = block
            h[cols, rows] = block.conj().T
    return h


def fock_bandwidth(h: np.ndarray) -> int:
    """Largest |k - k'| over the nonzero Fock blocks of ``h``."""
    rows, cols = np.nonzero(h)
    if rows.size == 0:
        return 0
    return int(np.max(np.abs(rows // N_SPIN - cols // N_SPIN)))


def photon_number_diagonal(n_max: int) -> np.ndarray:
    """Fock occupation of every flattened basis index."""
    return np.repeat(np.arange(n_max + 1, dtype=float), N_SPIN)
