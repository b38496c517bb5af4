"""Spectral time evolution from a coherent field state and its Fourier analysis.

The state is expanded over the eigenbasis once,
``|Psi(t)> = sum_k A_k e^{-i E_k t} |psi_k>``, so every sampled time is
exact given the eigensystem; no integrator is involved.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.signal import find_peaks
from scipy.special import gammaln, pdtrc

from .linalg import EigenSystem, solve
from .model import N_SPIN, ModelParams
from .surfaces import grid_map

NORM_DEFICIT_TOL = 1e-12
DEFAULT_T = 400.0
DEFAULT_SAMPLES = 2**14
MIN_SPECTRUM_SAMPLES = 16
_CHUNK = 1024


class TruncationError(ValueError):
    """The Fock cutoff is too small for the requested initial state."""


@dataclasses.dataclass(frozen=True)
class InitialCondition:
    """Coherent field amplitude ``alpha`` times the spin channel ``spin``."""

    alpha: float
    spin: int = 4

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.spin not in (1, 2, 3, 4):
            raise ValueError(f"spin channel must be 1..4, got {self.spin}")

    @classmethod
    def from_nbar(cls, nbar: float, spin: int = 4) -> "InitialCondition":
        if nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {nbar}")
        return cls(math.sqrt(nbar), spin)

    @property
    def nbar(self) -> float:
        return self.alpha**2


@dataclasses.dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclasses.dataclass(frozen=True)
class SpectrumSeries:
    """One-sided amplitude spectrum; ``freqs`` are angular, in units of omega."""

    freqs: np.ndarray
    magnitudes: np.ndarray
    n_fft: int

    @property
    def spacing(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


def coherent_amplitudes(alpha: float, n_max: int) -> np.ndarray:
    """Fock amplitudes e^{-alpha^2/2} alpha^k / sqrt(k!) for k = 0..n_max."""
    k = np.arange(n_max + 1)
    if alpha == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    return np.exp(-0.5 * alpha**2 + k * math.log(alpha) - 0.5 * gammaln(k + 1))


def norm_deficit(alpha: float, n_max: int) -> float:
    """Poisson weight beyond the cutoff, 1 - sum_{k<=n_max} |c_k|^2."""
    return float(pdtrc(n_max, alpha**2)) if alpha > 0 else 0.0


def default_cutoff(nbar: float) -> int:
    """Fock cutoff for dynamics; 120 at nbar = 25."""
    return max(120, int(math.ceil(2.0 * nbar + 14.0 * math.sqrt(nbar))))


def _n_max_of(eig: EigenSystem) -> int:
    return eig.n_max if eig.n_max is not None else eig.dim // N_SPIN - 1


def initial_state(init: InitialCondition, n_max: int) -> np.ndarray:
    deficit = norm_deficit(init.alpha, n_max)
    if deficit > NORM_DEFICIT_TOL:
        raise TruncationError(
            f"coherent state alpha={init.alpha} loses {deficit:.2e} of its norm at "
            f"n_max={n_max}; raise the cutoff")
    psi = np.zeros(N_SPIN * (n_max + 1), dtype=complex)
    psi[init.spin - 1::N_SPIN] = coherent_amplitudes(init.alpha, n_max)
    return psi


def initial_amplitudes(eig: EigenSystem, init: InitialCondition) -> np.ndarray:
    """Overlaps A_k = <psi_k|Psi(0)> of the initial state with each eigenstate."""
    psi0 = initial_state(init, _n_max_of(eig))
    return eig.vectors.conj().T @ psi0


def _check_uniform(times):
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a non-empty 1-d array")
    if t.size > 1:
        d = np.diff(t)
        if np.any(d <= 0):
            raise ValueError("time grid must be strictly increasing")
        if np.max(np.abs(d - d[0])) > 1e-9 * max(abs(d[0]), np.max(np.abs(t))):
            raise ValueError("time grid must be uniform")
    return t


def _amplitude_chunks(eig, amps, times, rows):
    """Yield (slice, psi[rows, chunk]) for the state evolved to ``times``."""
    sub = eig.vectors[rows, :]
    for start in range(0, times.size, _CHUNK):
        t = times[start:start + _CHUNK]
        coeff = amps[:, None] * np.exp(-1j * np.outer(eig.values, t))
        yield slice(start, start + t.size), sub @ coeff


def state_at(eig: EigenSystem, amps: np.ndarray, t: float) -> np.ndarray:
    return eig.vectors @ (amps * np.exp(-1j * eig.values * t))


def population_series(eig: EigenSystem, amps: np.ndarray, t_grid, channel: int = 4) -> TimeSeries:
    """Probability of spin channel ``channel`` (4 = both down) at each time."""
    t = _check_uniform(t_grid)
    rows = np.arange(channel - 1, eig.dim, N_SPIN)
    out = np.empty(t.size)
    for s, psi in _amplitude_chunks(eig, amps, t, rows):
        out[s] = np.sum(np.abs(psi) ** 2, axis=0)
    return TimeSeries(t, out)


def norm_series(eig: EigenSystem, amps: np.ndarray, t_grid) -> np.ndarray:
    t = _check_uniform(t_grid)
    out = np.empty(t.size)
    for s, psi in _amplitude_chunks(eig, amps, t, slice(None)):
        out[s] = np.sum(np.abs(psi) ** 2, axis=0)
    return out


def reduced_density_matrix(eig: EigenSystem, amps: np.ndarray, t: float) -> np.ndarray:
    """4x4 two-qubit density matrix with the field traced out."""
    psi = state_at(eig, amps, t).reshape(-1, N_SPIN)
    return psi.T @ psi.conj()


def time_grid(T: float, n_samples: int) -> np.ndarray:
    if not T > 0 or n_samples < 2:
        raise ValueError(f"need T > 0 and at least 2 samples, got T={T}, n={n_samples}")
    return np.arange(n_samples) * (T / n_samples)


def _next_pow2(n):
    return 1 << (int(n) - 1).bit_length()


def windowed_record(series: TimeSeries, even: bool = True) -> tuple[np.ndarray, float]:
    """Mean-subtracted, Hann-windowed record ready for the DFT.

    With ``even=True`` the samples (which must start at t = 0) are mirrored
    to negative times and the Hann window is centred on t = 0.  The record
    is laid out circularly (t = 0 at index 0, negative times wrapped to the
    end), so it is exactly symmetric and its transform is real and even.
    Returns the zero-padded record (power-of-two length) and the window sum.
    """
    y = np.asarray(series.values, dtype=float)
    n = y.size
    if n < MIN_SPECTRUM_SAMPLES:
        raise ValueError(f"need at least {MIN_SPECTRUM_SAMPLES} samples, got {n}")
    y = y - np.mean(y)
    if not even:
        w = np.hanning(n)
        buf = np.zeros(_next_pow2(n))
        buf[:n] = y * w
        return buf, float(w.sum())
    if abs(series.times[0]) > 1e-12 * max(1.0, abs(series.times[-1])):
        raise ValueError("even extension needs a series starting at t = 0")
    w = np.hanning(2 * n + 1)[n:2 * n]  # w[k] is the window at |t| = k*dt
    half = y * w
    m = _next_pow2(2 * n - 1)
    buf = np.zeros(m)
    buf[:n] = half
    buf[m - n + 1:] = half[:0:-1]
    return buf, float(w[0] + 2.0 * w[1:].sum())


def population_spectrum(series: TimeSeries, even: bool = True) -> SpectrumSeries:
    """Amplitude spectrum of a population signal on non-negative frequencies.

    The mean is removed and a Hann window applied before the DFT.  The
    default ``even=True`` analyses the signal extended symmetrically to
    negative times, which keeps early-time (collapsing) oscillations at full
    weight.  Magnitudes are normalised so a cosine of amplitude a shows a
    peak of height a.
    """
    _check_uniform(series.times)
    buf, wsum = windowed_record(series, even)
    spec = np.fft.rfft(buf)
    mags = np.abs(spec) / wsum
    mags[1:] *= 2.0
    freqs = 2.0 * math.pi * np.fft.rfftfreq(buf.size, series.dt)
    return SpectrumSeries(freqs, mags, buf.size)


def dominant_peak(spectrum: SpectrumSeries, band: tuple[float, float] | None = None) -> float:
    """Frequency of the largest nonzero-frequency peak, refined by a parabola."""
    freqs, mags = spectrum.freqs, spectrum.magnitudes
    mask = freqs > 0
    if band is not None:
        mask &= (freqs >= band[0]) & (freqs <= band[1])
    if not np.any(mask):
        raise ValueError("no frequencies in the requested band")
    idx = np.flatnonzero(mask)
    i = idx[np.argmax(mags[idx])]
    if 0 < i < mags.size - 1:
        a, b, c = mags[i - 1], mags[i], mags[i + 1]
        denom = a - 2.0 * b + c
        if denom < 0:
            shift = 0.5 * (a - c) / denom
            return float(freqs[i] + shift * spectrum.spacing)
    return float(freqs[i])


def spectral_peaks(spectrum: SpectrumSeries, rel_height: float = 0.05) -> np.ndarray:
    """Frequencies of local maxima above ``rel_height`` times the largest one."""
    mags = spectrum.magnitudes
    top = np.max(mags)
    if top <= 0:
        return np.array([])
    idx, _ = find_peaks(mags, height=rel_height * top)
    return spectrum.freqs[idx]


@dataclasses.dataclass(frozen=True)
class DynamicsRun:
    params: ModelParams
    init: InitialCondition
    series: TimeSeries
    spectrum: SpectrumSeries

    @property
    def dominant_peak(self) -> float:
        return dominant_peak(self.spectrum)


def simulate(params: ModelParams, nbar: float, *, T: float = DEFAULT_T,
             n_samples: int = DEFAULT_SAMPLES, spin: int = 4, even: bool = True) -> DynamicsRun:
    """P(t) of spin channel ``spin`` and its spectrum at cutoff ``params.n_max``."""
    init = InitialCondition.from_nbar(nbar, spin)
    eig = solve(params)
    amps = initial_amplitudes(eig, init)
    series = population_series(eig, amps, time_grid(T, n_samples), channel=spin)
    return DynamicsRun(params, init, series, population_spectrum(series, even))


def spectrum_sweep(f_values, *, delta: float = 1.0, phi: float = 0.0, nbar: float = 25.0,
                   n_max: int | None = None, T: float = DEFAULT_T,
                   n_samples: int = DEFAULT_SAMPLES, workers: int | None = None) -> list[DynamicsRun]:
    """Dynamics for each coupling in ``f_values``, returned in input order."""
    n = default_cutoff(nbar) if n_max is None else n_max

    def one(f):
        return simulate(ModelParams(f=f, delta=delta, phi=phi, n_max=n), nbar, T=T,
                        n_samples=n_samples)

    return grid_map(one, list(f_values), workers)
