"""Two-port responses of coupling matrices under a bandpass frequency plan.

The network model is the usual one for an (N+2) matrix::

    A = lam * W - j * R + M
    S21 = -2j [A^-1]_{L,S}      S11 = 1 + 2j [A^-1]_{S,S}

with W the identity with zeroed S/L diagonal and R unit at (S,S), (L,L).
Uniform resonator loss enters as ``-j * f0 / (bw * qu)`` on every
resonator diagonal.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ExtractionError, SingularNetworkError
from .matrix import CouplingMatrix


@dataclass(frozen=True)
class FrequencyPlan:
    """Center frequency and absolute bandwidth in Hz."""

    f0: float
    bw: float

    def __post_init__(self):
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise ValueError(f"f0 must be positive, got {self.f0}")
        if not (math.isfinite(self.bw) and 0 < self.bw < 2 * self.f0):
            raise ValueError(f"bw must satisfy 0 < bw < 2*f0, got bw={self.bw}, f0={self.f0}")

    @property
    def fbw(self) -> float:
        return self.bw / self.f0

    def band_edges(self) -> tuple[float, float]:
        """Frequencies mapped to -1 and +1 (geometric-mean symmetric about f0)."""
        return denormalize_tz(self, -1.0), denormalize_tz(self, 1.0)

    def default_grid(self, points: int = 1001) -> np.ndarray:
        return np.linspace(self.f0 - 1.5 * self.bw, self.f0 + 1.5 * self.bw, points)


@dataclass(frozen=True)
class LossSpec:
    qu: float = math.inf

    def __post_init__(self):
        if not self.qu > 0:
            raise ValueError(f"unloaded Q must be positive, got {self.qu}")

    @property
    def lossless(self) -> bool:
        return math.isinf(self.qu)

    def resonator_damping(self, plan: FrequencyPlan) -> float:
        """Normalized loss term f0 / (bw * qu)."""
        return 0.0 if self.lossless else plan.f0 / (plan.bw * self.qu)


@dataclass(frozen=True, eq=False)
class SParamSweep:
    """Frequency-ordered two-port scattering data; ``s`` has shape (n, 2, 2)."""

    freqs_hz: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float).reshape(-1)
        s = np.asarray(self.s, dtype=complex)
        if s.shape != (f.size, 2, 2):
            raise ValueError(f"s must have shape ({f.size}, 2, 2), got {s.shape}")
        if f.size and (np.any(f <= 0) or not np.all(np.isfinite(f))):
            raise ValueError("frequencies must be positive and finite")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise ValueError("scattering parameters must be finite")
        f.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "s", s)

    def __len__(self):
        return self.freqs_hz.size

    @property
    def s11(self) -> np.ndarray:
        return self.s[:, 0, 0]

    @property
    def s21(self) -> np.ndarray:
        return self.s[:, 1, 0]

    @property
    def s12(self) -> np.ndarray:
        return self.s[:, 0, 1]

    @property
    def s22(self) -> np.ndarray:
        return self.s[:, 1, 1]

    def param(self, which: str) -> np.ndarray:
        try:
            i, j = {"S11": (0, 0), "S21": (1, 0), "S12": (0, 1), "S22": (1, 1)}[which.upper()]
        except KeyError:
            raise ValueError(f"unknown parameter {which!r}") from None
        return self.s[:, i, j]

    @classmethod
    def from_params(cls, freqs_hz, s11, s21, s12=None, s22=None, z_ref: float = 50.0):
        f = np.asarray(freqs_hz, dtype=float)
        s = np.empty((f.size, 2, 2), dtype=complex)
        s[:, 0, 0] = s11
        s[:, 1, 0] = s21
        s[:, 0, 1] = s21 if s12 is None else s12
        s[:, 1, 1] = s11 if s22 is None else s22
        return cls(f, s, z_ref)


def max_threads() -> int:
    """Thread cap from XCOUPLER_THREADS (default 1)."""
    raw = os.environ.get("XCOUPLER_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def normalized_frequency(plan: FrequencyPlan, f):
    """Lowpass variable (f0/bw) * (f/f0 - f0/f)."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    out = (plan.f0 / plan.bw) * (f / plan.f0 - plan.f0 / f)
    return float(out) if out.ndim == 0 else out


def denormalize_tz(plan: FrequencyPlan, omega):
    """Positive frequency mapped to ``omega`` by :func:`normalized_frequency`."""
    w = np.asarray(omega, dtype=float)
    half = 0.5 * w * plan.bw
    f = half + np.sqrt(plan.f0**2 + half**2)
    # cancellation-free branch for the lower band
    low = w < 0
    if np.any(low):
        f = np.where(low, plan.f0**2 / (-half + np.sqrt(plan.f0**2 + half**2)), f)
    return float(f) if f.ndim == 0 else f


def network_response(values: np.ndarray, omega, damping: float = 0.0,
                     threads: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S11, S21, S22) of a coupling matrix on a normalized frequency grid.

    Raises :class:`SingularNetworkError` with the offending normalized
    frequency when A cannot be inverted.
    """
    m = np.asarray(values, dtype=float)
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    n = m.shape[0]
    base = m.astype(complex)
    base[0, 0] -= 1j
    base[-1, -1] -= 1j
    diag = np.arange(1, n - 1)
    base[diag, diag] -= 1j * damping
    rhs = np.zeros((n, 2), dtype=complex)
    rhs[0, 0] = 1.0
    rhs[-1, 1] = 1.0

    def solve(chunk: np.ndarray) -> np.ndarray:
        a = np.broadcast_to(base, (chunk.size, n, n)).copy()
        a[:, diag, diag] += chunk[:, None]
        try:
            x = np.linalg.solve(a, np.broadcast_to(rhs, (chunk.size, n, 2)))
        except np.linalg.LinAlgError:
            for k, w in enumerate(chunk):
                try:
                    np.linalg.solve(a[k], rhs)
                except np.linalg.LinAlgError:
                    raise SingularNetworkError(
                        f"network matrix is singular at normalized frequency {w:.12g}", float(w)
                    ) from None
            raise
        bad = ~np.all(np.isfinite(x), axis=(1, 2))
        if np.any(bad):
            w = float(chunk[np.argmax(bad)])
            raise SingularNetworkError(f"network matrix is singular at normalized frequency {w:.12g}", w)
        return x

    threads = max_threads() if threads is None else max(1, threads)
    if threads > 1 and om.size >= 64 * threads:
        parts = np.array_split(om, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            x = np.concatenate(list(pool.map(solve, parts)))
    else:
        x = solve(om)
    s11 = 1.0 + 2j * x[:, 0, 0]
    s21 = -2j * x[:, -1, 0]
    s22 = 1.0 + 2j * x[:, -1, 1]
    return s11, s21, s22


def sparams(m: CouplingMatrix, plan: FrequencyPlan, grid: Sequence[float],
            loss: LossSpec | None = None, threads: int | None = None) -> SParamSweep:
    """Scattering parameters of ``m`` on a frequency grid in Hz."""
    f = np.asarray(grid, dtype=float).reshape(-1)
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    loss = loss or LossSpec()
    lam = normalized_frequency(plan, f) if f.size else np.zeros(0)
    try:
        s11, s21, s22 = network_response(m.values, lam, loss.resonator_damping(plan), threads)
    except SingularNetworkError as exc:
        fz = denormalize_tz(plan, exc.freq)
        raise SingularNetworkError(f"network matrix is singular at {fz:.9g} Hz", fz) from None
    return SParamSweep.from_params(f, s11, s21, s21, s22)


def unitarity_error(sweep: SParamSweep) -> float:
    """max | |S11|^2 + |S21|^2 - 1 | over the sweep."""
    if not len(sweep):
        return 0.0
    return float(np.max(np.abs(np.abs(sweep.s11) ** 2 + np.abs(sweep.s21) ** 2 - 1.0)))


def group_delay(sweep: SParamSweep, which: str = "S21") -> np.ndarray:
    """Group delay in seconds from the unwrapped phase of one parameter."""
    if len(sweep) < 3:
        raise ValueError("group delay needs at least 3 frequency points")
    phase = np.unwrap(np.angle(sweep.param(which)))
    return -np.gradient(phase, sweep.freqs_hz) / (2 * np.pi)


def midband_insertion_loss(sweep: SParamSweep, plan: FrequencyPlan, mode: str = "nearest") -> float:
    """Insertion loss in dB at the center of the band.

    ``mode``:
      * ``"nearest"`` -- -20 log10 |S21| at the grid point closest to f0;
      * ``"band_average"`` -- from the mean of |S21|^2 over |lam| <= 1;
      * ``"dissipative"`` -- -10 log10(|S11|^2 + |S21|^2) at the nearest point,
        i.e. the part not explained by mismatch.
    """
    f = sweep.freqs_hz
    if not len(sweep) or not (f[0] <= plan.f0 <= f[-1]):
        raise ExtractionError(f"center frequency {plan.f0:.9g} Hz lies outside the sweep")
    k = int(np.argmin(np.abs(f - plan.f0)))
    if mode == "nearest":
        return float(-20.0 * np.log10(np.abs(sweep.s21[k])))
    if mode == "dissipative":
        p = np.abs(sweep.s11[k]) ** 2 + np.abs(sweep.s21[k]) ** 2
        return float(-10.0 * np.log10(p))
    if mode == "band_average":
        inband = np.abs(normalized_frequency(plan, f)) <= 1.0
        if not np.any(inband):
            raise ExtractionError("no sweep points inside the passband")
        return float(-10.0 * np.log10(np.mean(np.abs(sweep.s21[inband]) ** 2)))
    raise ValueError(f"unknown insertion-loss mode {mode!r}")
