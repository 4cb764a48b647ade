"""Figures of merit and parameter extraction from two-port sweeps.

Works equally on model sweeps from :mod:`xcoupler.response` and on
ingested Touchstone data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import ExtractionError
from .matrix import CouplingMatrix
from .response import (
    FrequencyPlan,
    LossSpec,
    SParamSweep,
    group_delay,
    midband_insertion_loss,
    network_response,
    normalized_frequency,
)

TZ_FLOOR_DB = -40.0
PEAK_PROMINENCE_DB = 6.0


def _omit_none(d: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}


@dataclass(frozen=True)
class BandMetrics:
    """Band edges and stopband features; ``sfr_pct`` is in percent of ``f_hi``."""

    f_lo: float
    f_hi: float
    bw: float
    fbw: float
    rl_min_db: float
    tz_freqs: tuple[float, ...] = ()
    f_spur: float | None = None
    sfr_hz: float | None = None
    sfr_pct: float | None = None

    def to_dict(self) -> dict:
        return _omit_none(asdict(self))


@dataclass(frozen=True)
class ExtractionReport:
    k: float | None = None
    m_normalized: float | None = None
    q_ext: float | None = None
    q_u: float | None = None
    diagnostics: str = ""

    def to_dict(self) -> dict:
        return _omit_none(asdict(self))


def _db(x: np.ndarray) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(np.abs(x), 1e-300))


def _parabola_vertex(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Vertex of the parabola through three (possibly unevenly spaced) points."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / d
    if a == 0:
        return float(x1), float(y1)
    xv = -b / (2 * a)
    c = y1 - a * x1**2 - b * x1
    # never move outside the bracketing points
    xv = min(max(xv, x0), x2)
    return float(xv), float(a * xv**2 + b * xv + c)


def _cross(f: np.ndarray, y: np.ndarray, i: int, j: int, level: float) -> float:
    """Linear interpolation of the ``level`` crossing between grid points i and j."""
    if y[j] == y[i]:
        return float(f[i])
    t = (level - y[i]) / (y[j] - y[i])
    return float(f[i] + t * (f[j] - f[i]))


# --- coupling coefficients -------------------------------------------------

def extract_k_even_odd(f_a: float, f_b: float, method: str = "split") -> float:
    """Coupling coefficient from the split resonances of a coupled pair.

    ``"split"``: |fa^2 - fb^2| / (fa^2 + fb^2), the usual narrowband form.
    ``"geometric"``: |fb - fa| / sqrt(fa * fb), the exact inverse of the
    lowpass mapping for a synchronous pair, so that
    ``normalize_coupling`` returns the matrix entry for any bandwidth.
    """
    if not (f_a > 0 and f_b > 0):
        raise ExtractionError(f"resonance frequencies must be positive, got {f_a}, {f_b}")
    if method == "split":
        a2, b2 = f_a * f_a, f_b * f_b
        return abs(a2 - b2) / (a2 + b2)
    if method == "geometric":
        return abs(f_b - f_a) / math.sqrt(f_a * f_b)
    raise ValueError(f"unknown coupling method {method!r}")


def normalize_coupling(plan: FrequencyPlan, k: float) -> float:
    """Normalized coupling (f0 / bw) * k."""
    return plan.f0 / plan.bw * k


def denormalize_coupling(plan: FrequencyPlan, m: float) -> float:
    return m * plan.bw / plan.f0


def find_even_odd_peaks(sweep: SParamSweep, prominence_db: float = PEAK_PROMINENCE_DB) -> tuple[float, float]:
    """The two |S21| resonance peaks of a weakly loaded coupled pair."""
    if len(sweep) < 3:
        raise ExtractionError("peak search needs at least 3 points")
    y = _db(sweep.s21)
    idx, _ = find_peaks(y, prominence=prominence_db)
    if idx.size != 2:
        raise ExtractionError(
            f"expected exactly two |S21| peaks with {prominence_db} dB prominence, found {idx.size}; "
            "check the I/O loading of the test setup"
        )
    f = sweep.freqs_hz
    out = [_parabola_vertex(f[i - 1:i + 2], y[i - 1:i + 2])[0] for i in idx]
    return float(min(out)), float(max(out))


def extract_coupling(sweep: SParamSweep, plan: FrequencyPlan | None = None,
                     method: str = "split") -> ExtractionReport:
    f_a, f_b = find_even_odd_peaks(sweep)
    k = extract_k_even_odd(f_a, f_b, method)
    m = normalize_coupling(plan, k) if plan is not None else None
    return ExtractionReport(k=k, m_normalized=m,
                            diagnostics=f"peaks at {f_a:.9g} Hz and {f_b:.9g} Hz ({method})")


# --- external and unloaded Q -------------------------------------------------

def qext_from_matrix(plan: FrequencyPlan, m_s1: float) -> float:
    """External Q of an input coupling: f0 / (m_s1^2 * bw).

    The input coupling enters squared; this is the form that reproduces
    Q_ext = 2.672 and 2.005 for m_s1 = 1.03 under the two design plans.
    """
    if m_s1 == 0:
        raise ExtractionError("input coupling must be nonzero")
    return plan.f0 / (m_s1 * m_s1 * plan.bw)


def extract_qext_group_delay(sweep: SParamSweep, f0: float) -> float:
    """Q_ext = pi * f0 * tau_max / 2 from the S11 delay of a singly loaded resonator."""
    tau = group_delay(sweep, "S11")
    k = int(np.argmax(tau))
    if tau[k] <= 0:
        raise ExtractionError("no resonant group-delay peak in S11 (Q_ext -> 0)")
    if k == 0 or k == len(tau) - 1:
        raise ExtractionError("group-delay peak lies on the sweep boundary; widen the window")
    _, tau_peak = _parabola_vertex(sweep.freqs_hz[k - 1:k + 2], tau[k - 1:k + 2])
    return math.pi * f0 * tau_peak / 2.0


def extract_qu(sweep: SParamSweep, m: CouplingMatrix, plan: FrequencyPlan,
               mode: str = "nearest", qu_range: tuple[float, float] = (10.0, 1e7),
               rtol: float = 1e-3) -> float:
    """Unloaded Q for which the lossy model of ``m`` matches the sweep's midband IL.

    Bisection on log(qu). The measured loss must exceed what ``m`` shows
    without dissipation (an RL-limited design already has mismatch loss).
    """
    measured = midband_insertion_loss(sweep, plan, mode)
    f = sweep.freqs_hz
    if mode == "band_average":
        sel = np.abs(normalized_frequency(plan, f)) <= 1.0
    else:
        sel = np.zeros(f.size, dtype=bool)
        sel[int(np.argmin(np.abs(f - plan.f0)))] = True
    lam = normalized_frequency(plan, f[sel])

    def model_il(qu: float) -> float:
        damping = LossSpec(qu).resonator_damping(plan)
        s11, s21, _ = network_response(m.values, lam, damping)
        if mode == "dissipative":
            return float(-10 * np.log10(np.abs(s11[0]) ** 2 + np.abs(s21[0]) ** 2))
        return float(-10 * np.log10(np.mean(np.abs(s21) ** 2)))

    if measured <= 0 or measured - model_il(math.inf) <= 1e-9:
        raise ExtractionError("no finite Q_U: the sweep shows no dissipative loss")
    lo, hi = math.log(qu_range[0]), math.log(qu_range[1])
    if measured > model_il(qu_range[0]):
        raise ExtractionError(
            f"insertion loss {measured:.4g} dB exceeds the model's loss at Q_U = {qu_range[0]:g}"
        )
    if measured < model_il(qu_range[1]):
        raise ExtractionError(
            f"insertion loss {measured:.4g} dB is below the model's loss at Q_U = {qu_range[1]:g}"
        )
    while hi - lo > math.log1p(rtol):
        mid = 0.5 * (lo + hi)
        if model_il(math.exp(mid)) > measured:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


# --- band metrics ------------------------------------------------------------

def _refine_zero(f: np.ndarray, s: np.ndarray, i: int) -> float:
    """Minimum of |S21| on the linear interpolant of complex S21 around grid point i."""
    best_f, best_v = float(f[i]), abs(s[i])
    for j in (i - 1, i + 1):
        if 0 <= j < f.size:
            d = s[j] - s[i]
            den = (d.conjugate() * d).real
            if den == 0:
                continue
            t = min(max(-(d.conjugate() * s[i]).real / den, 0.0), 1.0)
            v = abs(s[i] + t * d)
            if v < best_v:
                best_f, best_v = float(f[i] + t * (f[j] - f[i])), v
    return best_f


def band_metrics(sweep: SParamSweep, plan: FrequencyPlan, edge_drop_db: float = 3.0,
                 spur_threshold_db: float = -20.0, edge_rl_db: float | None = None) -> BandMetrics:
    """Passband edges, worst in-band return loss, stopband zeros, spurious-free range.

    Edges are the outermost crossings, around f0, of |S21| at ``edge_drop_db``
    below its midband value. With ``edge_rl_db`` set, the edges are instead
    the outermost points inside that region where the return loss still
    reaches ``edge_rl_db`` (the equiripple band of a synthesized design).
    """
    f = sweep.freqs_hz
    if len(sweep) < 3 or not (f[0] < plan.f0 < f[-1]):
        raise ExtractionError("sweep does not span the passband center")
    s21 = sweep.s21
    y21 = _db(s21)
    y11 = _db(sweep.s11)
    k0 = int(np.argmin(np.abs(f - plan.f0)))
    level = y21[k0] - edge_drop_db

    lo = k0
    while lo > 0 and y21[lo - 1] >= level:
        lo -= 1
    hi = k0
    while hi < f.size - 1 and y21[hi + 1] >= level:
        hi += 1
    if lo == 0 or hi == f.size - 1:
        raise ExtractionError("band edges not found within the sweep")

    if edge_rl_db is None:
        f_lo = _cross(f, y21, lo - 1, lo, level)
        f_hi = _cross(f, y21, hi, hi + 1, level)
    else:
        rl_level = -edge_rl_db
        inside = np.flatnonzero(y11[lo:hi + 1] <= rl_level) + lo
        if inside.size == 0:
            raise ExtractionError(f"return loss never reaches {edge_rl_db} dB in the passband")
        a, b = int(inside[0]), int(inside[-1])
        if a == 0 or b == f.size - 1:
            raise ExtractionError("band edges not found within the sweep")
        f_lo = _cross(f, y11, a - 1, a, rl_level)
        f_hi = _cross(f, y11, b, b + 1, rl_level)

    band = (f >= f_lo) & (f <= f_hi)
    rl_min = float(np.min(-y11[band])) if np.any(band) else float(-y11[k0])

    tz = []
    for i in range(1, f.size - 1):
        if f_lo <= f[i] <= f_hi:
            continue
        if y21[i] < TZ_FLOOR_DB and y21[i] < y21[i - 1] and y21[i] <= y21[i + 1]:
            tz.append(_refine_zero(f, s21, i))

    f_spur = sfr_hz = sfr_pct = None
    above = np.flatnonzero(f > f_hi)
    if above.size:
        start = int(above[0])
        below = np.flatnonzero(y21[start:] < spur_threshold_db)
        if below.size:
            j0 = start + int(below[0])
            rise = np.flatnonzero(y21[j0:] >= spur_threshold_db)
            if rise.size:
                j = j0 + int(rise[0])
                f_spur = _cross(f, y21, j - 1, j, spur_threshold_db)
                sfr_hz = f_spur - f_hi
                sfr_pct = 100.0 * sfr_hz / f_hi

    bw = f_hi - f_lo
    return BandMetrics(f_lo, f_hi, bw, bw / plan.f0, rl_min, tuple(tz), f_spur, sfr_hz, sfr_pct)


# --- synthetic test structures --------------------------------------------------

def singly_loaded_matrix(plan: FrequencyPlan, q_ext: float) -> CouplingMatrix:
    """One synchronous resonator coupled to the source only, with the given Q_ext."""
    if not q_ext > 0:
        raise ValueError("q_ext must be positive")
    m = math.sqrt(plan.f0 / (q_ext * plan.bw))
    v = np.zeros((3, 3))
    v[0, 1] = v[1, 0] = m
    return CouplingMatrix(v)


def coupled_pair_matrix(m12: float, m_io: float = 0.05) -> CouplingMatrix:
    """Two synchronous resonators, weakly loaded at both ends."""
    v = np.zeros((4, 4))
    v[0, 1] = v[1, 0] = m_io
    v[1, 2] = v[2, 1] = m12
    v[2, 3] = v[3, 2] = m_io
    return CouplingMatrix(v)


def with_spurious_band(sweep: SParamSweep, f_start: float, level_db: float = -20.0,
                       half_width: float = 5e6) -> SParamSweep:
    """Add a narrow resonant passband to S21/S12 whose rising edge crosses
    ``level_db`` at ``f_start``. The resonance itself sits above ``f_start``."""
    x_cross = math.sqrt(10 ** (-level_db / 10) - 1)
    fc = f_start + x_cross * half_width
    spur = 1.0 / (1.0 + 1j * (sweep.freqs_hz - fc) / half_width)
    s = sweep.s.copy()
    s[:, 1, 0] += spur
    s[:, 0, 1] += spur
    return SParamSweep(sweep.freqs_hz, s, sweep.z_ref)
