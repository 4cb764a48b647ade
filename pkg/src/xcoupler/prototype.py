"""Generalized Chebyshev synthesis and coupling-matrix reconfiguration.

Polynomials are held in the complex lowpass variable ``s = j*Omega`` with
coefficients ordered highest degree first (``numpy.polyval`` order). The
network conventions of :mod:`xcoupler.response` give

    S21 = P / (eps * E)        S11 = -F / (eps_r * E)

where F and E are monic and the sign of P is chosen to match the matrix
network's transmission phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import least_squares

from .errors import ReconfigurationError, SynthesisError
from .matrix import CouplingMatrix, TopologyMask, normalize_signs
from .response import network_response

BAND_EDGE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CharPoly:
    order: int
    f_coeffs: np.ndarray
    p_coeffs: np.ndarray
    e_coeffs: np.ndarray
    eps: float
    eps_r: float = 1.0
    tz: tuple[float, ...] = field(default=())

    def response(self, omega) -> tuple[np.ndarray, np.ndarray]:
        """(S11, S21) of the rational transfer functions at real ``omega``."""
        s = 1j * np.atleast_1d(np.asarray(omega, dtype=float))
        e = np.polyval(self.e_coeffs, s)
        s11 = -np.polyval(self.f_coeffs, s) / (self.eps_r * e)
        s21 = np.polyval(self.p_coeffs, s) / (self.eps * e)
        return s11, s21

    def energy_error(self, omega) -> np.ndarray:
        """Relative violation of |F|^2/eps_r^2 + |P|^2/eps^2 = |E|^2."""
        s = 1j * np.atleast_1d(np.asarray(omega, dtype=float))
        lhs = (np.abs(np.polyval(self.f_coeffs, s)) / self.eps_r) ** 2 \
            + (np.abs(np.polyval(self.p_coeffs, s)) / self.eps) ** 2
        rhs = np.abs(np.polyval(self.e_coeffs, s)) ** 2
        return np.abs(lhs - rhs) / rhs

    @property
    def e_roots(self) -> np.ndarray:
        return np.roots(self.e_coeffs)

    @property
    def reflection_zeros(self) -> np.ndarray:
        """Real frequencies Omega where S11 vanishes."""
        return np.sort((np.roots(self.f_coeffs) / 1j).real)


def _chebyshev_numerator(order: int, tz: Sequence[float]) -> np.ndarray:
    """Monic numerator of the filtering function in Omega (lowest degree first).

    Two-polynomial recursion: U carries the even part and V the part
    multiplying sqrt(Omega^2 - 1); zeros at infinity contribute 1/Omega_k = 0.
    """
    inv = [1.0 / z for z in tz] + [0.0] * (order - len(tz))
    w2m1 = np.array([-1.0, 0.0, 1.0])
    u = np.array([1.0])
    v = np.array([0.0])
    for a in inv:
        b = math.sqrt(1.0 - a * a)
        lin = np.array([-a, 1.0])
        u, v = (
            npoly.polyadd(npoly.polymul(u, lin), b * npoly.polymul(w2m1, v)),
            npoly.polyadd(npoly.polymul(v, lin), b * u),
        )
    u = u[: order + 1]
    return u / u[-1]


def _polish_root(coeffs: np.ndarray, z: complex, tol: float = 1e-12, max_iter: int = 50) -> complex:
    # Newton on a lowest-first polynomial; stop on a step below tol*|z|
    d = npoly.polyder(coeffs)
    for _ in range(max_iter):
        fz = npoly.polyval(z, coeffs)
        dz = npoly.polyval(z, d)
        if dz == 0:
            break
        step = fz / dz
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    return z


def synthesize_polynomials(order: int, return_loss_db: float, tz: Sequence[float] = ()) -> CharPoly:
    """Characteristic polynomials of a generalized Chebyshev response.

    ``tz`` are finite transmission zeros on the real Omega axis; each must
    lie outside the passband and there must be fewer than ``order``.
    """
    if int(order) != order or order < 1:
        raise SynthesisError(f"order must be a positive integer, got {order}")
    order = int(order)
    if not return_loss_db > 0:
        raise SynthesisError(f"return loss must be positive, got {return_loss_db}")
    tz = tuple(float(z) for z in tz)
    if len(tz) >= order:
        raise SynthesisError(
            f"{len(tz)} finite zeros for order {order}: fully canonical responses are not supported"
        )
    for z in tz:
        if not math.isfinite(z) or abs(z) <= 1.0 + BAND_EDGE_TOL:
            raise SynthesisError(f"transmission zero {z} must lie outside the passband |Omega| > 1")

    f_w = _chebyshev_numerator(order, tz)
    p_w = npoly.polyfromroots(tz) if tz else np.array([1.0])
    eps = abs(npoly.polyval(1.0, p_w) / npoly.polyval(1.0, f_w)) / math.sqrt(10 ** (return_loss_db / 10) - 1)

    # |E(j Omega)|^2 as a real polynomial in Omega; keep the upper-half-plane roots
    g = npoly.polyadd(npoly.polymul(f_w, f_w), npoly.polymul(p_w, p_w) / eps**2)
    roots = np.array([_polish_root(g, r) for r in np.roots(g[::-1])])
    upper = roots[roots.imag > 0]
    if upper.size != order:
        raise SynthesisError("could not separate the roots of E; the response is ill-conditioned")

    f_roots = np.roots(f_w[::-1]).astype(complex)
    f_s = np.poly(1j * f_roots)
    e_s = np.poly(1j * upper)
    p_s = np.poly(1j * np.array(tz)) if tz else np.array([1.0 + 0j])
    # orthogonality of S11 and S21 on the axis; sign matches S21 = -2j[A^-1]_{L,S}
    p_s = -p_s * (1j if (order - len(tz)) % 2 == 0 else 1.0)
    return CharPoly(order, f_s, p_s, e_s, float(eps), 1.0, tz)


def transversal_matrix(cp: CharPoly) -> CouplingMatrix:
    """Canonical transversal realization of ``cp``.

    Each resonator couples only to source and load; the diagonal holds the
    negated eigenfrequencies of the short-circuit admittance expansion.
    """
    n = cp.order
    if len(cp.tz) >= n:
        raise SynthesisError("fully canonical transfer functions are not supported")
    e = cp.e_coeffs[::-1]
    f = cp.f_coeffs[::-1]
    ef = (e + f) / cp.eps_r if cp.eps_r != 1.0 else e + f
    m1 = np.zeros(n + 1, dtype=complex)
    n1 = np.zeros(n + 1, dtype=complex)
    for i in range(n + 1):
        if i % 2 == 0:
            m1[i], n1[i] = ef[i].real, 1j * ef[i].imag
        else:
            m1[i], n1[i] = 1j * ef[i].imag, ef[i].real
    num22, den = (n1, m1) if n % 2 == 0 else (m1, n1)
    den = np.trim_zeros(den, "b")
    poles = np.roots(den[::-1])
    dden = npoly.polyder(den)
    y21 = -cp.p_coeffs[::-1] / cp.eps
    r22 = npoly.polyval(poles, num22) / npoly.polyval(poles, dden)
    r21 = npoly.polyval(poles, y21) / npoly.polyval(poles, dden)
    lam = poles.imag
    order_idx = np.argsort(lam)
    values = np.zeros((n + 2, n + 2))
    for row, k in enumerate(order_idx, start=1):
        if r22[k].real <= 0:
            raise SynthesisError("non-positive admittance residue; polynomials are not realizable")
        m_l = math.sqrt(r22[k].real)
        values[0, row] = values[row, 0] = r21[k].real / m_l
        values[-1, row] = values[row, -1] = m_l
        values[row, row] = -lam[k]
    return CouplingMatrix(values)


def apply_rotation(m: CouplingMatrix, pivot: tuple[int, int], angle: float) -> CouplingMatrix:
    """Similarity transform R^T m R with a Givens rotation on resonators ``pivot``."""
    i, j = pivot
    if not (1 <= i < j <= m.order):
        raise ValueError(f"pivot {pivot} must satisfy 1 <= i < j <= {m.order}")
    if angle == 0:
        return m
    v = _rotate(m.copy_values(), i, j, angle)
    return m.with_values(v)


def _rotate(v: np.ndarray, i: int, j: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    # rows then columns of R^T v R, touching only i and j
    ri, rj = v[i].copy(), v[j].copy()
    v[i], v[j] = c * ri + s * rj, -s * ri + c * rj
    ci, cj = v[:, i].copy(), v[:, j].copy()
    v[:, i], v[:, j] = c * ci + s * cj, -s * ci + c * cj
    v[i, j] = v[j, i] = 0.5 * (v[i, j] + v[j, i])
    return v


def _rotate_all(v: np.ndarray, pivots, angles) -> np.ndarray:
    out = v.copy()
    for (i, j), t in zip(pivots, angles):
        out = _rotate(out, i, j, t)
    return out


def response_distance(a: CouplingMatrix, b: CouplingMatrix, omega=None) -> float:
    """max over omega of the |S11| and |S21| magnitude differences."""
    om = np.linspace(-3.0, 3.0, 1001) if omega is None else np.asarray(omega, dtype=float)
    s11a, s21a, _ = network_response(a.values, om)
    s11b, s21b, _ = network_response(b.values, om)
    return float(max(np.max(np.abs(np.abs(s11a) - np.abs(s11b))),
                     np.max(np.abs(np.abs(s21a) - np.abs(s21b)))))


def _canonical_key(v: np.ndarray) -> tuple:
    iu = np.triu_indices(v.shape[0])
    return tuple(np.round(np.abs(v[iu]), 9))


def reconfigure(m: CouplingMatrix, mask: TopologyMask, *, starts: int = 32, seed: int = 0,
                response_tol: float = 1e-6, entry_tol: float = 1e-8) -> CouplingMatrix:
    """Carry ``m`` onto ``mask`` while preserving its response.

    Searches over products of resonator Givens rotations for one that
    annihilates every forbidden entry. Several such rotations usually exist
    (for a symmetric mask, relabelings of one another); the result is the
    one whose sign-normalized entries are lexicographically largest in
    row-major order. If no rotation succeeds a constrained response fit on
    the mask is tried before giving up.
    """
    if mask.order != m.order:
        raise ReconfigurationError(f"mask order {mask.order} does not match matrix order {m.order}")
    if not mask.connects_source_to_load():
        raise ReconfigurationError("mask has no path from source to load")
    if mask.is_full():
        return m
    if abs(m.values[0, -1]) > entry_tol and not mask.allowed[0, -1]:
        raise ReconfigurationError("source-load coupling cannot be removed by resonator rotations")

    n = m.order
    pivots = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    bad_i, bad_j = mask.forbidden_upper()
    base = m.copy_values()

    def residual(angles):
        return _rotate_all(base, pivots, angles)[bad_i, bad_j]

    rng = np.random.default_rng(seed)
    candidates = []
    best_res = math.inf
    for k in range(starts):
        x0 = np.zeros(len(pivots)) if k == 0 else rng.uniform(-np.pi, np.pi, len(pivots))
        sol = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        res = float(np.max(np.abs(sol.fun))) if sol.fun.size else 0.0
        best_res = min(best_res, res)
        if res <= 1e-3 * entry_tol:
            v = _rotate_all(base, pivots, sol.x)
            v[bad_i, bad_j] = 0.0
            v[bad_j, bad_i] = 0.0
            candidates.append(normalize_signs(m.with_values(v)))

    for cand in sorted(candidates, key=lambda c: _canonical_key(c.values), reverse=True):
        if response_distance(cand, m) <= response_tol:
            return cand

    from .fitter import fit_to_reference  # local import: fitter depends on this module

    fitted = fit_to_reference(m, mask)
    dist = response_distance(fitted, m)
    if mask.admits(fitted, entry_tol) and dist <= response_tol:
        return normalize_signs(fitted)
    raise ReconfigurationError(
        f"could not realize the response on the mask (rotation residual {best_res:.3g}, "
        f"fit response error {dist:.3g})",
        residual=min(best_res, dist),
    )


def synthesize_matrix(order: int, return_loss_db: float, tz: Sequence[float] = (),
                      mask: TopologyMask | None = None) -> CouplingMatrix:
    """Polynomials -> transversal matrix -> optional reconfiguration onto ``mask``."""
    m = transversal_matrix(synthesize_polynomials(order, return_loss_db, tz))
    return m if mask is None else reconfigure(m, mask)
