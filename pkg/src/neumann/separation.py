"""Elliptical-spherical coordinates, the separated Hamiltonian, and the curve.

Coordinates u_1 <= ... <= u_ell are the roots of f(z) = sum xi_sigma^2 / (z - b_sigma),
interlacing the eigenvalues.  With A(z) = prod (z - b_sigma), U(z) = prod (z - u_i)
and conjugate momenta p_i, the motion lives on the genus-ell hyperelliptic curve

    zeta^2 = R(z) = -Q(rho; z) A(z) + Qt(b, w; z),
    Q(rho; z) = z^ell + 2 rho_1 z^{ell-1} + ... + 2 rho_ell,
    Qt(b, w; z) = - sum_sigma w_sigma A'(b_sigma) prod_{tau != sigma} (z - b_tau),

with zeta_i = 2 A(u_i) p_i, so that R(u_i) = zeta_i^2 >= 0 along real motion and
R(b_sigma) = -w_sigma A'(b_sigma)^2.  rho_1 is the energy shifted by
c = (1/2) sum b_sigma.  The sign of Qt is fixed by requiring R >= 0 between the
turning points of the actual motion (turning points are roots of R).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericalFailure, SingularStratumError
from .model import SpectrumSpec

#: |u_i - b_sigma| below this (times the spectral scale) degenerates the chart
CHART_TOL = 1e-10


class NearSingularChartWarning(UserWarning):
    """A separated coordinate approaches an eigenvalue: chart degeneracy."""


# -- exact polynomial arithmetic (coefficients highest degree first) ----------------
# Construction runs in rational arithmetic on the exactly-representable float
# inputs and rounds once per coefficient, so stored coefficient lists are
# correctly rounded; degrees stay <= 2*ell + 1 with ell <= 6 supported.

def _exact_list(values):
    return [v if isinstance(v, Fraction) else Fraction(float(v)) for v in values]


def _exact_conv(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def poly_mul(a, b) -> np.ndarray:
    """Exact coefficient convolution, rounded once per coefficient."""
    return np.array([float(c) for c in _exact_conv(_exact_list(a), _exact_list(b))])


def poly_add(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[n - a.size:] += a
    out[n - b.size:] += b
    return out


def _exact_from_roots(roots):
    out = [Fraction(1)]
    for r in roots:
        out = _exact_conv(out, [Fraction(1), -Fraction(float(r))])
    return out


def poly_from_roots(roots) -> np.ndarray:
    return np.array([float(c) for c in _exact_from_roots(np.asarray(roots, float))])


def poly_der(a) -> np.ndarray:
    a = np.asarray(a, float)
    n = a.size - 1
    if n == 0:
        return np.zeros(1)
    return a[:-1] * np.arange(n, 0, -1)


def poly_eval(a, z):
    """Horner evaluation; accepts scalars or arrays, real or complex z."""
    a = np.asarray(a, float)
    z = np.asarray(z)
    result = np.zeros(z.shape, dtype=np.result_type(z.dtype, float)) + a[0]
    for c in a[1:]:
        result = result * z + c
    return result


def poly_eval_exact(a, z: float) -> float:
    """Scalar Horner evaluation in rational arithmetic (one final rounding)."""
    acc = Fraction(0)
    zf = Fraction(float(z))
    for c in a:
        acc = acc * zf + (c if isinstance(c, Fraction) else Fraction(float(c)))
    return float(acc)


def poly_deflate(a, root) -> tuple:
    """Synthetic division by (z - root): returns (quotient, remainder)."""
    a = np.asarray(a, float)
    out = np.empty(a.size - 1)
    acc = a[0]
    for k in range(a.size - 1):
        out[k] = acc
        acc = acc * root + a[k + 1]
    return out, float(acc)


# -- the curve ------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperellipticCurve:
    """zeta^2 = R(z) with R of degree 2*ell+1 and negative leading coefficient.

    ``r`` is the float coefficient list (highest degree first); ``r_exact``
    keeps the rational coefficients from the exact construction so that
    identity checks at the eigenvalues are free of evaluation rounding.
    """

    r: np.ndarray
    rho: np.ndarray
    w: np.ndarray
    b: np.ndarray
    r_exact: tuple = None

    def __post_init__(self):
        for name in ("r", "rho", "w", "b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), float))

    @property
    def ell(self) -> int:
        return self.b.size - 1

    @property
    def a_coeffs(self) -> np.ndarray:
        return poly_from_roots(self.b)

    def evaluate(self, z):
        return poly_eval(self.r, z)

    def evaluate_exact(self, z: float) -> float:
        coeffs = self.r_exact if self.r_exact is not None else self.r
        return poly_eval_exact(coeffs, z)

    def a_prime(self, sigma: int) -> float:
        return float(np.prod(self.b[sigma] - np.delete(self.b, sigma)))

    def to_dict(self) -> dict:
        return {
            "coefficients": list(self.r),
            "rho": list(self.rho),
            "w": list(self.w),
            "b": list(self.b),
        }


@lru_cache(maxsize=256)
def _qtilde_exact(b: tuple, w: tuple) -> tuple:
    out = [Fraction(0)] * len(b)
    for sigma in range(len(b)):
        others = [b[t] for t in range(len(b)) if t != sigma]
        a_prime = Fraction(1)
        for o in others:
            a_prime *= Fraction(b[sigma]) - Fraction(o)
        term = _exact_from_roots(others)
        coeff = -Fraction(w[sigma]) * a_prime
        for k, c in enumerate(term):
            out[k] += coeff * c
    return tuple(out)


def qtilde_coeffs(spec: SpectrumSpec, w) -> np.ndarray:
    """Coefficients of Qt(b, w; z) = - sum_sigma w_sigma A'(b_sigma) A(z)/(z - b_sigma)."""
    w = np.asarray(w, float)
    if w.size != len(spec.b):
        raise ConfigError("need one coupling w per block")
    return np.array([float(c) for c in _qtilde_exact(spec.b, tuple(map(float, w)))])


def build_polynomials(spec: SpectrumSpec, w, rho) -> HyperellipticCurve:
    """Assemble R = -Q A + Qt by exact coefficient convolution.

    R has degree 2*ell+1, leading coefficient -1, and satisfies
    R(b_sigma) = -w_sigma A'(b_sigma)^2 for every sigma.
    """
    rho = np.atleast_1d(np.asarray(rho, float))
    if rho.size != spec.ell:
        raise ConfigError(f"need {spec.ell} separation constants, got {rho.size}")
    w = np.asarray(w, float)
    q = [Fraction(1)] + [2 * Fraction(float(v)) for v in rho]
    qa = _exact_conv(q, _exact_from_roots(spec.b))
    qt = _qtilde_exact(spec.b, tuple(map(float, w)))
    r = [-c for c in qa]
    for k, c in enumerate(qt):
        r[k + len(r) - len(qt)] += c
    return HyperellipticCurve(r=np.array([float(c) for c in r]), rho=rho, w=w,
                              b=np.asarray(spec.b), r_exact=tuple(r))


def energy_shift(spec: SpectrumSpec) -> float:
    """c = (1/2) sum b_sigma; the energy equals rho_1 + c."""
    return 0.5 * float(np.sum(spec.b))


def curve_from_energy(spec: SpectrumSpec, w, h: float, extra_rho=()) -> HyperellipticCurve:
    """Curve at energy h: rho_1 = h - c, remaining constants supplied explicitly."""
    extra = tuple(extra_rho)
    if len(extra) != max(spec.ell - 1, 0):
        raise ConfigError(f"need {spec.ell - 1} additional separation constants")
    rho = np.array([h - energy_shift(spec), *extra])
    return build_polynomials(spec, w, rho)


# -- coordinate changes ------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatedState:
    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, float)))


def _root_in_interval(xi2, b, lo, hi) -> float:
    """Unique root of f(z) = sum xi2/(z - b) in (lo, hi); f is strictly decreasing."""

    def f(z):
        return math.fsum(xi2[s] / (z - b[s]) for s in range(b.size))

    span = hi - lo

    def bracket_end(endpoint, direction, positive):
        delta = 1e-9 * span
        while delta > 1e-300:
            z = endpoint + direction * delta
            if z != endpoint:
                val = f(z)
                if np.isfinite(val) and (val > 0.0) == positive:
                    return z
            delta *= 1e-2
        return endpoint  # root numerically glued to the endpoint

    a = bracket_end(lo, +1.0, True)
    c = bracket_end(hi, -1.0, False)
    if a == lo or c == hi:
        return lo if a == lo else hi
    for _ in range(80):
        mid = 0.5 * (a + c)
        if f(mid) > 0.0:
            a = mid
        else:
            c = mid
        if c - a <= 1e-15 * span:
            break
    z = 0.5 * (a + c)
    # safeguarded Newton polish
    for _ in range(3):
        fz = f(z)
        dfz = -math.fsum(xi2[s] / (z - b[s]) ** 2 for s in range(b.size))
        if dfz == 0.0:
            break
        step = fz / dfz
        znew = z - step
        if not (a <= znew <= c):
            break
        z = znew
    return z


def to_separated(spec: SpectrumSpec, w, xi, eta) -> SeparatedState:
    """Separated coordinates u_i (roots of f interlacing b) and momenta p_i.

    p_i = (1/2) sum_sigma xi_sigma eta_sigma / (u_i - b_sigma), which agrees
    with udot_i U'(u_i) / (-4 A(u_i)) along the reduced flow.  Requires every
    xi_sigma nonzero so that f keeps a pole at each eigenvalue.
    """
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    b = np.asarray(spec.b)
    if np.any(xi == 0.0):
        raise SingularStratumError("separated chart needs xi_sigma != 0 for every block")
    xi2 = xi ** 2
    scale = float(np.max(np.abs(b)) + 1.0)
    u = np.empty(spec.ell)
    for i in range(spec.ell):
        u[i] = _root_in_interval(xi2, b, b[i], b[i + 1])
        if min(abs(u[i] - b[i]), abs(u[i] - b[i + 1])) < CHART_TOL * scale:
            warnings.warn(
                f"u_{i + 1} within {CHART_TOL:g}*scale of an eigenvalue: chart degenerate",
                NearSingularChartWarning,
            )
    p = np.array([
        0.5 * math.fsum(xi[s] * eta[s] / (u[i] - b[s]) for s in range(b.size))
        for i in range(spec.ell)
    ])
    return SeparatedState(u, p)


def check_interlacing(spec: SpectrumSpec, u) -> None:
    u = np.atleast_1d(np.asarray(u, float))
    b = np.asarray(spec.b)
    if u.size != spec.ell:
        raise ConfigError(f"need {spec.ell} separated coordinates")
    if np.any(u[:-1] > u[1:]) or np.any(u < b[:-1]) or np.any(u > b[1:]):
        raise ConfigError("separated coordinates must interlace the eigenvalues")


def from_separated(spec: SpectrumSpec, u) -> np.ndarray:
    """xi_sigma^2 = U(b_sigma) / A'(b_sigma); the values sum to 1 automatically."""
    check_interlacing(spec, u)
    u = np.atleast_1d(np.asarray(u, float))
    b = np.asarray(spec.b)
    xi2 = np.empty(b.size)
    for sigma in range(b.size):
        u_b = float(np.prod(b[sigma] - u))
        a_prime = float(np.prod(b[sigma] - np.delete(b, sigma)))
        xi2[sigma] = u_b / a_prime
    return xi2


def _chart_guard(spec: SpectrumSpec, u) -> None:
    u = np.atleast_1d(np.asarray(u, float))
    b = np.asarray(spec.b)
    scale = float(np.max(np.abs(b)) + 1.0)
    if u.size > 1 and np.min(np.diff(np.sort(u))) < CHART_TOL * scale:
        raise SingularStratumError("chart singular: repeated separated coordinates")
    if np.min(np.abs(u[:, None] - b[None, :])) < CHART_TOL * scale:
        raise SingularStratumError("chart singular: u_i equals an eigenvalue")


def hamiltonian_separated(spec: SpectrumSpec, w, u, p) -> float:
    """Energy T + V + V_w in the separated chart.

    T = -2 sum_i A(u_i) p_i^2 / U'(u_i)   (metric factor 1/g_i = -4 A/U' > 0),
    V = (1/2) sum b - (1/2) sum u,
    V_w = sum_i Qt(u_i) / (2 A(u_i) U'(u_i)).
    """
    u = np.atleast_1d(np.asarray(u, float))
    p = np.atleast_1d(np.asarray(p, float))
    _chart_guard(spec, u)
    b = np.asarray(spec.b)
    w = np.asarray(w, float)
    qt = qtilde_coeffs(spec, w)
    total = []
    for i in range(u.size):
        a_u = float(np.prod(u[i] - b))
        u_prime = float(np.prod(u[i] - np.delete(u, i))) if u.size > 1 else 1.0
        total.append(-2.0 * a_u * p[i] ** 2 / u_prime)
        total.append(float(poly_eval(qt, u[i])) / (2.0 * a_u * u_prime))
    kinetic_plus_vw = math.fsum(total)
    v = energy_shift(spec) - 0.5 * float(np.sum(u))
    return kinetic_plus_vw + v


def separation_constants(spec: SpectrumSpec, w, u, p) -> np.ndarray:
    """Constants rho from the separated one-degree-of-freedom relations.

    Each pair (u_i, p_i) pins P(u_i) = -2 A(u_i) p_i^2 - u_i^ell / 2
    + Qt(u_i) / (2 A(u_i)); interpolating P (degree ell-1) through the ell
    values yields rho = (rho_1, ..., rho_ell), with rho_1 = energy - c.
    """
    u = np.atleast_1d(np.asarray(u, float))
    p = np.atleast_1d(np.asarray(p, float))
    if u.size != spec.ell:
        raise ConfigError(f"need {spec.ell} separated coordinates")
    _chart_guard(spec, u)
    b = np.asarray(spec.b)
    qt = qtilde_coeffs(spec, w)
    vals = np.empty(spec.ell)
    for i in range(spec.ell):
        a_u = float(np.prod(u[i] - b))
        vals[i] = (-2.0 * a_u * p[i] ** 2 - 0.5 * u[i] ** spec.ell
                   + float(poly_eval(qt, u[i])) / (2.0 * a_u))
    vander = np.vander(u, N=spec.ell)
    try:
        return np.linalg.solve(vander, vals)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("repeated separated coordinates: Vandermonde singular") from exc


def momentum_from_curve(curve: HyperellipticCurve, u, signs=None) -> np.ndarray:
    """|p_i| = sqrt(R(u_i)) / |2 A(u_i)| on the curve; ``signs`` picks sign(p_i)."""
    u = np.atleast_1d(np.asarray(u, float))
    signs = np.ones(u.size) if signs is None else np.asarray(signs, float)
    out = np.empty(u.size)
    for i in range(u.size):
        val = float(curve.evaluate(u[i]))
        a_u = float(np.prod(u[i] - curve.b))
        out[i] = signs[i] * np.sqrt(max(val, 0.0)) / abs(2.0 * a_u)
    return out


# -- partial-fraction identities ------------------------------------------------------

def jacobi_identities(u, p_coeffs) -> tuple:
    """Scaled residuals of the power-sum and interpolation identities.

    For U(z) = prod (z - u_i) with distinct roots:
        sum u_i        = sum u_i^ell / U'(u_i)
        rho_1          = sum P(u_i) / U'(u_i)      (P of degree ell-1)
        1              = sum u_i^{ell-1} / U'(u_i)
    Returns the three residuals, each divided by the magnitude of the terms
    entering its sum (so values are relative).
    """
    u = np.atleast_1d(np.asarray(u, float))
    p_coeffs = np.atleast_1d(np.asarray(p_coeffs, float))
    ell = u.size
    if np.unique(u).size != ell:
        raise ConfigError("power-sum identities need distinct roots")
    uprime = np.array([np.prod(u[i] - np.delete(u, i)) if ell > 1 else 1.0
                       for i in range(ell)])

    def scaled(target, terms):
        s = math.fsum(terms)
        scale = max(1.0, abs(target), max((abs(t) for t in terms), default=0.0))
        return abs(target - s) / scale

    r_power = scaled(math.fsum(u), [u[i] ** ell / uprime[i] for i in range(ell)])
    rho1 = p_coeffs[0] if p_coeffs.size == ell else 0.0
    r_interp = scaled(float(rho1),
                      [float(poly_eval(p_coeffs, u[i])) / uprime[i] for i in range(ell)])
    r_norm = scaled(1.0, [u[i] ** (ell - 1) / uprime[i] for i in range(ell)])
    return r_power, r_interp, r_norm
