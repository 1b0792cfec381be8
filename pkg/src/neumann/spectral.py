"""Branch points, action integrals, and the period lattice of the curve.

For bounded motion with every coupling w_sigma > 0 the degree-(2*ell+1)
polynomial R has 2*ell+1 real roots: one left of b_0 and one pair inside
each gap (b_{sigma-1}, b_sigma).  R >= 0 exactly on the paired segments,
which carry the oscillation of the separated coordinates.  The nontrivial
actions are

    I_i = (1/4 pi) oint_{gamma_i} zeta / A dz,

where gamma_i doubles the segment cycle exactly when an endpoint sits at an
eigenvalue (possible only on w_sigma = 0 strata).  The circle around the
pole z = b_sigma yields the trivial action sqrt(w_sigma) by the residue
sqrt(-R(b_sigma)) / |A'(b_sigma)|.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalFailure
from .model import SpectrumSpec
from .separation import (HyperellipticCurve, curve_from_energy, poly_deflate,
                         poly_der, poly_eval)

#: pairwise root gap (times scale) below which the curve counts as near-critical
NEAR_CRITICAL_GAP = 1e-8
#: endpoint-to-eigenvalue distance (times scale) that triggers cycle doubling
DOUBLING_TOL = 1e-9


class NearCriticalWarning(UserWarning):
    """Curve has a nearly-double root: discriminant-locus proximity."""


def _curve_scale(curve: HyperellipticCurve) -> float:
    return float(np.max(np.abs(curve.b)) + 1.0)


def _bisect(fn, lo, hi, flo, tol):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def _roots_structured(curve: HyperellipticCurve) -> np.ndarray:
    """Real roots for the generic stratum (all w > 0), by interval isolation."""
    b = curve.b
    ell = curve.ell
    scale = _curve_scale(curve)
    tol = 1e-14 * scale
    rfun = lambda z: float(poly_eval(curve.r, z))
    dr = poly_der(curve.r)
    roots = []

    # spectator root left of b_0 (R -> +inf as z -> -inf)
    span = max(1.0, float(b[-1] - b[0]))
    lo = b[0] - span
    while rfun(lo) <= 0.0:
        span *= 2.0
        lo = b[0] - span
        if span > 1e12 * scale:
            raise NumericalFailure("no spectator root found left of the spectrum")
    roots.append(_bisect(rfun, lo, float(b[0]), rfun(lo), tol))

    for sigma in range(1, ell + 1):
        a, c = float(b[sigma - 1]), float(b[sigma])
        # include near-endpoint nodes: R < 0 at the eigenvalues when w > 0,
        # so pairs hugging an endpoint still produce sign changes
        tiny = 1e-12 * (c - a)
        grid = np.concatenate([[a + tiny],
                               np.linspace(a, c, 128 * max(1, ell))[1:-1],
                               [c - tiny]])
        vals = poly_eval(curve.r, grid)
        signs = np.sign(vals)
        changes = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
        if changes.size >= 2:
            for k in (changes[0], changes[-1]):
                flo = float(vals[k])
                roots.append(_bisect(rfun, float(grid[k]), float(grid[k + 1]), flo, tol))
        else:
            # pair unresolved by the grid: refine around the interior maximum of R
            k = int(np.argmax(vals))
            zl, zr = float(grid[max(k - 1, 0)]), float(grid[min(k + 1, grid.size - 1)])
            drfun = lambda z: float(poly_eval(dr, z))
            if drfun(zl) <= 0.0 or drfun(zr) >= 0.0:
                raise NumericalFailure(
                    f"branch structure violated in ({a:.6g}, {c:.6g}): no interior maximum"
                )
            zmax = _bisect(drfun, zl, zr, drfun(zl), tol)
            rmax = rfun(zmax)
            if rmax < -NEAR_CRITICAL_GAP * scale:
                raise NumericalFailure(
                    f"complex root pair in ({a:.6g}, {c:.6g}): R_max = {rmax:.3e} < 0 "
                    "(near-critical or unbounded parameters)"
                )
            if rmax <= NEAR_CRITICAL_GAP * scale:
                roots.extend([zmax, zmax])
            else:
                roots.append(_bisect(rfun, zl, zmax, rfun(zl), tol))
                roots.append(_bisect(rfun, zmax, zr, rfun(zmax), tol))
    return np.sort(np.array(roots))


def _roots_with_zero_couplings(curve: HyperellipticCurve, zero_idx) -> np.ndarray:
    """Roots when some w_sigma = 0: those b_sigma are roots; deflate and fall back."""
    poly = curve.r.copy()
    fixed = []
    for sigma in zero_idx:
        poly, _ = poly_deflate(poly, float(curve.b[sigma]))
        fixed.append(float(curve.b[sigma]))
    other = np.roots(poly)
    scale = _curve_scale(curve)
    real = other[np.abs(other.imag) < 1e-7 * scale].real
    return np.sort(np.concatenate([np.array(fixed), real]))


def branch_points(curve: HyperellipticCurve, w_tol: float = 1e-12) -> np.ndarray:
    """All real roots of R, sorted ascending; validates count and placement.

    Raises when a real pair is missing (complex roots where the bounded-motion
    structure requires real ones); warns when two roots nearly coincide.
    """
    ell = curve.ell
    zero_idx = [s for s in range(ell + 1) if curve.w[s] <= w_tol]
    if zero_idx:
        roots = _roots_with_zero_couplings(curve, zero_idx)
    else:
        roots = _roots_structured(curve)
    if roots.size != 2 * ell + 1:
        raise NumericalFailure(
            f"expected {2 * ell + 1} real branch points, found {roots.size} "
            f"(roots: {roots}); parameters may not describe bounded motion"
        )
    scale = _curve_scale(curve)
    if not zero_idx:
        b = curve.b
        if roots[0] >= b[0]:
            raise NumericalFailure("spectator branch point not left of the spectrum")
        for sigma in range(1, ell + 1):
            pair = roots[2 * sigma - 1: 2 * sigma + 1]
            if np.any(pair < b[sigma - 1]) or np.any(pair > b[sigma]):
                raise NumericalFailure(f"branch pair {sigma} escaped its spectral gap")
    gaps = np.diff(roots)
    if gaps.size and float(np.min(gaps)) < NEAR_CRITICAL_GAP * scale:
        warnings.warn("nearly coincident branch points: discriminant-locus proximity",
                      NearCriticalWarning)
    return roots


def branch_segments(curve: HyperellipticCurve, roots: np.ndarray | None = None) -> list:
    """The ell closed segments [z_{2i-1}, z_{2i}] (ascending, spectator excluded)."""
    if roots is None:
        roots = branch_points(curve)
    return [(float(roots[2 * i + 1]), float(roots[2 * i + 2])) for i in range(curve.ell)]


def sqrt_weight_quadrature(f, zlo: float, zhi: float, n: int) -> float:
    """Midpoint rule for int_zlo^zhi sqrt((z-zlo)(zhi-z)) f(z) dz via z = m - r cos(theta).

    Exact to machine precision for constant f at any n >= 1; spectrally
    convergent for smooth f.
    """
    m, r = 0.5 * (zlo + zhi), 0.5 * (zhi - zlo)
    theta = (np.arange(n) + 0.5) * np.pi / n
    z = m - r * np.cos(theta)
    vals = np.sin(theta) ** 2 * np.asarray(f(z))
    return float(r * r * np.pi / n * np.sum(vals))


def action_integral(curve: HyperellipticCurve, i: int, tol: float = 1e-11,
                    max_nodes: int = 1 << 14) -> tuple:
    """(I_i, doubling flag) for the i-th branch segment (0-based, ascending).

    I_i = flag * (1/2 pi) int_seg sqrt(R(z)) / |A(z)| dz with flag = 2 exactly
    when a segment endpoint coincides with an eigenvalue.  The square-root
    endpoint behaviour is absorbed by the cosine substitution; node count is
    doubled until self-convergence below ``tol``.
    """
    roots = branch_points(curve)
    segments = branch_segments(curve, roots)
    if not 0 <= i < len(segments):
        raise ConfigError(f"segment index {i} out of range for genus {curve.ell}")
    zlo, zhi = segments[i]
    scale = _curve_scale(curve)
    flag = 2 if bool(np.any(np.abs(np.array([zlo, zhi])[:, None] - curve.b[None, :])
                            < DOUBLING_TOL * scale)) else 1
    inside = (curve.b > zlo + DOUBLING_TOL * scale) & (curve.b < zhi - DOUBLING_TOL * scale)
    if np.any(inside):
        raise NumericalFailure("an eigenvalue lies strictly inside a branch segment")
    if zhi - zlo < NEAR_CRITICAL_GAP * scale:
        return 0.0, flag

    quotient, _ = poly_deflate(curve.r, zlo)
    quotient, _ = poly_deflate(quotient, zhi)
    a_coeffs = curve.a_coeffs

    def integrand(z):
        # R(z) = (z - zlo)(z - zhi) * quotient(z); on the segment quotient <= 0
        q = np.maximum(-poly_eval(quotient, z), 0.0)
        return np.sqrt(q) / np.abs(poly_eval(a_coeffs, z))

    n = 16
    prev = sqrt_weight_quadrature(integrand, zlo, zhi, n)
    while n < max_nodes:
        n *= 2
        cur = sqrt_weight_quadrature(integrand, zlo, zhi, n)
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            prev = cur
            break
        prev = cur
    else:
        raise NumericalFailure("action quadrature failed to self-converge")
    return flag * prev / (2.0 * np.pi), flag


def action_integrals(curve: HyperellipticCurve, tol: float = 1e-11) -> tuple:
    vals, flags = [], []
    for i in range(curve.ell):
        v, f = action_integral(curve, i, tol=tol)
        vals.append(v)
        flags.append(f)
    return np.array(vals), np.array(flags, dtype=int)


def trivial_action_residue(curve: HyperellipticCurve, sigma: int,
                           w_tol: float = 1e-12) -> float:
    """sqrt(w_sigma) as the residue modulus sqrt(-R(b_sigma)) / |A'(b_sigma)|."""
    val = curve.evaluate_exact(curve.b[sigma])
    a_prime = curve.a_prime(sigma)
    resid_sq = -val / a_prime ** 2
    if resid_sq <= w_tol * w_tol:
        raise NumericalFailure(
            f"no pole at b_{sigma}: coupling w_{sigma} vanishes (residue = 0)"
        )
    return float(np.sqrt(resid_sq))


# -- period lattice ---------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodLattice:
    """T = [[dI/dH, dI/dJ], [0, id]] and its inverse (the frequency matrix)."""

    t: np.ndarray
    omega: np.ndarray
    param_names: tuple
    j_blocks: tuple
    flags: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def frequency_ratios(self) -> np.ndarray:
        """dI/dJ entries; for one reduced degree of freedom these are the ratios."""
        ell = self.t.shape[0] - len(self.j_blocks)
        return self.t[:ell, ell:]


def _richardson_derivative(fn, x0: np.ndarray, k: int, step: float) -> np.ndarray:
    def central(delta):
        xp, xm = x0.copy(), x0.copy()
        xp[k] += delta
        xm[k] -= delta
        return (fn(xp) - fn(xm)) / (2 * delta)

    d1 = central(step)
    d2 = central(0.5 * step)
    return (4.0 * d2 - d1) / 3.0


def period_lattice(spec: SpectrumSpec, w, h: float, extra_rho=(),
                   fd_rel: float = 1e-5, quad_tol: float = 1e-12) -> PeriodLattice:
    """Assemble the action-derivative matrix T and frequencies Omega = T^{-1}.

    Parameters are (h, rho_2, ..., rho_ell, J_sigma for blocks with w > 0);
    derivatives of the nontrivial actions are centered finite differences
    with one Richardson extrapolation.  Near-discriminant curves (tiny branch
    gaps) are rejected as ill-conditioned.
    """
    w = np.asarray(w, float)
    ell = spec.ell
    j_blocks = tuple(s for s in range(ell + 1) if w[s] > 0.0)
    extra = tuple(float(v) for v in extra_rho)
    base_curve = curve_from_energy(spec, w, h, extra)
    roots = branch_points(base_curve)
    scale = _curve_scale(base_curve)
    if float(np.min(np.diff(roots))) < 1e-6 * scale:
        raise NumericalFailure("near-discriminant parameters: period lattice ill-conditioned")
    _, flags = action_integrals(base_curve, tol=quad_tol)

    params = np.array([h, *extra, *[np.sqrt(w[s]) for s in j_blocks]])
    names = ("h", *[f"rho_{k}" for k in range(2, ell + 1)],
             *[f"J_{s}" for s in j_blocks])

    def actions(theta):
        hh = theta[0]
        ex = tuple(theta[1:ell])
        ww = w.copy()
        for pos, s in enumerate(j_blocks):
            ww[s] = theta[ell + pos] ** 2
        vals, _ = action_integrals(curve_from_energy(spec, ww, hh, ex), tol=quad_tol)
        return vals

    n_params = params.size
    top = np.empty((ell, n_params))
    steps = {}
    for k in range(n_params):
        step = fd_rel * max(1.0, abs(params[k]))
        steps[names[k]] = step
        top[:, k] = _richardson_derivative(actions, params, k, step)

    dim = ell + len(j_blocks)
    t_mat = np.zeros((dim, dim))
    t_mat[:ell, :] = top
    t_mat[ell:, ell:] = np.eye(len(j_blocks))
    omega = np.linalg.inv(t_mat)
    return PeriodLattice(t=t_mat, omega=omega, param_names=names, j_blocks=j_blocks,
                         flags=flags, meta={"fd_steps": steps, "h": h, "extra_rho": extra})
