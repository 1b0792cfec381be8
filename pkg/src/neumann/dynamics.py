"""Trajectory integration with constraint control, equilibria, and periods.

The integrator is a classical 4th-order one-step scheme; after every step
the state is projected back onto T*S^n (x normalized, y made tangent).  The
continuous flow preserves the constraints exactly, so projection only
removes integrator-order noise.  An adaptive mode estimates the local error
by step doubling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalFailure, OffManifoldError
from .model import (PhasePoint, SpectrumSpec, _field_arrays, check_on_manifold,
                    project_to_manifold)
from .reduction import reduced_vector_field


@dataclass
class Trajectory:
    """Sampled trajectory; arrays have shape (N, ..., n+1) (batch dims allowed)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.t.size

    def point(self, k: int, batch: int | None = None) -> PhasePoint:
        if self.x.ndim == 3:
            if batch is None:
                raise ConfigError("batched trajectory: give a batch index")
            return PhasePoint(self.x[k, batch], self.y[k, batch])
        return PhasePoint(self.x[k], self.y[k])


def _rk4_projected(a_vec: np.ndarray, x: np.ndarray, y: np.ndarray, dt: float) -> tuple:
    k1x, k1y = _field_arrays(a_vec, x, y)
    k2x, k2y = _field_arrays(a_vec, x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
    k3x, k3y = _field_arrays(a_vec, x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
    k4x, k4y = _field_arrays(a_vec, x + dt * k3x, y + dt * k3y)
    x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    y = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    return project_to_manifold(x, y)


def _integrate_arrays(spec, x, y, t_end, dt, save_every):
    a_vec = spec.a_vec
    if dt <= 0:
        raise NumericalFailure("step size underflow")
    nsteps = max(1, int(round(t_end / dt)))
    dt = t_end / nsteps  # land exactly on t_end
    ts, xs, ys = [0.0], [x.copy()], [y.copy()]
    for k in range(1, nsteps + 1):
        x, y = _rk4_projected(a_vec, x, y, dt)
        if k % save_every == 0 or k == nsteps:
            ts.append(k * dt)
            xs.append(x.copy())
            ys.append(y.copy())
    return np.array(ts), np.array(xs), np.array(ys)


def _integrate_adaptive(spec, x, y, t_end, dt0, rtol, save_every):
    a_vec = spec.a_vec
    t, dt = 0.0, dt0
    ts, xs, ys = [0.0], [x.copy()], [y.copy()]
    accepted = 0
    while t < t_end - 1e-14:
        dt = min(dt, t_end - t)
        if dt < 1e-14:
            raise NumericalFailure("step size underflow in adaptive integration")
        x1, y1 = _rk4_projected(a_vec, x, y, dt)
        xh, yh = _rk4_projected(a_vec, x, y, 0.5 * dt)
        x2, y2 = _rk4_projected(a_vec, xh, yh, 0.5 * dt)
        err = max(np.max(np.abs(x2 - x1)), np.max(np.abs(y2 - y1))) / 15.0
        scale = rtol * (1.0 + max(np.max(np.abs(x)), np.max(np.abs(y))))
        if err <= scale:
            t += dt
            x, y = x2, y2
            accepted += 1
            if accepted % save_every == 0 or t >= t_end - 1e-14:
                ts.append(t)
                xs.append(x.copy())
                ys.append(y.copy())
        ratio = (scale / err) ** 0.2 if err > 0 else 5.0
        dt *= min(5.0, max(0.2, 0.9 * ratio))
    return np.array(ts), np.array(xs), np.array(ys)


def integrate(spec: SpectrumSpec, p0: PhasePoint, t_end: float, dt: float = 1e-3,
              save_every: int = 10, adaptive: bool = False, rtol: float = 1e-10,
              on_manifold_tol: float = 1e-9) -> Trajectory:
    """Integrate the constrained flow from an on-manifold initial point."""
    check_on_manifold(p0, on_manifold_tol)
    if adaptive:
        t, x, y = _integrate_adaptive(spec, p0.x.copy(), p0.y.copy(), t_end, dt, rtol, save_every)
    else:
        t, x, y = _integrate_arrays(spec, p0.x.copy(), p0.y.copy(), t_end, dt, save_every)
    return Trajectory(t, x, y, meta={"dt": dt, "adaptive": adaptive})


def integrate_batch(spec: SpectrumSpec, x0: np.ndarray, y0: np.ndarray, t_end: float,
                    dt: float = 1e-3, save_every: int = 10,
                    on_manifold_tol: float = 1e-9) -> Trajectory:
    """Fixed-step integration of several trajectories at once (rows of x0, y0)."""
    x0 = np.atleast_2d(np.asarray(x0, float))
    y0 = np.atleast_2d(np.asarray(y0, float))
    c1 = np.sum(x0 * x0, axis=-1)
    c2 = np.sum(x0 * y0, axis=-1)
    if np.max(np.abs(c1 - 1)) > on_manifold_tol or np.max(np.abs(c2)) > on_manifold_tol:
        raise OffManifoldError("batch initial conditions off T*S^n")
    t, x, y = _integrate_arrays(spec, x0.copy(), y0.copy(), t_end, dt, save_every)
    return Trajectory(t, x, y, meta={"dt": dt, "adaptive": False})


# -- conserved-quantity monitoring -------------------------------------------------

def conserved_series(spec: SpectrumSpec, traj: Trajectory) -> dict:
    """Time series of every monitored quantity, keyed by name.

    Quantities: H, C1, C2, F_sigma for every block, intra-block L_ik, and
    W_sigma for blocks with m >= 2.  Values have shape (N, ...) matching any
    batch dimensions of the trajectory.
    """
    x, y = traj.x, traj.y
    a = spec.a_vec
    out = {}
    out["H"] = 0.5 * np.sum(y * y, axis=-1) + 0.5 * np.sum(a * x * x, axis=-1)
    out["C1"] = np.sum(x * x, axis=-1)
    out["C2"] = np.sum(x * y, axis=-1)
    # all pairwise angular momenta, shape (N, ..., n+1, n+1)
    L = x[..., :, None] * y[..., None, :] - y[..., :, None] * x[..., None, :]
    for sigma in range(spec.ell + 1):
        sl = spec.block_slice(sigma)
        f = np.sum(x[..., sl] ** 2, axis=-1)
        for tau in range(spec.ell + 1):
            if tau == sigma:
                continue
            tsl = spec.block_slice(tau)
            f = f + np.sum(L[..., sl, tsl] ** 2, axis=(-1, -2)) / (spec.b[sigma] - spec.b[tau])
        out[f"F_{sigma}"] = f
        if spec.m[sigma] >= 2:
            idx = spec.block_indices(sigma)
            out[f"W_{sigma}"] = 0.5 * np.sum(L[..., sl, sl] ** 2, axis=(-1, -2))
            for ai in range(len(idx)):
                for bi in range(ai + 1, len(idx)):
                    out[f"L_{idx[ai]}{idx[bi]}"] = L[..., idx[ai], idx[bi]]
    return out


def drift_report(spec: SpectrumSpec, traj: Trajectory) -> dict:
    """max_t |Q(t) - Q(0)| / max(1, |Q(0)|) for every monitored quantity."""
    if traj.n_samples == 0:
        raise ConfigError("empty trajectory")
    series = conserved_series(spec, traj)
    report = {}
    for name, q in series.items():
        q0 = q[0]
        drift = np.abs(q - q0[None, ...]) / np.maximum(1.0, np.abs(q0))[None, ...]
        report[name] = float(np.max(drift))
    return report


# -- relative equilibria -------------------------------------------------------------

@dataclass(frozen=True)
class RelativeEquilibrium:
    """Critical point of the amended potential at momentum j.

    ``h`` is the critical value of the Energy-Casimir mapping in the form
    sum_sigma j_sigma (omega_sigma + b_sigma / omega_sigma), which equals
    twice the Hamiltonian value at the equilibrium; the latter is exposed
    as ``energy``.
    """

    xi: np.ndarray
    beta: float
    omega: np.ndarray
    h: float
    j: np.ndarray

    @property
    def energy(self) -> float:
        return 0.5 * self.h


def relative_equilibrium(spec: SpectrumSpec, j) -> RelativeEquilibrium:
    """Solve sum_sigma j_sigma / sqrt(b_sigma - beta) = 1 for beta < b.

    Blocks with m_sigma = 1 must carry j_sigma = 0 and get xi_sigma = 0;
    blocks with m_sigma >= 2 need j_sigma > 0.  The left side is monotone
    increasing in beta and spans (0, infinity), so a root always exists.
    """
    j = np.asarray(j, dtype=float)
    if j.size != spec.ell + 1:
        raise ConfigError("need one momentum value per block")
    b = np.asarray(spec.b)
    for sigma in range(spec.ell + 1):
        if spec.m[sigma] == 1 and j[sigma] != 0.0:
            raise ConfigError(f"block {sigma} has multiplicity 1: j_{sigma} must be 0")
        if spec.m[sigma] >= 2 and j[sigma] <= 0.0:
            raise ConfigError(f"block {sigma} needs j_{sigma} > 0 in the regular range")
    active = j > 0
    if not np.any(active):
        raise ConfigError("no block carries momentum: no relative equilibrium in this stratum")
    b_min = float(np.min(b[active]))

    def g(beta):
        return float(np.sum(j[active] / np.sqrt(b[active] - beta))) - 1.0

    eps = 1e-14 * (1.0 + abs(b_min))
    hi = b_min - eps
    if g(hi) < 0.0:
        raise NumericalFailure("bisection bracket failed at the singular end")
    span = max(1.0, float(np.sum(j)) ** 2)
    lo = b_min - span
    while g(lo) > 0.0:
        span *= 4.0
        lo = b_min - span
        if span > 1e30:
            raise NumericalFailure("bisection bracket failed: no sign change")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * (1.0 + abs(mid)):
            break
    beta = 0.5 * (lo + hi)
    omega = np.sqrt(np.maximum(b - beta, 0.0))
    xi = np.zeros(spec.ell + 1)
    xi[active] = np.sqrt(j[active] / omega[active])
    h = float(np.sum(j[active] * (omega[active] + b[active] / omega[active])))
    return RelativeEquilibrium(xi=xi, beta=beta, omega=omega, h=h, j=j)


def critical_energy_hessian(spec: SpectrumSpec, j) -> tuple:
    """Gradient 2*omega and rank-1 Hessian of the critical value h(j).

    Hessian entries: (2 / (omega_s omega_t)) / sum_nu j_nu / omega_nu^3,
    restricted to the active blocks (j > 0).
    """
    eq = relative_equilibrium(spec, j)
    om = eq.omega
    grad = 2.0 * om
    denom = float(np.sum(eq.j / om ** 3))
    hess = 2.0 / np.outer(om, om) / denom
    return grad, hess


def equilibrium_phase_point(spec: SpectrumSpec, eq: RelativeEquilibrium) -> PhasePoint:
    """Full-system initial condition realizing the relative equilibrium.

    Each active block rotates in its first two axes with angular velocity
    omega_sigma: x = xi (e1), y = xi omega (e2), giving L_12 = j_sigma.
    """
    x = np.zeros(spec.n_coords)
    y = np.zeros(spec.n_coords)
    for sigma in range(spec.ell + 1):
        if eq.xi[sigma] == 0.0:
            continue
        if spec.m[sigma] < 2:
            raise ConfigError("only blocks with m >= 2 can carry a rotating equilibrium")
        start = spec.block_starts[sigma]
        x[start] = eq.xi[sigma]
        y[start + 1] = eq.xi[sigma] * eq.omega[sigma]
    return PhasePoint(x, y)


# -- period measurement ----------------------------------------------------------------

def _refine_crossing(f_state, section, t_lo, t_hi, state_lo, tol=1e-12):
    """Bisect the section-crossing time; f_state advances a state by dt."""
    s_lo = section(state_lo)
    for _ in range(200):
        t_mid = 0.5 * (t_lo + t_hi)
        state_mid = f_state(state_lo, t_mid - t_lo)
        s_mid = section(state_mid)
        if s_lo * s_mid <= 0.0 and s_mid != s_lo:
            t_hi = t_mid
        else:
            t_lo, state_lo, s_lo = t_mid, state_mid, s_mid
        if t_hi - t_lo < tol:
            break
    return 0.5 * (t_lo + t_hi)


def measure_period(spec: SpectrumSpec, w, xi0, eta0, section_index: int = 0,
                   t_max: float = 200.0, dt: float = 1e-3) -> float:
    """Return time of the reduced oscillation through a Poincare section.

    The section is the upward zero crossing of eta[section_index]; the period
    is the time between two consecutive same-direction crossings, refined by
    bisection to 1e-12 in time.
    """
    w = np.asarray(w, float)

    def f_advance(state, tau):
        xi, eta = state
        if tau <= 0:
            return state
        nst = max(1, int(math.ceil(tau / dt)))
        h = tau / nst
        z = np.concatenate([xi, eta])
        m = xi.size
        for _ in range(nst):
            def f(s):
                return np.concatenate(reduced_vector_field(spec, w, s[:m], s[m:]))
            k1 = f(z)
            k2 = f(z + 0.5 * h * k1)
            k3 = f(z + 0.5 * h * k2)
            k4 = f(z + h * k3)
            z = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            zx = z[:m] / np.linalg.norm(z[:m])
            ze = z[m:] - np.dot(zx, z[m:]) * zx
            z = np.concatenate([zx, ze])
        return z[:m], z[m:]

    def section(state):
        return state[1][section_index]

    xi = np.asarray(xi0, float).copy()
    eta = np.asarray(eta0, float).copy()
    state = (xi, eta)
    t = 0.0
    crossings = []
    s_prev = section(state)
    while t < t_max and len(crossings) < 2:
        new_state = f_advance(state, dt)
        s_new = section(new_state)
        if s_prev < 0.0 <= s_new:
            t_cross = _refine_crossing(f_advance, section, t, t + dt, state)
            crossings.append(t_cross)
        state, s_prev, t = new_state, s_new, t + dt
    if len(crossings) < 2:
        raise NumericalFailure(f"no section return within t_max={t_max}")
    return crossings[1] - crossings[0]


def linearized_frequency(spec: SpectrumSpec, w, xi_eq, fd_step: float = 1e-6) -> float:
    """Oscillation frequency from the Jacobian of the reduced field at an equilibrium."""
    xi_eq = np.asarray(xi_eq, float)
    m = xi_eq.size
    z0 = np.concatenate([xi_eq, np.zeros(m)])

    def f(z):
        return np.concatenate(reduced_vector_field(spec, w, z[:m], z[m:]))

    J = np.empty((2 * m, 2 * m))
    for k in range(2 * m):
        zp, zm = z0.copy(), z0.copy()
        zp[k] += fd_step
        zm[k] -= fd_step
        J[:, k] = (f(zp) - f(zm)) / (2 * fd_step)
    eig = np.linalg.eigvals(J)
    return float(np.max(np.abs(eig.imag)))
