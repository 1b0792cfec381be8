"""Phase space, spectrum bookkeeping, Hamiltonian, and equations of motion.

The configuration space is the unit sphere S^n embedded in R^{n+1} through
C1 = <x,x> = 1, with tangency constraint C2 = <x,y> = 0.  The potential is
the quadratic form (1/2)<x, A x> where A is diagonal with eigenvalue b_sigma
repeated m_sigma times; equal eigenvalues are stored as consecutive blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, OffManifoldError

#: default tolerance for |C1 - 1| and |C2| when a point must lie on T*S^n
ON_MANIFOLD_TOL = 1e-9


@dataclass(frozen=True)
class SpectrumSpec:
    """Distinct eigenvalues ``b`` with multiplicities ``m``, blockwise.

    Blocks are consecutive index ranges: block sigma covers the m_sigma
    coordinates with eigenvalue b_sigma, and b is strictly increasing.
    """

    b: tuple
    m: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.b)
        m = tuple(int(v) for v in self.m)
        if len(b) == 0 or len(b) != len(m):
            raise ConfigError("spectrum: b and m must be nonempty lists of equal length")
        if any(mu < 1 for mu in m):
            raise ConfigError("spectrum: all multiplicities must be >= 1")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ConfigError("spectrum: eigenvalues b must be strictly increasing")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "m", m)

    # -- derived bookkeeping -------------------------------------------------

    @property
    def ell(self) -> int:
        """Number of distinct eigenvalues minus one."""
        return len(self.b) - 1

    @property
    def n_coords(self) -> int:
        """Ambient dimension n+1 = sum of multiplicities."""
        return int(sum(self.m))

    @property
    def n(self) -> int:
        return self.n_coords - 1

    @property
    def ell_tilde(self) -> int:
        """Count of blocks with multiplicity >= 2, minus one."""
        return sum(1 for mu in self.m if mu >= 2) - 1

    @property
    def degenerate_blocks(self) -> tuple:
        """Indices sigma with m_sigma >= 2 (the blocks carrying a momentum map)."""
        return tuple(s for s, mu in enumerate(self.m) if mu >= 2)

    @property
    def block_starts(self) -> tuple:
        starts, acc = [], 0
        for mu in self.m:
            starts.append(acc)
            acc += mu
        return tuple(starts)

    def block_indices(self, sigma: int) -> np.ndarray:
        start = self.block_starts[sigma]
        return np.arange(start, start + self.m[sigma])

    def block_slice(self, sigma: int) -> slice:
        start = self.block_starts[sigma]
        return slice(start, start + self.m[sigma])

    def block_of(self, nu: int) -> int:
        """Block index sigma containing coordinate nu."""
        for sigma, start in enumerate(self.block_starts):
            if start <= nu < start + self.m[sigma]:
                return sigma
        raise IndexError(nu)

    @property
    def a_vec(self) -> np.ndarray:
        """Per-coordinate eigenvalues: b_sigma repeated m_sigma times."""
        return np.repeat(np.asarray(self.b), np.asarray(self.m))

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {"b": list(self.b), "m": list(self.m)}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumSpec":
        try:
            return cls(tuple(d["b"]), tuple(d["m"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"spectrum: missing/invalid field ({exc})") from exc


def validate_spectrum(b: Sequence[float], m: Sequence[int]) -> SpectrumSpec:
    """Build a SpectrumSpec, rejecting non-increasing b or bad multiplicities."""
    return SpectrumSpec(tuple(b), tuple(m))


def spectrum_from_eigenvalues(a: Sequence[float], tol: float = 0.0) -> tuple:
    """Canonicalize per-coordinate eigenvalues given in any order.

    Groups values equal within ``tol`` into blocks sorted increasingly and
    returns (spec, perm) where perm maps canonical coordinate positions to
    the caller's positions (x_canonical[k] = x_user[perm[k]]).
    """
    a = [float(v) for v in a]
    if not a:
        raise ConfigError("spectrum: empty eigenvalue list")
    perm = sorted(range(len(a)), key=lambda k: a[k])
    b, m = [a[perm[0]]], [1]
    for k in perm[1:]:
        if a[k] - b[-1] <= tol:
            m[-1] += 1
        else:
            b.append(a[k])
            m.append(1)
    return SpectrumSpec(tuple(b), tuple(m)), tuple(perm)


def torus_dimension(spec: SpectrumSpec) -> int:
    """Dimension ell + ell_tilde + 1 of the regular invariant tori."""
    return spec.ell + spec.ell_tilde + 1


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, y) of R^{2n+2}; on-manifold means C1 = 1, C2 = 0."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape or x.ndim != 1:
            raise ConfigError("phase point: x and y must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.x.size


def constraint_values(p: PhasePoint) -> tuple:
    """(C1, C2) = (<x,x>, <x,y>)."""
    return float(np.dot(p.x, p.x)), float(np.dot(p.x, p.y))


def check_on_manifold(p: PhasePoint, tol: float = ON_MANIFOLD_TOL) -> None:
    c1, c2 = constraint_values(p)
    if abs(c1 - 1.0) > tol or abs(c2) > tol:
        raise OffManifoldError(
            f"point off T*S^n: |C1-1|={abs(c1 - 1.0):.3e}, |C2|={abs(c2):.3e}, tol={tol:.1e}"
        )


def project_to_manifold(x: np.ndarray, y: np.ndarray) -> tuple:
    """Radial projection x -> x/|x| followed by tangential projection of y."""
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    y = y - np.sum(x * y, axis=-1, keepdims=True) * x
    return x, y


def potential(spec: SpectrumSpec, x: np.ndarray) -> float:
    a = spec.a_vec
    return 0.5 * float(np.sum(a * np.asarray(x) ** 2, axis=-1))


def potential_gradient(spec: SpectrumSpec, x: np.ndarray) -> np.ndarray:
    return spec.a_vec * np.asarray(x)


def hamiltonian(spec: SpectrumSpec, p: PhasePoint) -> float:
    """Total energy (1/2)<y,y> + (1/2)<x, A x>, defined on all of R^{2n+2}."""
    if p.dim != spec.n_coords:
        raise ConfigError(f"phase point has {p.dim} coordinates, spectrum needs {spec.n_coords}")
    return 0.5 * float(np.dot(p.y, p.y)) + potential(spec, p.x)


def _field_arrays(a_vec: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple:
    """Right-hand side on arrays with an arbitrary batch shape (..., n+1)."""
    grad_v = a_vec * x
    lam = np.sum(x * grad_v, axis=-1, keepdims=True) - np.sum(y * y, axis=-1, keepdims=True)
    return y, -grad_v + lam * x


def vector_field(spec: SpectrumSpec, p: PhasePoint, tol: float = ON_MANIFOLD_TOL) -> tuple:
    """Constrained Hamiltonian vector field on T*S^n.

    xdot = y,  ydot = -grad V + (<x, grad V> - 2T) x.  Equivalent to Newton's
    equation with constraint multiplier lambda = 2V - 2T.
    """
    if p.dim != spec.n_coords:
        raise ConfigError(f"phase point has {p.dim} coordinates, spectrum needs {spec.n_coords}")
    check_on_manifold(p, tol)
    return _field_arrays(spec.a_vec, p.x, p.y)


def random_phase_point(spec: SpectrumSpec, rng: np.random.Generator,
                       momentum_scale: float = 1.0) -> PhasePoint:
    """Random on-manifold point: x uniform on S^n, y Gaussian projected tangent."""
    x = rng.normal(size=spec.n_coords)
    y = momentum_scale * rng.normal(size=spec.n_coords)
    x, y = project_to_manifold(x, y)
    return PhasePoint(x, y)
