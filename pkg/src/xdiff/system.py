"""PDE building blocks: state container, diffusion matrix A(u), mobility
B = A (h'')^-1, flux densities, source term, and the matrix sanity checks
(single eigenvalue, Petrovski parabolicity, uniform bound).

A(u) has the quotient structure
    [[a + r a', -r^2 a'], [a', a - r a']],   r = u1/u2,
with trace 2a(r) and determinant a(r)^2, so a(r) is its only eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclasses_field

import numpy as np

from .coeffs import CoefficientSpec
from .entropy import EntropyParams, _hessian_components, _validate_state
from .errors import NumericalError
from .grid import PeriodicGrid


@dataclass
class StateField:
    """Positive pair (u1, u2) sampled on a periodic grid.

    ``require_positive=False`` admits sign-indefinite fields; only the
    lagged reference scheme uses that, to report (rather than mask) a
    positivity loss.
    """

    grid: PeriodicGrid
    u1: np.ndarray
    u2: np.ndarray
    mu: tuple[float, float] = (0.0, 0.0)
    require_positive: bool = dataclasses_field(default=True, repr=False, compare=False)

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=float)
        self.u2 = np.asarray(self.u2, dtype=float)
        if self.u1.shape != self.grid.shape or self.u2.shape != self.grid.shape:
            raise ValueError(
                f"component shapes {self.u1.shape}, {self.u2.shape} do not match "
                f"grid shape {self.grid.shape}"
            )
        if not (np.all(np.isfinite(self.u1)) and np.all(np.isfinite(self.u2))):
            raise ValueError("state must be finite")
        if self.require_positive:
            _validate_state(self.u1, self.u2)
        self.mu = (float(self.mu[0]), float(self.mu[1]))

    def quotient(self) -> np.ndarray:
        """u1/u2 evaluated in log space to delay overflow."""
        return np.exp(np.log(self.u1) - np.log(self.u2))

    def masses(self) -> tuple[float, float]:
        vol = self.grid.cell_volume
        return float(vol * self.u1.sum()), float(vol * self.u2.sum())

    def minima(self) -> tuple[float, float]:
        return float(self.u1.min()), float(self.u2.min())

    def replace(self, u1: np.ndarray, u2: np.ndarray) -> "StateField":
        return StateField(grid=self.grid, u1=u1, u2=u2, mu=self.mu)


def diffusion_matrix_components(u1, u2, spec: CoefficientSpec):
    """Entries (A11, A12, A21, A22) of A(u), vectorized over cells."""
    u1, u2 = _validate_state(u1, u2)
    logr = np.log(u1) - np.log(u2)
    r = np.exp(logr)
    a = np.asarray(spec.eval_a(r), dtype=float)
    ap = np.asarray(spec.eval_a_prime(r), dtype=float)
    # r^k a' combined in log space (sign(a') exp(k log r + log|a'|)) so that
    # extreme transient quotients do not overflow prematurely
    with np.errstate(divide="ignore"):
        log_ap = np.log(np.abs(ap))
    sign_ap = np.sign(ap)
    r_ap = np.where(ap == 0.0, 0.0, sign_ap * np.exp(logr + log_ap))
    r2_ap = np.where(ap == 0.0, 0.0, sign_ap * np.exp(2.0 * logr + log_ap))
    a11 = a + r_ap
    a12 = -r2_ap
    a21 = ap
    a22 = a - r_ap
    return a11, a12, a21, a22


def diffusion_matrix(u, spec: CoefficientSpec) -> np.ndarray:
    """A(u) for a positive pair; generally neither symmetric nor definite."""
    a11, a12, a21, a22 = diffusion_matrix_components(np.asarray(u[0]), np.asarray(u[1]), spec)
    return np.array([[float(a11), float(a12)], [float(a21), float(a22)]])


def mobility_components(u1, u2, spec: CoefficientSpec, params: EntropyParams):
    """Entries of B = A(u) h''(u)^-1 via the closed-form 2x2 inverse."""
    u1, u2 = _validate_state(u1, u2)
    h11, h12, h22 = _hessian_components(u1, u2, params.alpha)
    det = h11 * h22 - h12 * h12
    bad = ~(np.asarray(det) > 1e-300)
    if np.any(bad):
        idx = np.argwhere(np.asarray(bad))[0]
        raise NumericalError(
            f"entropy Hessian numerically singular (det={np.asarray(det)[tuple(idx)]:.3e} "
            f"at cell {tuple(idx)})"
        )
    inv11, inv12, inv22 = h22 / det, -h12 / det, h11 / det
    a11, a12, a21, a22 = diffusion_matrix_components(u1, u2, spec)
    b11 = a11 * inv11 + a12 * inv12
    b12 = a11 * inv12 + a12 * inv22
    b21 = a21 * inv11 + a22 * inv12
    b22 = a21 * inv12 + a22 * inv22
    return b11, b12, b21, b22


def mobility_matrix(u, spec: CoefficientSpec, params: EntropyParams) -> np.ndarray:
    """B(w) = A(u) h''(u)^-1; z.Bz >= 0 although B is not symmetric."""
    b11, b12, b21, b22 = mobility_components(np.asarray(u[0]), np.asarray(u[1]), spec, params)
    return np.array([[float(b11), float(b12)], [float(b21), float(b22)]])


def flux_density(field: StateField, spec: CoefficientSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cellwise (a(u1/u2) u1, a(u1/u2) u2), the quantity under the Laplacian."""
    a = np.asarray(spec.eval_a(field.quotient()), dtype=float)
    return a * field.u1, a * field.u2


def source_term(field: StateField) -> tuple[np.ndarray, np.ndarray]:
    """Cellwise (mu1 u1, mu2 u2)."""
    return field.mu[0] * field.u1, field.mu[1] * field.u2


def energy_transport_transform(field: StateField) -> tuple[np.ndarray, np.ndarray]:
    """Change of variables (n, theta) = (u1, u2/u1).

    With the reciprocal coefficient the fluxes become (n*theta, n*theta^2),
    the particle/energy fluxes of the semiconductor energy-transport form.
    """
    n = field.u1.copy()
    theta = np.exp(np.log(field.u2) - np.log(field.u1))
    return n, theta


@dataclass(frozen=True)
class PetrovskiReport:
    min_eigenvalue: float
    samples: int
    passed: bool

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "samples": self.samples, "passed": self.passed}


def petrovski_check(spec: CoefficientSpec, samples: int = 10_000, rng_seed: int = 0) -> PetrovskiReport:
    """Nonnegativity of the only eigenvalue a(u1/u2) at random states."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    u1 = 10.0 ** rng.uniform(-4.0, 4.0, size=samples)
    u2 = 10.0 ** rng.uniform(-4.0, 4.0, size=samples)
    eig = np.asarray(spec.eval_a(np.exp(np.log(u1) - np.log(u2))), dtype=float)
    min_eig = float(np.min(eig))
    return PetrovskiReport(min_eigenvalue=min_eig, samples=samples, passed=min_eig >= 0.0)


@dataclass(frozen=True)
class MatrixBoundReport:
    c_a: float
    samples: int
    finite: bool

    def to_dict(self) -> dict:
        return {"c_a": self.c_a, "samples": self.samples, "finite": self.finite}


def matrix_bound_check(spec: CoefficientSpec, samples: int = 10_000, rng_seed: int = 0) -> MatrixBoundReport:
    """Empirical constant in |A(u)| <= C_A (1 + r^2 + r^-2)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    u1 = 10.0 ** rng.uniform(-4.0, 4.0, size=samples)
    u2 = 10.0 ** rng.uniform(-4.0, 4.0, size=samples)
    a11, a12, a21, a22 = diffusion_matrix_components(u1, u2, spec)
    total = np.abs(a11) + np.abs(a12) + np.abs(a21) + np.abs(a22)
    r2 = np.exp(2.0 * (np.log(u1) - np.log(u2)))
    ratio = total / (1.0 + r2 + 1.0 / r2)
    c_a = float(np.max(ratio))
    return MatrixBoundReport(c_a=c_a, samples=samples, finite=bool(np.isfinite(c_a)))
