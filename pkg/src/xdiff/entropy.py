"""Entropy density machinery: h, its derivatives, inversion of h', and the
quantified positive-semidefiniteness bound for h''(u)A(u).

The density is
    h(u) = (u1/u2)^a * u1^2 + (u1/u2)^-a * u2^2
           + u1 - log u1 + u2 - log u2,        a = alpha,
convex on (0,inf)^2 with invertible gradient.  All quotient powers are
computed as exp(+-alpha*(log u1 - log u2)) with the exponent clamped to
+-700; clamped evaluations are far outside the entropy-bounded region and
are surfaced through `count_clamped`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientSpec
from .errors import NonConvergenceError

_EXP_CLAMP = 700.0
_XI_LIMIT = 700.0  # log-state bound keeping exp(xi) strictly positive/finite
_NEWTON_STEP_CAP = 3.0


@dataclass(frozen=True)
class EntropyParams:
    """Exponent of the entropy density.

    The existence theory pairs alpha with the coefficient certificate via
    alpha >= p + 4 (which implies alpha*(alpha+2) > 1 and alpha >= p);
    that pairing is checked by `require_compatible`.
    """

    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError("entropy exponent alpha must be positive and finite")

    def require_compatible(self, spec: CoefficientSpec) -> None:
        if self.alpha < spec.p + 4.0:
            raise ValueError(
                f"entropy exponent alpha={self.alpha} violates alpha >= p + 4 "
                f"(certified p={spec.p})"
            )


def structure_constant_k(alpha: float) -> float:
    """k(alpha) = (alpha(alpha+2) - 1) / (alpha+2)^2, positive for
    alpha(alpha+2) > 1."""
    return (alpha * (alpha + 2.0) - 1.0) / (alpha + 2.0) ** 2


def dissipation_kappa(spec: CoefficientSpec, params: EntropyParams) -> float:
    """kappa = a0 * k(alpha) / 4, the certified dissipation constant."""
    return spec.a0 * structure_constant_k(params.alpha) / 4.0


def source_growth_constant(params: EntropyParams, mu: tuple[float, float]) -> float:
    """C_h = 2(alpha+2)(|mu1| + |mu2|), bounding mu.u.grad(h) by C_h*h."""
    return 2.0 * (params.alpha + 2.0) * (abs(mu[0]) + abs(mu[1]))


def _validate_state(u1, u2):
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
        raise ValueError("state must be finite")
    if np.any(u1 <= 0.0) or np.any(u2 <= 0.0):
        raise ValueError("state components must be strictly positive")
    return u1, u2


def quotient_power(u1, u2, exponent: float):
    """(u1/u2)^exponent via clamped exp/log; accepts arrays."""
    q = np.log(u1) - np.log(u2)
    return np.exp(np.clip(exponent * q, -_EXP_CLAMP, _EXP_CLAMP))


def count_clamped(u1, u2, alpha: float) -> int:
    """Number of cells whose largest quotient exponent hit the clamp."""
    q = np.log(np.asarray(u1, float)) - np.log(np.asarray(u2, float))
    return int(np.count_nonzero(np.abs((alpha + 2.0) * q) >= _EXP_CLAMP))


def _density(u1, u2, alpha):
    pp = quotient_power(u1, u2, alpha)
    pm = quotient_power(u1, u2, -alpha)
    return pp * u1 * u1 + pm * u2 * u2 + (u1 - np.log(u1)) + (u2 - np.log(u2))


def _gradient(u1, u2, alpha):
    pp = quotient_power(u1, u2, alpha)
    pm = quotient_power(u1, u2, -alpha)
    g1 = (alpha + 2.0) * pp * u1 - alpha * pm * u2 * u2 / u1 - 1.0 / u1 + 1.0
    g2 = (alpha + 2.0) * pm * u2 - alpha * pp * u1 * u1 / u2 - 1.0 / u2 + 1.0
    return g1, g2


def _gradient_term_magnitudes(u1, u2, alpha):
    """Sum of absolute term sizes per gradient component; the roundoff
    floor of evaluating h' by cancellation."""
    pp = quotient_power(u1, u2, alpha)
    pm = quotient_power(u1, u2, -alpha)
    t1 = (alpha + 2.0) * pp * u1 + alpha * pm * u2 * u2 / u1 + 1.0 / u1 + 1.0
    t2 = (alpha + 2.0) * pm * u2 + alpha * pp * u1 * u1 / u2 + 1.0 / u2 + 1.0
    return t1, t2


def _hessian_components(u1, u2, alpha):
    """Entries (h11, h12, h22) of the Hessian h''(u)."""
    ra = quotient_power(u1, u2, alpha)  # (u1/u2)^alpha
    ra1 = quotient_power(u1, u2, alpha + 1.0)
    ra2 = quotient_power(u1, u2, alpha + 2.0)
    sa = quotient_power(u2, u1, alpha)
    sa1 = quotient_power(u2, u1, alpha + 1.0)
    sa2 = quotient_power(u2, u1, alpha + 2.0)
    al, ap2 = alpha, alpha + 2.0
    h11 = ap2 * (al + 1.0) * ra + al * (al + 1.0) * sa2 + 1.0 / (u1 * u1)
    h12 = -al * ap2 * (ra1 + sa1)
    h22 = al * (al + 1.0) * ra2 + ap2 * (al + 1.0) * sa + 1.0 / (u2 * u2)
    return h11, h12, h22


def entropy_density(u, params: EntropyParams) -> float:
    """h(u) for a positive pair; satisfies h >= (u1^2+u2^2)/2 and h >= 2."""
    u1, u2 = _validate_state(u[0], u[1])
    return float(_density(u1, u2, params.alpha))


def entropy_gradient(u, params: EntropyParams) -> tuple[float, float]:
    u1, u2 = _validate_state(u[0], u[1])
    g1, g2 = _gradient(u1, u2, params.alpha)
    return float(g1), float(g2)


def entropy_hessian(u, params: EntropyParams) -> np.ndarray:
    """Hessian h''(u) as a symmetric positive definite 2x2 matrix."""
    u1, u2 = _validate_state(u[0], u[1])
    h11, h12, h22 = _hessian_components(u1, u2, params.alpha)
    return np.array([[float(h11), float(h12)], [float(h12), float(h22)]])


def hessian_parts(u, params: EntropyParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three positive definite summands of h'' (quotient blocks plus
    the log part), mainly for structure reporting."""
    u1, u2 = _validate_state(u[0], u[1])
    al, ap2 = params.alpha, params.alpha + 2.0
    ra = float(quotient_power(u1, u2, al))
    ra1 = float(quotient_power(u1, u2, al + 1.0))
    ra2 = float(quotient_power(u1, u2, al + 2.0))
    sa = float(quotient_power(u2, u1, al))
    sa1 = float(quotient_power(u2, u1, al + 1.0))
    sa2 = float(quotient_power(u2, u1, al + 2.0))
    h1 = np.array([[ap2 * (al + 1.0) * ra, -al * ap2 * ra1], [-al * ap2 * ra1, al * (al + 1.0) * ra2]])
    h2 = np.array([[al * (al + 1.0) * sa2, -al * ap2 * sa1], [-al * ap2 * sa1, ap2 * (al + 1.0) * sa]])
    h3 = np.diag([1.0 / float(u1) ** 2, 1.0 / float(u2) ** 2])
    return h1, h2, h3


def entropy_functional(field, params: EntropyParams) -> float:
    """H[u] by midpoint quadrature on the field's grid."""
    u1, u2 = _validate_state(field.u1, field.u2)
    return float(field.grid.cell_volume * np.sum(_density(u1, u2, params.alpha)))


def invert_gradient_field(
    w1,
    w2,
    params: EntropyParams,
    tol: float = 1e-12,
    max_iter: int = 100,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Vectorized inverse of h': solve h'(u) = w cellwise.

    Damped Newton in logarithmic coordinates xi = log u, so iterates stay
    positive by construction; the Jacobian is h''(u) diag(u).  The line
    search backtracks (up to 30 halvings per cell) on the convex merit
    phi = h(u) - w.u, whose unique minimizer is the solution and for
    which the Newton direction is always a descent direction; unlike the
    raw residual, phi stays informative when the target gradient is many
    orders of magnitude away.  Convergence is declared on the residual,
    per cell: |h'(u) - w|_inf <= tol * (1 + |w|_inf).
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    alpha = params.alpha

    if initial is not None:
        xi1 = np.log(np.asarray(initial[0], dtype=float)) * np.ones_like(w1)
        xi2 = np.log(np.asarray(initial[1], dtype=float)) * np.ones_like(w2)
    else:
        xi1 = np.zeros_like(w1)
        xi2 = np.zeros_like(w2)

    ws1 = 1.0 + np.abs(w1)
    ws2 = 1.0 + np.abs(w2)

    def merit_and_residual(x1, x2):
        e1, e2 = np.exp(x1), np.exp(x2)
        g1, g2 = _gradient(e1, e2, alpha)
        with np.errstate(over="ignore"):
            phi = _density(e1, e2, alpha) - w1 * e1 - w2 * e2
        return phi, g1 - w1, g2 - w2

    def converged(x1, x2, r1, r2):
        # per-component tolerance, floored at the cancellation roundoff of
        # evaluating h' itself
        t1, t2 = _gradient_term_magnitudes(np.exp(x1), np.exp(x2), alpha)
        eps = 64.0 * np.finfo(float).eps
        return (np.abs(r1) <= tol * ws1 + eps * t1) & (np.abs(r2) <= tol * ws2 + eps * t2)

    phi, f1, f2 = merit_and_residual(xi1, xi2)
    fmax = np.maximum(np.abs(f1), np.abs(f2))

    for iteration in range(max_iter):
        if np.all(converged(xi1, xi2, f1, f2)):
            u1, u2 = np.exp(xi1), np.exp(xi2)
            return (u1, u2) if w1.ndim else (float(u1), float(u2))

        e1, e2 = np.exp(xi1), np.exp(xi2)
        h11, h12, h22 = _hessian_components(e1, e2, alpha)
        # Jacobian wrt xi: column j of h'' scaled by u_j
        j11, j12 = h11 * e1, h12 * e2
        j21, j22 = h12 * e1, h22 * e2
        det = j11 * j22 - j12 * j21
        d1 = -(f1 * j22 - f2 * j12) / det
        d2 = -(j11 * f2 - j21 * f1) / det

        cap = np.maximum(np.abs(d1), np.abs(d2))
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(cap > _NEWTON_STEP_CAP, _NEWTON_STEP_CAP / cap, 1.0)
        d1 *= shrink
        d2 *= shrink

        done = converged(xi1, xi2, f1, f2)
        lam = np.ones_like(fmax)
        accepted = np.zeros(fmax.shape, dtype=bool)
        t1, t2 = xi1, xi2
        n1, n2 = f1, f2
        nmax = fmax
        nphi = phi
        improved = False
        for _ in range(30):
            c1 = np.clip(xi1 + lam * d1, -_XI_LIMIT, _XI_LIMIT)
            c2 = np.clip(xi2 + lam * d2, -_XI_LIMIT, _XI_LIMIT)
            rphi, r1, r2 = merit_and_residual(c1, c2)
            rmax = np.maximum(np.abs(r1), np.abs(r2))
            with np.errstate(invalid="ignore"):
                better = ~accepted & ((rphi < phi) | (rmax < fmax))
            if np.any(better):
                improved = True
                t1 = np.where(better, c1, t1)
                t2 = np.where(better, c2, t2)
                n1 = np.where(better, r1, n1)
                n2 = np.where(better, r2, n2)
                nmax = np.where(better, rmax, nmax)
                nphi = np.where(better, rphi, nphi)
                accepted |= better
            if np.all(accepted | done):
                break
            lam = np.where(accepted, lam, lam * 0.5)

        xi1, xi2 = t1, t2
        f1, f2, fmax, phi = n1, n2, nmax, nphi
        if not improved:
            break  # flat merit at float precision; residual check decides

    if np.all(converged(xi1, xi2, f1, f2)):
        u1, u2 = np.exp(xi1), np.exp(xi2)
        return (u1, u2) if w1.ndim else (float(u1), float(u2))

    worst = float(np.max(np.maximum(np.abs(f1) / ws1, np.abs(f2) / ws2)))
    raise NonConvergenceError(
        f"gradient inversion did not reach tolerance {tol} "
        f"(worst scaled residual {worst:.3e})",
        residual=worst,
        last_iterate=(np.exp(xi1), np.exp(xi2)),
        iterations=max_iter,
    )


def invert_gradient(w, params: EntropyParams, tol: float = 1e-12, max_iter: int = 100):
    """Scalar-pair inverse of h'; see `invert_gradient_field`."""
    w1 = np.asarray(float(w[0]))
    w2 = np.asarray(float(w[1]))
    u1, u2 = invert_gradient_field(w1, w2, params, tol=tol, max_iter=max_iter)
    return float(u1), float(u2)


@dataclass(frozen=True)
class StructureBoundReport:
    """Sampled check of z^T h''(u)A(u) z >= kappa*(r^(a-p)+r^(p-a))|z|^2."""

    kappa: float
    min_margin: float
    min_relative_margin: float
    samples: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "min_margin": self.min_margin,
            "min_relative_margin": self.min_relative_margin,
            "samples": self.samples,
            "passed": self.passed,
        }


def structure_bound_check(
    spec: CoefficientSpec,
    params: EntropyParams,
    n_samples: int = 10_000,
    rng_seed: int = 0,
) -> StructureBoundReport:
    """Rayleigh-quotient check of the certified dissipation bound.

    States are drawn log-uniformly in [1e-4, 1e4]^2 and directions
    uniformly on the unit circle; the margin is quotient minus bound.
    """
    alpha = params.alpha
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if alpha < spec.p:
        raise ValueError("structure bound requires alpha >= p")
    if alpha * (alpha + 2.0) <= 1.0:
        raise ValueError("structure bound requires alpha*(alpha+2) > 1")

    from .system import diffusion_matrix_components

    rng = np.random.default_rng(rng_seed)
    u1 = 10.0 ** rng.uniform(-4.0, 4.0, size=n_samples)
    u2 = 10.0 ** rng.uniform(-4.0, 4.0, size=n_samples)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_samples)
    z1, z2 = np.cos(theta), np.sin(theta)

    h11, h12, h22 = _hessian_components(u1, u2, alpha)
    a11, a12, a21, a22 = diffusion_matrix_components(u1, u2, spec)
    m11 = h11 * a11 + h12 * a21
    m12 = h11 * a12 + h12 * a22
    m21 = h12 * a11 + h22 * a21
    m22 = h12 * a12 + h22 * a22
    quotient = m11 * z1 * z1 + (m12 + m21) * z1 * z2 + m22 * z2 * z2

    kappa = dissipation_kappa(spec, params)
    weight = quotient_power(u1, u2, alpha - spec.p) + quotient_power(u1, u2, spec.p - alpha)
    bound = kappa * weight  # |z| = 1

    margin = quotient - bound
    scale = np.maximum(np.abs(quotient), bound)
    rel = margin / np.where(scale > 0.0, scale, 1.0)
    return StructureBoundReport(
        kappa=kappa,
        min_margin=float(np.min(margin)),
        min_relative_margin=float(np.min(rel)),
        samples=n_samples,
        passed=bool(np.min(rel) >= -1e-12),
    )
