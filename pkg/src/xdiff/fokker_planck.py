"""Degenerate-diffusion Fokker-Planck solver and partial-averaging harness.

The density f(x, y, t) lives on the periodic x-interval [0,1) times the
truncated y-interval [-L, L] and evolves by

    df/dt = d^2/dx^2 ( a(u1/u2) f ) + (sigma_n^2 / 2) d^2/dy^2 f,

where u_i(x,t) = integral of f(x,y,t) e^(lambda_i y) dy are the
exponentially weighted partial averages.  Averaging the equation with the
same weights reduces it to the cross-diffusion system with linear sources
mu_i = lambda_i^2 sigma_n^2 / 2; `consistency_compare` quantifies the
agreement between the two routes.

The y-boundary is zero-flux with a truncation-adequacy monitor: the
exponential weights amplify tails, so boundary mass must stay negligible
for the averages to be meaningful.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeffs import CoefficientSpec
from .entropy import EntropyParams
from .errors import NumericalError
from .grid import PeriodicGrid, norm_l2
from .stepper import Scheme, SchemeConfig, simulate
from .system import StateField

logger = logging.getLogger("xdiff.fokker_planck")

TRUNCATION_TOL = 1e-10


@dataclass
class FPField:
    """Density sample on the x-periodic, y-truncated grid.

    y nodes are uniform over [-L, L] inclusive; quadrature in y is the
    trapezoid rule, which pairs exactly with the mirrored-Neumann stencil.
    """

    f: np.ndarray  # shape (n_x, n_y)
    lam: tuple[float, float]
    sigma_n: float
    L: float

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.ndim != 2 or min(self.f.shape) < 4:
            raise ValueError("f must be a 2-d array with at least 4 points per axis")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f must be finite")
        self.lam = (float(self.lam[0]), float(self.lam[1]))
        if self.lam[0] == self.lam[1]:
            raise ValueError("exponential weights require lambda1 != lambda2")
        if self.sigma_n <= 0.0:
            raise ValueError("sigma_n must be positive")
        if self.L <= 0.0:
            raise ValueError("truncation half-width L must be positive")

    @property
    def n_x(self) -> int:
        return self.f.shape[0]

    @property
    def n_y(self) -> int:
        return self.f.shape[1]

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dy(self) -> float:
        return 2.0 * self.L / (self.n_y - 1)

    def y_nodes(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_y)

    def y_weights(self) -> np.ndarray:
        w = np.full(self.n_y, self.dy)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def mass(self) -> float:
        return float(self.dx * np.sum(self.f @ self.y_weights()))

    def source_rates(self) -> tuple[float, float]:
        """mu_i = lambda_i^2 sigma_n^2 / 2 paired with the averages."""
        s2 = self.sigma_n**2
        return (0.5 * self.lam[0] ** 2 * s2, 0.5 * self.lam[1] ** 2 * s2)

    def truncation_margin(self) -> tuple[bool, float]:
        """Adequacy of the y-truncation for both exponential weights.

        Returns (adequate, worst ratio) where the ratio compares the
        weighted boundary density to TRUNCATION_TOL * max f.
        """
        fmax = float(np.max(np.abs(self.f)))
        if fmax == 0.0:
            return True, 0.0
        edge = max(float(np.max(self.f[:, 0])), float(np.max(self.f[:, -1])))
        lam_max = max(abs(self.lam[0]), abs(self.lam[1]))
        value = float(np.exp(lam_max * self.L) * edge)
        return value <= TRUNCATION_TOL * fmax, value / fmax


def partial_average_arrays(fp: FPField) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid partial averages u_i(x) = sum_y f e^(lambda_i y) dy."""
    w = fp.y_weights()
    y = fp.y_nodes()
    u1 = fp.f @ (w * np.exp(fp.lam[0] * y))
    u2 = fp.f @ (w * np.exp(fp.lam[1] * y))
    return u1, u2


def partial_average(fp: FPField) -> StateField:
    """Partial averages as a 1-d state with the paired source rates."""
    u1, u2 = partial_average_arrays(fp)
    grid = PeriodicGrid(d=1, n=fp.n_x)
    return StateField(grid=grid, u1=u1, u2=u2, mu=fp.source_rates())


def _y_step_matrix(fp: FPField, tau: float) -> np.ndarray:
    """Banded (ab) form of I - (tau sigma_n^2 / 2) D2y with mirrored Neumann."""
    n = fp.n_y
    c = 0.5 * tau * fp.sigma_n**2 / fp.dy**2
    main = np.full(n, 1.0 + 2.0 * c)
    upper = np.full(n, -c)
    lower = np.full(n, -c)
    upper[1] = -2.0 * c  # ghost mirror at the lower wall
    lower[-2] = -2.0 * c  # ghost mirror at the upper wall
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[1:]
    ab[1] = main
    ab[2, :-1] = lower[:-1]
    return ab


def _x_coefficient(fp: FPField, spec: CoefficientSpec) -> np.ndarray:
    """sigma_1^2 / 2 = a(u1/u2) from the current partial averages."""
    u1, u2 = partial_average_arrays(fp)
    floor = 1e-12 * max(float(np.max(np.abs(u1))), float(np.max(np.abs(u2))), 1e-300)
    u1 = np.maximum(u1, floor)  # guards splitting noise; inactive for valid densities
    u2 = np.maximum(u2, floor)
    r = np.exp(np.log(u1) - np.log(u2))
    return np.asarray(spec.eval_a(r), dtype=float)


def fp_step(fp: FPField, spec: CoefficientSpec, tau: float) -> FPField:
    """One semi-implicit splitting step: implicit y-diffusion, then the
    x-operator with the coefficient frozen at the current averages.

    Both substeps conserve the discrete mass exactly (trapezoid weights
    pair with the Neumann stencil; the periodic x-stencil telescopes), so
    any drift is linear-solver noise.  Nonnegativity is monitored by the
    caller, not enforced.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")

    ab = _y_step_matrix(fp, tau)
    try:
        fstar = sla.solve_banded((1, 1), ab, fp.f.T).T
    except Exception as exc:
        raise NumericalError(f"banded y-solve failed: {exc}") from exc

    a_x = _x_coefficient(fp, spec)
    n = fp.n_x
    inv_dx2 = float(n) * float(n)
    idx = np.arange(n)
    lap = sp.csr_matrix(
        (
            np.concatenate([np.full(n, inv_dx2), np.full(n, inv_dx2), np.full(n, -2.0 * inv_dx2)]),
            (
                np.concatenate([idx, idx, idx]),
                np.concatenate([(idx + 1) % n, (idx - 1) % n, idx]),
            ),
        ),
        shape=(n, n),
    )
    mat = sp.identity(n, format="csr") - tau * (lap @ sp.diags(a_x))
    try:
        fnew = spla.splu(mat.tocsc()).solve(fstar)
    except Exception as exc:
        raise NumericalError(f"x-solve failed: {exc}") from exc
    if not np.all(np.isfinite(fnew)):
        raise NumericalError("Fokker-Planck step produced non-finite density")

    out = FPField(f=fnew, lam=fp.lam, sigma_n=fp.sigma_n, L=fp.L)
    ok, ratio = out.truncation_margin()
    if not ok:
        logger.warning("y-truncation no longer adequate (weighted boundary ratio %.3e)", ratio)
    return out


@dataclass
class ConsistencyRow:
    n_x: int
    n_y: int
    tau: float
    steps: int
    discrepancy_u1: float
    discrepancy_u2: float
    truncation_ok: bool
    truncation_ratio: float
    mass_drift: float
    min_f: float

    def to_dict(self) -> dict:
        return {
            "n_x": self.n_x,
            "n_y": self.n_y,
            "tau": self.tau,
            "steps": self.steps,
            "discrepancy_u1": self.discrepancy_u1,
            "discrepancy_u2": self.discrepancy_u2,
            "truncation_ok": self.truncation_ok,
            "truncation_ratio": self.truncation_ratio,
            "mass_drift": self.mass_drift,
            "min_f": self.min_f,
        }


@dataclass
class ConsistencyReport:
    rows: list[ConsistencyRow]
    ratios_u1: list[float] = dc_field(default_factory=list)
    ratios_u2: list[float] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "ratios_u1": self.ratios_u1,
            "ratios_u2": self.ratios_u2,
        }


def consistency_compare(
    spec: CoefficientSpec,
    params: EntropyParams,
    f0_factory,
    horizon: float,
    resolutions,
    newton_tol: float = 1e-10,
) -> ConsistencyReport:
    """Compare averaged Fokker-Planck and reduced-system solutions.

    ``f0_factory(n_x, n_y)`` must build the initial FPField at a given
    resolution (same physical data at all resolutions).  For each
    (n_x, n_y, tau) the Fokker-Planck run is averaged at the horizon and
    compared, in relative L2 per component, against an entropy-implicit
    run of the reduced system started from the t=0 averages with the
    paired sources.  Successive discrepancy ratios expose the refinement
    behavior.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    rows: list[ConsistencyRow] = []
    for n_x, n_y, tau in resolutions:
        fp = f0_factory(n_x=int(n_x), n_y=int(n_y))
        if not isinstance(fp, FPField):
            raise TypeError("f0_factory must return an FPField")
        steps = max(1, round(horizon / tau))
        tau_eff = horizon / steps

        u0 = partial_average(fp)
        mass0 = fp.mass()
        for _ in range(steps):
            fp = fp_step(fp, spec, tau_eff)
        u_fp1, u_fp2 = partial_average_arrays(fp)
        trunc_ok, trunc_ratio = fp.truncation_margin()

        grid = PeriodicGrid(d=1, n=int(n_x))
        cfg = SchemeConfig(
            tau=tau_eff,
            t_end=horizon,
            scheme=Scheme.ENTROPY_IMPLICIT,
            newton_tol=newton_tol,
            reg_weight=0.0,
        )
        reduced = simulate(u0, spec, params, cfg, grid, probe_every=max(1, steps))
        u_red = reduced.final_state

        rows.append(
            ConsistencyRow(
                n_x=int(n_x),
                n_y=int(n_y),
                tau=tau_eff,
                steps=steps,
                discrepancy_u1=norm_l2(u_fp1 - u_red.u1, grid) / norm_l2(u_red.u1, grid),
                discrepancy_u2=norm_l2(u_fp2 - u_red.u2, grid) / norm_l2(u_red.u2, grid),
                truncation_ok=trunc_ok,
                truncation_ratio=trunc_ratio,
                mass_drift=abs(fp.mass() - mass0),
                min_f=float(fp.f.min()),
            )
        )

    report = ConsistencyReport(rows=rows)
    for prev, cur in zip(rows[:-1], rows[1:]):
        report.ratios_u1.append(prev.discrepancy_u1 / max(cur.discrepancy_u1, 1e-300))
        report.ratios_u2.append(prev.discrepancy_u2 / max(cur.discrepancy_u2, 1e-300))
    return report
