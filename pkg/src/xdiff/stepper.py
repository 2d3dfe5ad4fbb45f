"""Time integration for the quotient-coupled cross-diffusion system.

Two schemes:

* ``EntropyImplicit`` -- fully implicit Euler in entropy variables
  w = h'(u).  Each step solves the nonlinear system

      (u(w) - u_prev)/tau - div(B_face grad w) + eps*((-lap)^m w + w)
          = (mu1 u1(w), mu2 u2(w))

  by damped Newton with a lagged-mobility (Picard-type) Jacobian.  The
  mobility B = A(h'')^-1 is arithmetically averaged at cell faces, which
  makes the discrete dissipation a sum of nonnegative face contributions
  and yields the per-step entropy inequality certified in the report.
  Positivity is automatic from the w-parametrization.

* ``LaggedLinear`` -- reference scheme: per component, one linear
  implicit Euler step with frozen coefficient a(u1/u2) from the previous
  state.  Nothing is clamped; positivity may be lost and is reported.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeffs import CoefficientSpec
from .entropy import (
    EntropyParams,
    _density,
    _gradient,
    _hessian_components,
    count_clamped,
    dissipation_kappa,
    invert_gradient_field,
    quotient_power,
    source_growth_constant,
)
from .errors import EntropyViolationError, NewtonNonConvergenceError, NonConvergenceError, NumericalError
from .grid import PeriodicGrid, gradient as grid_gradient, norm_hminus1, norm_l2
from .system import StateField, mobility_components

logger = logging.getLogger("xdiff.stepper")

ENTROPY_SLACK = 1e-9
_INNER_TOL = 1e-13
_MAX_TAU_HALVINGS = 10
_REDOUBLE_AFTER = 5


class Scheme(enum.Enum):
    ENTROPY_IMPLICIT = "entropy_implicit"
    LAGGED_LINEAR = "lagged_linear"


def default_regularization_order(d: int) -> int:
    """Smallest integer m with m > d/2."""
    return 1 if d == 1 else 2


@dataclass
class SchemeConfig:
    """Time-stepping parameters.

    ``reg_weight=None`` uses the per-step time step as the regularization
    weight (the choice made by the solvability argument); ``0.0`` switches
    the regularization off for mass-exact runs.
    """

    tau: float
    t_end: float
    scheme: Scheme = Scheme.ENTROPY_IMPLICIT
    m: int | None = None
    newton_tol: float = 1e-10
    newton_max: int = 50
    reg_weight: float | None = None

    def __post_init__(self):
        if isinstance(self.scheme, str):
            self.scheme = Scheme(self.scheme)
        if self.tau <= 0.0:
            raise ValueError("time step tau must be positive")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max < 1:
            raise ValueError("newton_max must be >= 1")
        if self.m is not None and self.m < 0:
            raise ValueError("regularization order m must be nonnegative")
        if self.reg_weight is not None and self.reg_weight < 0.0:
            raise ValueError("regularization weight must be nonnegative")

    def resolved_m(self, grid: PeriodicGrid) -> int:
        return self.m if self.m is not None else default_regularization_order(grid.d)

    def validate_for(self, grid: PeriodicGrid, params: EntropyParams, mu: tuple[float, float]) -> None:
        """Check the scheme hypotheses for a concrete run."""
        reg_on = self.reg_weight is None or self.reg_weight > 0.0
        if reg_on and self.resolved_m(grid) <= grid.d / 2.0:
            raise ValueError(
                f"regularization order m={self.resolved_m(grid)} violates m > d/2 for d={grid.d}"
            )
        if self.scheme is Scheme.ENTROPY_IMPLICIT and (mu[0] != 0.0 or mu[1] != 0.0):
            c_h = source_growth_constant(params, mu)
            if self.tau * c_h >= 1.0:
                raise ValueError(
                    f"time step tau={self.tau} violates tau < 1/C_h with "
                    f"C_h=2(alpha+2)(|mu1|+|mu2|)={c_h:.6g}"
                )


@dataclass(frozen=True)
class StepReport:
    newton_iters: int
    residual: float
    tau: float
    entropy_prev: float
    entropy_new: float
    entropy_margin: float  # H_prev - (1 - C_h*tau)*H_new
    dissipation: float
    clamp_events: int
    mass_change: tuple[float, float]


@dataclass
class DiagnosticsRecord:
    """One row of the run diagnostics; field order fixes the CSV schema."""

    t: float
    H: float
    mass1: float
    mass2: float
    min_u1: float
    min_u2: float
    l2_to_average: float
    hminus1_u1: float
    hminus1_u2: float
    newton_iters: int
    entropy_margin: float
    clamp_events: int


DIAGNOSTICS_FIELDS = [
    "t",
    "H",
    "mass1",
    "mass2",
    "min_u1",
    "min_u2",
    "l2_to_average",
    "hminus1_u1",
    "hminus1_u2",
    "newton_iters",
    "entropy_margin",
    "clamp_events",
]


@dataclass
class RunArtifact:
    """Immutable-once-produced record of a full simulation."""

    records: list[DiagnosticsRecord]
    final_state: StateField
    scheme: Scheme
    alpha: float
    mu: tuple[float, float]
    c_h: float
    tau: float
    step_times: list[float] = dc_field(default_factory=list)
    step_entropies: list[float] = dc_field(default_factory=list)
    step_margins: list[float] = dc_field(default_factory=list)
    step_dissipations: list[float] = dc_field(default_factory=list)
    step_newton_iters: list[int] = dc_field(default_factory=list)
    min_u_overall: float = np.inf
    lift_epsilon: tuple[float, float] = (0.0, 0.0)
    tau_halvings: int = 0


# ---------------------------------------------------------------------------
# cached grid operators


@lru_cache(maxsize=16)
def _grid_operators(d: int, n: int, m: int):
    """Sparse periodic stencil operators on the flattened grid."""
    shape = (n,) * d
    size = n**d
    idx = np.arange(size).reshape(shape)
    inv_dx2 = float(n) * float(n)

    neighbors = []
    for ax in range(d):
        nxt = np.roll(idx, -1, axis=ax).ravel()
        prv = np.roll(idx, 1, axis=ax).ravel()
        neighbors.append((nxt, prv))

    rows, cols, vals = [], [], []
    flat = idx.ravel()
    for nxt, prv in neighbors:
        rows.extend([flat, flat, flat])
        cols.extend([nxt, prv, flat])
        vals.extend([
            np.full(size, inv_dx2),
            np.full(size, inv_dx2),
            np.full(size, -2.0 * inv_dx2),
        ])
    lap = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )

    neg_lap_m = sp.identity(size, format="csr")
    for _ in range(m):
        neg_lap_m = neg_lap_m @ (-lap)
    reg = (neg_lap_m + sp.identity(size, format="csr")).tocsr()
    reg2 = sp.block_diag((reg, reg), format="csr")

    # fixed sparsity template for the step Jacobian: local 2x2 blocks first,
    # then per axis and component pair the (diag, next, prev) bands
    jrows = [flat, flat, flat + size, flat + size]
    jcols = [flat, flat + size, flat, flat + size]
    for nxt, prv in neighbors:
        for ci in (0, 1):
            for cj in (0, 1):
                r = ci * size + flat
                jrows.extend([r, r, r])
                jcols.extend([cj * size + flat, cj * size + nxt, cj * size + prv])
    jac_template = (np.concatenate(jrows), np.concatenate(jcols))

    return {
        "lap": lap,
        "reg": reg,
        "reg2": reg2,
        "neighbors": neighbors,
        "size": size,
        "jac_template": jac_template,
    }


def _face_average(arr: np.ndarray, ax: int) -> np.ndarray:
    return 0.5 * (arr + np.roll(arr, -1, axis=ax))


def _div_mobility_flux(w1, w2, b, grid: PeriodicGrid):
    """Divergence of the face-averaged mobility flux (per component)."""
    b11, b12, b21, b22 = b
    inv_dx2 = float(grid.n) * float(grid.n)
    div1 = np.zeros_like(w1)
    div2 = np.zeros_like(w2)
    for ax in range(grid.d):
        dw1 = np.roll(w1, -1, axis=ax) - w1
        dw2 = np.roll(w2, -1, axis=ax) - w2
        f11 = _face_average(b11, ax)
        f12 = _face_average(b12, ax)
        f21 = _face_average(b21, ax)
        f22 = _face_average(b22, ax)
        flux1 = f11 * dw1 + f12 * dw2
        flux2 = f21 * dw1 + f22 * dw2
        div1 += (flux1 - np.roll(flux1, 1, axis=ax)) * inv_dx2
        div2 += (flux2 - np.roll(flux2, 1, axis=ax)) * inv_dx2
    return div1, div2


def _assemble_jacobian(u1, u2, b, mu, tau, eps_reg, params, grid, ops):
    """Lagged-mobility Jacobian: exact local terms, frozen face mobilities."""
    size = ops["size"]
    h11, h12, h22 = _hessian_components(u1, u2, params.alpha)
    det = h11 * h22 - h12 * h12
    hi11, hi12, hi22 = (h22 / det).ravel(), (-h12 / det).ravel(), (h11 / det).ravel()

    c1 = 1.0 / tau - mu[0]
    c2 = 1.0 / tau - mu[1]
    vals = [c1 * hi11, c1 * hi12, c2 * hi12, c2 * hi22]

    inv_dx2 = float(grid.n) * float(grid.n)
    comps = ((0, 0, b[0]), (0, 1, b[1]), (1, 0, b[2]), (1, 1, b[3]))
    for ax, (nxt, prv) in enumerate(ops["neighbors"]):
        for _ci, _cj, bc in comps:
            face = _face_average(bc, ax).ravel() * inv_dx2
            face_prev = face[prv]
            vals.extend([face + face_prev, -face, -face_prev])

    jac = sp.csr_matrix(
        (np.concatenate(vals), ops["jac_template"]), shape=(2 * size, 2 * size)
    )
    if eps_reg > 0.0:
        jac = jac + eps_reg * ops["reg2"]
    return jac


def _dissipation(u1, u2, spec, params, grid):
    """kappa * integral of (r^(a-p) + r^(p-a)) |grad u|^2, central differences."""
    weight = quotient_power(u1, u2, params.alpha - spec.p) + quotient_power(
        u1, u2, spec.p - params.alpha
    )
    grad_sq = np.zeros_like(u1)
    for g in grid_gradient(u1, grid):
        grad_sq += g * g
    for g in grid_gradient(u2, grid):
        grad_sq += g * g
    kappa = dissipation_kappa(spec, params)
    return float(kappa * grid.cell_volume * np.sum(weight * grad_sq))


def step_entropy_implicit(
    field: StateField,
    spec: CoefficientSpec,
    params: EntropyParams,
    cfg: SchemeConfig,
    grid: PeriodicGrid,
    tau: float | None = None,
) -> tuple[StateField, StepReport]:
    """One implicit step in entropy variables; returns the new positive
    state and the per-step report (Newton stats, entropy balance)."""
    tau = cfg.tau if tau is None else float(tau)
    eps_reg = tau if cfg.reg_weight is None else cfg.reg_weight
    ops = _grid_operators(grid.d, grid.n, cfg.resolved_m(grid))
    mu = field.mu
    alpha = params.alpha

    u1p, u2p = field.u1, field.u2
    w1, w2 = _gradient(u1p, u2p, alpha)
    u1c, u2c = u1p.copy(), u2p.copy()
    reg_mat = ops["reg"]

    def residual(w1x, w2x, guess):
        u1x, u2x = invert_gradient_field(
            w1x, w2x, params, tol=_INNER_TOL, max_iter=80, initial=guess
        )
        b = mobility_components(u1x, u2x, spec, params)
        div1, div2 = _div_mobility_flux(w1x, w2x, b, grid)
        f1 = (u1x - u1p) / tau - div1 - mu[0] * u1x
        f2 = (u2x - u2p) / tau - div2 - mu[1] * u2x
        if eps_reg > 0.0:
            f1 = f1 + eps_reg * (reg_mat @ w1x.ravel()).reshape(w1x.shape)
            f2 = f2 + eps_reg * (reg_mat @ w2x.ravel()).reshape(w2x.shape)
        return f1, f2, u1x, u2x, b

    # convergence is measured on the state increment tau*F, whose floor is
    # set by the inner-inversion noise and does not grow as tau shrinks
    scale = 1.0 + max(float(u1p.max()), float(u2p.max()))
    tol = cfg.newton_tol * scale / tau

    try:
        f1, f2, u1c, u2c, b = residual(w1, w2, (u1c, u2c))
    except NonConvergenceError as exc:
        raise NewtonNonConvergenceError(
            f"entropy-variable inversion failed at step start: {exc}",
            residual=exc.residual,
            iterations=exc.iterations,
        ) from exc
    fnorm = max(float(np.abs(f1).max()), float(np.abs(f2).max()))

    iters = 0
    while fnorm > tol:
        if iters >= cfg.newton_max:
            raise NewtonNonConvergenceError(
                f"implicit step stalled at residual {fnorm:.3e} (tolerance {tol:.3e}) "
                f"after {iters} Newton iterations",
                residual=fnorm,
                iterations=iters,
            )
        jac = _assemble_jacobian(u1c, u2c, b, mu, tau, eps_reg, params, grid, ops)
        rhs = -np.concatenate([f1.ravel(), f2.ravel()])
        try:
            delta = spla.spsolve(jac.tocsc(), rhs)
        except Exception as exc:  # singular factorization and friends
            raise NumericalError(f"linear solve in implicit step failed: {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise NumericalError("linear solve in implicit step returned non-finite update")
        d1 = delta[: ops["size"]].reshape(w1.shape)
        d2 = delta[ops["size"]:].reshape(w2.shape)

        lam = 1.0
        accepted = False
        for _ in range(30):
            try:
                t1, t2, tu1, tu2, tb = residual(w1 + lam * d1, w2 + lam * d2, (u1c, u2c))
            except NonConvergenceError:
                lam *= 0.5
                continue
            tnorm = max(float(np.abs(t1).max()), float(np.abs(t2).max()))
            if tnorm < fnorm:
                w1, w2 = w1 + lam * d1, w2 + lam * d2
                f1, f2, u1c, u2c, b = t1, t2, tu1, tu2, tb
                fnorm = tnorm
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise NewtonNonConvergenceError(
                f"line search found no residual decrease at residual {fnorm:.3e}",
                residual=fnorm,
                iterations=iters,
            )
        iters += 1

    # accept the explicit conservative image of the converged solve:
    # u_new = u_prev + tau*(div + source - reg) = u(w) - tau*F_leftover.
    # The face fluxes telescope, so masses obey the discrete law exactly
    # instead of inheriting the Newton tolerance.
    u1n = u1c - tau * f1
    u2n = u2c - tau * f2
    if min(float(u1n.min()), float(u2n.min())) <= 0.0:
        # the parametrized state is positive by construction; fall back
        u1n, u2n = u1c, u2c
        logger.warning("conservative update rejected to preserve positivity")
    new_state = StateField(grid=grid, u1=u1n, u2=u2n, mu=mu)
    vol = grid.cell_volume
    h_prev = float(vol * np.sum(_density(u1p, u2p, alpha)))
    h_new = float(vol * np.sum(_density(u1n, u2n, alpha)))
    c_h = source_growth_constant(params, mu)
    margin = h_prev - (1.0 - c_h * tau) * h_new
    if mu == (0.0, 0.0) and h_new > h_prev + ENTROPY_SLACK * (1.0 + h_prev):
        raise EntropyViolationError(
            f"entropy increased from {h_prev:.15g} to {h_new:.15g} in a source-free step"
        )
    report = StepReport(
        newton_iters=iters,
        residual=fnorm,
        tau=tau,
        entropy_prev=h_prev,
        entropy_new=h_new,
        entropy_margin=margin,
        dissipation=_dissipation(u1n, u2n, spec, params, grid),
        clamp_events=count_clamped(u1n, u2n, alpha),
        mass_change=(
            float(vol * (u1n.sum() - u1p.sum())),
            float(vol * (u2n.sum() - u2p.sum())),
        ),
    )
    return new_state, report


def step_lagged_linear(
    field: StateField,
    spec: CoefficientSpec,
    cfg: SchemeConfig,
    grid: PeriodicGrid,
    tau: float | None = None,
) -> StateField:
    """One linear-implicit reference step with frozen coefficient."""
    tau = cfg.tau if tau is None else float(tau)
    ops = _grid_operators(grid.d, grid.n, 0)
    lap = ops["lap"]
    a_prev = np.asarray(spec.eval_a(field.quotient()), dtype=float).ravel()
    size = ops["size"]
    eye = sp.identity(size, format="csr")
    new = []
    for u, mu_i in ((field.u1, field.mu[0]), (field.u2, field.mu[1])):
        mat = (1.0 / tau - mu_i) * eye - lap @ sp.diags(a_prev)
        try:
            sol = spla.spsolve(mat.tocsc(), u.ravel() / tau)
        except Exception as exc:
            raise NumericalError(f"linear solve in lagged step failed: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise NumericalError("lagged step produced non-finite state")
        new.append(sol.reshape(grid.shape))
    if min(new[0].min(), new[1].min()) <= 0.0:
        logger.warning(
            "lagged-linear step lost positivity (min u1=%.3e, min u2=%.3e)",
            new[0].min(),
            new[1].min(),
        )
    return StateField(grid=grid, u1=new[0], u2=new[1], mu=field.mu, require_positive=False)


def simulate(
    initial: StateField,
    spec: CoefficientSpec,
    params: EntropyParams,
    cfg: SchemeConfig,
    grid: PeriodicGrid,
    probe_every: int = 1,
) -> RunArtifact:
    """Iterate the configured stepper to t_end, recording diagnostics.

    Per probe row: entropy, masses, positivity minima, L2 distance to the
    exactly evolved spatial average, discrete dual norms, Newton stats and
    the entropy-inequality margin (minimum since the previous row).

    The time step is halved on Newton failure (at most 10 times) and
    re-doubled after 5 consecutive successes.
    """
    if probe_every < 1:
        raise ValueError("probe_every must be >= 1")
    params.require_compatible(spec)
    cfg.validate_for(grid, params, initial.mu)

    # nonnegative initial data: lift exact zeros into the positive cone
    lift = [0.0, 0.0]
    u1, u2 = initial.u1.copy(), initial.u2.copy()
    if min(u1.min(), u2.min()) < 0.0:
        raise ValueError("initial data must be nonnegative")
    for i, u in enumerate((u1, u2)):
        if u.min() <= 0.0:
            lift[i] = 1e-8 * float(u.mean())
            if lift[i] <= 0.0:
                raise ValueError("initial component vanishes identically")
            u += lift[i]
    state = StateField(grid=grid, u1=u1, u2=u2, mu=initial.mu)

    alpha = params.alpha
    mu = state.mu
    c_h = source_growth_constant(params, mu)
    vol = grid.cell_volume
    mean0 = (float(state.u1.mean()), float(state.u2.mean()))

    def average_at(t: float) -> tuple[float, float]:
        return (mean0[0] * float(np.exp(mu[0] * t)), mean0[1] * float(np.exp(mu[1] * t)))

    def make_record(t, st, newton_iters, margin, clamps):
        ubar = average_at(t)
        d1 = st.u1 - ubar[0]
        d2 = st.u2 - ubar[1]
        l2 = float(np.sqrt(norm_l2(d1, grid) ** 2 + norm_l2(d2, grid) ** 2))
        return DiagnosticsRecord(
            t=t,
            H=float(vol * np.sum(_density(st.u1, st.u2, alpha))),
            mass1=st.masses()[0],
            mass2=st.masses()[1],
            min_u1=st.minima()[0],
            min_u2=st.minima()[1],
            l2_to_average=l2,
            hminus1_u1=norm_hminus1(st.u1, grid),
            hminus1_u2=norm_hminus1(st.u2, grid),
            newton_iters=newton_iters,
            entropy_margin=margin,
            clamp_events=clamps,
        )

    artifact = RunArtifact(
        records=[make_record(0.0, state, 0, 0.0, count_clamped(state.u1, state.u2, alpha))],
        final_state=state,
        scheme=cfg.scheme,
        alpha=alpha,
        mu=mu,
        c_h=c_h,
        tau=cfg.tau,
        lift_epsilon=(lift[0], lift[1]),
    )
    artifact.step_times.append(0.0)
    artifact.step_entropies.append(artifact.records[0].H)
    artifact.min_u_overall = min(state.minima())

    t = 0.0
    tau_cur = cfg.tau
    halvings = 0
    streak = 0
    steps_done = 0
    since_probe_margin = np.inf
    since_probe_clamps = 0
    since_probe_newton = 0
    t_final = cfg.t_end * (1.0 - 1e-9)

    while t < t_final:
        tau_step = min(tau_cur, cfg.t_end - t)
        if cfg.scheme is Scheme.ENTROPY_IMPLICIT:
            try:
                state_new, rep = step_entropy_implicit(state, spec, params, cfg, grid, tau=tau_step)
            except NewtonNonConvergenceError as exc:
                if halvings >= _MAX_TAU_HALVINGS:
                    raise NumericalError(
                        f"implicit step failed after {halvings} time-step halvings at t={t:.6g} "
                        f"(last residual {exc.residual:.3e})"
                    ) from exc
                halvings += 1
                streak = 0
                tau_cur *= 0.5
                logger.warning("halving time step to %.3e at t=%.6g", tau_cur, t)
                continue
            margin = rep.entropy_margin
            iters = rep.newton_iters
            clamps = rep.clamp_events
            diss = rep.dissipation
        else:
            h_prev = float(vol * np.sum(_density(state.u1, state.u2, alpha)))
            state_new = step_lagged_linear(state, spec, cfg, grid, tau=tau_step)
            positive = min(state_new.minima()) > 0.0
            if positive:
                h_new = float(vol * np.sum(_density(state_new.u1, state_new.u2, alpha)))
                clamps = count_clamped(state_new.u1, state_new.u2, alpha)
            else:
                h_new = np.nan
                clamps = 0
            margin = h_prev - (1.0 - c_h * tau_step) * h_new
            iters = 0
            diss = np.nan

        t += tau_step
        steps_done += 1
        streak += 1
        state = state_new
        if streak >= _REDOUBLE_AFTER and tau_cur < cfg.tau:
            tau_cur = min(cfg.tau, 2.0 * tau_cur)
            streak = 0

        artifact.step_times.append(t)
        h_now = float(vol * np.sum(_density(state.u1, state.u2, alpha))) if min(state.minima()) > 0 else np.nan
        artifact.step_entropies.append(h_now)
        artifact.step_margins.append(margin)
        artifact.step_dissipations.append(diss)
        artifact.step_newton_iters.append(iters)
        artifact.min_u_overall = min(artifact.min_u_overall, *state.minima())

        since_probe_margin = min(since_probe_margin, margin)
        since_probe_clamps += clamps
        since_probe_newton = max(since_probe_newton, iters)
        at_end = t >= t_final
        if steps_done % probe_every == 0 or at_end:
            artifact.records.append(
                make_record(t, state, since_probe_newton, since_probe_margin, since_probe_clamps)
            )
            since_probe_margin = np.inf
            since_probe_clamps = 0
            since_probe_newton = 0

    artifact.final_state = state
    artifact.tau_halvings = halvings
    return artifact


@dataclass(frozen=True)
class EntropyInequalityReport:
    worst_margin: float
    worst_relative_margin: float
    min_dissipation: float
    steps: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "worst_margin": self.worst_margin,
            "worst_relative_margin": self.worst_relative_margin,
            "min_dissipation": self.min_dissipation,
            "steps": self.steps,
            "passed": self.passed,
        }


def entropy_inequality_report(artifact: RunArtifact) -> EntropyInequalityReport:
    """Post-hoc check of the per-step inequality (1 - C_h tau) H_new <= H_prev.

    The dissipation series (nonnegative by construction) is summarized by
    its minimum.
    """
    if artifact.scheme is not Scheme.ENTROPY_IMPLICIT:
        raise ValueError("entropy inequality report requires an entropy-implicit run")
    margins = np.asarray(artifact.step_margins, dtype=float)
    h_prev = np.asarray(artifact.step_entropies[:-1], dtype=float)
    rel = margins / (1.0 + h_prev)
    diss = np.asarray(artifact.step_dissipations, dtype=float)
    worst_rel = float(np.min(rel)) if rel.size else 0.0
    return EntropyInequalityReport(
        worst_margin=float(np.min(margins)) if margins.size else 0.0,
        worst_relative_margin=worst_rel,
        min_dissipation=float(np.min(diss)) if diss.size else 0.0,
        steps=int(margins.size),
        passed=worst_rel >= -ENTROPY_SLACK,
    )
