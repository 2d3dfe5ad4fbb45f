"""Diffusion-coefficient families a(r) and their structural certificates.

Each family comes with an analytic derivative and certified constants
(a0, p) for the pointwise lower bound a(r) >= a0 / (r^p + r^-p).  The
certificates are numerical: `verify_assumptions` re-checks them, together
with the at-most-linear-growth condition a(r) >= r|a'(r)| and the implied
monotonicity of a(r)/r and a(r)*r, on a log-spaced sample grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_R_GRID = np.geomspace(1e-6, 1e6, 400)

# Relative slack for checks that hold with equality in exact arithmetic.
_REL_SLACK = 1e-12

_FD_REL_STEP = 1e-6


def _validate_r(r):
    arr = np.asarray(r, dtype=float)
    if arr.size == 0:
        raise ValueError("empty evaluation point set")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("coefficient argument r must be positive and finite")
    return arr


def _scalar_like(value: np.ndarray, template) -> float | np.ndarray:
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class CoefficientSpec:
    """A coefficient family with certified structure constants.

    Use the classmethod constructors; the raw constructor is meant for
    custom families where the caller supplies (a0, p) explicitly.
    """

    family: str
    params: dict = field(default_factory=dict)
    a0: float = 1.0
    p: float = 0.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    fn_prime: Callable[[np.ndarray], np.ndarray] | None = None
    derivative_is_approximate: bool = False

    def __post_init__(self):
        if self.a0 <= 0.0:
            raise ValueError("certified constant a0 must be positive")
        if self.p < 0.0:
            raise ValueError("certified exponent p must be nonnegative")

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls) -> "CoefficientSpec":
        """a(r) = 1, certified with (a0, p) = (2, 0)."""
        return cls(family="constant", a0=2.0, p=0.0)

    @classmethod
    def power(cls, alpha_c: float) -> "CoefficientSpec":
        """a(r) = r^alpha_c for 0 < alpha_c <= 1, certified with (1, alpha_c)."""
        if not 0.0 < alpha_c <= 1.0:
            raise ValueError("power family requires 0 < alpha_c <= 1")
        return cls(family="power", params={"alpha_c": float(alpha_c)}, a0=1.0, p=float(alpha_c))

    @classmethod
    def reciprocal(cls) -> "CoefficientSpec":
        """a(r) = 1/r, certified with (a0, p) = (1, 1)."""
        return cls(family="reciprocal", a0=1.0, p=1.0)

    @classmethod
    def saturating(cls, beta: float) -> "CoefficientSpec":
        """a(r) = r^beta / (1 + r^(beta-1)) for beta > 0.

        Certified conservatively with p = beta and a0 the minimum of
        a(r)(r^p + r^-p) over the default sample grid.  The growth
        condition a >= r|a'| only holds for beta <= 1; larger beta is
        constructible but flagged by `verify_assumptions`.
        """
        if beta <= 0.0:
            raise ValueError("saturating family requires beta > 0")
        spec = cls(family="saturating", params={"beta": float(beta)}, a0=1.0, p=float(beta))
        r = DEFAULT_R_GRID
        a0 = float(np.min(spec.eval_a(r) * (r**spec.p + r**-spec.p)))
        a0 *= 1.0 - 1e-6  # margin so recertification on finer grids stays clean
        object.__setattr__(spec, "a0", a0)
        return spec

    @classmethod
    def custom(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        a0: float,
        p: float,
        fn_prime: Callable[[np.ndarray], np.ndarray] | None = None,
        name: str = "custom",
    ) -> "CoefficientSpec":
        """User-supplied family; (a0, p) must be provided by the caller
        and are only as good as `verify_assumptions` says they are."""
        return cls(
            family=name,
            a0=float(a0),
            p=float(p),
            fn=fn,
            fn_prime=fn_prime,
            derivative_is_approximate=fn_prime is None,
        )

    @classmethod
    def from_config(cls, cfg: dict) -> "CoefficientSpec":
        """Build a family from a string tag + parameter map.

        Recognized tags: constant, power (alpha_c), saturating (beta),
        reciprocal, custom (expr, a0, p).  Optional a0/p entries override
        the built-in certificates.
        """
        cfg = dict(cfg)
        tag = str(cfg.pop("family", "")).lower()
        a0_override = cfg.pop("a0", None)
        p_override = cfg.pop("p", None)
        if tag == "constant":
            spec = cls.constant()
        elif tag == "power":
            spec = cls.power(float(cfg.pop("alpha_c")))
        elif tag == "saturating":
            spec = cls.saturating(float(cfg.pop("beta")))
        elif tag == "reciprocal":
            spec = cls.reciprocal()
        elif tag == "custom":
            expr = cfg.pop("expr")
            if a0_override is None or p_override is None:
                raise ValueError("custom families must supply explicit a0 and p")
            spec = cls.custom(_callable_from_expr(expr), float(a0_override), float(p_override))
            a0_override = p_override = None
        else:
            raise ValueError(f"unknown coefficient family {tag!r}")
        if cfg:
            raise ValueError(f"unused coefficient parameters: {sorted(cfg)}")
        if a0_override is not None or p_override is not None:
            spec = cls(
                family=spec.family,
                params=spec.params,
                a0=float(a0_override if a0_override is not None else spec.a0),
                p=float(p_override if p_override is not None else spec.p),
                fn=spec.fn,
                fn_prime=spec.fn_prime,
                derivative_is_approximate=spec.derivative_is_approximate,
            )
        return spec

    # -- evaluation ------------------------------------------------------

    def eval_a(self, r):
        """Evaluate a(r) for positive r (scalar or array)."""
        arr = _validate_r(r)
        if self.family == "constant":
            out = np.ones_like(arr)
        elif self.family == "power":
            out = arr ** self.params["alpha_c"]
        elif self.family == "reciprocal":
            out = 1.0 / arr
        elif self.family == "saturating":
            beta = self.params["beta"]
            logr = np.log(arr)
            # log a = beta*log r - log(1 + r^(beta-1)), assembled in log
            # space so extreme quotients do not overflow
            out = np.exp(beta * logr - np.logaddexp(0.0, (beta - 1.0) * logr))
        else:
            out = np.asarray(self.fn(arr), dtype=float)
        return _scalar_like(out, r)

    def eval_a_prime(self, r):
        """Evaluate a'(r); centered finite difference for custom families
        without an analytic derivative (relative step 1e-6)."""
        arr = _validate_r(r)
        if self.family == "constant":
            out = np.zeros_like(arr)
        elif self.family == "power":
            ac = self.params["alpha_c"]
            out = ac * arr ** (ac - 1.0)
        elif self.family == "reciprocal":
            out = -1.0 / (arr * arr)
        elif self.family == "saturating":
            beta = self.params["beta"]
            logr = np.log(arr)
            # a' = (beta r^(beta-1) + r^(2beta-2)) / (1 + r^(beta-1))^2
            num = np.logaddexp(np.log(beta) + (beta - 1.0) * logr, (2.0 * beta - 2.0) * logr)
            den = 2.0 * np.logaddexp(0.0, (beta - 1.0) * logr)
            out = np.exp(num - den)
        elif self.fn_prime is not None:
            out = np.asarray(self.fn_prime(arr), dtype=float)
        else:
            hi = self.eval_a(arr * (1.0 + _FD_REL_STEP))
            lo = self.eval_a(arr * (1.0 - _FD_REL_STEP))
            out = (hi - lo) / (2.0 * _FD_REL_STEP * arr)
        return _scalar_like(out, r)


def _callable_from_expr(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    """Parse an expression in the variable r into a vectorized callable."""
    import sympy

    r = sympy.Symbol("r", positive=True)
    parsed = sympy.sympify(expr, locals={"r": r})
    fn = sympy.lambdify(r, parsed, modules="numpy")

    def wrapped(arr):
        return np.broadcast_to(np.asarray(fn(arr), dtype=float), np.shape(arr)).copy()

    return wrapped


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the structural checks for one coefficient family."""

    family: str
    a0: float
    p: float
    n_points: int
    growth_margin: float  # min of (a - r|a'|)/a
    growth_ok: bool
    lower_bound_margin: float  # min of (a(r)(r^p + r^-p) - a0)/a0
    lower_bound_ok: bool
    quotient_nonincreasing_ok: bool  # a(r)/r along the grid
    product_nondecreasing_ok: bool  # a(r)*r along the grid
    passed: bool

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "a0": self.a0,
            "p": self.p,
            "n_points": self.n_points,
            "growth_margin": self.growth_margin,
            "growth_ok": self.growth_ok,
            "lower_bound_margin": self.lower_bound_margin,
            "lower_bound_ok": self.lower_bound_ok,
            "quotient_nonincreasing_ok": self.quotient_nonincreasing_ok,
            "product_nondecreasing_ok": self.product_nondecreasing_ok,
            "passed": self.passed,
        }


def verify_assumptions(spec: CoefficientSpec, r_grid: np.ndarray | None = None) -> AssumptionReport:
    """Numerically certify the structural conditions on a sample grid.

    A failed check is a report outcome, not an exception; this is the
    gatekeeper for custom families whose constants cannot be proved.
    """
    r = DEFAULT_R_GRID if r_grid is None else np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("r_grid must be a nonempty 1-d array")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("r_grid must be positive and finite")
    if np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be strictly increasing")

    a = np.asarray(spec.eval_a(r), dtype=float)
    ap = np.asarray(spec.eval_a_prime(r), dtype=float)

    growth = (a - r * np.abs(ap)) / np.abs(a)
    growth_margin = float(np.min(growth))
    growth_ok = growth_margin >= -_REL_SLACK

    lower = (a * (r**spec.p + r**-spec.p) - spec.a0) / spec.a0
    lower_margin = float(np.min(lower))
    lower_ok = lower_margin >= -_REL_SLACK

    quot = a / r
    scale_q = np.maximum(quot[1:], quot[:-1])
    quot_ok = bool(np.all(quot[1:] - quot[:-1] <= _REL_SLACK * scale_q))

    prod = a * r
    scale_p = np.maximum(prod[1:], prod[:-1])
    prod_ok = bool(np.all(prod[1:] - prod[:-1] >= -_REL_SLACK * scale_p))

    return AssumptionReport(
        family=spec.family,
        a0=spec.a0,
        p=spec.p,
        n_points=int(r.size),
        growth_margin=growth_margin,
        growth_ok=growth_ok,
        lower_bound_margin=lower_margin,
        lower_bound_ok=lower_ok,
        quotient_nonincreasing_ok=quot_ok,
        product_nondecreasing_ok=prod_ok,
        passed=growth_ok and lower_ok and quot_ok and prod_ok,
    )
