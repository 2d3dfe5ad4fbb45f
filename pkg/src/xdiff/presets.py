"""Named initial-data presets for runs and the Fokker-Planck harness."""

from __future__ import annotations

import numpy as np

from .fokker_planck import FPField
from .grid import PeriodicGrid
from .system import StateField

PRESETS = ("constant", "cosine-perturbed", "random-smooth")


def _cosine_mode(grid: PeriodicGrid) -> np.ndarray:
    """Product of first-harmonic cosines: a single stencil eigenmode."""
    mode = np.ones(grid.shape)
    for x in grid.coordinates():
        mode = mode * np.cos(2.0 * np.pi * x)
    return mode


def _smooth_noise(grid: PeriodicGrid, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Random low-frequency field normalized to max |.| = 1."""
    g = np.zeros(grid.shape)
    coords = grid.coordinates()
    for kx in range(1, modes + 1):
        for ky in range(1, modes + 1) if grid.d == 2 else [0]:
            amp_c, amp_s = rng.normal(size=2) / (kx + ky)
            phase = 2.0 * np.pi * (kx * coords[0] + (ky * coords[1] if grid.d == 2 else 0.0))
            g = g + amp_c * np.cos(phase) + amp_s * np.sin(phase)
    peak = np.max(np.abs(g))
    return g / peak if peak > 0 else g


def make_initial_state(
    grid: PeriodicGrid,
    preset: str,
    base: tuple[float, float] = (1.0, 1.0),
    amplitude: float = 0.3,
    seed: int = 0,
    mu: tuple[float, float] = (0.0, 0.0),
) -> StateField:
    """Build a strictly positive initial state from a named preset.

    constant            u_i = base_i
    cosine-perturbed    u_i = base_i + amplitude * cos-mode
    random-smooth       u_i = base_i * (1 + amplitude * noise_i), seeded
    """
    if base[0] <= 0.0 or base[1] <= 0.0:
        raise ValueError("preset base values must be positive")
    if preset == "constant":
        u1 = np.full(grid.shape, float(base[0]))
        u2 = np.full(grid.shape, float(base[1]))
    elif preset == "cosine-perturbed":
        if abs(amplitude) >= min(base):
            raise ValueError("cosine amplitude must stay below the base values")
        mode = _cosine_mode(grid)
        u1 = base[0] + amplitude * mode
        u2 = base[1] + amplitude * mode
    elif preset == "random-smooth":
        if abs(amplitude) >= 1.0:
            raise ValueError("random-smooth amplitude must satisfy |amplitude| < 1")
        rng = np.random.default_rng(seed)
        u1 = base[0] * (1.0 + amplitude * _smooth_noise(grid, rng))
        u2 = base[1] * (1.0 + amplitude * _smooth_noise(grid, rng))
    else:
        raise ValueError(f"unknown initial-data preset {preset!r}; choose from {PRESETS}")
    return StateField(grid=grid, u1=u1, u2=u2, mu=mu)


def make_fp_initial(
    n_x: int,
    n_y: int,
    L: float,
    lam: tuple[float, float],
    sigma_n: float,
    x_profile: str = "cosine-perturbed",
    base: float = 1.0,
    amplitude: float = 0.3,
    y_sigma: float = 1.0,
    seed: int = 0,
) -> FPField:
    """Separable density g(x) * N(y; 0, y_sigma^2), normalized to mass one.

    The x-profile reuses the state presets (applied to one component).
    """
    grid = PeriodicGrid(d=1, n=n_x)
    gx = make_initial_state(grid, x_profile, base=(base, base), amplitude=amplitude, seed=seed).u1
    y = np.linspace(-L, L, n_y)
    gy = np.exp(-0.5 * (y / y_sigma) ** 2) / (y_sigma * np.sqrt(2.0 * np.pi))
    f = gx[:, None] * gy[None, :]
    fp = FPField(f=f, lam=lam, sigma_n=sigma_n, L=L)
    fp.f /= fp.mass()
    return fp
