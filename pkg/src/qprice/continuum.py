"""Coordinate representation: master-equation couplings and width laws.

On a log-price grid with spacing ``dx`` the nearest-neighbour couplings are
parameterized by a drift field ``mu_n`` and a diffusion field ``gamma_n``::

    q[n, n-1] = kappa_n,   q[n, n+1] = conj(kappa_n),
    kappa_n = gamma_n / dx**2 + 1j * mu_n / (2 dx).

The generator advanced in time is the Hermitian part of the resulting
master-equation matrix: diagonal ``-2 gamma_n / dx**2`` and bond
``(kappa_n + kappa_{n+1}) / 2``.  For uniform fields it is the central
difference form of ``gamma f'' + i mu f'``, whose Gaussian solutions give
the closed-form widths implemented below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from .errors import BoundaryLeakageError, DomainError
from .evolution import (EvolutionConfig, StateVector, evolve_amplitudes,
                        expi_tridiagonal, step_exact, with_unit_price_scale)
from .operator_core import LatticeParams, TridiagonalOperator, build_lattice

EDGE_NODES = 3
EDGE_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Uniform log-price grid of ``n_points`` nodes on ``[x_min, x_max]``."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError("x_min must be below x_max")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise DomainError("n_points must be an integer >= 3")

    @classmethod
    def centred(cls, half_width: float, dx: float) -> "GridSpec":
        """Symmetric grid ``[-half_width, half_width]`` with spacing ``dx``."""
        n = int(round(2 * half_width / dx)) + 1
        return cls(-(n - 1) * dx / 2, (n - 1) * dx / 2, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class DriftDiffusionField:
    """Random drift and diffusion coefficients, redrawn every step.

    In ``homogeneous`` mode the diffusion is the constant ``gamma0``; in
    ``disordered`` mode every node gets ``gamma0 + gamma_sigma * z_n``.  The
    drift ``mu ~ N(0, mu_sigma)`` is uniform in price in both modes.
    """

    mu_sigma: float = 0.0
    gamma0: float = 0.0
    gamma_sigma: float = 0.0
    mode: str = "homogeneous"

    def __post_init__(self):
        if self.mode not in ("homogeneous", "disordered"):
            raise DomainError(f"unknown field mode {self.mode!r}")
        if not (self.mu_sigma >= 0 and self.gamma_sigma >= 0):
            raise DomainError("mu_sigma and gamma_sigma must be non-negative")

    def draw(self, n_points: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """One step of fields as ``(mu_n, gamma_n)``.

        The drift normal is drawn first, then one normal per node in
        disordered mode.  Standard normals are scaled afterwards, so runs that
        differ only in scale parameters share their random numbers.
        """
        mu = np.full(n_points, self.mu_sigma * rng.standard_normal())
        if self.mode == "disordered":
            gamma = self.gamma0 + self.gamma_sigma * rng.standard_normal(n_points)
        else:
            gamma = np.full(n_points, float(self.gamma0))
        return mu, gamma


@dataclass(frozen=True)
class WavePacket:
    w0: float
    center: float = 0.0

    def __post_init__(self):
        if not self.w0 > 0:
            raise DomainError("w0 must be positive")


@dataclass(frozen=True)
class WidthLawParams:
    """Parameters of the spread-curve law: one-step width and ``beta * eps``."""

    w_dt: float
    beta_eps: float
    dt: float = 1.0

    def __post_init__(self):
        if not (self.w_dt > 0 and self.beta_eps >= 0 and self.dt > 0):
            raise DomainError("need w_dt > 0, beta_eps >= 0 and dt > 0")


class Couplings(NamedTuple):
    """Node-local couplings ``lower[n] = q[n, n-1]`` and ``upper[n] = q[n, n+1]``."""

    lower: np.ndarray
    upper: np.ndarray
    dx: float


def gaussian_initial(p: WavePacket, g: GridSpec) -> StateVector:
    """Sampled Gaussian amplitudes with probability std ``w0``, unit vector norm."""
    dx = g.dx
    if p.w0 < 2 * dx:
        raise DomainError(f"w0={p.w0} is under-resolved on a grid with dx={dx}")
    outside = norm.cdf((g.x_min - p.center) / p.w0) + norm.sf((g.x_max - p.center) / p.w0)
    if outside >= 1e-8:
        raise DomainError(f"packet mass {outside:.2e} lies outside the grid")
    x = g.points
    f = np.exp(-((x - p.center) ** 2) / (4 * p.w0 ** 2))
    f /= np.sqrt(np.sum(f ** 2))
    return StateVector(f.astype(complex), g)


def q_from_mu_gamma(mu_n, gamma_n, dx) -> Couplings:
    mu_n = np.asarray(mu_n, dtype=float)
    gamma_n = np.asarray(gamma_n, dtype=float)
    if mu_n.shape != gamma_n.shape:
        raise DomainError("mu_n and gamma_n must have the same shape")
    if not dx > 0:
        raise DomainError("dx must be positive")
    kappa = gamma_n / dx ** 2 + 1j * mu_n / (2 * dx)
    return Couplings(kappa, np.conj(kappa), float(dx))


def mu_gamma_from_q(c: Couplings) -> tuple[np.ndarray, np.ndarray]:
    """Invert :func:`q_from_mu_gamma`: returns ``(mu_n, gamma_n)``."""
    mu = (c.dx * (c.lower - c.upper) / 1j).real
    gamma = (c.dx ** 2 / 2 * (c.lower + c.upper)).real
    return mu, gamma


def generator_from_couplings(c: Couplings) -> TridiagonalOperator:
    """Hermitian tridiagonal generator advanced by :func:`master_step`."""
    kappa = np.asarray(c.lower)
    diag = -(c.lower + c.upper).real
    bond = (kappa[:-1] + kappa[1:]) / 2
    return TridiagonalOperator(diag, bond)


def field_generator_bands(mu, gamma, dx):
    """Batched bands of the generator; ``mu``, ``gamma`` have shape (..., N)."""
    kappa = gamma / dx ** 2 + 1j * mu / (2 * dx)
    return -2 * gamma / dx ** 2, (kappa[..., :-1] + kappa[..., 1:]) / 2


class FieldOperatorSource:
    """Callable ``rng -> TridiagonalOperator`` drawing one step of fields."""

    def __init__(self, field: DriftDiffusionField, grid: GridSpec):
        self.field = field
        self.grid = grid

    def __call__(self, rng) -> TridiagonalOperator:
        mu, gamma = self.field.draw(self.grid.n_points, rng)
        return generator_from_couplings(q_from_mu_gamma(mu, gamma, self.grid.dx))


def master_step(f: StateVector, couplings: Couplings, cfg: EvolutionConfig) -> StateVector:
    """Advance the envelope ``f`` by one step under fixed couplings.

    The couplings are already divided by the price constant, so the step
    phase is ``dt / tau`` regardless of ``cfg.price_scale``.
    """
    op = generator_from_couplings(couplings)
    return step_exact(f, op, with_unit_price_scale(cfg))


def edge_probability(prob) -> np.ndarray:
    """Probability held by the outer ``EDGE_NODES`` nodes on each side."""
    prob = np.asarray(prob)
    return prob[..., :EDGE_NODES].sum(axis=-1) + prob[..., -EDGE_NODES:].sum(axis=-1)


def check_boundary(prob, step=None):
    leak = float(np.max(edge_probability(prob)))
    if leak > EDGE_TOL:
        where = "" if step is None else f" at step {step}"
        raise BoundaryLeakageError(
            f"edge probability {leak:.3e} exceeds {EDGE_TOL:g}{where}; widen the grid"
        )


def _bands(field, grid: GridSpec, rng):
    if isinstance(field, LatticeParams):
        op = build_lattice(field, rng)
        return op.diag, op.upper
    mu, gamma = field.draw(grid.n_points, rng)
    return field_generator_bands(mu, gamma, grid.dx)


def evolve_field_batch(psi0: StateVector, grid: GridSpec, field, cfg: EvolutionConfig,
                       rngs, method="auto") -> np.ndarray:
    """Evolve one realization per generator in ``rngs`` from the same start.

    ``field`` is a :class:`DriftDiffusionField`, whose generator is already
    divided by the price constant, or a :class:`LatticeParams` price
    operator, which is stepped with phase ``dt / (price_scale * tau)``.

    Returns amplitudes of shape ``(len(rngs), n_records, n_points)`` at
    ``cfg.record_steps``.  Every realization consumes only its own stream, so
    its result does not depend on which other realizations share the batch.
    Raises :class:`BoundaryLeakageError` once any realization reaches the
    grid edges.
    """
    n = grid.n_points
    if psi0.amplitudes.size != n:
        raise DomainError("initial state does not match the grid")
    if isinstance(field, LatticeParams):
        if field.n_levels != n:
            raise DomainError("lattice n_levels must equal the grid size")
        theta = cfg.step_phase
    else:
        theta = cfg.dt_over_tau
    if method not in ("auto", "eigh", "chebyshev"):
        raise DomainError(f"unknown method {method!r}")
    rngs = list(rngs)
    record = cfg.record_steps
    out = np.empty((len(rngs), record.size, n), dtype=complex)
    amps = np.tile(psi0.amplitudes, (len(rngs), 1))
    out[:, 0] = amps
    diag = np.empty((len(rngs), n))
    bond = np.empty((len(rngs), n - 1), dtype=complex)
    slot = 1
    for step in range(1, cfg.n_steps + 1):
        if step == 1 or cfg.operator_refresh:
            for r, rng in enumerate(rngs):
                diag[r], bond[r] = _bands(field, grid, rng)
        if method == "eigh":
            amps = np.stack([
                evolve_amplitudes(TridiagonalOperator(d, b), a, theta, "eigh")
                for d, b, a in zip(diag, bond, amps)
            ])
        else:
            amps = expi_tridiagonal(diag, bond, theta, amps)
        check_boundary(np.abs(amps) ** 2, step)
        if slot < record.size and record[slot] == step:
            out[:, slot] = amps
            slot += 1
    return out


def distribution_moments(prob, x):
    """Mean and standard deviation of node probabilities along the last axis."""
    prob = np.asarray(prob, dtype=float)
    total = prob.sum(axis=-1, keepdims=True)
    p = prob / total
    mean = (p * x).sum(axis=-1)
    var = (p * (x - mean[..., None]) ** 2).sum(axis=-1)
    return mean, np.sqrt(np.maximum(var, 0.0))


def distribution_width(prob, x):
    return distribution_moments(prob, x)[1]


def single_realization_width(w0, gamma, dt_over_tau):
    """Width of a Gaussian packet after one step of constant diffusion."""
    if not w0 > 0:
        raise DomainError("w0 must be positive")
    return w0 * math.sqrt(1 + (gamma / w0 ** 2) ** 2 * dt_over_tau ** 2)


def ensemble_width(w0, sigma_mu, gamma, t_over_tau, dt_over_tau=1.0):
    """Ensemble width under constant diffusion and per-step random drift.

    The drift term is ``sigma_mu**2 * (t / tau) * (dt / tau) / w0**2``; with
    the customary ``dt = tau`` it reduces to ``sigma_mu**2 t / (w0**2 tau)``.
    """
    if not w0 > 0:
        raise DomainError("w0 must be positive")
    if t_over_tau < 0:
        raise DomainError("t_over_tau must be non-negative")
    drift = sigma_mu ** 2 * t_over_tau * dt_over_tau / w0 ** 2
    diffusion = (gamma / w0 ** 2) ** 2 * t_over_tau ** 2
    return w0 * math.sqrt(1 + drift + diffusion)


def validity_horizon(w0, sigma_mu, gamma, tau):
    """Time up to which the drift term dominates; ``inf`` when ``gamma == 0``."""
    if gamma == 0:
        return math.inf
    return (w0 * sigma_mu / gamma) ** 2 * tau


def one_step_width(w0, beta_eps):
    return w0 * math.sqrt(1 + (beta_eps / w0) ** 2)


def width_law(p: WidthLawParams, t):
    """Spread-curve width at time ``t >= p.dt`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < p.dt):
        raise DomainError("width_law is defined for t >= dt only")
    w = p.w_dt * np.sqrt(1 + (p.beta_eps / p.w_dt) ** 2 * (t_arr / p.dt - 1))
    return float(w) if w.ndim == 0 else w


def traditional_volatility(beta_eps, dt_in_target_units):
    """Volatility per square-root target unit implied by ``beta_eps``."""
    if not dt_in_target_units > 0:
        raise DomainError("dt_in_target_units must be positive")
    return beta_eps * math.sqrt(1 / dt_in_target_units)
