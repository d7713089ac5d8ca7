"""Ensemble averages, risk measures and the width-saturation scan.

Risk measures follow the averaging convention of the model: VaR, expected
shortfall and volatility are computed per realization and then averaged,
which is not the same as measuring the averaged distribution.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .continuum import (DriftDiffusionField, GridSpec, WavePacket,
                        distribution_moments, evolve_field_batch, gaussian_initial)
from .errors import DomainError
from .evolution import EvolutionConfig, RealizationPath
from .operator_core import LatticeParams

ALPHA = 0.05
NORM_ATOL = 1e-8
CHUNK = 16
PLATEAU_POINTS = 3
PLATEAU_RTOL = 0.05


@dataclass(frozen=True)
class ModelSetup:
    """Everything needed to evolve one realization.

    ``field`` is a :class:`DriftDiffusionField` or a lattice price operator
    given by :class:`LatticeParams`.
    """

    grid: GridSpec
    packet: WavePacket
    field: DriftDiffusionField | LatticeParams
    evolution: EvolutionConfig

    @property
    def returns(self) -> np.ndarray:
        """Log-returns of the grid nodes relative to the packet centre."""
        return self.grid.points - self.packet.center


@dataclass(frozen=True)
class RiskSeries:
    times: np.ndarray
    volatility: np.ndarray
    var95: np.ndarray
    es95: np.ndarray

    @property
    def ratio_var(self) -> np.ndarray:
        return risk_ratios(self)[0]

    @property
    def ratio_es(self) -> np.ndarray:
        return risk_ratios(self)[1]


@dataclass(frozen=True)
class EnsembleResult:
    """Mean probability surface ``(n_times, n_points)`` and per-member risk."""

    mean_probability: np.ndarray
    times: np.ndarray
    n_realizations: int
    per_realization_risk: tuple
    grid: GridSpec = None
    paths: tuple = ()
    final_contrast: tuple = ()  # speckle contrast of each member at the last time


@dataclass(frozen=True)
class SaturationScan:
    """Final ensemble width against ``1/tau``, in increasing ``1/tau``."""

    tau: np.ndarray
    final_width: np.ndarray
    plateau: float
    onset_index: int

    @property
    def inverse_tau(self) -> np.ndarray:
        return 1.0 / self.tau

    @property
    def onset_tau(self) -> float:
        return float(self.tau[self.onset_index])


def _validated(dist) -> np.ndarray:
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("distribution must be a non-empty 1-D array")
    if np.any(p < 0) or abs(p.sum() - 1.0) > NORM_ATOL:
        raise DomainError(f"distribution is not normalized (sum={p.sum():.12g})")
    return p


def risk_measures(dist, returns, alpha=ALPHA):
    """Volatility, VaR and expected shortfall of a distribution over returns.

    The quantile function interpolates linearly between mid-cell cumulative
    levels ``F_{n-1} + p_n / 2`` of the occupied nodes, which makes it exact
    for point masses and unbiased for smooth densities sampled on a grid.
    Expected shortfall is the mean loss of that quantile function over
    ``(0, alpha)``.  Losses are positive; both measures are clipped at zero.

    Parameters
    ----------
    dist : array_like
        Node probabilities, summing to one within ``1e-8``.
    returns : array_like
        Log-return of every node.

    Returns
    -------
    tuple of float
        ``(volatility, var, es)``.
    """
    p = _validated(dist)
    x = np.asarray(returns, dtype=float)
    if x.shape != p.shape:
        raise DomainError("returns must match the distribution")
    mean = np.dot(p, x)
    vol = math.sqrt(max(np.dot(p, (x - mean) ** 2), 0.0))

    occupied = p > 0
    xs, ps = x[occupied], p[occupied]
    order = np.argsort(xs, kind="stable")
    xs, ps = xs[order], ps[order]
    knots = np.cumsum(ps) - ps / 2
    q_alpha = float(np.interp(alpha, knots, xs))

    # integral of the piecewise-linear quantile over (0, alpha)
    inside = knots < alpha
    g = np.concatenate(([0.0, knots[0]], knots[inside][1:], [alpha]))
    q = np.concatenate(([xs[0], xs[0]], xs[inside][1:], [q_alpha]))
    if knots[0] >= alpha:
        g, q = np.array([0.0, alpha]), np.array([xs[0], xs[0]])
    tail = np.sum((g[1:] - g[:-1]) * (q[1:] + q[:-1]) / 2) / alpha

    var = max(-q_alpha, 0.0)
    es = max(-tail, var)
    return vol, var, es


def risk_ratios(series: RiskSeries):
    """``(var95 / vol, es95 / vol)``; NaN where the volatility vanishes."""
    vol = np.asarray(series.volatility, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rv = np.where(vol > 0, np.asarray(series.var95) / vol, np.nan)
        re = np.where(vol > 0, np.asarray(series.es95) / vol, np.nan)
    return rv, re


def risk_series(prob, returns, times) -> RiskSeries:
    """RiskSeries of a probability surface of shape ``(n_times, n_points)``."""
    prob = np.asarray(prob, dtype=float)
    out = np.array([risk_measures(p / p.sum(), returns) for p in prob]).reshape(-1, 3)
    return RiskSeries(np.asarray(times, dtype=float), out[:, 0], out[:, 1], out[:, 2])


def _mean_risk(series: Sequence[RiskSeries]) -> RiskSeries:
    vol = np.zeros_like(series[0].volatility)
    var = np.zeros_like(vol)
    es = np.zeros_like(vol)
    for s in series:
        vol = vol + s.volatility
        var = var + s.var95
        es = es + s.es95
    n = len(series)
    return RiskSeries(series[0].times, vol / n, var / n, es / n)


def ensemble_average(paths: Sequence[RealizationPath], returns=None) -> EnsembleResult:
    """Average ``|psi|^2`` over realizations in index order.

    When ``returns`` is given, per-realization risk series are attached.
    """
    if len(paths) == 0:
        raise DomainError("ensemble_average needs at least one path")
    first = paths[0]
    for path in paths[1:]:
        if path.states.shape != first.states.shape or not np.array_equal(path.times, first.times):
            raise DomainError("paths do not share grid and recording times")
        if path.grid != first.grid:
            raise DomainError("paths do not share a grid")
    total = np.zeros(first.states.shape)
    risks = []
    for path in paths:
        prob = path.probability
        total += prob
        if returns is not None:
            risks.append(risk_series(prob, returns, path.times))
    mean = total / len(paths)
    return EnsembleResult(mean, np.asarray(first.times), len(paths), tuple(risks),
                          first.grid, tuple(paths))


def ensemble_risk(result: EnsembleResult) -> RiskSeries:
    """Pointwise mean of the per-realization risk series."""
    if result.n_realizations < 1 or not result.per_realization_risk:
        raise DomainError("ensemble has no per-realization risk")
    return _mean_risk(result.per_realization_risk)


def realization_streams(seed, n) -> list:
    """Independent generators, one per realization index.

    ``seed`` is an integer or a :class:`numpy.random.SeedSequence`; a
    sequence is copied first, so repeated calls yield the same streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    else:
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in seed.spawn(n)]


def run_ensemble(setup: ModelSetup, n_realizations: int, seed, threads: int = 1,
                 keep_paths: bool = False, method="auto") -> EnsembleResult:
    """Evolve ``n_realizations`` members and reduce them in index order.

    Members are processed in fixed chunks of ``CHUNK`` whatever the thread
    count, and every member consumes its own spawned stream, so the result
    is bit-identical for any ``threads``.
    """
    if int(n_realizations) != n_realizations or n_realizations < 1:
        raise DomainError("ensemble size must be an integer >= 1")
    if int(threads) != threads or threads < 1:
        raise DomainError("threads must be an integer >= 1")
    psi0 = gaussian_initial(setup.packet, setup.grid)
    cfg = setup.evolution
    times = cfg.dt * cfg.record_steps
    returns = setup.returns
    rngs = realization_streams(seed, n_realizations)
    chunks = [rngs[i:i + CHUNK] for i in range(0, n_realizations, CHUNK)]

    def work(chunk):
        amps = evolve_field_batch(psi0, setup.grid, setup.field, cfg, chunk, method)
        prob = np.abs(amps) ** 2
        risks = [risk_series(p, returns, times) for p in prob]
        contrast = [speckle_contrast(p[-1]) for p in prob]
        return amps if keep_paths else None, prob.sum(axis=0), risks, contrast

    if threads == 1:
        outputs = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(work, chunks))

    total = np.zeros((times.size, setup.grid.n_points))
    risks, paths, contrast = [], [], []
    for i, (amps, chunk_sum, chunk_risk, chunk_contrast) in enumerate(outputs):
        total += chunk_sum
        risks.extend(chunk_risk)
        contrast.extend(chunk_contrast)
        if keep_paths:
            seeds = [c.bit_generator.seed_seq for c in chunks[i]]
            paths.extend(RealizationPath(a, times, setup.grid, s) for a, s in zip(amps, seeds))
    return EnsembleResult(total / n_realizations, times, n_realizations, tuple(risks),
                          setup.grid, tuple(paths), tuple(contrast))


def ensemble_widths(result: EnsembleResult) -> np.ndarray:
    """Width of the mean distribution at every recorded time."""
    return distribution_moments(result.mean_probability, result.grid.points)[1]


def return_probability_track(path: RealizationPath, levels, half_width=None,
                             center=0.0) -> np.ndarray:
    """Probability within ``level +- half_width`` at every recorded time.

    Returns an array of shape ``(n_levels, n_times)``.  ``half_width``
    defaults to two grid steps; levels are log-returns from ``center``.
    """
    grid = path.grid
    if grid is None:
        raise DomainError("path carries no grid")
    x = grid.points - center
    if half_width is None:
        half_width = 2 * grid.dx
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if np.any(levels < x[0]) or np.any(levels > x[-1]):
        raise DomainError("return level lies outside the grid")
    prob = path.probability
    tol = 1e-9 * grid.dx
    out = np.empty((levels.size, prob.shape[0]))
    for i, level in enumerate(levels):
        mask = np.abs(x - level) <= half_width + tol
        out[i] = prob[:, mask].sum(axis=1)
    return out


def speckle_contrast(dist) -> float:
    """Std of ``dist`` minus its centred 5-point moving average, over the peak.

    Only nodes with a full window contribute.
    """
    p = np.asarray(dist, dtype=float)
    if p.size < 5:
        raise DomainError("speckle_contrast needs at least 5 nodes")
    peak = p.max()
    if peak <= 0:
        return 0.0
    smooth = np.convolve(p, np.full(5, 0.2), mode="valid")
    return float(np.std(p[2:-2] - smooth) / peak)


def _plateau(widths):
    level = float(np.mean(widths[-PLATEAU_POINTS:]))
    within = np.abs(widths / level - 1) <= PLATEAU_RTOL
    onset = len(widths) - 1
    while onset > 0 and within[onset - 1]:
        onset -= 1
    return level, onset


def saturation_scan(base: ModelSetup, tau_values, n_realizations: int, seed,
                    threads: int = 1) -> SaturationScan:
    """Final ensemble width for each ``tau`` at the fixed horizon of ``base``.

    Every ``tau`` reuses the same seed, so the scan is a smooth function of
    ``tau`` rather than a collection of independent estimates.  The plateau
    is the mean of the last three points; the onset is the first point, in
    increasing ``1/tau``, from which all widths stay within 5% of it.
    """
    tau = np.asarray(tau_values, dtype=float)
    if tau.size < 3:
        raise DomainError("saturation_scan needs at least 3 tau values")
    if np.any(tau <= 0):
        raise DomainError("tau values must be positive")
    if np.log10(tau.max() / tau.min()) < 2 - 1e-12:
        raise DomainError("tau values must span at least two decades")
    tau = np.sort(tau)[::-1]
    widths = np.empty(tau.size)
    for i, t in enumerate(tau):
        cfg = replace(base.evolution, tau=float(t), stride=base.evolution.n_steps)
        res = run_ensemble(replace(base, evolution=cfg), n_realizations, seed, threads)
        widths[i] = ensemble_widths(res)[-1]
    plateau, onset = _plateau(widths)
    return SaturationScan(tau, widths, plateau, onset)
