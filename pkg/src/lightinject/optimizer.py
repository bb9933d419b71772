"""Choice of signal/decoy intensities maximizing the no-attack key rate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams
from .core import DomainError, IntensitySet
from .decoy import grid_rate

__all__ = ["OptimizationConfig", "OptimizationResult", "optimize_intensities"]


@dataclass(frozen=True)
class OptimizationConfig:
    mu_range: tuple[float, float] = (0.05, 1.0)
    nu1_range: tuple[float, float] = (0.005, 0.5)
    coarse_grid: int = 64
    refine_iterations: int = 4
    refine_shrink: float = 0.25

    def __post_init__(self) -> None:
        for name in ("mu_range", "nu1_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise DomainError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.coarse_grid < 1:
            raise DomainError("coarse_grid must be >= 1")
        if self.refine_iterations < 0:
            raise DomainError("refine_iterations must be >= 0")
        if not 0 < self.refine_shrink < 1:
            raise DomainError("refine_shrink must lie in (0, 1)")


@dataclass(frozen=True)
class OptimizationResult:
    """Best intensities found and the key rate they give.

    ``intensities`` is always the argmax, even when no feasible point yields
    a positive rate; check :attr:`no_positive_rate` before using it.
    """

    intensities: IntensitySet
    rate: float
    coarse_best: float

    @property
    def no_positive_rate(self) -> bool:
        return not self.rate > 0


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.array([lo]) if n == 1 or lo == hi else np.linspace(lo, hi, n)


def _best_on_grid(mus: np.ndarray, nus: np.ndarray, ch: ChannelParams):
    m, n = np.meshgrid(mus, nus, indexing="ij")
    feasible = n < m
    if not feasible.any():
        return None
    # dummy decoy for infeasible cells keeps the bound kernel's domain check quiet
    n_safe = np.where(feasible, n, 0.5 * m)
    rates = np.where(feasible, grid_rate(m, n_safe, ch), -np.inf)
    # argmax returns the first hit in C order: lowest mu, then lowest nu1
    i, j = np.unravel_index(np.argmax(rates), rates.shape)
    return float(rates[i, j]), float(mus[i]), float(nus[j])


def _better(cand, inc) -> bool:
    if inc is None:
        return True
    if cand[0] != inc[0]:
        return cand[0] > inc[0]
    return (cand[1], cand[2]) < (inc[1], inc[2])


def optimize_intensities(ch: ChannelParams, cfg: OptimizationConfig = OptimizationConfig()) -> OptimizationResult:
    """Coarse grid search over ``(mu_s, nu_1)`` with ``nu_2 = 0``, then local refinement.

    Each refinement round centres a grid of ``cfg.coarse_grid`` points per
    axis on the incumbent, with the window shrunk by ``cfg.refine_shrink``
    and clipped to the configured ranges.
    """
    (mlo, mhi), (nlo, nhi) = cfg.mu_range, cfg.nu1_range
    best = _best_on_grid(_axis(mlo, mhi, cfg.coarse_grid), _axis(nlo, nhi, cfg.coarse_grid), ch)
    if best is None:
        raise DomainError("no feasible (mu_s, nu_1) pair with nu_1 < mu_s in the configured ranges")
    coarse_best = best[0]
    wm, wn = mhi - mlo, nhi - nlo
    for _ in range(cfg.refine_iterations):
        wm *= cfg.refine_shrink
        wn *= cfg.refine_shrink
        _, m0, n0 = best
        mus = _axis(max(mlo, m0 - wm / 2), min(mhi, m0 + wm / 2), cfg.coarse_grid)
        nus = _axis(max(nlo, n0 - wn / 2), min(nhi, n0 + wn / 2), cfg.coarse_grid)
        cand = _best_on_grid(mus, nus, ch)
        if cand is not None and _better(cand, best):
            best = cand
    rate, mu, nu1 = best
    return OptimizationResult(IntensitySet(mu, nu1, 0.0), rate, coarse_best)
