"""Unique symmetric mixed equilibrium and the K/J quantile machinery.

``K(x) = (u + gamma*x**beta) / x`` is strictly increasing on the equilibrium
support; its inverse ``J`` maps a quantile ``y`` (through the binomial rank
mixture) back to an effort level.  Mechanism evaluation reuses both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    GameConfig,
    MaxEffortViolation,
    MixedStrategy,
    StrictDecreaseRequired,
    binomial_mixture,
    largest_root_of_reward,
    linear_reward_value,
    stationary_effort,
)

DEFAULT_GRID = 2001
FIRST_CELL_FRACTION = 1e-5


@dataclass(frozen=True)
class SymmetricEquilibrium:
    u: float
    x_lo: float
    x_hi: float
    strategy: MixedStrategy
    gamma: float
    effective_p: np.ndarray


def K_of(x, u: float, gamma: float, beta: float):
    """(u + gamma*x**beta) / x; increasing on the support, minimised at x_lo."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("K is undefined at x = 0")
    out = (u + gamma * x**beta) / x
    return out if out.shape else float(out)


def invert_K(target, u: float, gamma: float, beta: float, x_lo: float, x_hi: float):
    """Solve ``K(x) = target`` on [x_lo, x_hi] by vectorised bisection."""
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, x_lo)
    hi = np.full(target.shape, x_hi)
    k_lo = K_of(np.maximum(lo, 1e-300), u, gamma, beta)
    k_hi = K_of(hi, u, gamma, beta)
    if np.any(target < k_lo - 1e-9) or np.any(target > k_hi + 1e-9):
        raise ValueError("K inversion target outside bracket; inconsistent u")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        high = K_of(mid, u, gamma, beta) > target
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
        if np.max(hi - lo) < 1e-14 * max(1.0, x_hi):
            break
    out = 0.5 * (lo + hi)
    return out if out.shape else float(out)


def J_of(y, q, u: float, gamma: float, beta: float) -> np.ndarray | float:
    """Effort at quantile ``y``: the x with ``K(x)`` equal to the rank mixture of ``q``."""
    q = np.asarray(q, dtype=float)
    x_lo = largest_root_of_reward(float(q[-1]), gamma, beta, u)
    x_hi = largest_root_of_reward(float(q[0]), gamma, beta, u)
    return invert_K(binomial_mixture(y, q), u, gamma, beta, x_lo, x_hi)


def support_and_utility(q, gamma: float, beta: float, target_u: float | None = None):
    """Support endpoints for effective biases ``q``.

    Without ``target_u`` this is the equilibrium case: ``x_lo`` maximises the
    bottom-rank reward and ``u`` is its value.  With ``target_u`` (pseudo
    strategies) both endpoints are the largest roots of the respective
    rank-reward equations.
    """
    q = np.asarray(q, dtype=float)
    if target_u is None:
        x_lo = stationary_effort(float(q[-1]), gamma, beta)
        u = x_lo * q[-1] - gamma * x_lo**beta
    else:
        u = float(target_u)
        x_lo = largest_root_of_reward(float(q[-1]), gamma, beta, u)
    x_hi = largest_root_of_reward(float(q[0]), gamma, beta, u)
    return x_lo, x_hi, u


def geometric_grid(x_lo: float, x_hi: float, size: int = DEFAULT_GRID) -> np.ndarray:
    """Grid on [x_lo, x_hi] with cells in geometric progression.

    The ratio is chosen so the first cell is at most ``FIRST_CELL_FRACTION``
    of the interval; the equilibrium density vanishes at ``x_lo`` and needs
    the extra resolution there.
    """
    if x_hi <= x_lo:
        return np.array([x_lo, x_hi])
    m = size - 1

    def first_cell(r):
        if m * np.log(r) > 500.0:
            return 0.0
        return (r - 1.0) / (r**m - 1.0)

    lo, hi = 1.0 + 1e-9, 1.5
    while first_cell(hi) > FIRST_CELL_FRACTION:
        hi *= 1.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if first_cell(mid) > FIRST_CELL_FRACTION:
            lo = mid
        else:
            hi = mid
    r = hi
    steps = r ** np.arange(m)
    grid = np.concatenate([[0.0], np.cumsum(steps)])
    grid = grid / grid[-1]
    return x_lo + (x_hi - x_lo) * grid


def solve_cdf_on_grid(grid, q, u: float, gamma: float, beta: float) -> np.ndarray:
    """Pointwise solve of the indifference condition for F on a fixed grid.

    The rank mixture is strictly increasing in F, so each point is a monotone
    scalar root find; all points run together in a vectorised bisection.
    """
    q = np.asarray(q, dtype=float)
    target = K_of(grid, u, gamma, beta)
    lo = np.zeros(len(grid))
    hi = np.ones(len(grid))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        high = binomial_mixture(mid, q) > target
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    F = 0.5 * (lo + hi)
    F[0] = 0.0 if abs(target[0] - q[-1]) < 1e-9 else F[0]
    F[-1] = 1.0 if abs(target[-1] - q[0]) < 1e-9 else F[-1]
    return np.clip(F, 0.0, 1.0)


def solve_symmetric(
    cfg: GameConfig,
    grid_size: int = DEFAULT_GRID,
    allow_max_effort_violation: bool = False,
) -> SymmetricEquilibrium:
    """Solve the unique symmetric mixed equilibrium of a common-cost game."""
    gammas = set(cfg.cost.gammas)
    if len(gammas) != 1:
        raise StrictDecreaseRequired("symmetric solver needs a common cost multiplier")
    gamma = gammas.pop()
    q = cfg.effective_biases()
    if np.any(np.diff(q) > -1e-12):
        raise StrictDecreaseRequired(
            "effective biases must strictly decrease; ties void uniqueness"
        )
    beta = cfg.cost.beta
    x_lo, x_hi, u = support_and_utility(q, gamma, beta)
    if not allow_max_effort_violation and q[0] - gamma >= -1e-12:
        # max-effort utility q1 - gamma*g(1) must stay negative
        raise MaxEffortViolation(
            f"top effective bias {q[0]:.4f} >= gamma {gamma:.4f}: support would hit 1"
        )
    grid = geometric_grid(x_lo, x_hi, grid_size)
    F = solve_cdf_on_grid(grid, q, u, gamma, beta)
    strat = MixedStrategy(grid=grid, cdf=F, atoms=(), support=(x_lo, x_hi))
    return SymmetricEquilibrium(
        u=u, x_lo=x_lo, x_hi=x_hi, strategy=strat, gamma=gamma, effective_p=q
    )


def closed_form_two_player(cfg: GameConfig, grid_size: int = DEFAULT_GRID) -> SymmetricEquilibrium:
    """Analytic two-creator equilibrium, used as an oracle for the numeric path."""
    if cfg.n != 2:
        raise ValueError("closed form only covers two creators")
    gammas = set(cfg.cost.gammas)
    if len(gammas) != 1:
        raise StrictDecreaseRequired("closed form needs a common cost multiplier")
    gamma = gammas.pop()
    q = cfg.effective_biases()
    if q[0] - q[1] <= 1e-12:
        raise StrictDecreaseRequired("tied biases")
    beta = cfg.cost.beta
    x_lo, x_hi, u = support_and_utility(q, gamma, beta)
    if q[0] - gamma >= -1e-12:
        raise MaxEffortViolation("support would hit 1")
    grid = geometric_grid(x_lo, x_hi, grid_size)
    F = (u + gamma * grid**beta) / (grid * (q[0] - q[1])) - q[1] / (q[0] - q[1])
    F[0], F[-1] = 0.0, 1.0
    strat = MixedStrategy(grid=grid, cdf=np.clip(F, 0.0, 1.0), atoms=(), support=(x_lo, x_hi))
    return SymmetricEquilibrium(
        u=u, x_lo=x_lo, x_hi=x_hi, strategy=strat, gamma=gamma, effective_p=q
    )
