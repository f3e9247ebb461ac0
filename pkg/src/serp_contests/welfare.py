"""Order-statistic expectations, welfare decomposition, and scenario sweeps.

The sweep reproduces the short-/long-term comparison: welfare before the
answer box (W1), with frozen strategies after it appears (W2), after creators
re-equilibrate (W3), and under citation-plus-compensation incentives (W4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data
from .binary import BinaryTypeEquilibrium, solve_binary
from .core import GameConfig, MixedStrategy, ProfitParams, make_binary_game
from .symmetric import SymmetricEquilibrium, solve_symmetric


@dataclass(frozen=True)
class WelfareBreakdown:
    page_term: float
    overview_term: float
    compensation_cost: float
    mu: float
    profit: float


def merged_grid(strategies) -> np.ndarray:
    """Union of strategy grids and atom locations (duplicated for the jump)."""
    pieces = [np.array([0.0])]
    for strat, _ in strategies:
        pieces.append(strat.grid)
        for loc, _ in strat.atoms:
            pieces.append(np.array([loc, loc]))
    xs = np.sort(np.concatenate(pieces))
    return xs


def order_stat_expectations(strategies) -> np.ndarray:
    """E[x_(1)] >= ... >= E[x_(n)] for independent draws from the strategies.

    ``strategies`` is a list of (MixedStrategy, multiplicity).  Uses
    ``E[X] = integral (1 - F) dt`` with the exceedance-count distribution on a
    merged grid; trapezoid cells of zero width carry the atom jumps exactly.
    """
    xs = merged_grid(strategies)
    n = sum(m for _, m in strategies)
    # right value at the left cell edge, left limit at the right cell edge
    F_right = []
    F_left = []
    for strat, mult in strategies:
        fr = strat(xs)
        fl = strat.left_limit(xs)
        for _ in range(mult):
            F_right.append(fr)
            F_left.append(fl)
    F_right = np.vstack(F_right)
    F_left = np.vstack(F_left)

    def order_cdfs(F_matrix):
        pmf = np.zeros((len(xs), n + 1))
        pmf[:, 0] = 1.0
        for j in range(n):
            below = F_matrix[j]
            new = np.zeros((len(xs), j + 2))
            new[:, :-1] = pmf[:, : j + 1] * below[:, None]
            new[:, 1:] += pmf[:, : j + 1] * (1.0 - below)[:, None]
            pmf[:, : j + 2] = new
        # F_(i)(t) = P(at most i-1 exceed t)
        return np.cumsum(pmf, axis=1)[:, :n]

    cdf_right = order_cdfs(F_right)
    cdf_left = order_cdfs(F_left)
    widths = np.diff(xs)
    integrand_lo = 1.0 - cdf_right[:-1]
    integrand_hi = 1.0 - cdf_left[1:]
    return 0.5 * widths @ (integrand_lo + integrand_hi)


def mean_efforts(strategies) -> np.ndarray:
    """Per-creator mean effort (one entry per multiplicity slot)."""
    xs = merged_grid(strategies)
    widths = np.diff(xs)
    out = []
    for strat, mult in strategies:
        fr = strat(xs)[:-1]
        fl = strat.left_limit(xs)[1:]
        e = float(0.5 * widths @ ((1.0 - fr) + (1.0 - fl)))
        out.extend([e] * mult)
    return np.array(out)


def welfare(strategies, p, c, params: ProfitParams, p0: float = 0.0) -> WelfareBreakdown:
    """Assemble the profit breakdown from solved strategies."""
    p = np.asarray(p, dtype=float)
    c = np.zeros(len(p)) if c is None else np.asarray(c, dtype=float)
    order = order_stat_expectations(strategies)
    page = float(order @ p)
    cost = float(order @ c)
    mu = float(np.mean(mean_efforts(strategies)))
    overview = float(params.h(mu) * p0)
    profit = params.alpha * (page + overview) - cost
    return WelfareBreakdown(
        page_term=page, overview_term=overview, compensation_cost=cost, mu=mu, profit=profit
    )


def solve_strategies(cfg: GameConfig, grid_size: int = 2001, allow_max_effort_violation: bool = True):
    """Solve whatever regime the config induces; returns [(strategy, count)]."""
    ts = cfg.type_split
    if ts is not None and ts.is_symmetric:
        eq = solve_symmetric(cfg, grid_size, allow_max_effort_violation=allow_max_effort_violation)
        return [(eq.strategy, cfg.n)], eq
    eq = solve_binary(cfg, grid_size)
    n_H = cfg.type_split.n_H
    return [(eq.F_H, n_H), (eq.F_L, cfg.n - n_H)], eq


def _sweep_cell(args):
    (beta, h_power, alpha, gamma_H, gamma_L, n_H, comp_step, include_w4, grid_size) = args
    from .mechanisms import design_w4_mechanism  # local import避circular at module load

    n = len(data.TYPE_A)
    params = ProfitParams(alpha=alpha, h_power=h_power)
    p_base = data.equal_citation_baseline()
    p0 = data.OVERVIEW_P0

    cfg_a = make_binary_game(list(data.TYPE_A), beta, n_H, gamma_H, gamma_L)
    strat_a, _ = solve_strategies(cfg_a, grid_size)
    bd1 = welfare(strat_a, data.TYPE_A, None, params, p0=0.0)
    w1 = bd1.page_term  # no answer box, no compensation: welfare only

    bd2 = welfare(strat_a, p_base, None, params, p0=p0)
    w2 = bd2.page_term + bd2.overview_term

    cfg_b = make_binary_game(list(p_base), beta, n_H, gamma_H, gamma_L)
    strat_b, _ = solve_strategies(cfg_b, grid_size)
    bd3 = welfare(strat_b, p_base, None, params, p0=p0)
    w3 = bd3.page_term + bd3.overview_term

    if include_w4:
        w4 = design_w4_mechanism(
            beta=beta,
            n_H=n_H,
            gamma_H=gamma_H,
            gamma_L=gamma_L,
            params=params,
            comp_step=comp_step,
        )
        w4 = max(w4, alpha * w3)  # the null mechanism stays feasible
    else:
        w4 = float("nan")

    return {
        "beta": beta,
        "alpha": alpha,
        "h_power": h_power,
        "gamma_L": gamma_L,
        "n_H": n_H,
        "W1": w1,
        "W2": w2,
        "W3": w3,
        "W4": w4,
        "r21": w2 / w1,
        "r31": w3 / w1,
        "r41": w4 / (alpha * w1) if include_w4 else float("nan"),
    }


def scenario_sweep(
    betas,
    h_powers,
    alpha: float = 1.0,
    gamma_H: float = 1.0,
    gamma_L: float = 2.0,
    n_H: int = 7,
    comp_step: float = 0.02,
    include_w4: bool = True,
    grid_size: int = 1201,
    jobs: int = 1,
):
    """Run the short/long-term table over a (beta, h_power) grid."""
    cells = [
        (float(b), float(h), alpha, gamma_H, gamma_L, n_H, comp_step, include_w4, grid_size)
        for b in betas
        for h in h_powers
    ]
    if jobs > 1:
        import multiprocessing as mp

        with mp.Pool(jobs) as pool:
            rows = pool.map(_sweep_cell, cells)
    else:
        rows = [_sweep_cell(c) for c in cells]
    return rows
