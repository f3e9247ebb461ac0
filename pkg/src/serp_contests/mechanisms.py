"""Profit objective, compensation grid search, and citation constructions.

Two evaluation routes coexist: the quantile-integral reformulation (fast, for
symmetric and separated regimes) and the direct route through solved
strategies and order statistics (always available, used for hybrids and as a
cross-check).  Mechanism searches accept raw bias/compensation vectors so the
intermediate candidates do not need to satisfy the public config invariants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import data
from .binary import compute_uH, solve_binary
from .core import (
    GameConfig,
    GameError,
    MonotonicityBroken,
    NonMonotone,
    NonPositiveDelta,
    ProfitParams,
    binomial_mixture,
    make_game,
)
from .symmetric import invert_K, support_and_utility
from .welfare import solve_strategies, welfare

SIMPSON_CELLS = 512


@dataclass(frozen=True)
class CitationDesign:
    q: np.ndarray
    delta_pB: np.ndarray
    induced_p: np.ndarray


@dataclass(frozen=True)
class CompensationVector:
    c: np.ndarray
    structure: str  # Free | FlatHead | TwoLevel


def _simpson_weights(cells: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, cells + 1)
    w = np.ones(cells + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (t[1] - t[0]) / 3.0
    return t, w


_T_NODES, _T_WEIGHTS = _simpson_weights(SIMPSON_CELLS)
# substitute y = t^2: clusters nodes at y = 0 where the quantile map has a
# square-root start, keeping composite Simpson accurate there
_Y_NODES = _T_NODES**2
_Y_FACTORS = 2.0 * _T_NODES * _T_WEIGHTS


def _block_quantile_integrals(p_block, c_block, alpha, gamma, beta, u=None):
    """(integral of M(y, alpha*p-c) * J dy, integral of J dy) for one block."""
    p_block = np.asarray(p_block, dtype=float)
    c_block = np.asarray(c_block, dtype=float)
    q = p_block + c_block
    x_lo, x_hi, u_val = support_and_utility(q, gamma, beta, target_u=u)
    J = invert_K(binomial_mixture(_Y_NODES, q), u_val, gamma, beta, x_lo, x_hi)
    v = alpha * p_block - c_block
    value = float(_Y_FACTORS @ (binomial_mixture(_Y_NODES, v) * J))
    mean_effort = float(_Y_FACTORS @ J)
    return value, mean_effort


def profit_reformulated(p, c, params: ProfitParams, gamma: float, beta: float, p0: float = 0.0) -> float:
    """Symmetric-game profit via the one-dimensional quantile integrals."""
    p = np.asarray(p, dtype=float)
    c = np.zeros(len(p)) if c is None else np.asarray(c, dtype=float)
    n = len(p)
    value, mu = _block_quantile_integrals(p, c, params.alpha, gamma, beta)
    return n * value + params.alpha * float(params.h(mu)) * p0


def profit_separated_reformulated(
    p, c, params: ProfitParams, n_H: int, gamma_H: float, gamma_L: float, beta: float,
    p0: float = 0.0, u_H: float | None = None,
) -> float:
    """Separated binary profit as the sum of two per-type block integrals."""
    p = np.asarray(p, dtype=float)
    c = np.zeros(len(p)) if c is None else np.asarray(c, dtype=float)
    n = len(p)
    n_L = n - n_H
    head_val, head_mu = _block_quantile_integrals(
        p[:n_H], c[:n_H], params.alpha, gamma_H, beta, u=u_H
    )
    tail_val, tail_mu = _block_quantile_integrals(p[n_H:], c[n_H:], params.alpha, gamma_L, beta)
    mu = (n_H * head_mu + n_L * tail_mu) / n
    return n_H * head_val + n_L * tail_val + params.alpha * float(params.h(mu)) * p0


def profit(cfg: GameConfig, params: ProfitParams, grid_size: int = 2001):
    """Full-route profit: solve the induced equilibrium, integrate order statistics."""
    strategies, _ = solve_strategies(cfg, grid_size)
    return welfare(
        strategies, cfg.biases.as_array(), np.array(cfg.compensation), params, p0=cfg.biases.p0
    )


def profit_value(
    p,
    c,
    params: ProfitParams,
    beta: float,
    gammas,
    p0: float = 0.0,
    mode: str = "search",
) -> float:
    """Profit of the (bias, compensation) pair, dispatching on the regime.

    ``gammas`` may be a scalar (symmetric) or the full multiplier vector with
    at most two distinct values.  Candidates whose effective biases are not
    monotone raise ``NonMonotone``.
    """
    p = np.asarray(p, dtype=float)
    c = np.zeros(len(p)) if c is None else np.asarray(c, dtype=float)
    q = p + c
    if np.any(np.diff(q) > 1e-12) or np.any(q <= 0.0):
        raise NonMonotone(int(np.argmax(np.diff(q) > 1e-12)) + 1)
    if np.isscalar(gammas):
        return profit_reformulated(p, c, params, float(gammas), beta, p0)
    gammas = tuple(float(g) for g in gammas)
    if len(set(gammas)) == 1:
        return profit_reformulated(p, c, params, gammas[0], beta, p0)

    cfg = make_game(list(q), beta, gammas)  # solve on effective biases
    n_H = cfg.type_split.n_H
    gamma_H, gamma_L = cfg.type_split.gamma_H, cfg.type_split.gamma_L
    fast = mode == "search"
    u_H, hint = compute_uH(cfg, eps=1e-10, grid_size=801)
    if hint in (0, 1):
        return profit_separated_reformulated(
            p, c, params, n_H, gamma_H, gamma_L, beta, p0, u_H=u_H
        )
    eq = solve_binary(cfg, grid_size=801 if fast else 2001)
    strategies = [(eq.F_H, n_H), (eq.F_L, cfg.n - n_H)]
    return welfare(strategies, p, c, params, p0=p0).profit


def quick_profit(p, params: ProfitParams, beta: float, gammas, p0: float = 0.0) -> float:
    """Cheap ranking surrogate: per-type block integrals at block equilibrium.

    Treats a binary game as strictly separated (exact there, and the blocks
    merge continuously as the multipliers approach each other), so it orders
    citation candidates without any equilibrium solve.
    """
    p = np.asarray(p, dtype=float)
    if np.isscalar(gammas) or len(set(np.atleast_1d(gammas))) == 1:
        g = float(gammas) if np.isscalar(gammas) else float(np.atleast_1d(gammas)[0])
        return profit_reformulated(p, None, params, g, beta, p0)
    gammas = tuple(float(g) for g in gammas)
    cfg = make_game(list(p), beta, gammas)
    ts = cfg.type_split
    return profit_separated_reformulated(
        p, None, params, ts.n_H, ts.gamma_H, ts.gamma_L, beta, p0
    )


def _two_level_vector(n: int, n_H: int, c_H: float, c_L: float) -> np.ndarray:
    c = np.zeros(n)
    c[: n_H - 1] = c_H
    c[n_H - 1 : n - 1] = c_L
    return c


def grid_search_compensation(
    p,
    params: ProfitParams,
    beta: float,
    gammas,
    p0: float = 0.0,
    step: float = 0.02,
    c_n: float = 0.0,
    max_steps: int = 400,
    mode: str = "search",
):
    """Ascending scan of flat-head (symmetric) or two-level (binary) compensation.

    Stops as soon as the objective decreases; the objective is concave along
    each scan direction, so the first decrease is the last word.
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    scalar_gamma = np.isscalar(gammas) or len(set(np.atleast_1d(gammas))) == 1

    if scalar_gamma:
        best_w, best_c = -np.inf, None
        for k in range(max_steps):
            c_star = c_n + k * step
            c = np.full(n, c_star)
            c[-1] = c_n
            try:
                w = profit_value(p, c, params, beta, gammas, p0, mode=mode)
            except (GameError, ValueError):
                if best_c is None:
                    raise
                break
            if w > best_w:
                best_w, best_c = w, c
            else:
                break
        return CompensationVector(c=best_c, structure="FlatHead"), best_w

    gammas = tuple(float(g) for g in gammas)
    cfg = make_game(list(p), beta, gammas)
    n_H = cfg.type_split.n_H
    if n_H <= 1:
        # no separate head segment: single-level scan over the tail block
        best_w, best_c = -np.inf, None
        for k in range(max_steps):
            c = _two_level_vector(n, 1, 0.0, k * step)
            try:
                w = profit_value(p, c, params, beta, gammas, p0, mode=mode)
            except (GameError, ValueError):
                if best_c is None:
                    raise
                break
            if w > best_w:
                best_w, best_c = w, c
            else:
                break
        return CompensationVector(c=best_c, structure="TwoLevel"), best_w

    best_w, best_c = -np.inf, None
    prev_outer = -np.inf
    for i in range(max_steps):
        c_H = i * step
        inner_best, inner_c = -np.inf, None
        for j in range(i + 1):
            c = _two_level_vector(n, n_H, c_H, j * step)
            try:
                w = profit_value(p, c, params, beta, gammas, p0, mode=mode)
            except (GameError, ValueError):
                if best_c is None and inner_c is None:
                    raise
                break
            if w > inner_best:
                inner_best, inner_c = w, c
            else:
                break
        if inner_best > best_w:
            best_w, best_c = inner_best, inner_c
        if inner_best < prev_outer:
            break
        prev_outer = inner_best
    return CompensationVector(c=best_c, structure="TwoLevel"), best_w


def compensation_cn_curve(
    p,
    params: ProfitParams,
    beta: float,
    gammas,
    p0: float = 0.0,
    cn_values=None,
    step: float = 0.005,
):
    """max_c W as a function of the bottom-rank compensation (symmetric only)."""
    cn_values = np.arange(0.0, 0.1 + 1e-12, step) if cn_values is None else np.asarray(cn_values)
    curve = []
    for c_n in cn_values:
        _, w = grid_search_compensation(
            p, params, beta, gammas, p0=p0, step=step, c_n=float(c_n)
        )
        curve.append((float(c_n), w))
    return curve


def ubl(base_p, delta_p) -> CitationDesign:
    """Citation odds equalising the per-rank bias gain over the first n-1 ranks.

    ``base_p`` are the organic biases the gains add onto and ``delta_p`` the
    per-rank gain at unit citation odds; the last rank is never cited.
    """
    base_p = np.asarray(base_p, dtype=float)
    delta = np.asarray(delta_p, dtype=float)
    n = len(base_p)
    if len(delta) not in (n, n - 1):
        raise ValueError("need a bias gain for each of the first n-1 ranks")
    delta = delta[: n - 1]
    if np.any(delta <= 0.0):
        raise NonPositiveDelta("bias gains must be strictly positive")
    if np.any(np.diff(base_p) > 1e-12):
        raise MonotonicityBroken("base biases must be non-increasing")
    s = 1.0 / float(np.sum(1.0 / delta))
    q = np.append(s / delta, 0.0)
    induced = base_p.copy()
    induced[: n - 1] += s
    if np.any(np.diff(induced) > 1e-12):
        raise MonotonicityBroken("induced biases are not monotone")
    return CitationDesign(q=q, delta_pB=delta, induced_p=induced)


def tpbl(base_p, delta_p, n_H: int, ratio: float) -> CitationDesign:
    """Two-segment citation odds with gain levels in a fixed head/tail ratio.

    Ranks below ``n_H`` share one equalised gain, ranks ``n_H``..n-1 share a
    second one ``ratio`` times smaller; ``ratio = inf`` sends everything to
    the head segment.
    """
    base_p = np.asarray(base_p, dtype=float)
    delta = np.asarray(delta_p, dtype=float)
    n = len(base_p)
    delta = delta[: n - 1]
    if np.any(delta <= 0.0):
        raise NonPositiveDelta("bias gains must be strictly positive")
    if not (ratio >= 1.0):
        raise ValueError("segment ratio must be at least 1")
    if n_H < 2:
        return ubl(base_p, delta)
    inv1 = float(np.sum(1.0 / delta[: n_H - 1]))
    inv2 = float(np.sum(1.0 / delta[n_H - 1 :]))
    if math.isinf(ratio):
        s1, s2 = 1.0 / inv1, 0.0
    else:
        s2 = 1.0 / (ratio * inv1 + inv2)
        s1 = ratio * s2
    q = np.concatenate([s1 / delta[: n_H - 1], s2 / delta[n_H - 1 :], [0.0]])
    bad = np.nonzero(q > 1.0 + 1e-12)[0]
    if len(bad):
        raise MonotonicityBroken(f"citation probability exceeds 1 at rank {bad[0] + 1}")
    induced = base_p.copy()
    induced[: n_H - 1] += s1
    induced[n_H - 1 : n - 1] += s2
    if np.any(np.diff(induced) > 1e-12):
        raise MonotonicityBroken("induced biases are not monotone")
    return CitationDesign(q=q, delta_pB=delta, induced_p=induced)


def _monotone_partitions(total_units: int, max_part: int, length: int):
    """Non-increasing integer vectors of ``length`` with the given sum and cap."""

    def rec(remaining, cap, slots):
        if slots == 0:
            if remaining == 0:
                yield ()
            return
        hi = min(cap, remaining)
        lo_needed = 0
        for first in range(hi, lo_needed - 1, -1):
            if first * slots < remaining:
                break
            for rest in rec(remaining - first, first, slots - 1):
                yield (first,) + rest

    yield from rec(total_units, max_part, length)


def candidate_citation_vectors(pC, slot_biases, bias_step: float = 0.1):
    """Feasible bias vectors of the simplified citation set on a step grid.

    The slot budget is quantised into ``bias_step`` units spread over ranks
    (per-rank cap = top slot bias); the sub-step remainder is attached to each
    rank in turn so the budget is conserved exactly.
    """
    pC = np.asarray(pC, dtype=float)
    slots = np.asarray(slot_biases, dtype=float)
    n = len(pC)
    if len(slots) == 0:
        return [pC.copy()]
    total = float(slots.sum())
    cap = float(slots[0])
    units = int(math.floor(total / bias_step + 1e-9))
    rem = total - units * bias_step
    max_part = int(math.floor(cap / bias_step + 1e-9))
    out, seen = [], set()
    for part in _monotone_partitions(units, max_part, n):
        base = np.array(part, dtype=float) * bias_step
        positions = range(n) if rem > 1e-12 else [None]
        for pos in positions:
            delta = base.copy()
            if pos is not None:
                delta[pos] += rem
            if np.any(delta > cap + 1e-9):
                continue
            p = pC + delta
            if np.any(np.diff(p) > 1e-12):
                continue
            key = tuple(np.round(p, 10))
            if key in seen:
                continue
            seen.add(key)
            out.append(p)
    if not out:
        raise MonotonicityBroken("no monotone assignment of the slot budget exists")
    return out


def simplified_optimal_citation(
    pC,
    slot_biases,
    params: ProfitParams,
    beta: float,
    gammas,
    p0: float = 0.0,
    bias_step: float = 0.1,
    comp_step: float = 0.02,
    top_k: int = 25,
):
    """Upper-bound citation design: exhaustive step-grid search with an inner
    compensation optimisation.

    A no-compensation surrogate ranks the candidates first; the full inner
    search runs only on the leaders (the compensation shift preserves the
    ordering well within the grid resolution).
    """
    candidates = candidate_citation_vectors(pC, slot_biases, bias_step)
    scored = []
    for p in candidates:
        try:
            scored.append((quick_profit(p, params, beta, gammas, p0), p))
        except (GameError, ValueError):
            continue
    scored.sort(key=lambda t: -t[0])
    best = (-np.inf, None, None)
    for _, p in scored[: max(top_k, 1)]:
        try:
            comp, w = grid_search_compensation(
                p, params, beta, gammas, p0=p0, step=comp_step
            )
        except (GameError, ValueError):
            continue
        if w > best[0]:
            best = (w, p, comp)
    w, p, comp = best
    return {"p": p, "W": w, "compensation": comp, "n_candidates": len(scored)}


def approximation_ratio(w_mechanism: float, w_baseline: float, w_optimal: float) -> float:
    """Share of the optimal improvement over the baseline captured by a mechanism."""
    denom = w_optimal - w_baseline
    if abs(denom) < 1e-12:
        raise ZeroDivisionError("optimal and baseline objectives coincide")
    return (w_mechanism - w_baseline) / denom


def _monotone_simplex(k: int, c_sum: float, step: float, cap: float = 1.0):
    """Non-increasing vectors of length k summing to c_sum on a step grid."""
    units = int(round(c_sum / step))
    max_part = int(math.floor(cap / step + 1e-9))
    for part in _monotone_partitions(units, max_part, k):
        yield np.array(part, dtype=float) * step


def _majorizes(a, b, tol=1e-12) -> bool:
    ca, cb = np.cumsum(a), np.cumsum(b)
    return bool(np.all(ca >= cb - tol) and abs(ca[-1] - cb[-1]) <= tol)


def majorization_probe(
    p,
    params: ProfitParams,
    beta: float,
    gammas,
    group: str = "head",
    c_sum: float = 0.6,
    step: float = 0.05,
    p0: float = 0.0,
    objective=None,
    tol: float = 1e-9,
):
    """Check that spreading compensation unevenly never helps on a budget slice.

    Enumerates the step-grid compensation vectors of the chosen group (other
    group held at zero; fold large head payments into ``p`` beforehand when
    testing the tail), evaluates the objective, and reports every
    majorization-ordered pair whose values are out of order.
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    gammas = tuple(float(g) for g in np.atleast_1d(gammas)) if not np.isscalar(gammas) else gammas
    cfg = make_game(list(p), beta, gammas if not np.isscalar(gammas) else [gammas] * n)
    n_H = cfg.type_split.n_H if cfg.type_split else n
    if group == "head":
        k, offset = n_H - 1, 0
    elif group == "tail":
        k, offset = n - 1 - n_H, n_H
    else:
        raise ValueError("group must be 'head' or 'tail'")
    if k < 2:
        raise ValueError("need at least two compensation slots to probe")

    if objective is None:

        def objective(c_group):
            c = np.zeros(n)
            c[offset : offset + k] = c_group
            return profit_value(p, c, params, beta, gammas, p0, mode="search")

    evaluated = []
    for v in _monotone_simplex(k, c_sum, step):
        try:
            evaluated.append((v, float(objective(v))))
        except (NonMonotone, ValueError):
            continue
    violations = []
    for (va, wa), (vb, wb) in itertools.combinations(evaluated, 2):
        if _majorizes(va, vb) and wa > wb + tol:
            violations.append({"spread": va, "even": vb, "W_spread": wa, "W_even": wb})
        elif _majorizes(vb, va) and wb > wa + tol:
            violations.append({"spread": vb, "even": va, "W_spread": wb, "W_even": wa})
    return {
        "holds": not violations,
        "violations": violations,
        "evaluated": evaluated,
    }


def paper_ubl() -> CitationDesign:
    """Equal citation odds over the first n-1 ranks, bundled-table numbers."""
    return ubl(data.TYPE_C, data.citation_gain_budget())


def paper_tpbl(n_H: int, ratio: float | None = None) -> CitationDesign:
    """Two-segment citation odds on the bundled tables.

    When ``ratio`` is omitted it defaults to the head/tail mean-bias ratio,
    the level at which the matching compensation split would sit under
    proportional blocks.
    """
    if ratio is None:
        ratio = data.head_tail_ratio(data.TYPE_C, n_H)
    return tpbl(data.TYPE_C, data.citation_gain_budget(), n_H, ratio)


def design_w4_mechanism(
    beta: float,
    n_H: int,
    gamma_H: float,
    gamma_L: float,
    params: ProfitParams,
    comp_step: float = 0.02,
    ratio: float | None = None,
) -> float:
    """Citation (segment-equalised) plus optimised compensation on the bundled tables."""
    n = len(data.TYPE_C)
    if n_H >= n or gamma_H == gamma_L:
        design = paper_ubl()
        gammas = gamma_H
    else:
        design = paper_tpbl(n_H, ratio)
        gammas = [gamma_H] * n_H + [gamma_L] * (n - n_H)
    _, w = grid_search_compensation(
        design.induced_p, params, beta, gammas, p0=data.OVERVIEW_P0, step=comp_step
    )
    return w
