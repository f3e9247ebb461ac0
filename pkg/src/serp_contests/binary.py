"""Binary-cost-type equilibria, pure-profile analysis, and the deviation oracle.

The solver follows the bisection-on-utility scheme for the low-cost type's
equilibrium payoff, then assembles the strategy pair segment by segment:
separated regimes reuse the symmetric machinery per block, hybrid regimes add
a coupled two-unknown indifference solve on the overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GameConfig,
    MixedStrategy,
    StrictDecreaseRequired,
    ValidationFailed,
    binomial_mixture,
    largest_root_of_reward,
    linear_reward_value,
    stationary_effort,
    two_group_rank_bias,
)
from .symmetric import (
    SymmetricEquilibrium,
    geometric_grid,
    solve_cdf_on_grid,
    solve_symmetric,
    support_and_utility,
)

REGIME_PURE = "PureNE"
REGIME_SEP_STRICT = "SeparatedStrict"
REGIME_SEP_TOUCH = "SeparatedTouching"
REGIME_HYB1 = "HybridCase1"
REGIME_HYB2 = "HybridCase2"

MONO_SLACK = 1e-9
INDIFF_TOL = 1e-6


@dataclass(frozen=True)
class PseudoStrategy:
    """Low-cost-type strategy that would deliver utility ``u`` absent the other type."""

    u: float
    strategy: MixedStrategy
    n_H: int
    gamma_H: float
    head_biases: np.ndarray

    @property
    def x_lo(self) -> float:
        return self.strategy.support[0]

    @property
    def x_hi(self) -> float:
        return self.strategy.support[1]


@dataclass(frozen=True)
class PureProfile:
    efforts: tuple[float, ...]
    utilities: tuple[float, ...]


@dataclass(frozen=True)
class BinaryTypeEquilibrium:
    u_H: float
    u_L: float
    F_H: MixedStrategy
    F_L: MixedStrategy
    regime: str
    breakpoints: dict = field(default_factory=dict)


def _split(cfg: GameConfig):
    ts = cfg.type_split
    if ts is None:
        raise ValueError("config has more than two distinct cost multipliers")
    if ts.gamma_H >= ts.gamma_L:
        raise ValueError("binary solver needs gamma_H < gamma_L; use the symmetric solver")
    return ts


def pseudo_strategy(u: float, cfg: GameConfig, grid_size: int = 2001) -> PseudoStrategy:
    """Solve the head-type indifference CDF at target utility ``u``."""
    ts = _split(cfg)
    q = cfg.effective_biases()
    qh = q[: ts.n_H]
    beta = cfg.cost.beta
    u_max = linear_reward_value(float(qh[-1]), ts.gamma_H, beta)
    if not 0.0 < u <= u_max + 1e-12:
        raise ValueError(f"target utility {u} outside (0, {u_max}]")
    u = min(u, u_max)
    if ts.n_H == 1:
        x = largest_root_of_reward(float(qh[0]), ts.gamma_H, beta, u)
        return PseudoStrategy(
            u=u,
            strategy=MixedStrategy.point_mass(x),
            n_H=1,
            gamma_H=ts.gamma_H,
            head_biases=qh.copy(),
        )
    if np.any(np.diff(qh) > -1e-12):
        raise StrictDecreaseRequired("head biases must strictly decrease")
    x_lo, x_hi, _ = support_and_utility(qh, ts.gamma_H, beta, target_u=u)
    grid = geometric_grid(x_lo, x_hi, grid_size)
    F = solve_cdf_on_grid(grid, qh, u, ts.gamma_H, beta)
    strat = MixedStrategy(grid=grid, cdf=F, atoms=(), support=(x_lo, x_hi))
    return PseudoStrategy(u=u, strategy=strat, n_H=ts.n_H, gamma_H=ts.gamma_H, head_biases=qh.copy())


def deviation_curve_L(ps: PseudoStrategy, cfg: GameConfig, xs=None):
    """Utility a tail-type creator would earn playing ``x`` against the pseudo strategy."""
    ts = _split(cfg)
    q = cfg.effective_biases()
    q_head1 = q[: ts.n_H + 1]
    if xs is None:
        xs = ps.strategy.grid
    xs = np.asarray(xs, dtype=float)
    F = ps.strategy(xs)
    mix = binomial_mixture(F, q_head1)
    return xs * mix - ts.gamma_L * xs ** cfg.cost.beta


def best_deviation_L(ps: PseudoStrategy, cfg: GameConfig) -> tuple[float, float, bool]:
    """Max tail-type deviation utility over the pseudo support.

    Returns (value, argmax effort, attained-at-lower-endpoint flag); dense grid
    scan with golden-section refinement on the bracketing cells.
    """
    xs = ps.strategy.grid
    vals = deviation_curve_L(ps, cfg, xs)
    k = int(np.argmax(vals))
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, len(xs) - 1)]
    x_best, v_best = _golden_max(lambda x: float(deviation_curve_L(ps, cfg, np.array([x]))[0]), lo, hi)
    if vals[k] > v_best:
        x_best, v_best = float(xs[k]), float(vals[k])
    at_lo = (x_best - xs[0]) <= 1e-9 * max(1.0, xs[-1] - xs[0]) or (
        k == 0 and v_best <= vals[0] + 1e-12
    )
    return v_best, x_best, bool(at_lo)


def _golden_max(f, lo: float, hi: float, iters: int = 60):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
        if b - a < 1e-13 * max(1.0, hi):
            break
    x = 0.5 * (a + b)
    return x, f(x)


def compute_uH(
    cfg: GameConfig,
    eps: float = 1e-10,
    grid_size: int = 801,
    max_iter: int = 200,
    bracket: tuple[float, float] | None = None,
):
    """Equilibrium utility of the low-cost type plus a regime hint (0/1/2).

    Hint 0: strictly separated; 1: supports touch; 2: overlapping (hybrid).
    The utility solves ``best tail deviation against the pseudo strategy =
    tail equilibrium utility`` by bisection; the deviation value is strictly
    increasing in the trial utility.
    """
    ts = _split(cfg)
    q = cfg.effective_biases()
    beta = cfg.cost.beta
    x_lo_L = stationary_effort(float(q[-1]), ts.gamma_L, beta)
    u_L = x_lo_L * q[-1] - ts.gamma_L * x_lo_L**beta

    if ts.n_H == 1:
        x_H = stationary_effort(float(q[0]), ts.gamma_H, beta)
        u_sep = x_H * q[0] - ts.gamma_H * x_H**beta
        u_dev = x_H * q[0] - ts.gamma_L * x_H**beta
        x_bar_L = largest_root_of_reward(float(q[1]), ts.gamma_L, beta, u_L)
        if x_bar_L <= x_H + 1e-12 and u_dev <= u_L + 1e-12:
            return u_sep, 0
        x_bar = largest_root_of_reward(float(q[0]), ts.gamma_L, beta, u_L)
        return x_bar * q[0] - ts.gamma_H * x_bar**beta, 2

    u_hi = linear_reward_value(float(q[ts.n_H - 1]), ts.gamma_H, beta)
    u_lo = x_lo_L * q[-1] - ts.gamma_H * x_lo_L**beta
    if bracket is not None:
        u_lo, u_hi = bracket
    val_hi, _, at_lo_hi = best_deviation_L(pseudo_strategy(u_hi, cfg, grid_size), cfg)
    if val_hi < u_L - 1e-15:
        return u_hi, 0
    if abs(val_hi - u_L) <= eps:
        return u_hi, (1 if at_lo_hi else 2)

    lo, hi = u_lo, u_hi
    u_mid, at_lo = 0.5 * (lo + hi), False
    for _ in range(max_iter):
        u_mid = 0.5 * (lo + hi)
        val, _, at_lo = best_deviation_L(pseudo_strategy(u_mid, cfg, grid_size), cfg)
        if abs(val - u_L) <= eps or (hi - lo) < 1e-15 * max(1.0, u_hi):
            return u_mid, (1 if at_lo else 2)
        if val < u_L:
            lo = u_mid
        else:
            hi = u_mid
    raise ValidationFailed(
        f"utility bisection did not converge in {max_iter} iterations",
        {"last_u": u_mid, "bracket": (lo, hi)},
    )


def _solve_block_cdf(xs, q_block, u, gamma, beta):
    """Pointwise CDF of a one-type block game on a fixed grid."""
    return solve_cdf_on_grid(np.asarray(xs, dtype=float), q_block, u, gamma, beta)


def _block_cdf_at(x: float, q_block, u, gamma, beta) -> float:
    """Exact block CDF value at a single effort (no grid interpolation)."""
    return float(_solve_block_cdf(np.array([x, x]), q_block, u, gamma, beta)[0])


def _head_bias(F_H, F_L, n_H, n_L, q):
    """Expected bias for a head-type creator (n_H - 1 head + n_L tail opponents)."""
    return two_group_rank_bias(F_H, F_L, n_H - 1, n_L, q)


def _tail_bias(F_H, F_L, n_H, n_L, q):
    """Expected bias for a tail-type creator (n_H head + n_L - 1 tail opponents)."""
    return two_group_rank_bias(F_H, F_L, n_H, n_L - 1, q)


def _solve_head_given_tail(xs, F_L, q, n_H, n_L, gamma_H, beta, u_H, lo=None):
    """Invert the head indifference for F_H at each x, tail CDF frozen per point."""
    xs = np.asarray(xs, dtype=float)
    F_L = np.broadcast_to(np.asarray(F_L, dtype=float), xs.shape)
    target = (u_H + gamma_H * xs**beta) / xs
    lo = np.zeros(len(xs)) if lo is None else np.asarray(lo, dtype=float).copy()
    hi = np.ones(len(xs))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        high = _head_bias(mid, F_L, n_H, n_L, q) > target
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    return 0.5 * (lo + hi)


def _coupled_newton(xs, q, n_H, n_L, gamma_H, gamma_L, beta, u_H, u_L, start, max_iter=120):
    """Solve the two-type indifference system pointwise over ``xs``.

    The unknown pair (F_H, F_L) at each grid point is independent of the
    others, so Newton steps run vectorised across the whole segment; a short
    warm-started sweep on a coarse subset seeds the iteration.
    """
    xs = np.asarray(xs, dtype=float)
    gx_H = gamma_H * xs**beta
    gx_L = gamma_L * xs**beta

    def residuals(FH, FL):
        RH = xs * _head_bias(FH, FL, n_H, n_L, q) - gx_H - u_H
        RL = xs * _tail_bias(FH, FL, n_H, n_L, q) - gx_L - u_L
        return RH, RL

    FH0, FL0 = start
    t = (xs - xs[0]) / max(xs[-1] - xs[0], 1e-300)
    FH = FH0 + (1.0 - FH0) * t
    FL = FL0 + (1.0 - FL0) * t
    delta = 1e-7
    for _ in range(max_iter):
        RH, RL = residuals(FH, FL)
        scale = max(1.0, abs(u_H), abs(u_L))
        if max(np.max(np.abs(RH)), np.max(np.abs(RL))) < 1e-13 * scale:
            break
        dWH_dFH = (
            _head_bias(np.minimum(FH + delta, 1.0), FL, n_H, n_L, q)
            - _head_bias(np.maximum(FH - delta, 0.0), FL, n_H, n_L, q)
        ) / (np.minimum(FH + delta, 1.0) - np.maximum(FH - delta, 0.0))
        dWH_dFL = (
            _head_bias(FH, np.minimum(FL + delta, 1.0), n_H, n_L, q)
            - _head_bias(FH, np.maximum(FL - delta, 0.0), n_H, n_L, q)
        ) / (np.minimum(FL + delta, 1.0) - np.maximum(FL - delta, 0.0))
        dWL_dFH = (
            _tail_bias(np.minimum(FH + delta, 1.0), FL, n_H, n_L, q)
            - _tail_bias(np.maximum(FH - delta, 0.0), FL, n_H, n_L, q)
        ) / (np.minimum(FH + delta, 1.0) - np.maximum(FH - delta, 0.0))
        dWL_dFL = (
            _tail_bias(FH, np.minimum(FL + delta, 1.0), n_H, n_L, q)
            - _tail_bias(FH, np.maximum(FL - delta, 0.0), n_H, n_L, q)
        ) / (np.minimum(FL + delta, 1.0) - np.maximum(FL - delta, 0.0))
        J11 = xs * dWH_dFH
        J12 = xs * dWH_dFL
        J21 = xs * dWL_dFH
        J22 = xs * dWL_dFL
        det = J11 * J22 - J12 * J21
        det = np.where(np.abs(det) < 1e-300, np.sign(det) * 1e-300 + 1e-300, det)
        dFH = (RH * J22 - RL * J12) / det
        dFL = (RL * J11 - RH * J21) / det
        step = np.maximum(np.abs(dFH), np.abs(dFL))
        damp = np.where(step > 0.25, 0.25 / np.maximum(step, 1e-300), 1.0)
        FH = np.clip(FH - damp * dFH, 0.0, 1.0)
        FL = np.clip(FL - damp * dFL, 0.0, 1.0)
    RH, RL = residuals(FH, FL)
    resid = max(np.max(np.abs(RH)), np.max(np.abs(RL)))
    return FH, FL, resid


def _find_x_star(xs, F_H_vals, mu_L, q, n_H, n_L, gamma_H, gamma_L, beta, u_H, u_L):
    """First effort after the entry point where the tail deviation returns to u_L."""
    psi = xs * _tail_bias(F_H_vals, np.full(len(xs), mu_L), n_H, n_L, q) - gamma_L * xs ** beta - u_L
    dipped = psi[0] < -1e-8
    hit = None
    for i in range(1, len(xs)):
        if not dipped:
            if psi[i] < -1e-8:
                dipped = True
            elif psi[i] > 1e-8:
                return xs[0], 0  # tail active immediately
        elif psi[i] >= -1e-8:
            hit = i
            break
    if not dipped:
        return xs[0], 0
    if hit is None:
        return None, None

    def psi_at(x):
        fh = _solve_head_given_tail(np.array([x]), mu_L, q, n_H, n_L, gamma_H, beta, u_H)[0]
        return x * _tail_bias(fh, mu_L, n_H, n_L, q) - gamma_L * x**beta - u_L

    lo, hi = xs[hit - 1], xs[hit]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if psi_at(mid) < -1e-8:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hit


def _mixture_level_for_value(u: float, gamma: float, beta: float) -> float:
    """Bias level q with ``max_x x*q - gamma*x**beta = u`` (closed form)."""
    return (u * beta / (beta - 1.0)) ** ((beta - 1.0) / beta) * (gamma * beta) ** (1.0 / beta)


def _invert_head_entry_mass(mix_star, q, n_H, n_L):
    """Tail mass m with head entry bias ``W_H(0, m) = mix_star``."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _head_bias(0.0, mid, n_H, n_L, q) > mix_star:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _segment_grid(x0, x1, density, min_pts=41):
    pts = max(min_pts, int(density * (x1 - x0)) + 1)
    return np.linspace(x0, x1, pts)


def _concat_strategy(pieces, atoms=()):
    """Stitch (grid, cdf) segments into one strategy, deduplicating joins."""
    grids, cdfs = [], []
    for g, f in pieces:
        if len(grids) and abs(g[0] - grids[-1][-1]) < 1e-14 and abs(f[0] - cdfs[-1][-1]) < 1e-12:
            g, f = g[1:], f[1:]
        grids.append(np.asarray(g, dtype=float))
        cdfs.append(np.asarray(f, dtype=float))
    grid = np.concatenate(grids)
    cdf = np.maximum.accumulate(np.clip(np.concatenate(cdfs), 0.0, 1.0))
    return MixedStrategy(
        grid=grid, cdf=cdf, atoms=tuple(atoms), support=(float(grid[0]), float(grid[-1]))
    )


def solve_binary(cfg: GameConfig, grid_size: int = 2001, eps: float = 1e-10) -> BinaryTypeEquilibrium:
    """Compute the binary-type equilibrium (separated, hybrid, or pure)."""
    ts = _split(cfg)
    q = cfg.effective_biases()
    beta = cfg.cost.beta
    n_H, n_L = ts.n_H, cfg.n - ts.n_H
    gH, gL = ts.gamma_H, ts.gamma_L
    x_lo_L = stationary_effort(float(q[-1]), gL, beta)
    u_L = x_lo_L * q[-1] - gL * x_lo_L**beta

    if n_H == 1 and n_L == 1:
        return _solve_two_player(cfg, q, beta, gH, gL, x_lo_L, u_L, grid_size)

    u_H, hint = compute_uH(cfg, eps=eps)

    if hint in (0, 1):
        ps = pseudo_strategy(u_H, cfg, grid_size)
        if n_L == 1:
            F_L = MixedStrategy.point_mass(x_lo_L)
            x_bar_L = x_lo_L
        else:
            qt = q[n_H:]
            if np.any(np.diff(qt) > -1e-12):
                raise StrictDecreaseRequired("tail biases must strictly decrease")
            x_bar_L = largest_root_of_reward(float(qt[0]), gL, beta, u_L)
            grid = geometric_grid(x_lo_L, x_bar_L, grid_size)
            F = _solve_block_cdf(grid, qt, u_L, gL, beta)
            F_L = MixedStrategy(grid=grid, cdf=F, atoms=(), support=(x_lo_L, x_bar_L))
        regime = REGIME_SEP_STRICT if hint == 0 else REGIME_SEP_TOUCH
        return BinaryTypeEquilibrium(
            u_H=u_H,
            u_L=u_L,
            F_H=ps.strategy,
            F_L=F_L,
            regime=regime,
            breakpoints={
                "x_lo_L": x_lo_L,
                "x_bar_L": float(x_bar_L),
                "x_lo_H": ps.x_lo,
                "x_hi": ps.x_hi,
            },
        )

    return _solve_hybrid(cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, grid_size)


def _solve_two_player(cfg, q, beta, gH, gL, x_lo_L, u_L, grid_size):
    """Closed-form two-creator equilibrium: pure or atom-plus-overlap."""
    x1 = stationary_effort(float(q[0]), gH, beta)
    u1 = x1 * q[0] - gH * x1**beta
    u_dev = x1 * q[0] - gL * x1**beta
    if u_dev <= u_L + 1e-14:
        return BinaryTypeEquilibrium(
            u_H=u1,
            u_L=u_L,
            F_H=MixedStrategy.point_mass(x1),
            F_L=MixedStrategy.point_mass(x_lo_L),
            regime=REGIME_PURE,
            breakpoints={"x_lo_L": x_lo_L, "x_lo_H": x1, "x_hi": x1},
        )
    x_bar = largest_root_of_reward(float(q[0]), gL, beta, u_L)
    u_H = x_bar * q[0] - gH * x_bar**beta
    mix_star = _mixture_level_for_value(u_H, gH, beta)
    span = q[0] - q[1]
    q2 = float(np.clip((mix_star - q[1]) / span, 0.0, 1.0))  # tail atom mass
    x_lo_H = stationary_effort(mix_star, gH, beta)
    mix_L = (u_L + gL * x_lo_H**beta) / x_lo_H
    q1 = float(np.clip((mix_L - q[1]) / span, 0.0, 1.0))  # head atom mass
    grid = geometric_grid(x_lo_H, x_bar, grid_size)
    FH = (u_L + gL * grid**beta) / (grid * span) - q[1] / span
    FL = (u_H + gH * grid**beta) / (grid * span) - q[1] / span
    FH[0], FL[0], FH[-1], FL[-1] = q1, q2, 1.0, 1.0
    F_H = _concat_strategy(
        [(np.array([x_lo_H, x_lo_H]), np.array([0.0, q1])), (grid, np.clip(FH, 0.0, 1.0))],
        atoms=((x_lo_H, q1),),
    )
    F_L = _concat_strategy(
        [
            (np.array([x_lo_L, x_lo_L]), np.array([0.0, q2])),
            (np.array([x_lo_L, x_lo_H]), np.array([q2, q2])),
            (grid, np.clip(FL, 0.0, 1.0)),
        ],
        atoms=((x_lo_L, q2),),
    )
    return BinaryTypeEquilibrium(
        u_H=u_H,
        u_L=u_L,
        F_H=F_H,
        F_L=F_L,
        regime=REGIME_HYB1,
        breakpoints={
            "x_lo_L": x_lo_L,
            "x_dstar": x_lo_L,
            "x_lo_H": x_lo_H,
            "x_star": x_lo_H,
            "x_hi": x_bar,
        },
    )


def _solve_hybrid(cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, grid_size):
    density = grid_size / max(1e-9, 1.0)  # points per unit effort
    if n_H == 1:
        x_hi = largest_root_of_reward(float(q[0]), gL, beta, u_L)
    else:
        x_hi = largest_root_of_reward(float(q[0]), gH, beta, u_H)
    density = grid_size / max(x_hi - x_lo_L, 1e-9)

    bottom = None
    if n_L >= 2:
        qt = q[n_H:]
        if np.any(np.diff(qt) > -1e-12):
            raise StrictDecreaseRequired("tail biases must strictly decrease")
        x_bar_L0 = largest_root_of_reward(float(qt[0]), gL, beta, u_L)
        bot_grid = geometric_grid(x_lo_L, min(x_bar_L0, x_hi), max(401, grid_size // 2))
        bot_F = _solve_block_cdf(bot_grid, qt, u_L, gL, beta)
        bottom = (bot_grid, bot_F, x_bar_L0)

    attempt_errors = {}
    if n_L >= 2:
        try:
            eq = _assemble_case2(
                cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, x_hi, bottom, density
            )
            if eq is not None:
                return eq
            attempt_errors["case2"] = "no entry point or tail CDF not monotone"
        except (ValidationFailed, ValueError) as exc:
            attempt_errors["case2"] = str(exc)

    try:
        return _assemble_case1(
            cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, x_hi, bottom, density
        )
    except (ValidationFailed, ValueError) as exc:
        attempt_errors["case1"] = str(exc)
        raise ValidationFailed("neither hybrid configuration validates", attempt_errors)


def _assemble_case2(cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, x_hi, bottom, density):
    bot_grid, bot_F, x_bar_L0 = bottom
    qt = q[n_H:]
    right = min(x_bar_L0, x_hi)

    def head_value(x):
        fl = _block_cdf_at(x, qt, u_L, gL, beta)
        return x * _head_bias(0.0, fl, n_H, n_L, q) - gH * x**beta - u_H

    if head_value(right) < 0.0:
        return None
    lo, hi = x_lo_L, right
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if head_value(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    x_lo_H = 0.5 * (lo + hi)
    mu_L = _block_cdf_at(x_lo_H, qt, u_L, gL, beta)

    if n_H == 1:
        # a lone head creator cannot mix by itself: couple immediately
        x_star = float(x_lo_H)
        head_grid = np.array([x_lo_H])
        head_F = np.array([0.0])
    else:
        scan = _segment_grid(x_lo_H, x_hi, density)
        FH_scan = _solve_head_given_tail(scan, mu_L, q, n_H, n_L, gH, beta, u_H)
        x_star, _ = _find_x_star(scan, FH_scan, mu_L, q, n_H, n_L, gH, gL, beta, u_H, u_L)
        if x_star is None:
            raise ValidationFailed("tail deviation never returns to u_L before the top")
        head_grid = _segment_grid(x_lo_H, x_star, density)
        head_F = _solve_head_given_tail(head_grid, mu_L, q, n_H, n_L, gH, beta, u_H)
        head_F[0] = 0.0
        _validate_head_segment(head_grid, head_F, mu_L, q, n_H, n_L, gH, beta, u_H)

    coup_grid = _segment_grid(x_star, x_hi, density, min_pts=201)
    FH_c, FL_c, resid = _coupled_newton(
        coup_grid, q, n_H, n_L, gH, gL, beta, u_H, u_L, (head_F[-1], mu_L)
    )
    _validate_pair(coup_grid, FH_c, FL_c, resid, mu_L, head_F[-1])

    # truncate the bottom segment at the head entry point
    keep = bot_grid <= x_lo_H
    bseg = (np.append(bot_grid[keep], x_lo_H), np.append(bot_F[keep], mu_L))
    F_L = _concat_strategy(
        [bseg, (np.array([x_lo_H, x_star]), np.array([mu_L, mu_L])), (coup_grid, FL_c)]
    )
    F_H = _concat_strategy([(head_grid, head_F), (coup_grid, FH_c)])
    return BinaryTypeEquilibrium(
        u_H=u_H,
        u_L=u_L,
        F_H=F_H,
        F_L=F_L,
        regime=REGIME_HYB2,
        breakpoints={
            "x_lo_L": x_lo_L,
            "x_lo_H": float(x_lo_H),
            "x_star": float(x_star),
            "x_hi": float(x_hi),
        },
    )


def _assemble_case1(cfg, q, beta, n_H, n_L, gH, gL, x_lo_L, u_L, u_H, x_hi, bottom, density):
    mix_star = _mixture_level_for_value(u_H, gH, beta)
    m_star = _invert_head_entry_mass(mix_star, q, n_H, n_L)
    x_lo_H = stationary_effort(mix_star, gH, beta)

    atoms_H = ()
    if n_L == 1:
        x_dstar = x_lo_L
        bseg = (np.array([x_lo_L, x_lo_L]), np.array([0.0, m_star]))
        atoms_L = ((x_lo_L, m_star),)
    else:
        bot_grid, bot_F, _ = bottom
        qt = q[n_H:]
        if m_star > bot_F[-1] + 1e-9:
            raise ValidationFailed("required entry mass exceeds the bottom segment")
        # invert the block CDF: the effort where the tail mass reaches m_star
        level = binomial_mixture(m_star, qt)
        x_dstar = largest_root_of_reward(float(level), gL, beta, u_L)
        keep = bot_grid <= x_dstar
        bseg = (np.append(bot_grid[keep], x_dstar), np.append(bot_F[keep], m_star))
        atoms_L = ()
    if x_dstar > x_lo_H + 1e-9:
        raise ValidationFailed("gap start lies above the head entry point")

    if n_H == 1:
        # the single head creator needs an atom so the tail stays indifferent
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            v = x_lo_H * _tail_bias(mid, m_star, n_H, n_L, q) - gL * x_lo_H**beta
            if v > u_L:
                hi = mid
            else:
                lo = mid
        a = 0.5 * (lo + hi)
        atoms_H = ((x_lo_H, a),)
        x_star = x_lo_H
        head_piece = (np.array([x_lo_H, x_lo_H]), np.array([0.0, a]))
        start = (a, m_star)
    else:
        scan = _segment_grid(x_lo_H, x_hi, density)
        FH_scan = _solve_head_given_tail(scan, m_star, q, n_H, n_L, gH, beta, u_H)
        x_star, _ = _find_x_star(scan, FH_scan, m_star, q, n_H, n_L, gH, gL, beta, u_H, u_L)
        if x_star is None:
            raise ValidationFailed("tail deviation never returns to u_L before the top")
        head_grid = _segment_grid(x_lo_H, x_star, density)
        head_F = _solve_head_given_tail(head_grid, m_star, q, n_H, n_L, gH, beta, u_H)
        head_F[0] = 0.0
        _validate_head_segment(head_grid, head_F, m_star, q, n_H, n_L, gH, beta, u_H)
        head_piece = (head_grid, head_F)
        start = (head_F[-1], m_star)

    coup_grid = _segment_grid(x_star, x_hi, density, min_pts=201)
    FH_c, FL_c, resid = _coupled_newton(
        coup_grid, q, n_H, n_L, gH, gL, beta, u_H, u_L, start
    )
    _validate_pair(coup_grid, FH_c, FL_c, resid, m_star, start[0])

    F_L = _concat_strategy(
        [bseg, (np.array([x_dstar, x_star]), np.array([m_star, m_star])), (coup_grid, FL_c)],
        atoms=atoms_L,
    )
    F_H = _concat_strategy([head_piece, (coup_grid, FH_c)], atoms=atoms_H)
    return BinaryTypeEquilibrium(
        u_H=u_H,
        u_L=u_L,
        F_H=F_H,
        F_L=F_L,
        regime=REGIME_HYB1,
        breakpoints={
            "x_lo_L": x_lo_L,
            "x_dstar": float(x_dstar),
            "x_lo_H": float(x_lo_H),
            "x_star": float(x_star),
            "x_hi": float(x_hi),
        },
    )


def _validate_pair(xs, FH, FL, resid, FL_floor, FH_floor):
    """Monotonicity and indifference checks for a coupled segment."""
    if resid > INDIFF_TOL:
        raise ValidationFailed(f"indifference residual {resid:.2e} exceeds {INDIFF_TOL}")
    if np.any(np.diff(FH) < -MONO_SLACK) or np.any(np.diff(FL) < -MONO_SLACK):
        raise ValidationFailed("coupled segment CDF decreases")
    if FL[0] < FL_floor - 1e-6 or FH[0] < FH_floor - 1e-6:
        raise ValidationFailed("coupled segment start detached from previous segment")
    if abs(FH[-1] - 1.0) > 1e-6 or abs(FL[-1] - 1.0) > 1e-6:
        raise ValidationFailed("coupled segment does not reach 1 at the top")


def _validate_head_segment(xs, FH, mu_L, q, n_H, n_L, gamma_H, beta, u_H):
    """The head-only stretch must satisfy the head indifference without clamping."""
    resid = np.abs(xs * _head_bias(FH, np.full(len(xs), mu_L), n_H, n_L, q) - gamma_H * xs**beta - u_H)
    if np.max(resid) > INDIFF_TOL:
        raise ValidationFailed(
            f"head-only segment residual {np.max(resid):.2e}: entry point inconsistent"
        )
    if np.any(np.diff(FH) < -MONO_SLACK):
        raise ValidationFailed("head-only segment CDF decreases")


def pure_ne(cfg: GameConfig, tol: float = 1e-12):
    """Candidate pure profile from first-order conditions, plus a deviation audit.

    Returns (profile-or-None, checks).  Requires strictly increasing cost
    multipliers; the sufficient existence condition for power costs is a
    multiplier ratio of at least beta between neighbours.
    """
    q = cfg.effective_biases()
    gammas = np.array(cfg.cost.gammas)
    beta = cfg.cost.beta
    if np.any(np.diff(gammas) <= 0.0):
        raise ValueError("pure profile analysis needs strictly increasing multipliers")
    xs = np.array([stationary_effort(float(q[i]), gammas[i], beta) for i in range(cfg.n)])
    utilities = xs * q - gammas * xs**beta
    checks = {
        "sufficient_ok": bool(np.all(gammas[1:] / gammas[:-1] >= beta - 1e-12)),
        "elasticity_uniqueness_ok": True,  # power costs: constant elasticity
    }
    if np.any(np.diff(xs) >= -tol):
        return None, checks
    for i in range(cfg.n):
        for j in range(cfg.n):
            if i == j:
                continue
            if xs[j] * q[j] - gammas[i] * xs[j] ** beta > utilities[i] + 1e-12:
                return None, checks
    return PureProfile(efforts=tuple(xs), utilities=tuple(utilities)), checks


def _verification_components(eq, cfg: GameConfig):
    """Normalise any equilibrium object into (label, strategy, gamma, count, utility)."""
    if isinstance(eq, SymmetricEquilibrium):
        return [("sym", eq.strategy, eq.gamma, cfg.n, eq.u)]
    if isinstance(eq, BinaryTypeEquilibrium):
        ts = cfg.type_split
        return [
            ("H", eq.F_H, ts.gamma_H, ts.n_H, eq.u_H),
            ("L", eq.F_L, ts.gamma_L, cfg.n - ts.n_H, eq.u_L),
        ]
    if isinstance(eq, PureProfile):
        return [
            (f"creator{i + 1}", MixedStrategy.point_mass(eq.efforts[i]), cfg.cost.gammas[i], 1, eq.utilities[i])
            for i in range(cfg.n)
        ]
    raise TypeError(f"cannot verify object of type {type(eq)!r}")


def _deviation_bias_with_ties(x, groups, q):
    """Expected bias at effort ``x``; tied atom mass splits ranks uniformly."""
    belows, ties = [], []
    for strat, count in groups:
        fl = float(strat.left_limit(np.array([x]))[0])
        fr = float(strat(np.array([x])))
        for _ in range(count):
            belows.append(fl)
            ties.append(max(fr - fl, 0.0))
    bias = 0.0
    # joint enumeration: each opponent independently above / tied / below
    pmf = {(0, 0): 1.0}
    for b, t in zip(belows, ties):
        above = max(1.0 - b - t, 0.0)
        new = {}
        for (a_ct, t_ct), pr in pmf.items():
            for d_a, d_t, w in ((1, 0, above), (0, 1, t), (0, 0, b)):
                if w <= 0.0:
                    continue
                key = (a_ct + d_a, t_ct + d_t)
                new[key] = new.get(key, 0.0) + pr * w
        pmf = new
    for (a_ct, t_ct), pr in pmf.items():
        bias += pr * float(np.mean(q[a_ct : a_ct + t_ct + 1]))
    return bias


def verify_equilibrium(eq, cfg: GameConfig, grid_size: int = 1000, eps: float = 1e-9) -> dict:
    """Best-response audit: max utility gain from any pure deviation on a grid.

    The expectation over opponents' mixing runs through the rank-bias kernel;
    atoms are handled by uniform tie-splitting over the spanned ranks.
    """
    comps = _verification_components(eq, cfg)
    q = cfg.effective_biases()
    beta = cfg.cost.beta
    x_max = max(s.support[1] for _, s, _, _, _ in comps)
    xs = np.linspace(0.0, x_max, grid_size)
    atom_locs = sorted({loc for _, s, _, _, _ in comps for loc, _ in s.atoms})
    report = {"max_gain": -np.inf, "worst_creator": None, "worst_effort": None}
    for label, strat, gamma, count, u in comps:
        opponents = []
        for lab2, s2, _, count2, _ in comps:
            c = count2 - 1 if lab2 == label else count2
            if c > 0:
                opponents.append((s2, c))
        has_atoms = any(len(s.atoms) for s, _ in opponents)
        # vectorised pass on the regular grid (left limits: off-atom points exact)
        F_groups = [np.repeat(s.left_limit(xs)[None, :], c, axis=0) for s, c in opponents]
        stacked = np.vstack(F_groups) if F_groups else np.zeros((0, len(xs)))
        pmf = _pmf_from_matrix(stacked)
        bias = pmf @ q[: stacked.shape[0] + 1]
        util = xs * bias - gamma * xs**beta
        if has_atoms:
            for loc in atom_locs:
                util_at = loc * _deviation_bias_with_ties(loc, opponents, q) - gamma * loc**beta
                k = int(np.searchsorted(xs, loc))
                if k < len(util) and util_at > util[min(k, len(util) - 1)]:
                    util[min(k, len(util) - 1)] = util_at
        gain = float(np.max(util) - u)
        if gain > report["max_gain"]:
            report["max_gain"] = gain
            report["worst_creator"] = label
            report["worst_effort"] = float(xs[int(np.argmax(util))])
    return report


def _pmf_from_matrix(F_matrix):
    """Above-count pmf for independent opponents given a (m, k) matrix of CDFs."""
    m, k = F_matrix.shape
    pmf = np.zeros((k, m + 1))
    pmf[:, 0] = 1.0
    for j in range(m):
        below = F_matrix[j]
        new = np.zeros((k, j + 2))
        new[:, :-1] = pmf[:, : j + 1] * below[:, None]
        new[:, 1:] += pmf[:, : j + 1] * (1.0 - below)[:, None]
        pmf[:, : j + 2] = new
    return pmf


def diagnostics_quasiconvexity(cfg: GameConfig, samples: int = 500, tol: float = 1e-9) -> dict:
    """Sample the tail deviation curve at the equilibrium head utility.

    Verdict is true when no interior local maximum exceeds both endpoint
    values beyond ``tol`` (the curve's max sits at an endpoint).
    """
    u_H, hint = compute_uH(cfg)
    ps = pseudo_strategy(u_H, cfg)
    xs = np.linspace(ps.x_lo, ps.x_hi, samples)
    vals = deviation_curve_L(ps, cfg, xs)
    end_max = max(vals[0], vals[-1])
    interior_peak = False
    for i in range(1, samples - 1):
        if vals[i] > vals[i - 1] and vals[i] > vals[i + 1] and vals[i] > end_max + tol:
            interior_peak = True
            break
    return {
        "x": xs,
        "values": vals,
        "u_H": u_H,
        "regime_hint": hint,
        "quasiconvex": not interior_peak,
    }


def jacobian_k_values(F_H, F_L, n_H: int, n_L: int, q) -> np.ndarray:
    """k = b^2/(ac) from the pairwise bias sensitivities on the overlap."""
    if n_H < 2 or n_L < 2:
        raise ValueError("the k diagnostic needs at least two creators of each type")
    qd = np.asarray(q, dtype=float)
    qdiff = qd[:-1] - qd[1:]
    a = two_group_rank_bias(F_H, F_L, n_H - 2, n_L, qdiff)
    b = two_group_rank_bias(F_H, F_L, n_H - 1, n_L - 1, qdiff)
    c = two_group_rank_bias(F_H, F_L, n_H, n_L - 2, qdiff)
    return np.asarray(b) ** 2 / (np.asarray(a) * np.asarray(c))


def diagnostics_jacobian_k(cfg: GameConfig, eq: BinaryTypeEquilibrium | None = None, samples: int = 200) -> dict:
    """Invertibility certificate for the coupled hybrid system.

    Values above ``(1 - 1/n_H) / (n_L (n_L - 1))`` certify a solvable
    Jacobian along the overlap segment.
    """
    ts = _split(cfg)
    n_H, n_L = ts.n_H, cfg.n - ts.n_H
    if eq is None:
        eq = solve_binary(cfg)
    if "x_star" not in eq.breakpoints:
        raise ValueError("k diagnostic needs a hybrid equilibrium with an overlap segment")
    x0, x1 = eq.breakpoints["x_star"], eq.breakpoints["x_hi"]
    xs = np.linspace(x0, x1, samples)
    ks = jacobian_k_values(eq.F_H(xs), eq.F_L(xs), n_H, n_L, cfg.effective_biases())
    threshold = (1.0 - 1.0 / n_H) / (n_L * (n_L - 1))
    return {"x": xs, "k": ks, "threshold": threshold, "invertible": bool(np.all(ks > threshold))}
