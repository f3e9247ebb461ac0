"""Domain types, cost model, bias validation, and the expected-rank-bias kernel.

Everything here is pure and immutable; solvers in the sibling modules share
these primitives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MONOTONE_TOL = 1e-12


class GameError(Exception):
    """Base class for model-contract violations."""


class NonPositive(GameError):
    """A bias or multiplier that must be positive is not."""


class NonMonotone(GameError):
    """Bias vector increases somewhere it must not."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"bias vector increases at index {index}")


class StrictDecreaseRequired(GameError):
    """Tied effective biases; the symmetric solver needs strict decrease."""


class MaxEffortViolation(GameError):
    """Equilibrium support would exceed the maximum effort of 1."""


class ValidationFailed(GameError):
    """A solved strategy pair failed monotonicity or indifference checks."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class MonotonicityBroken(GameError):
    """A citation construction produced a non-monotone bias vector."""


class NonPositiveDelta(GameError):
    """Citation gains must be strictly positive for the cited ranks."""


def validate_biases(p, p0: float = 0.0, tol: float = MONOTONE_TOL) -> "PositionBiases":
    """Check positivity and non-increase (ties allowed within ``tol``)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise NonPositive("bias vector must be a non-empty 1-d array")
    if np.any(p <= 0.0):
        raise NonPositive(f"biases must be positive, got min {p.min()}")
    diffs = np.diff(p)
    bad = np.nonzero(diffs > tol)[0]
    if len(bad):
        raise NonMonotone(int(bad[0]) + 1)
    if not 0.0 <= p0 <= 1.0:
        raise NonPositive(f"p0 must lie in [0, 1], got {p0}")
    return PositionBiases(p=tuple(p), p0=float(p0))


@dataclass(frozen=True)
class PositionBiases:
    """Per-rank examination probabilities plus the answer-box probability."""

    p: tuple[float, ...]
    p0: float = 0.0

    @property
    def n(self) -> int:
        return len(self.p)

    def as_array(self) -> np.ndarray:
        return np.array(self.p)


@dataclass(frozen=True)
class CostModel:
    """Power cost ``gamma_i * x**beta`` per creator."""

    beta: float
    gammas: tuple[float, ...]

    def __post_init__(self):
        if self.beta <= 1.0:
            raise NonPositive(f"beta must exceed 1, got {self.beta}")
        if any(g <= 0.0 for g in self.gammas):
            raise NonPositive("cost multipliers must be positive")

    def value(self, x, i: int):
        """Cost of effort ``x`` for creator ``i`` (0-based)."""
        _check_effort(x)
        return self.gammas[i] * np.asarray(x, dtype=float) ** self.beta

    def grad(self, x, i: int):
        """Marginal cost of effort ``x`` for creator ``i``."""
        _check_effort(x)
        return self.gammas[i] * self.beta * np.asarray(x, dtype=float) ** (self.beta - 1.0)


def _check_effort(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("effort must lie in [0, 1]")


def cost_value(x, i: int, cm: CostModel):
    return cm.value(x, i)


def cost_grad(x, i: int, cm: CostModel):
    return cm.grad(x, i)


@dataclass(frozen=True)
class TypeSplit:
    """Binary-type view: the first ``n_H`` creators are the low-cost type."""

    n_H: int
    gamma_H: float
    gamma_L: float

    @property
    def is_symmetric(self) -> bool:
        return self.gamma_H == self.gamma_L


@dataclass(frozen=True)
class GameConfig:
    """A full game instance: biases, costs, and compensation."""

    biases: PositionBiases
    cost: CostModel
    compensation: tuple[float, ...] = ()

    def __post_init__(self):
        n = self.biases.n
        if len(self.cost.gammas) != n:
            raise NonPositive("need one cost multiplier per creator")
        c = self.compensation if self.compensation else tuple(0.0 for _ in range(n))
        object.__setattr__(self, "compensation", tuple(float(v) for v in c))
        if len(self.compensation) != n:
            raise NonPositive("compensation vector length must equal n")
        carr = np.array(self.compensation)
        if np.any(carr < -MONOTONE_TOL):
            raise NonPositive("compensation must be non-negative")
        if np.any(np.diff(carr) > MONOTONE_TOL):
            raise NonMonotone(int(np.nonzero(np.diff(carr) > MONOTONE_TOL)[0][0]) + 1)
        eff = self.effective_biases()
        if np.any(eff <= 0.0) or np.any(np.diff(eff) > MONOTONE_TOL):
            raise NonMonotone(
                int(np.nonzero(np.diff(eff) > MONOTONE_TOL)[0][0]) + 1
                if np.any(np.diff(eff) > MONOTONE_TOL)
                else 0
            )

    @property
    def n(self) -> int:
        return self.biases.n

    def effective_biases(self) -> np.ndarray:
        """Bias-plus-compensation vector used by all equilibrium math."""
        return self.biases.as_array() + np.array(self.compensation)

    @property
    def type_split(self) -> TypeSplit | None:
        """Derived binary view when there are at most two distinct multipliers."""
        distinct = sorted(set(self.cost.gammas))
        if len(distinct) == 1:
            return TypeSplit(self.n, distinct[0], distinct[0])
        if len(distinct) != 2:
            return None
        g_h, g_l = distinct
        n_h = sum(1 for g in self.cost.gammas if g == g_h)
        expected = tuple([g_h] * n_h + [g_l] * (self.n - n_h))
        if self.cost.gammas != expected:
            return None
        return TypeSplit(n_h, g_h, g_l)

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "p": list(self.biases.p),
            "p0": self.biases.p0,
            "beta": self.cost.beta,
            "gammas": list(self.cost.gammas),
            "c": list(self.compensation),
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "GameConfig":
        doc = json.loads(text)
        return make_game(
            p=doc["p"],
            beta=doc["beta"],
            gammas=doc["gammas"],
            p0=doc.get("p0", 0.0),
            c=doc.get("c"),
        )


def make_game(p, beta, gammas, p0=0.0, c=None) -> GameConfig:
    biases = validate_biases(p, p0=p0)
    if np.isscalar(gammas):
        gammas = [float(gammas)] * biases.n
    cm = CostModel(beta=float(beta), gammas=tuple(float(g) for g in gammas))
    comp = tuple(float(v) for v in c) if c is not None else ()
    return GameConfig(biases=biases, cost=cm, compensation=comp)


def make_binary_game(p, beta, n_H, gamma_H, gamma_L, p0=0.0, c=None) -> GameConfig:
    gammas = [gamma_H] * n_H + [gamma_L] * (len(p) - n_H)
    return make_game(p, beta, gammas, p0=p0, c=c)


@dataclass(frozen=True)
class ProfitParams:
    """Revenue multiplier and the answer-quality exponent ``h(x) = x**h_power``."""

    alpha: float = 1.0
    h_power: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise NonPositive("alpha must be positive")
        if not 0.0 < self.h_power <= 1.0:
            raise NonPositive("h_power must lie in (0, 1]")

    def h(self, x):
        return np.asarray(x, dtype=float) ** self.h_power

    def h_prime(self, x):
        return self.h_power * np.asarray(x, dtype=float) ** (self.h_power - 1.0)


@dataclass(frozen=True)
class MixedStrategy:
    """A CDF over effort levels: piecewise-linear grid part plus explicit atoms.

    ``cdf`` stores right limits, so an atom located at a grid point is already
    included in the value there; atom jumps are kept exact by duplicating the
    abscissa in ``grid``.
    """

    grid: np.ndarray
    cdf: np.ndarray
    atoms: tuple[tuple[float, float], ...] = ()
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        f = np.asarray(self.cdf, dtype=float)
        if g.shape != f.shape or g.ndim != 1 or len(g) < 2:
            raise ValueError("grid and cdf must be matching 1-d arrays")
        if np.any(np.diff(g) < 0.0):
            raise ValueError("grid must be non-decreasing")
        if np.any(np.diff(f) < -1e-9):
            raise ValueError("cdf must be non-decreasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "cdf", np.clip(f, 0.0, 1.0))

    def __call__(self, x):
        """Right-continuous CDF value(s) at ``x``."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.grid, x, side="right")
        out = np.empty(x.shape, dtype=float)
        out[idx == 0] = 0.0
        out[idx == len(self.grid)] = self.cdf[-1]
        inside = (idx > 0) & (idx < len(self.grid))
        ii = idx[inside]
        x0, x1 = self.grid[ii - 1], self.grid[ii]
        f0, f1 = self.cdf[ii - 1], self.cdf[ii]
        width = x1 - x0
        # at an exact hit x == x0 (the last duplicate), t = 0 returns the
        # stored right-limit value, so atoms come out right-continuous
        t = np.where(width > 0.0, (x[inside] - x0) / np.where(width > 0.0, width, 1.0), 0.0)
        out[inside] = f0 + t * (f1 - f0)
        return out if out.shape else float(out)

    def left_limit(self, x):
        """CDF left limit, excluding any atom located exactly at ``x``."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.grid, x, side="left")
        out = np.empty(x.shape, dtype=float)
        out[idx == 0] = 0.0
        beyond = idx == len(self.grid)
        out[beyond] = self.cdf[-1]
        inside = (idx > 0) & ~beyond
        ii = idx[inside]
        x0, x1 = self.grid[ii - 1], self.grid[ii]
        f0, f1 = self.cdf[ii - 1], self.cdf[ii]
        width = x1 - x0
        t = np.where(width > 0.0, (x[inside] - x0) / np.where(width > 0.0, width, 1.0), 0.0)
        out[inside] = f0 + t * (f1 - f0)
        return out if out.shape else float(out)

    def atom_mass_at(self, x, tol: float = 1e-12) -> float:
        return sum(m for loc, m in self.atoms if abs(loc - x) <= tol)

    @staticmethod
    def point_mass(x: float) -> "MixedStrategy":
        return MixedStrategy(
            grid=np.array([x, x]),
            cdf=np.array([0.0, 1.0]),
            atoms=((x, 1.0),),
            support=(x, x),
        )


def binomial_mixture(y, q) -> np.ndarray | float:
    """Expected rank bias against ``len(q) - 1`` symmetric opponents at CDF ``y``.

    ``sum_i C(n-1, i-1) y^(n-i) (1-y)^(i-1) q_i``; strictly increasing in ``y``
    when ``q`` strictly decreases.
    """
    q = np.asarray(q, dtype=float)
    n = len(q)
    y = np.asarray(y, dtype=float)
    yc = 1.0 - y
    out = np.zeros(np.broadcast(y, 0.0).shape)
    for i in range(1, n + 1):
        coef = math.comb(n - 1, i - 1)
        out = out + coef * y ** (n - i) * yc ** (i - 1) * q[i - 1]
    return out if out.shape else float(out)


def above_count_pmf(y_below) -> np.ndarray:
    """Distribution of how many opponents rank above, one Bernoulli per opponent.

    ``y_below[i]`` is the probability opponent ``i`` sits below; returns the
    pmf over 0..len(y_below) opponents above (a Poisson-binomial, built by
    folding one opponent at a time).
    """
    pmf = np.array([1.0])
    for y in np.asarray(y_below, dtype=float):
        above = 1.0 - y
        new = np.zeros(len(pmf) + 1)
        new[:-1] += pmf * y
        new[1:] += pmf * above
        pmf = new
    return pmf


def expected_rank_bias(others_cdf_values, p) -> float:
    """Expected bias of a creator whose opponents sit below with the given odds.

    With ``k`` opponents above, the creator occupies rank ``k + 1`` and earns
    the ``(k+1)``-th highest bias.  Runs in O(n^2) via the count distribution.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(others_cdf_values, dtype=float)
    if len(y) != len(p) - 1:
        raise ValueError(f"need {len(p) - 1} opponent CDF values, got {len(y)}")
    p_sorted = np.sort(p)[::-1]
    return float(above_count_pmf(y) @ p_sorted)


def two_group_pmfs(n_h: int, n_l: int, F_H, F_L):
    """Above-count pmf for ``n_h`` + ``n_l`` opponents at common group CDFs.

    Vectorised over ``F_H``/``F_L`` arrays; returns shape (..., n_h + n_l + 1).
    """
    F_H = np.atleast_1d(np.asarray(F_H, dtype=float))
    F_L = np.atleast_1d(np.asarray(F_L, dtype=float))
    F_H, F_L = np.broadcast_arrays(F_H, F_L)
    shape = F_H.shape
    pmf = np.zeros(shape + (n_h + n_l + 1,))
    pmf[..., 0] = 1.0
    for k in range(n_h + n_l):
        below = F_H if k < n_h else F_L
        new = np.zeros(shape + (k + 2,))
        new[..., :-1] = pmf[..., : k + 1] * below[..., None]
        new[..., 1:] += pmf[..., : k + 1] * (1.0 - below)[..., None]
        pmf[..., : k + 2] = new
    return pmf


def two_group_rank_bias(F_H, F_L, n_h_opp: int, n_l_opp: int, p) -> np.ndarray | float:
    """Expected bias against ``n_h_opp`` low-cost and ``n_l_opp`` high-cost opponents."""
    p = np.asarray(p, dtype=float)
    scalar = np.ndim(F_H) == 0 and np.ndim(F_L) == 0
    pmf = two_group_pmfs(n_h_opp, n_l_opp, F_H, F_L)
    out = pmf @ p[: n_h_opp + n_l_opp + 1]
    return float(out[0]) if scalar else out


def stationary_effort(q: float, gamma: float, beta: float) -> float:
    """Unconstrained maximiser of ``x*q - gamma*x**beta``."""
    if q <= 0.0:
        return 0.0
    return (q / (gamma * beta)) ** (1.0 / (beta - 1.0))


def argmax_linear_reward(q: float, gamma: float, cm: CostModel | float) -> tuple[float, float]:
    """Best effort and value against a fixed expected bias ``q``, capped at 1."""
    beta = cm.beta if isinstance(cm, CostModel) else float(cm)
    x = min(stationary_effort(q, gamma, beta), 1.0)
    return x, x * q - gamma * x**beta


def linear_reward_value(q: float, gamma: float, beta: float) -> float:
    """Value of ``max_x x*q - gamma*x**beta`` without the effort cap."""
    x = stationary_effort(q, gamma, beta)
    return x * q - gamma * x**beta


def largest_root_of_reward(q: float, gamma: float, beta: float, u: float) -> float:
    """Largest ``x`` with ``x*q - gamma*x**beta = u``; requires ``u <= max value``."""
    x_star = stationary_effort(q, gamma, beta)
    peak = x_star * q - gamma * x_star**beta
    if u > peak + 1e-13:
        raise ValueError(f"no root: target {u} above peak {peak}")
    if u >= peak:
        return x_star
    lo, hi = x_star, max(2.0 * x_star, 1e-3)
    while hi * q - gamma * hi**beta > u:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("root bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * q - gamma * mid**beta > u:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
