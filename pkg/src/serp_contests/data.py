"""Bundled position-bias estimates from the user click study ("paper-tables-v1").

Three interface variants were measured: A (plain result list), B (answer box
without citations), C (answer box citing four pages).  Slot biases are the
examination probabilities of the four citation slots inside the answer box;
``OVERVIEW_P0`` is the examination probability of the answer box itself.
"""

from __future__ import annotations

import numpy as np

TABLE_NAME = "paper-tables-v1"

TYPE_A = np.array(
    [0.9911, 0.9473, 0.7173, 0.6792, 0.4170, 0.2294, 0.2116, 0.1742, 0.1485, 0.1421]
)
TYPE_B = np.array(
    [0.7557, 0.6502, 0.3974, 0.3661, 0.2280, 0.1572, 0.1519, 0.1430, 0.1392, 0.1158]
)
TYPE_C = np.array(
    [0.4801, 0.4328, 0.3307, 0.3209, 0.1605, 0.1273, 0.1203, 0.0787, 0.0762, 0.0529]
)

OVERVIEW_P0 = 0.9888
SLOT_BIASES = np.array([0.7289, 0.4417, 0.3221, 0.1480])


def slot_total() -> float:
    """Total examination probability carried by the citation slots."""
    return float(SLOT_BIASES.sum())


def mean_slot_bias() -> float:
    """Expected slot bias for a page placed uniformly at random in a slot."""
    return float(SLOT_BIASES.mean())


def citation_gain_over_b() -> np.ndarray:
    """Per-rank bias gain of being cited, measured against the no-citation interface.

    A cited page keeps its organic bias at the Type-C level and picks up the
    mean slot bias; the gain is taken relative to the Type-B bias the page
    would otherwise have.  All ten values are strictly positive for the
    bundled tables.
    """
    return TYPE_C + mean_slot_bias() - TYPE_B


def citation_gain_budget() -> np.ndarray:
    """Per-rank gain at unit per-slot citation odds: the whole slot budget.

    Every slot draws its citation from the same page distribution, so a page
    picked with odds ``q_i`` collects ``q_i * slot_total()`` expected bias on
    top of its Type-C organic bias; the per-slot distribution summing to one
    is what caps the citation odds.
    """
    return np.full(len(TYPE_C) - 1, slot_total())


def head_tail_ratio(p, n_H: int) -> float:
    """Mean head-block bias over mean tail-block bias (default segment ratio)."""
    p = np.asarray(p, dtype=float)
    return float(p[:n_H].mean() / p[n_H:].mean())


def equal_citation_baseline() -> np.ndarray:
    """Organic biases when every page is cited with equal probability.

    Each of the n pages receives ``slot_total() / n`` expected slot bias on
    top of its Type-C organic bias.
    """
    return TYPE_C + slot_total() / len(TYPE_C)


def tables() -> dict:
    """All bundled numbers keyed the way config files reference them."""
    return {
        "name": TABLE_NAME,
        "p_A": TYPE_A.copy(),
        "p_B": TYPE_B.copy(),
        "p_C": TYPE_C.copy(),
        "p0": OVERVIEW_P0,
        "slot_biases": SLOT_BIASES.copy(),
    }
