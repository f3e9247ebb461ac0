"""Position-bias estimation from click logs under the examine-then-click model.

A click happens iff the position is examined (rank-specific probability) and
the page attracts (page-specific probability).  EM alternates posterior
examination/attraction given clicks with closed-form frequency updates;
attractiveness is shared across interfaces for the same page.  The answer-box
examination probability is estimated separately from dwell behaviour.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

ORGANIC = "organic"
OVERVIEW_SLOT = "overview_slot"
OVERVIEW_BODY = "overview_body"

DWELL_EXAMINED_SECONDS = 2.0


@dataclass(frozen=True)
class ClickRecord:
    session: int
    query: int
    interface: str  # A | B | C
    position_kind: str  # organic | overview_slot | overview_body
    rank: int  # 1-based; 0 for the overview body
    page: str
    clicked: bool
    dwell: float = 0.0
    answer_ref: bool = False


@dataclass
class PbmFit:
    biases: dict  # (interface, kind) -> list of per-rank probabilities
    attractiveness: dict  # page -> probability
    p0: float | None
    log_likelihood: list = field(default_factory=list)
    iterations: int = 0


@dataclass(frozen=True)
class LayoutSpec:
    """One interface variant: organic ranks, optional citation slots and body."""

    interface: str
    organic_biases: np.ndarray
    slot_biases: np.ndarray | None = None
    cited_pages: tuple[str, ...] = ()
    body_bias: float | None = None


def simulate_clicks(
    layouts, attractiveness, sessions: int, seed: int = 0, shuffle: bool = True
) -> list[ClickRecord]:
    """Draw examine-and-attract clicks for each layout, ``sessions`` runs apiece.

    With ``shuffle`` the page order is re-drawn each session, which is what
    makes rank biases identifiable from clicks.  The answer-box body gets a
    dwell time: at least 2 s when examined, under 2 s otherwise, so the
    counting rule can recover its examination rate.
    """
    rng = np.random.default_rng(seed)
    pages = list(attractiveness.keys())
    records = []
    session_id = 0
    for layout in layouts:
        for _ in range(sessions):
            session_id += 1
            order = rng.permutation(len(pages)) if shuffle else np.arange(len(pages))
            for rank, bias in enumerate(layout.organic_biases, start=1):
                page = pages[order[rank - 1]]
                examined = rng.random() < bias
                attracted = rng.random() < attractiveness[page]
                records.append(
                    ClickRecord(
                        session=session_id,
                        query=0,
                        interface=layout.interface,
                        position_kind=ORGANIC,
                        rank=rank,
                        page=page,
                        clicked=bool(examined and attracted),
                    )
                )
            if layout.slot_biases is not None:
                for slot, bias in enumerate(layout.slot_biases, start=1):
                    page = layout.cited_pages[slot - 1]
                    examined = rng.random() < bias
                    attracted = rng.random() < attractiveness[page]
                    records.append(
                        ClickRecord(
                            session=session_id,
                            query=0,
                            interface=layout.interface,
                            position_kind=OVERVIEW_SLOT,
                            rank=slot,
                            page=page,
                            clicked=bool(examined and attracted),
                        )
                    )
            if layout.body_bias is not None:
                examined = rng.random() < layout.body_bias
                dwell = 2.0 + rng.exponential(6.0) if examined else rng.uniform(0.0, 2.0)
                records.append(
                    ClickRecord(
                        session=session_id,
                        query=0,
                        interface=layout.interface,
                        position_kind=OVERVIEW_BODY,
                        rank=0,
                        page="__overview__",
                        clicked=False,
                        dwell=float(dwell),
                    )
                )
    return records


def _position_key(rec: ClickRecord):
    return (rec.interface, rec.position_kind, rec.rank)


def em_fit(
    records,
    max_iter: int = 500,
    tol: float = 1e-8,
    anchor: dict | None = None,
    attractiveness_init: float = 0.5,
) -> PbmFit:
    """Fit rank biases and shared page attractiveness by EM.

    ``anchor`` resolves the examine/attract scale ambiguity: ``{"interface",
    "rank", "value"}`` rescales so that position's bias matches ``value``;
    ``{"cap": True}`` rescales the largest bias to one; ``None`` leaves the
    EM fixed point as is.  Rescaling moves along the likelihood ridge, so the
    fit quality is unchanged.
    """
    obs = [r for r in records if r.position_kind != OVERVIEW_BODY]
    if not obs:
        raise ValueError("no organic or slot records to fit")
    positions = sorted({_position_key(r) for r in obs})
    pages = sorted({r.page for r in obs})
    pos_idx = {k: i for i, k in enumerate(positions)}
    page_idx = {p: i for i, p in enumerate(pages)}
    pos_of = np.array([pos_idx[_position_key(r)] for r in obs])
    page_of = np.array([page_idx[r.page] for r in obs])
    clicked = np.array([r.clicked for r in obs], dtype=bool)

    impressions = np.bincount(pos_of, minlength=len(positions)).astype(float)
    page_imps = np.bincount(page_of, minlength=len(pages)).astype(float)
    if np.any(page_imps == 0):
        missing = [p for p, i in page_idx.items() if page_imps[i] == 0]
        raise ValueError(f"pages never shown: {missing}")

    # init: per-interface click rate normalised by that interface's top rank
    clicks_per_pos = np.bincount(pos_of, weights=clicked.astype(float), minlength=len(positions))
    ctr = clicks_per_pos / np.maximum(impressions, 1.0)
    theta = np.empty(len(positions))
    for iface in {k[0] for k in positions}:
        idxs = [i for i, k in enumerate(positions) if k[0] == iface]
        top = max(ctr[i] for i in idxs)
        for i in idxs:
            theta[i] = min(max(ctr[i] / top if top > 0 else 0.5, 0.02), 0.98)
    x = np.full(len(pages), attractiveness_init)

    ll_trace = []
    it = 0
    for it in range(1, max_iter + 1):
        t = theta[pos_of]
        a = x[page_of]
        prod = np.clip(t * a, 1e-12, 1.0 - 1e-12)
        ll = float(np.sum(np.where(clicked, np.log(prod), np.log1p(-prod))))
        exam_post = np.where(clicked, 1.0, t * (1.0 - a) / (1.0 - prod))
        attr_post = np.where(clicked, 1.0, a * (1.0 - t) / (1.0 - prod))
        theta = np.bincount(pos_of, weights=exam_post, minlength=len(positions)) / impressions
        x = np.bincount(page_of, weights=attr_post, minlength=len(pages)) / page_imps
        theta = np.clip(theta, 1e-9, 1.0)
        x = np.clip(x, 1e-9, 1.0)
        ll_trace.append(ll)
        if len(ll_trace) >= 2 and ll_trace[-1] - ll_trace[-2] < tol:
            break

    if anchor:
        if anchor.get("cap"):
            scale = 1.0 / float(theta.max())
        else:
            key = (anchor["interface"], anchor.get("kind", ORGANIC), anchor["rank"])
            scale = float(anchor["value"]) / float(theta[pos_idx[key]])
        theta = np.clip(theta * scale, 0.0, 1.0)
        x = np.clip(x / scale, 0.0, 1.0)

    biases: dict = {}
    for key, i in pos_idx.items():
        iface, kind, rank = key
        biases.setdefault((iface, kind), {})[rank] = float(theta[i])
    biases = {
        k: [v[r] for r in sorted(v)] for k, v in biases.items()
    }
    p0 = None
    if any(r.position_kind == OVERVIEW_BODY for r in records):
        p0 = overview_bias_estimate(records)
    return PbmFit(
        biases=biases,
        attractiveness={p: float(x[i]) for p, i in page_idx.items()},
        p0=p0,
        log_likelihood=ll_trace,
        iterations=it,
    )


def overview_bias_estimate(records) -> float:
    """Examined share of answer-box impressions by the dwell counting rule.

    The box counts as examined when dwell reached 2 s, when the session
    clicked nothing else, or when the answer flag says it was referenced.
    """
    body = [r for r in records if r.position_kind == OVERVIEW_BODY]
    if not body:
        raise ValueError("no answer-box records")
    clicks_by_session = defaultdict(int)
    for r in records:
        if r.position_kind != OVERVIEW_BODY and r.clicked:
            clicks_by_session[r.session] += 1
    examined = 0
    for r in body:
        if (
            r.dwell >= DWELL_EXAMINED_SECONDS
            or clicks_by_session[r.session] == 0
            or r.answer_ref
        ):
            examined += 1
    return examined / len(body)


CSV_FIELDS = ["session", "query", "interface", "position_kind", "rank", "page", "clicked", "dwell", "answer_ref"]


def write_click_log(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [r.session, r.query, r.interface, r.position_kind, r.rank, r.page,
                 int(r.clicked), repr(r.dwell), int(r.answer_ref)]
            )


def read_click_log(path) -> list[ClickRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                ClickRecord(
                    session=int(row["session"]),
                    query=int(row.get("query", 0) or 0),
                    interface=row["interface"],
                    position_kind=row["position_kind"],
                    rank=int(row["rank"]),
                    page=row["page"],
                    clicked=bool(int(row["clicked"])),
                    dwell=float(row.get("dwell", 0.0) or 0.0),
                    answer_ref=bool(int(row.get("answer_ref", 0) or 0)),
                )
            )
    return records
