"""Weighted directed retweet network and its centralities.

An edge ``A -> B`` with weight ``w`` means account A retweeted account B
``w`` times. Shortest paths are unweighted and self-retweets are kept in
the weights but ignored by every centrality.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Callable, Iterable

import numpy as np

from . import kernels
from .corpus import Tweet

log = logging.getLogger(__name__)


class ContractError(ValueError):
    """An argument violates a documented precondition."""


@dataclass(frozen=True)
class RetweetNetwork:
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int]

    def __post_init__(self) -> None:
        index = {v: i for i, v in enumerate(self.nodes)}
        if len(index) != len(self.nodes):
            raise ContractError("duplicate node ids")
        for (src, dst), w in self.edges.items():
            if src not in index or dst not in index:
                raise ContractError(f"edge ({src}, {dst}) has an endpoint outside the node set")
            if w < 1:
                raise ContractError(f"edge ({src}, {dst}) has weight {w} < 1")
        object.__setattr__(self, "_index", index)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Out- and in-adjacency in CSR form without self-loops, neighbours sorted."""
        n = self.node_count
        index = self.index()
        pairs = sorted({(index[s], index[d]) for s, d in self.edges if s != d})
        src = np.fromiter((p[0] for p in pairs), dtype=kernels.IDX, count=len(pairs))
        dst = np.fromiter((p[1] for p in pairs), dtype=kernels.IDX, count=len(pairs))
        indptr = np.zeros(n + 1, dtype=kernels.IDX)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        indices = dst.copy()
        rorder = np.lexsort((src, dst))
        rindptr = np.zeros(n + 1, dtype=kernels.IDX)
        np.cumsum(np.bincount(dst, minlength=n), out=rindptr[1:])
        rindices = np.ascontiguousarray(src[rorder])
        return indptr, np.ascontiguousarray(indices), rindptr, rindices

    def scaled(self, factor: int) -> "RetweetNetwork":
        return RetweetNetwork(self.nodes, {e: w * factor for e, w in self.edges.items()})


def build_network(
    tweets: Iterable[Tweet],
    time_filter: Callable[[Tweet], bool] | None = None,
    include_authors: bool = False,
) -> RetweetNetwork:
    """Tally retweet records into a network.

    Nodes are retweet endpoints; with ``include_authors`` every author in
    the (filtered) input becomes a node too. Node order is sorted by id so
    the result does not depend on input order.
    """
    counts: Counter[tuple[str, str]] = Counter()
    nodes: set[str] = set()
    for tweet in tweets:
        if time_filter is not None and not time_filter(tweet):
            continue
        if include_authors:
            nodes.add(tweet.author_id)
        if tweet.is_retweet and tweet.retweeted_user_id:
            counts[(tweet.author_id, tweet.retweeted_user_id)] += 1
            nodes.add(tweet.author_id)
            nodes.add(tweet.retweeted_user_id)
    edges = {e: counts[e] for e in sorted(counts)}
    return RetweetNetwork(tuple(sorted(nodes)), edges)


def in_degree_centrality(net: RetweetNetwork) -> dict[str, float]:
    """Distinct in-neighbours over ``n - 1``; edge weights play no part."""
    n = net.node_count
    if n < 2:
        if n == 1:
            log.warning("in-degree centrality undefined on a single-node network; reporting 0")
        return {v: 0.0 for v in net.nodes}
    indeg = Counter(dst for (src, dst) in net.edges if src != dst)
    return {v: indeg[v] / (n - 1) for v in net.nodes}


def betweenness_centrality(net: RetweetNetwork, workers: int = 1, backend=None) -> dict[str, tuple[float, float]]:
    """Map node -> (raw, normalized) betweenness; normalization is ``(n-1)(n-2)``."""
    n = net.node_count
    if n == 0:
        return {}
    indptr, indices, rindptr, rindices = net.csr()
    raw = kernels.betweenness_raw(indptr, indices, rindptr, rindices, workers=workers, backend=backend)
    if n < 3:
        log.warning("normalized betweenness undefined for n < 3; reporting 0")
        return {v: (float(raw[i]), 0.0) for i, v in enumerate(net.nodes)}
    scale = 1.0 / ((n - 1) * (n - 2))
    return {v: (float(raw[i]), float(raw[i]) * scale) for i, v in enumerate(net.nodes)}


def closeness_centrality(net: RetweetNetwork, workers: int = 1, backend=None, direction: str = "in") -> dict[str, float]:
    """Wasserman-Faust closeness.

    ``direction="in"`` (default) measures how close the accounts that can
    reach a node are to it; ``"out"`` uses outgoing geodesics instead.
    """
    if net.node_count == 0:
        return {}
    indptr, indices, rindptr, rindices = net.csr()
    if direction == "in":
        values = kernels.closeness(rindptr, rindices, workers=workers, backend=backend)
    elif direction == "out":
        values = kernels.closeness(indptr, indices, workers=workers, backend=backend)
    else:
        raise ContractError(f"direction must be 'in' or 'out', not {direction!r}")
    return {v: float(values[i]) for i, v in enumerate(net.nodes)}


def influence(in_degree_c: float, betweenness_norm: float) -> float:
    """Harmonic mean of in-degree centrality and normalized betweenness."""
    a, b = in_degree_c, betweenness_norm
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0) or math.isnan(a) or math.isnan(b):
        raise ContractError(f"influence inputs must lie in [0, 1], got ({a}, {b})")
    if a == 0.0 or b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


@dataclass(frozen=True)
class CentralityRecord:
    account_id: str
    in_degree_centrality: float
    betweenness_raw: float
    betweenness_norm: float
    closeness: float
    influence: float


CENTRALITY_HEADER = (
    "account_id",
    "in_degree_centrality",
    "betweenness_raw",
    "betweenness_norm",
    "closeness",
    "influence",
)


def _rank_key(rec: CentralityRecord):
    return (-rec.influence, -rec.betweenness_raw, rec.account_id)


class CentralityReport:
    """Per-node centralities, iterated in ranking order (influence desc, then tie rule)."""

    def __init__(self, records: Iterable[CentralityRecord]):
        self.records = sorted(records, key=_rank_key)
        self._by_id = {r.account_id: r for r in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, account_id: str) -> CentralityRecord:
        return self._by_id[account_id]

    def __contains__(self, account_id: str) -> bool:
        return account_id in self._by_id

    def write_csv(self, out: IO[str]) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CENTRALITY_HEADER)
        for r in self.records:
            writer.writerow([
                r.account_id,
                repr(r.in_degree_centrality),
                repr(r.betweenness_raw),
                repr(r.betweenness_norm),
                repr(r.closeness),
                repr(r.influence),
            ])

    @classmethod
    def read_csv(cls, stream: Iterable[str]) -> "CentralityReport":
        reader = csv.DictReader(stream)
        return cls(
            CentralityRecord(
                row["account_id"],
                float(row["in_degree_centrality"]),
                float(row["betweenness_raw"]),
                float(row["betweenness_norm"]),
                float(row["closeness"]),
                float(row["influence"]),
            )
            for row in reader
        )


def centrality_report(net: RetweetNetwork, workers: int = 1, backend=None, closeness_direction: str = "in") -> CentralityReport:
    indeg = in_degree_centrality(net)
    btw = betweenness_centrality(net, workers=workers, backend=backend)
    close = closeness_centrality(net, workers=workers, backend=backend, direction=closeness_direction)
    records = []
    for v in net.nodes:
        raw, norm = btw[v]
        # float drift can push the normalized value a hair past 1 on stars
        norm = min(norm, 1.0)
        records.append(CentralityRecord(v, indeg[v], raw, norm, close[v], influence(indeg[v], norm)))
    return CentralityReport(records)


def expansion_set(report: CentralityReport, k: int, exclude: Iterable[str] = ()) -> list[str]:
    """Top-``k`` accounts by influence, skipping ``exclude``."""
    if k <= 0:
        raise ContractError("k must be positive")
    skip = set(exclude)
    eligible = [r.account_id for r in report if r.account_id not in skip]
    if k > len(eligible):
        log.warning("expansion asked for %d accounts but only %d are eligible", k, len(eligible))
    return eligible[:k]


def write_network_csv(net: RetweetNetwork, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["src", "dst", "weight"])
    for (src, dst), w in net.edges.items():
        writer.writerow([src, dst, w])


def read_network_csv(stream: Iterable[str], extra_nodes: Iterable[str] = ()) -> RetweetNetwork:
    reader = csv.DictReader(stream)
    edges: dict[tuple[str, str], int] = {}
    nodes: set[str] = set(extra_nodes)
    for row in reader:
        e = (row["src"], row["dst"])
        edges[e] = edges.get(e, 0) + int(row["weight"])
        nodes.update(e)
    return RetweetNetwork(tuple(sorted(nodes)), {e: edges[e] for e in sorted(edges)})
