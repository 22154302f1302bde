"""Candidate lists for manual core labeling and resolution of label files."""

from __future__ import annotations

import csv
import logging
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .corpus import CorpusError, Label, LabelRecord, LabelSource, Tweet
from .graph import CentralityReport

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoreSets:
    pro_core: frozenset[str] = frozenset()
    anti_core: frozenset[str] = frozenset()
    official: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        overlap = self.pro_core & self.anti_core
        if overlap:
            raise CorpusError(f"accounts in both cores: {sorted(overlap)}")
        if not self.official <= self.pro_core:
            raise CorpusError("official accounts must belong to the pro core")

    def swapped(self) -> "CoreSets":
        """Pro and anti cores exchanged (officials dropped; they are pro by definition)."""
        return CoreSets(self.anti_core, self.pro_core, frozenset())

    def to_mapping(self) -> dict:
        return {
            "pro_core": sorted(self.pro_core),
            "anti_core": sorted(self.anti_core),
            "official": sorted(self.official),
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "CoreSets":
        return cls(
            frozenset(data.get("pro_core", ())),
            frozenset(data.get("anti_core", ())),
            frozenset(data.get("official", ())),
        )


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile: the ``ceil(pct/100 * N)``-th smallest value (rank >= 1)."""
    if not values:
        raise ValueError("percentile of an empty sequence")
    if not 0.0 <= pct <= 100.0:
        raise ValueError(f"percentile {pct} out of range")
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def upper_quartile(values: Sequence[float]) -> float:
    # nearest-rank Q3 already equals the max for fewer than four values
    return nearest_rank(values, 75.0)


def rank_candidates(report: CentralityReport, n: int) -> list[tuple[str, float]]:
    """Top-``n`` (account, influence) pairs in report order."""
    if len(report) == 0:
        raise ValueError("empty centrality report")
    if n > len(report):
        log.warning("requested %d candidates but the report has %d accounts", n, len(report))
    return [(r.account_id, r.influence) for r in list(report)[:n]]


@dataclass
class StratifiedResult:
    candidates: list[tuple[str, float]]
    eligible: set[str]
    diagnostics: list[str] = field(default_factory=list)


def topical(tweet: Tweet, keywords: Sequence[str]) -> bool:
    if not keywords:
        return True
    text = tweet.text.casefold()
    return any(k.casefold() in text for k in keywords)


def sample_topical_tweets(
    tweets: Sequence[Tweet], keywords: Sequence[str], k: int, seed: int, account_id: str
) -> list[Tweet]:
    """Up to ``k`` scored topical tweets, sampled reproducibly per account."""
    pool = sorted((t for t in tweets if t.stance is not None and topical(t, keywords)), key=lambda t: t.id)
    if len(pool) <= k:
        return pool
    rng = random.Random(f"{seed}:{account_id}")
    return sorted(rng.sample(pool, k), key=lambda t: t.id)


def stratified_candidates(
    report: CentralityReport,
    tweets_by_account: dict[str, Sequence[Tweet]],
    indeg_pct: float = 75.0,
    close_pct: float = 70.0,
    sample_n: int = 150,
    per_account_tweet_sample: int = 20,
    keywords: Sequence[str] = (),
    seed: int = 42,
) -> StratifiedResult:
    """Accounts above either centrality percentile, ranked by Q3 of sampled ``p_pro``."""
    records = list(report)
    if not records:
        log.warning("stratified sampling on an empty report")
        return StratifiedResult([], set())
    indeg_cut = nearest_rank([r.in_degree_centrality for r in records], indeg_pct)
    close_cut = nearest_rank([r.closeness for r in records], close_pct)
    eligible = {
        r.account_id for r in records
        if r.in_degree_centrality > indeg_cut or r.closeness > close_cut
    }
    if not eligible:
        log.warning("no account exceeds the in-degree or closeness percentile")
        return StratifiedResult([], eligible)

    scored: list[tuple[str, float]] = []
    diagnostics: list[str] = []
    for account in sorted(eligible):
        sample = sample_topical_tweets(
            tweets_by_account.get(account, ()), keywords, per_account_tweet_sample, seed, account
        )
        if not sample:
            diagnostics.append(f"{account}: no scored topical tweets; excluded")
            continue
        scored.append((account, upper_quartile([t.stance.p_pro for t in sample])))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return StratifiedResult(scored[:sample_n], eligible, diagnostics)


CANDIDATE_HEADER = ("account_id", "score", "reason")


def write_candidates(ranked: Iterable[tuple[str, float]], stratified: Iterable[tuple[str, float]], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CANDIDATE_HEADER)
    for account, score in ranked:
        writer.writerow([account, repr(score), "rank"])
    for account, score in stratified:
        writer.writerow([account, repr(score), "stratified"])


def resolve_core(labels: Iterable[LabelRecord]) -> CoreSets:
    """Core sets from manual labels.

    ``official`` implies pro core; ``unsure`` is ignored. Non-manual
    sources never make an account core. A manual pro label and a manual
    anti label for one account (in any periods) is a fatal conflict.
    """
    kinds: dict[str, set[Label]] = defaultdict(set)
    for rec in labels:
        if rec.source is LabelSource.MANUAL:
            kinds[rec.account_id].add(rec.label)
    pro, anti, official = set(), set(), set()
    for account in sorted(kinds):
        got = kinds[account]
        is_pro = bool(got & {Label.PRO, Label.OFFICIAL})
        if is_pro and Label.ANTI in got:
            raise CorpusError(f"account {account!r} labeled both pro and anti by manual source")
        if is_pro:
            pro.add(account)
        elif Label.ANTI in got:
            anti.add(account)
        if Label.OFFICIAL in got:
            official.add(account)
    return CoreSets(frozenset(pro), frozenset(anti), frozenset(official))
