"""Retweet-based account leaning per period and cross-period transitions.

An account's leaning is the share of its core-directed retweets that
target the pro core. Above 0.5 is pro, below is anti, and an exact tie or
an account with no core retweets is unsure.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable, Mapping

from .core import CoreSets
from .corpus import Label, LabelRecord, LabelSource, Period, StudyWindow, Tweet, assign_period

CLASSES = ("pro", "anti", "unsure")
ABSENT = "absent"


@dataclass(frozen=True)
class LeaningAssignment:
    account_id: str
    period: str
    n_pro: int
    n_anti: int

    @property
    def leaning_fraction(self) -> Fraction | None:
        total = self.n_pro + self.n_anti
        return None if total == 0 else Fraction(self.n_pro, total)

    @property
    def leaning(self) -> float | None:
        total = self.n_pro + self.n_anti
        return None if total == 0 else self.n_pro / total

    @property
    def cls(self) -> str:
        return classify(self.leaning)


def classify(leaning: float | None) -> str:
    if leaning is None or leaning == 0.5:
        return "unsure"
    return "pro" if leaning > 0.5 else "anti"


def compute_leaning(account_id: str, tweets: Iterable[Tweet], cores: CoreSets, period: str = "all") -> LeaningAssignment:
    """Count the account's retweets of each core; ``tweets`` are pre-filtered to the period."""
    n_pro = n_anti = 0
    for t in tweets:
        if not t.is_retweet or t.author_id != account_id:
            continue
        if t.retweeted_user_id in cores.pro_core:
            n_pro += 1
        elif t.retweeted_user_id in cores.anti_core:
            n_anti += 1
    return LeaningAssignment(account_id, period, n_pro, n_anti)


def lang_matches(lang: str | None, wanted: str) -> bool:
    """BCP-47 prefix match: ``zh`` accepts ``zh``, ``zh-TW``, ``zh-Hant``."""
    if lang is None:
        return False
    lang, wanted = lang.lower(), wanted.lower()
    return lang == wanted or lang.startswith(wanted + "-")


def _period_tweets(tweets: Iterable[Tweet], window: StudyWindow) -> dict[str, dict[str, list[Tweet]]]:
    out: dict[str, dict[str, list[Tweet]]] = {"T1": defaultdict(list), "T2": defaultdict(list)}
    for t in tweets:
        p = assign_period(t, window)
        if p is not Period.OUT:
            out[p.value][t.author_id].append(t)
    return out


def eligible_accounts(
    tweets_by_author: Mapping[str, list[Tweet]],
    cores: CoreSets,
    min_core_retweets: int = 3,
    min_lang_tweets: int = 3,
    lang: str = "zh",
) -> set[str]:
    """Accounts with at least ``min_core_retweets`` core retweets and more than
    ``min_lang_tweets`` tweets (retweets included) in language ``lang``."""
    core = cores.pro_core | cores.anti_core
    eligible = set()
    for account, tweets in tweets_by_author.items():
        core_rts = sum(1 for t in tweets if t.is_retweet and t.retweeted_user_id in core)
        lang_count = sum(1 for t in tweets if lang_matches(t.lang, lang))
        if core_rts >= min_core_retweets and lang_count > min_lang_tweets:
            eligible.add(account)
    return eligible


def compute_assignments(
    tweets: Iterable[Tweet],
    cores: CoreSets,
    window: StudyWindow,
    min_core_retweets: int = 3,
    min_lang_tweets: int = 3,
    lang: str = "zh",
) -> dict[str, list[LeaningAssignment]]:
    """Leaning of every eligible account, per period, sorted by account id."""
    by_period = _period_tweets(tweets, window)
    result: dict[str, list[LeaningAssignment]] = {}
    for period, by_author in by_period.items():
        accounts = eligible_accounts(by_author, cores, min_core_retweets, min_lang_tweets, lang)
        result[period] = [compute_leaning(a, by_author[a], cores, period) for a in sorted(accounts)]
    return result


@dataclass
class TransitionTable:
    counts: dict[tuple[str, str], int]
    new_account_share: dict[str, float]
    shift_share: dict[tuple[str, str], float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def transition_table(t1: Iterable[LeaningAssignment], t2: Iterable[LeaningAssignment]) -> TransitionTable:
    """Count accounts by (T1 class, T2 class), ``absent`` where unassigned.

    ``shift_share[(a, b)]`` is the fraction of T1-class-``a`` accounts that
    are ``b`` in T2; ``new_account_share`` splits T2-only accounts by class.
    """
    first = {a.account_id: a.cls for a in t1}
    second = {a.account_id: a.cls for a in t2}
    states = CLASSES + (ABSENT,)
    counts = {(a, b): 0 for a in states for b in states if not (a == ABSENT and b == ABSENT)}
    for account in first.keys() | second.keys():
        counts[(first.get(account, ABSENT), second.get(account, ABSENT))] += 1

    new = Counter(second[a] for a in second.keys() - first.keys())
    n_new = sum(new.values())
    new_share = {c: (new[c] / n_new if n_new else 0.0) for c in CLASSES}

    shift: dict[tuple[str, str], float] = {}
    for a in CLASSES:
        row = sum(counts[(a, b)] for b in states)
        for b in states:
            shift[(a, b)] = counts[(a, b)] / row if row else 0.0
    return TransitionTable(counts, new_share, shift)


def resolve_classes(
    assignments: Mapping[str, list[LeaningAssignment]],
    cores: CoreSets,
    labels: Iterable[LabelRecord] = (),
) -> dict[str, dict[str, str]]:
    """Class of each known account per period.

    Priority: leaning rule for eligible accounts, then a manual label,
    then an external label, then core membership. Accounts absent from
    the result are treated as unsure downstream.
    """
    by_source: dict[LabelSource, dict[tuple[str, str], str]] = defaultdict(dict)
    for rec in labels:
        if rec.source is LabelSource.LEANING_RULE:
            continue
        cls = "pro" if rec.label in (Label.PRO, Label.OFFICIAL) else rec.label.value
        periods = ("T1", "T2") if rec.period == "all" else (rec.period,)
        for p in periods:
            key = (rec.account_id, p)
            # a period-specific label beats an "all" label from the same source
            if rec.period != "all" or key not in by_source[rec.source]:
                by_source[rec.source][key] = cls

    classes: dict[str, dict[str, str]] = {"T1": {}, "T2": {}}
    for period in ("T1", "T2"):
        mapping = classes[period]
        for source in (LabelSource.EXTERNAL, LabelSource.MANUAL):
            for (account, p), cls in by_source[source].items():
                if p == period:
                    mapping[account] = cls
        for account in cores.pro_core:
            mapping.setdefault(account, "pro")
        for account in cores.anti_core:
            mapping.setdefault(account, "anti")
        for a in assignments.get(period, ()):
            mapping[a.account_id] = a.cls
    return classes


ASSIGNMENT_HEADER = ("account_id", "period", "n_pro", "n_anti", "leaning", "class")


def write_assignments(assignments: Mapping[str, list[LeaningAssignment]], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ASSIGNMENT_HEADER)
    for period in sorted(assignments):
        for a in assignments[period]:
            leaning = "" if a.leaning is None else repr(a.leaning)
            writer.writerow([a.account_id, a.period, a.n_pro, a.n_anti, leaning, a.cls])


def read_assignments(stream: Iterable[str]) -> dict[str, list[LeaningAssignment]]:
    result: dict[str, list[LeaningAssignment]] = {"T1": [], "T2": []}
    for row in csv.DictReader(stream):
        a = LeaningAssignment(row["account_id"], row["period"], int(row["n_pro"]), int(row["n_anti"]))
        result.setdefault(a.period, []).append(a)
    return result


def write_transitions(table: TransitionTable, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["from_class", "to_class", "count"])
    for (a, b), count in table.counts.items():
        writer.writerow([a, b, count])
