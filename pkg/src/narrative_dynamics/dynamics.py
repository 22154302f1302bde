"""Weekly activity, subtopic distributions, subtopic leaning, and takeover events.

A tweet is attributed to its author's class in the period that contains
the first day of the tweet's week. Activity counts every authored record
(original tweets, retweets, replies, quotes).
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .core import CoreSets
from .corpus import StudyWindow, Tweet, assign_week
from .narratives import SubtopicMapping

COHORTS = ("all", "pro", "anti", "unsure", "pro_core", "anti_core")
MIN_SCORED_TOTAL = 3


def _weekly(tweets: Iterable[Tweet], window: StudyWindow):
    for t in tweets:
        week = assign_week(t, window)
        if week is not None:
            yield week, t


def cohorts_of(author: str, week: int, window: StudyWindow, classes: Mapping[str, Mapping[str, str]], cores: CoreSets) -> list[str]:
    period = window.period_of_week(week).value
    out = ["all", classes.get(period, {}).get(author, "unsure")]
    if author in cores.pro_core:
        out.append("pro_core")
    elif author in cores.anti_core:
        out.append("anti_core")
    return out


def activity_series(
    tweets: Iterable[Tweet],
    window: StudyWindow,
    classes: Mapping[str, Mapping[str, str]],
    cores: CoreSets,
    mapping: SubtopicMapping | None = None,
    scope: str = "all",
) -> dict[str, list[int]]:
    """Weekly record counts per cohort; ``scope="subtopical"`` keeps labeled tweets only."""
    if scope not in ("all", "subtopical"):
        raise ValueError(f"scope must be 'all' or 'subtopical', not {scope!r}")
    if scope == "subtopical" and mapping is None:
        raise ValueError("subtopical scope needs a subtopic mapping")
    series = {c: [0] * window.num_weeks for c in COHORTS}
    for week, t in _weekly(tweets, window):
        if scope == "subtopical" and not mapping.subtopical(t.id):
            continue
        for c in cohorts_of(t.author_id, week, window, classes, cores):
            series[c][week - 1] += 1
    return series


def subtopic_week_distribution(
    tweets: Iterable[Tweet], window: StudyWindow, mapping: SubtopicMapping, subtopics: Sequence[str]
) -> dict[str, list[int]]:
    matrix = {s: [0] * window.num_weeks for s in subtopics}
    for week, t in _weekly(tweets, window):
        for s in mapping.labels.get(t.id, ()):
            if s in matrix:
                matrix[s][week - 1] += 1
    return matrix


def subtopic_cohort_counts(
    tweets: Iterable[Tweet],
    window: StudyWindow,
    classes: Mapping[str, Mapping[str, str]],
    cores: CoreSets,
    mapping: SubtopicMapping,
    subtopics: Sequence[str],
) -> dict[str, dict[str, int]]:
    """Whole-window subtopic frequency split by cohort."""
    counts = {s: {c: 0 for c in COHORTS} for s in subtopics}
    for week, t in _weekly(tweets, window):
        labels = [s for s in mapping.labels.get(t.id, ()) if s in counts]
        if not labels:
            continue
        for c in cohorts_of(t.author_id, week, window, classes, cores):
            for s in labels:
                counts[s][c] += 1
    return counts


def subtopic_leaning(anti: int, pro: int, min_total: int = MIN_SCORED_TOTAL) -> float | None:
    """``(anti - pro) / (anti + pro)``, or None unless the total exceeds ``min_total``."""
    total = anti + pro
    if total <= min_total:
        return None
    return (anti - pro) / total


@dataclass(frozen=True)
class SubtopicLeaningCell:
    subtopic: str
    week: int
    anti_activity: int
    pro_activity: int

    @property
    def score(self) -> float | None:
        return subtopic_leaning(self.anti_activity, self.pro_activity)

    @property
    def excluded(self) -> bool:
        return self.score is None


def leaning_cells(
    tweets: Iterable[Tweet],
    window: StudyWindow,
    classes: Mapping[str, Mapping[str, str]],
    mapping: SubtopicMapping,
    subtopics: Sequence[str],
) -> dict[str, list[SubtopicLeaningCell]]:
    anti: dict[tuple[str, int], int] = defaultdict(int)
    pro: dict[tuple[str, int], int] = defaultdict(int)
    for week, t in _weekly(tweets, window):
        labels = mapping.labels.get(t.id)
        if not labels:
            continue
        cls = classes.get(window.period_of_week(week).value, {}).get(t.author_id, "unsure")
        target = anti if cls == "anti" else pro if cls == "pro" else None
        if target is None:
            continue
        for s in labels:
            target[(s, week)] += 1
    return {
        s: [SubtopicLeaningCell(s, w, anti[(s, w)], pro[(s, w)]) for w in window.weeks]
        for s in subtopics
    }


def _camp(score: float, dominance: float) -> str:
    if score >= dominance:
        return "anti"
    if score <= -dominance:
        return "pro"
    return "contested"


@dataclass
class NarrativeEvents:
    subtopic: str
    introduced_by: str | None = None  # pro, anti, contested; None when every week is excluded
    introduced_week: int | None = None
    appropriations: list[tuple[int, str, str]] = field(default_factory=list)  # (week, from, to)


def introduction_and_appropriation(
    cells: Sequence[SubtopicLeaningCell] | Sequence[tuple[int, float | None]],
    dominance: float = 0.5,
    persistence: int = 2,
    subtopic: str = "",
) -> NarrativeEvents:
    """Introducing camp and sustained takeovers of one subtopic.

    Each non-excluded week is pro (score <= -dominance), anti
    (score >= dominance) or contested. The first non-excluded week names
    the introducer. A takeover is recorded at the first week of a run of
    at least ``persistence`` consecutive non-excluded weeks held by the
    camp opposite to the current holder; the taker becomes the holder.
    """
    scored: list[tuple[int, float]] = []
    for cell in cells:
        if isinstance(cell, SubtopicLeaningCell):
            subtopic = subtopic or cell.subtopic
            week, score = cell.week, cell.score
        else:
            week, score = cell
        if score is not None:
            scored.append((week, score))
    events = NarrativeEvents(subtopic)
    if not scored:
        return events
    events.introduced_week = scored[0][0]
    holder = events.introduced_by = _camp(scored[0][1], dominance)
    if holder == "contested":
        return events

    run_start = None
    run_len = 0
    for week, score in scored[1:]:
        camp = _camp(score, dominance)
        challenger = "anti" if holder == "pro" else "pro"
        if camp == challenger:
            if run_len == 0:
                run_start = week
            run_len += 1
            if run_len == persistence:
                events.appropriations.append((run_start, holder, challenger))
                holder = challenger
                run_len = 0
        else:
            run_len = 0
    return events


OFFICIAL_SERIES = ("tweeted_sub", "tweeted_oth", "retweet_sub", "retweet_oth")


def official_breakdown(
    officials: Iterable[str],
    tweets: Sequence[Tweet],
    window: StudyWindow,
    mapping: SubtopicMapping,
) -> tuple[dict[str, list[int]], list[str]]:
    """Weekly retweets received by and made by official accounts, split subtopical/other.

    Whether a retweet is subtopical is decided by the retweeted status when
    it is in the corpus, otherwise by the retweet's own labels (reported).
    """
    officials = set(officials)
    series = {name: [0] * window.num_weeks for name in OFFICIAL_SERIES}
    diagnostics: list[str] = []
    if not officials:
        return series, diagnostics
    known = {t.id for t in tweets}
    for week, t in _weekly(tweets, window):
        if not t.is_retweet:
            continue
        received = t.retweeted_user_id in officials
        made = t.author_id in officials
        if not (received or made):
            continue
        status = t.retweeted_status_id
        if status is not None and status in known:
            sub = mapping.subtopical(status)
        else:
            sub = mapping.subtopical(t.id)
            diagnostics.append(f"{t.id}: retweeted status {status!r} not in corpus; used retweet text")
        suffix = "sub" if sub else "oth"
        if received:
            series[f"tweeted_{suffix}"][week - 1] += 1
        if made:
            series[f"retweet_{suffix}"][week - 1] += 1
    return series, diagnostics


# ---------------------------------------------------------------------------
# export


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_tidy(rows: Iterable[tuple[str, str, str, int | str, object]], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "cohort", "subtopic", "week", "value"])
    for metric, cohort, subtopic, week, value in rows:
        writer.writerow([metric, cohort, subtopic, week, _fmt(value)])


def write_rows(header: Sequence[str], rows: Iterable[Sequence], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
