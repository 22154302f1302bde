"""Interchange data model, corpus parsing, and study-window bookkeeping.

A corpus is a UTF-8 line-delimited file with one JSON object per line.
Every record is validated on load; rejected lines are returned as
diagnostics instead of being dropped silently.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
STANCE_TOLERANCE = 1e-6


class CorpusError(Exception):
    """Fatal problem with a corpus, label file, or window definition."""


class Kind(str, Enum):
    ORIGINAL = "original"
    RETWEET = "retweet"
    REPLY = "reply"
    QUOTE = "quote"


class Period(str, Enum):
    T1 = "T1"
    T2 = "T2"
    OUT = "out"


@dataclass(frozen=True)
class StanceScores:
    p_pro: float
    p_anti: float
    p_unsure: float

    def __post_init__(self) -> None:
        for name in ("p_pro", "p_anti", "p_unsure"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        total = self.p_pro + self.p_anti + self.p_unsure
        if abs(total - 1.0) > STANCE_TOLERANCE:
            raise ValueError(f"stance probabilities sum to {total}, not 1")


@dataclass(frozen=True)
class Tweet:
    id: str
    author_id: str
    created_at: datetime
    text: str
    kind: Kind = Kind.ORIGINAL
    retweeted_user_id: str | None = None
    retweeted_status_id: str | None = None
    lang: str | None = None
    stance: StanceScores | None = None

    @property
    def is_retweet(self) -> bool:
        return self.kind is Kind.RETWEET

    @property
    def self_retweet(self) -> bool:
        return self.is_retweet and self.retweeted_user_id == self.author_id

    def to_record(self) -> dict:
        record = {
            "id": self.id,
            "author_id": self.author_id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
            "kind": self.kind.value,
            "retweeted_user_id": self.retweeted_user_id,
            "retweeted_status_id": self.retweeted_status_id,
            "lang": self.lang,
            "stance": None,
        }
        if self.stance is not None:
            record["stance"] = {
                "p_pro": self.stance.p_pro,
                "p_anti": self.stance.p_anti,
                "p_unsure": self.stance.p_unsure,
            }
        return record


@dataclass(frozen=True)
class Diagnostic:
    line: int
    reason: str
    record_id: str | None = None
    source: str | None = None

    def __str__(self) -> str:
        where = f"{self.source}:{self.line}" if self.source else f"line {self.line}"
        return f"{where}: {self.reason}"


@dataclass
class Corpus:
    """Validated tweets in input order plus per-line rejections."""

    tweets: list[Tweet]
    diagnostics: list[Diagnostic] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self.tweets)

    def by_id(self) -> dict[str, Tweet]:
        return {t.id: t for t in self.tweets}

    def time_range(self) -> tuple[datetime, datetime] | None:
        if not self.tweets:
            return None
        stamps = [t.created_at for t in self.tweets]
        return min(stamps), max(stamps)


# ---------------------------------------------------------------------------
# timestamps


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime (seconds precision)."""
    if not isinstance(value, str) or not value:
        raise ValueError("created_at must be a non-empty string")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp {value!r} lacks a UTC offset")
    return parsed.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# record validation


def _optional_str(record: dict, key: str) -> str | None:
    value = record.get(key)
    if value is None or value == "":
        return None
    if not isinstance(value, (str, int)):
        raise ValueError(f"{key} must be a string")
    return str(value)


def tweet_from_record(record: dict) -> Tweet:
    """Build a Tweet from one interchange record; raises ValueError with a reason."""
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    for key in ("id", "author_id"):
        value = record.get(key)
        if value is None or (isinstance(value, str) and not value.strip()):
            raise ValueError(f"missing {key}")
        if not isinstance(value, (str, int)):
            raise ValueError(f"{key} must be a string")
    if "created_at" not in record:
        raise ValueError("missing created_at")
    try:
        created_at = parse_timestamp(record["created_at"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad created_at: {exc}") from None
    text = record.get("text")
    if not isinstance(text, str):
        raise ValueError("missing text")
    try:
        kind = Kind(record.get("kind") or "original")
    except ValueError:
        raise ValueError(f"unknown kind {record.get('kind')!r}") from None

    retweeted_user_id = _optional_str(record, "retweeted_user_id")
    if kind is Kind.RETWEET and retweeted_user_id is None:
        raise ValueError("retweet missing target")

    stance = None
    raw_stance = record.get("stance")
    if raw_stance is not None:
        if not isinstance(raw_stance, dict):
            raise ValueError("stance must be an object")
        try:
            stance = StanceScores(
                float(raw_stance["p_pro"]),
                float(raw_stance["p_anti"]),
                float(raw_stance["p_unsure"]),
            )
        except KeyError as exc:
            raise ValueError(f"stance missing {exc.args[0]}") from None
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad stance: {exc}") from None

    return Tweet(
        id=str(record["id"]),
        author_id=str(record["author_id"]),
        created_at=created_at,
        text=text,
        kind=kind,
        retweeted_user_id=retweeted_user_id,
        retweeted_status_id=_optional_str(record, "retweeted_status_id"),
        lang=_optional_str(record, "lang"),
        stance=stance,
    )


def parse_corpus(stream: Iterable[str], schema_version: str = SCHEMA_VERSION) -> Corpus:
    """Parse line-delimited interchange records.

    Blank lines are skipped. Malformed lines and duplicate ids become
    diagnostics; the first occurrence of a duplicated id is kept.
    """
    if schema_version != SCHEMA_VERSION:
        raise CorpusError(f"unsupported schema version {schema_version!r}")
    tweets: list[Tweet] = []
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()
    try:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append(Diagnostic(lineno, f"invalid JSON: {exc.msg}"))
                continue
            try:
                tweet = tweet_from_record(record)
            except ValueError as exc:
                rid = record.get("id") if isinstance(record, dict) else None
                diagnostics.append(Diagnostic(lineno, str(exc), None if rid is None else str(rid)))
                continue
            if tweet.id in seen:
                diagnostics.append(Diagnostic(lineno, "duplicate id", tweet.id))
                continue
            seen.add(tweet.id)
            if tweet.self_retweet:
                log.debug("self-retweet %s by %s", tweet.id, tweet.author_id)
            tweets.append(tweet)
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"unreadable corpus stream: {exc}") from exc
    return Corpus(tweets, diagnostics, schema_version)


def read_corpus(paths: str | Path | Iterable[str | Path]) -> Corpus:
    """Parse one or more corpus files as a single corpus (ids unique across files)."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    tweets: list[Tweet] = []
    diagnostics: list[Diagnostic] = []
    seen: set[str] = set()
    for path in map(Path, paths):
        try:
            with path.open(encoding="utf-8") as fh:
                part = parse_corpus(fh)
        except OSError as exc:
            raise CorpusError(f"cannot read {path}: {exc}") from exc
        diagnostics.extend(replace(d, source=path.name) for d in part.diagnostics)
        for tweet in part.tweets:
            if tweet.id in seen:
                diagnostics.append(Diagnostic(0, "duplicate id across files", tweet.id, path.name))
                continue
            seen.add(tweet.id)
            tweets.append(tweet)
    return Corpus(tweets, diagnostics)


def emit_corpus(tweets: Iterable[Tweet], out: IO[str]) -> int:
    """Write tweets as interchange lines; returns the number written."""
    count = 0
    for tweet in tweets:
        out.write(json.dumps(tweet.to_record(), ensure_ascii=False, sort_keys=True))
        out.write("\n")
        count += 1
    return count


def write_corpus(tweets: Iterable[Tweet], path: str | Path) -> int:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        return emit_corpus(tweets, fh)


# ---------------------------------------------------------------------------
# study window


def _first_of_next_month(day: date) -> date:
    if day.month == 12:
        return date(day.year + 1, 1, 1)
    return date(day.year, day.month + 1, 1)


@dataclass(frozen=True)
class StudyWindow:
    """Consecutive 7-day weeks from ``start_date``, split once into T1/T2."""

    start_date: date
    num_weeks: int
    period_boundary: date | None = None

    def __post_init__(self) -> None:
        if self.num_weeks <= 0:
            raise CorpusError("num_weeks must be positive")
        if self.period_boundary is None:
            object.__setattr__(self, "period_boundary", _first_of_next_month(self.start_date))
        end = self.start_date + timedelta(days=7 * self.num_weeks)
        if not self.start_date <= self.period_boundary < end:
            raise CorpusError(
                f"period_boundary {self.period_boundary} outside window "
                f"[{self.start_date}, {end})"
            )

    @property
    def start(self) -> datetime:
        return datetime.combine(self.start_date, datetime.min.time(), tzinfo=timezone.utc)

    @property
    def end(self) -> datetime:
        return self.start + timedelta(days=7 * self.num_weeks)

    @property
    def boundary(self) -> datetime:
        return datetime.combine(self.period_boundary, datetime.min.time(), tzinfo=timezone.utc)

    @property
    def weeks(self) -> range:
        return range(1, self.num_weeks + 1)

    def week_start(self, week: int) -> datetime:
        return self.start + timedelta(days=7 * (week - 1))

    def period_of_week(self, week: int) -> Period:
        """Period containing the first day of ``week``."""
        return period_of_instant(self.week_start(week), self)

    @classmethod
    def from_mapping(cls, data: dict) -> "StudyWindow":
        def as_date(value):
            if value is None or isinstance(value, date):
                return value
            return date.fromisoformat(str(value))

        try:
            return cls(
                start_date=as_date(data["start_date"]),
                num_weeks=int(data.get("num_weeks", 8)),
                period_boundary=as_date(data.get("period_boundary")),
            )
        except KeyError as exc:
            raise CorpusError(f"window missing {exc.args[0]}") from None
        except (TypeError, ValueError) as exc:
            raise CorpusError(f"bad window: {exc}") from None

    def to_mapping(self) -> dict:
        return {
            "start_date": self.start_date.isoformat(),
            "num_weeks": self.num_weeks,
            "period_boundary": self.period_boundary.isoformat(),
        }


def week_of_instant(instant: datetime, window: StudyWindow) -> int | None:
    if not window.start <= instant < window.end:
        return None
    return (instant - window.start).days // 7 + 1


def period_of_instant(instant: datetime, window: StudyWindow) -> Period:
    if not window.start <= instant < window.end:
        return Period.OUT
    return Period.T1 if instant < window.boundary else Period.T2


def assign_week(tweet: Tweet, window: StudyWindow) -> int | None:
    """1-based week index of the tweet, or None when outside the window."""
    return week_of_instant(tweet.created_at, window)


def assign_period(tweet: Tweet, window: StudyWindow) -> Period:
    return period_of_instant(tweet.created_at, window)


# ---------------------------------------------------------------------------
# label files


class Label(str, Enum):
    PRO = "pro"
    ANTI = "anti"
    UNSURE = "unsure"
    OFFICIAL = "official"


class LabelSource(str, Enum):
    MANUAL = "manual"
    LEANING_RULE = "leaning_rule"
    EXTERNAL = "external"


@dataclass(frozen=True)
class LabelRecord:
    account_id: str
    label: Label
    source: LabelSource = LabelSource.MANUAL
    period: str = "all"  # T1, T2, or all


LABEL_HEADER = ("account_id", "label", "source", "period")


def parse_labels(stream: Iterable[str]) -> tuple[list[LabelRecord], list[Diagnostic]]:
    """Parse a label CSV.

    Identical repeats collapse silently. A manual key carrying two
    different labels is fatal; for other sources the first row wins and
    the repeat is reported.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames[:4]) != LABEL_HEADER:
        raise CorpusError(f"label file header must be {','.join(LABEL_HEADER)}")
    records: dict[tuple[str, str, str], LabelRecord] = {}
    diagnostics: list[Diagnostic] = []
    for lineno, row in enumerate(reader, start=2):
        account = (row.get("account_id") or "").strip()
        if not account:
            diagnostics.append(Diagnostic(lineno, "missing account_id"))
            continue
        try:
            label = Label((row.get("label") or "").strip())
            source = LabelSource((row.get("source") or "manual").strip() or "manual")
        except ValueError as exc:
            diagnostics.append(Diagnostic(lineno, str(exc), account))
            continue
        period = (row.get("period") or "all").strip() or "all"
        if period not in ("T1", "T2", "all"):
            diagnostics.append(Diagnostic(lineno, f"unknown period {period!r}", account))
            continue
        rec = LabelRecord(account, label, source, period)
        key = (account, period, source.value)
        previous = records.get(key)
        if previous is None:
            records[key] = rec
        elif previous.label != label:
            if source is LabelSource.MANUAL:
                raise CorpusError(
                    f"conflicting manual labels for account {account!r} ({period}): "
                    f"{previous.label.value} vs {label.value}"
                )
            diagnostics.append(Diagnostic(lineno, "conflicting duplicate label ignored", account))
    return list(records.values()), diagnostics


def read_labels(path: str | Path) -> tuple[list[LabelRecord], list[Diagnostic]]:
    try:
        with Path(path).open(encoding="utf-8", newline="") as fh:
            return parse_labels(fh)
    except OSError as exc:
        raise CorpusError(f"cannot read label file {path}: {exc}") from exc


def write_labels(records: Iterable[LabelRecord], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LABEL_HEADER)
    for rec in records:
        writer.writerow([rec.account_id, rec.label.value, rec.source.value, rec.period])


def labels_to_text(records: Iterable[LabelRecord]) -> str:
    buf = io.StringIO()
    write_labels(records, buf)
    return buf.getvalue()
