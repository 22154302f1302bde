import io
import json
from datetime import date, datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrative_dynamics.corpus import (
    Corpus,
    CorpusError,
    Kind,
    Label,
    LabelRecord,
    LabelSource,
    Period,
    StanceScores,
    StudyWindow,
    Tweet,
    assign_period,
    assign_week,
    emit_corpus,
    labels_to_text,
    parse_corpus,
    parse_labels,
    read_corpus,
)

UTC = timezone.utc


def rec(i, author="a", kind="original", **extra):
    base = {"id": f"t{i}", "author_id": author, "created_at": "2022-03-02T10:00:00Z", "text": f"hello {i}", "kind": kind}
    base.update(extra)
    return json.dumps(base)


def tweet_at(when: datetime) -> Tweet:
    return Tweet("x", "a", when, "")


def test_well_formed_three_lines():
    corpus = parse_corpus([rec(1), rec(2), rec(3)])
    assert len(corpus.tweets) == 3
    assert corpus.diagnostics == []


def test_missing_author_reports_line():
    bad = json.dumps({"id": "t2", "created_at": "2022-03-02T10:00:00Z", "text": "x"})
    corpus = parse_corpus([rec(1), bad, rec(3)])
    assert len(corpus.tweets) == 2
    assert len(corpus.diagnostics) == 1
    d = corpus.diagnostics[0]
    assert d.line == 2 and "author_id" in d.reason


def test_retweet_without_target_rejected():
    corpus = parse_corpus([rec(1, kind="retweet")])
    assert corpus.tweets == []
    assert corpus.diagnostics[0].reason == "retweet missing target"


def test_duplicates_keep_first_and_blank_lines_skip():
    corpus = parse_corpus([rec(1, author="first"), "", "   ", rec(1, author="second"), "{not json"])
    assert [t.author_id for t in corpus.tweets] == ["first"]
    reasons = [d.reason for d in corpus.diagnostics]
    assert reasons[0] == "duplicate id"
    assert reasons[1].startswith("invalid JSON")


def test_unknown_schema_version_is_fatal():
    with pytest.raises(CorpusError):
        parse_corpus([], schema_version="9")


def test_stance_validation():
    StanceScores(0.2, 0.3, 0.5)
    with pytest.raises(ValueError):
        StanceScores(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        StanceScores(-0.1, 0.6, 0.5)
    bad = rec(1, stance={"p_pro": 0.9, "p_anti": 0.9, "p_unsure": 0.0})
    assert "stance" in parse_corpus([bad]).diagnostics[0].reason


def test_round_trip_emit_parse():
    tweets = [
        Tweet("1", "a", datetime(2022, 3, 1, tzinfo=UTC), "文本 text", Kind.ORIGINAL, lang="zh",
              stance=StanceScores(0.25, 0.5, 0.25)),
        Tweet("2", "b", datetime(2022, 3, 2, 12, 30, 5, tzinfo=UTC), "RT @a: 文本", Kind.RETWEET, "a", "1", "zh"),
    ]
    buf = io.StringIO()
    assert emit_corpus(tweets, buf) == 2
    back = parse_corpus(buf.getvalue().splitlines())
    assert back.tweets == tweets and back.diagnostics == []


def test_read_corpus_dedupes_across_files(tmp_path):
    (tmp_path / "a.jsonl").write_text(rec(1) + "\n" + rec(2) + "\n", encoding="utf-8")
    (tmp_path / "b.jsonl").write_text(rec(2) + "\n" + rec(3) + "\n", encoding="utf-8")
    corpus = read_corpus([tmp_path / "a.jsonl", tmp_path / "b.jsonl"])
    assert [t.id for t in corpus.tweets] == ["t1", "t2", "t3"]
    assert corpus.diagnostics[0].source == "b.jsonl"
    with pytest.raises(CorpusError):
        read_corpus(tmp_path / "missing.jsonl")


# -- study window --------------------------------------------------------


WINDOW = StudyWindow(date(2022, 3, 1), 8, date(2022, 4, 1))


def test_week_examples():
    start = WINDOW.start
    assert assign_week(tweet_at(start), WINDOW) == 1
    assert assign_week(tweet_at(start + timedelta(days=9)), WINDOW) == 2
    assert assign_week(tweet_at(start + timedelta(days=7 * 8)), WINDOW) is None
    assert assign_week(tweet_at(start - timedelta(seconds=1)), WINDOW) is None


def test_period_examples():
    b = WINDOW.boundary
    assert assign_period(tweet_at(b - timedelta(seconds=1)), WINDOW) is Period.T1
    assert assign_period(tweet_at(b), WINDOW) is Period.T2
    assert assign_period(tweet_at(datetime(2022, 3, 15, tzinfo=UTC)), WINDOW) is Period.T1
    assert assign_period(tweet_at(WINDOW.end), WINDOW) is Period.OUT


def test_default_boundary_is_next_month():
    assert StudyWindow(date(2022, 3, 1), 8).period_boundary == date(2022, 4, 1)
    assert StudyWindow(date(2021, 12, 6), 8).period_boundary == date(2022, 1, 1)


def test_window_rejects_bad_boundary():
    with pytest.raises(CorpusError):
        StudyWindow(date(2022, 3, 1), 2, date(2022, 4, 1))
    with pytest.raises(CorpusError):
        StudyWindow(date(2022, 3, 1), 0)


def test_window_mapping_round_trip():
    assert StudyWindow.from_mapping(WINDOW.to_mapping()) == WINDOW
    with pytest.raises(CorpusError):
        StudyWindow.from_mapping({"num_weeks": 3})


@settings(max_examples=300, deadline=None)
@given(
    offset=st.integers(min_value=0, max_value=8 * 7 * 86400 - 1),
    boundary_week=st.integers(min_value=1, max_value=8),
)
def test_week_and_period_agree_for_week_aligned_boundaries(offset, boundary_week):
    window = StudyWindow(date(2022, 3, 1), 8, date(2022, 3, 1) + timedelta(days=7 * (boundary_week - 1)))
    t = tweet_at(window.start + timedelta(seconds=offset))
    week = assign_week(t, window)
    assert week is not None
    assert assign_period(t, window) is window.period_of_week(week)


@settings(max_examples=200, deadline=None)
@given(offset=st.integers(min_value=-10 * 86400, max_value=70 * 86400))
def test_week_is_floor_of_elapsed_days(offset):
    t = tweet_at(WINDOW.start + timedelta(seconds=offset))
    expected = offset // (7 * 86400) + 1
    assert assign_week(t, WINDOW) == (expected if 1 <= expected <= 8 else None)


# -- labels --------------------------------------------------------------


def test_labels_round_trip_and_conflicts():
    recs = [LabelRecord("a", Label.PRO), LabelRecord("b", Label.ANTI, LabelSource.EXTERNAL, "T2")]
    back, diags = parse_labels(io.StringIO(labels_to_text(recs)))
    assert back == recs and diags == []

    text = "account_id,label,source,period\nx,pro,external,all\nx,anti,external,all\n"
    back, diags = parse_labels(io.StringIO(text))
    assert back == [LabelRecord("x", Label.PRO, LabelSource.EXTERNAL)]
    assert diags[0].reason == "conflicting duplicate label ignored"

    with pytest.raises(CorpusError, match="conflicting manual labels"):
        parse_labels(io.StringIO("account_id,label,source,period\nx,pro,manual,all\nx,anti,manual,all\n"))
    with pytest.raises(CorpusError):
        parse_labels(io.StringIO("id,label\nx,pro\n"))


def test_corpus_helpers():
    corpus = parse_corpus([rec(1), rec(2, created_at="2022-03-05T00:00:00+08:00")])
    assert isinstance(corpus, Corpus)
    lo, hi = corpus.time_range()
    assert lo == datetime(2022, 3, 2, 10, tzinfo=UTC)
    assert hi == datetime(2022, 3, 4, 16, tzinfo=UTC)
    assert set(corpus.by_id()) == {"t1", "t2"}
