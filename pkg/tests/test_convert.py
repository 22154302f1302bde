import io
import json

import pytest

from narrative_dynamics.convert import convert_platform_export, resolve_profile, write_records
from narrative_dynamics.corpus import CorpusError, parse_corpus


def v2_fixture() -> list[str]:
    """Ten raw v2 objects: originals, retweets (resolved via includes and via mentions), a quote, a reply."""
    lines = []
    for i in range(6):
        lines.append({"id": str(100 + i), "author_id": f"u{i % 3}", "created_at": f"2022-03-0{i + 1}T08:00:00.000Z",
                      "text": f"原文 {i}", "lang": "zh"})
    page = {
        "data": [
            {"id": "200", "author_id": "u9", "created_at": "2022-03-07T08:00:00.000Z", "text": "RT @u0: 原文 0",
             "lang": "zh", "referenced_tweets": [{"type": "retweeted", "id": "100"}]},
            {"id": "201", "author_id": "u8", "created_at": "2022-03-07T09:00:00.000Z", "text": "RT @u5: x",
             "referenced_tweets": [{"type": "retweeted", "id": "999"}],
             "entities": {"mentions": [{"username": "u5", "id": "u5"}]}},
        ],
        "includes": {"tweets": [{"id": "100", "author_id": "u0", "text": "原文 0"}]},
    }
    lines.append(page)
    lines.append({"id": "202", "author_id": "u1", "created_at": "2022-03-08T00:00:00Z", "text": "quoting",
                  "referenced_tweets": [{"type": "quoted", "id": "101"}]})
    lines.append({"id": "203", "author_id": "u2", "created_at": "2022-03-08T00:00:01Z", "text": "reply",
                  "referenced_tweets": [{"type": "replied_to", "id": "102"}]})
    return [json.dumps(x, ensure_ascii=False) for x in lines]


def test_round_trip_ten_records():
    records, diags = convert_platform_export(v2_fixture(), "twitter-v2")
    assert diags == [] and len(records) == 10
    buf = io.StringIO()
    write_records(records, buf)
    corpus = parse_corpus(buf.getvalue().splitlines())
    assert corpus.diagnostics == []
    by_id = corpus.by_id()
    assert by_id["200"].kind.value == "retweet" and by_id["200"].retweeted_user_id == "u0"
    assert by_id["201"].retweeted_user_id == "u5"
    assert by_id["202"].kind.value == "quote"
    assert by_id["203"].kind.value == "reply"


def test_missing_text_is_skipped():
    raw = json.dumps({"id": "1", "author_id": "a", "created_at": "2022-03-01T00:00:00Z"})
    records, diags = convert_platform_export([raw, "[1]", "{bad"], "twitter-v2")
    assert records == []
    assert [d.reason for d in diags][0] == "missing text"
    assert len(diags) == 3


def test_v1_profile():
    raw = {
        "id_str": "5", "user": {"id_str": "a"}, "created_at": "Wed Mar 02 10:00:00 +0000 2022",
        "full_text": "RT @b: hi", "retweeted_status": {"id_str": "4", "user": {"id_str": "b"}},
    }
    records, diags = convert_platform_export([json.dumps(raw)], "twitter-v1")
    assert diags == []
    assert records[0]["created_at"] == "2022-03-02T10:00:00Z"
    assert records[0]["kind"] == "retweet" and records[0]["retweeted_user_id"] == "b"


def test_profiles():
    with pytest.raises(CorpusError):
        resolve_profile("myspace")
    with pytest.raises(CorpusError):
        resolve_profile({"id": "id"})
    custom = resolve_profile({"id": "tid", "author_id": "who", "created_at": "ts", "text": "body|msg"})
    raw = {"tid": 1, "who": 2, "ts": "2022-03-01T00:00:00Z", "msg": "x"}
    records, diags = convert_platform_export([json.dumps(raw)], {"id": "tid", "author_id": "who", "created_at": "ts", "text": "body|msg"})
    assert custom.name == "custom"
    assert diags == [] and records[0]["id"] == "1" and records[0]["text"] == "x"
