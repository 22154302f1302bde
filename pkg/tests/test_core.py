import io
import logging
from datetime import datetime, timezone

import pytest

from narrative_dynamics.core import (
    CoreSets,
    nearest_rank,
    rank_candidates,
    resolve_core,
    sample_topical_tweets,
    stratified_candidates,
    upper_quartile,
    write_candidates,
)
from narrative_dynamics.corpus import CorpusError, Label, LabelRecord, LabelSource, StanceScores, Tweet
from narrative_dynamics.graph import CentralityRecord, CentralityReport

T0 = datetime(2022, 3, 1, tzinfo=timezone.utc)


def scored(account, p_pros, text="topic"):
    return [Tweet(f"{account}-{i}", account, T0, text, stance=StanceScores(p, 1 - p, 0.0)) for i, p in enumerate(p_pros)]


def record(account, indeg, close, infl=0.1, raw=0.0):
    return CentralityRecord(account, indeg, raw, 0.0, close, infl)


def test_nearest_rank():
    assert nearest_rank([0.1, 0.9, 0.9, 0.9], 75) == 0.9
    assert nearest_rank([5, 1, 3], 0) == 1
    assert nearest_rank([5, 1, 3], 100) == 5
    assert nearest_rank(list(range(1, 101)), 75) == 75
    with pytest.raises(ValueError):
        nearest_rank([], 50)
    with pytest.raises(ValueError):
        nearest_rank([1], 101)


def test_upper_quartile_small_samples():
    assert upper_quartile([0.9, 0.9, 0.9, 0.1]) == 0.9
    assert upper_quartile([0.5] * 4) == 0.5
    assert upper_quartile([0.2, 0.4]) == 0.4


def test_rank_candidates():
    report = CentralityReport([record("a", 0, 0, 0.3), record("b", 0, 0, 0.7), record("c", 0, 0, 0.5)])
    assert rank_candidates(report, 1) == [("b", 0.7)]
    assert [a for a, _ in rank_candidates(report, 3)] == ["b", "c", "a"]
    buf = io.StringIO()
    report.write_csv(buf)
    rows = buf.getvalue().splitlines()[1:]
    by_csv = sorted(rows, key=lambda r: -float(r.split(",")[-1]))
    assert [r.split(",")[0] for r in by_csv] == [a for a, _ in rank_candidates(report, 3)]


def test_or_rule_and_q3_ranking():
    recs = [record(f"low{i}", 0.1, 0.1) for i in range(6)]
    recs += [record("indeg_only", 0.9, 0.0), record("close_only", 0.0, 0.9)]
    report = CentralityReport(recs)
    tweets = {"indeg_only": scored("indeg_only", [0.9, 0.9, 0.9, 0.1]), "close_only": scored("close_only", [0.5] * 4)}
    result = stratified_candidates(report, tweets)
    assert result.eligible == {"indeg_only", "close_only"}
    assert result.candidates == [("indeg_only", 0.9), ("close_only", 0.5)]


def test_no_eligible_account_warns(caplog):
    report = CentralityReport([record(f"x{i}", 0.2, 0.2) for i in range(4)])
    with caplog.at_level(logging.WARNING):
        result = stratified_candidates(report, {})
    assert result.candidates == [] and "no account exceeds" in caplog.text


def test_output_is_subset_and_capped():
    recs = [record(f"a{i:02d}", i / 40, 0.0) for i in range(40)]
    report = CentralityReport(recs)
    tweets = {f"a{i:02d}": scored(f"a{i:02d}", [i / 40] * 3) for i in range(40)}
    result = stratified_candidates(report, tweets, sample_n=5)
    assert {a for a, _ in result.candidates} <= result.eligible
    assert len(result.candidates) == 5


def test_accounts_without_scored_tweets_are_reported():
    recs = [record(f"low{i}", 0.0, 0.0) for i in range(4)] + [record("b", 0.9, 0.9)]
    result = stratified_candidates(CentralityReport(recs), {})
    assert result.candidates == [] and "b: no scored topical tweets" in result.diagnostics[0]


def test_sampling_is_reproducible_and_keyword_filtered():
    tweets = scored("acc", [i / 50 for i in range(50)]) + scored("acc", [1.0] * 5, text="unrelated")
    a = sample_topical_tweets(tweets, ["topic"], 20, 42, "acc")
    b = sample_topical_tweets(list(reversed(tweets)), ["topic"], 20, 42, "acc")
    assert a == b and len(a) == 20
    assert all("topic" in t.text for t in a)
    assert sample_topical_tweets(tweets, ["TOPIC"], 100, 1, "acc") == sorted(
        [t for t in tweets if t.text == "topic"], key=lambda t: t.id)


def test_write_candidates():
    buf = io.StringIO()
    write_candidates([("a", 0.5)], [("b", 0.9)], buf)
    assert buf.getvalue() == "account_id,score,reason\na,0.5,rank\nb,0.9,stratified\n"


def test_resolve_core_examples():
    officials = [LabelRecord(f"gov{i}", Label.OFFICIAL) for i in range(11)]
    cores = resolve_core(officials + [LabelRecord("u", Label.UNSURE), LabelRecord("x", Label.ANTI),
                                      LabelRecord("ext", Label.ANTI, LabelSource.EXTERNAL)])
    assert len(cores.official) == 11 and cores.official <= cores.pro_core
    assert "u" not in cores.pro_core | cores.anti_core
    assert cores.anti_core == {"x"}
    with pytest.raises(CorpusError):
        resolve_core([LabelRecord("a", Label.PRO, period="T1"), LabelRecord("a", Label.ANTI, period="T2")])


def test_core_sets_contract_and_mapping():
    with pytest.raises(CorpusError):
        CoreSets(frozenset("a"), frozenset("a"))
    with pytest.raises(CorpusError):
        CoreSets(frozenset(), frozenset(), frozenset("a"))
    cores = CoreSets(frozenset({"p", "o"}), frozenset({"q"}), frozenset({"o"}))
    assert CoreSets.from_mapping(cores.to_mapping()) == cores
    assert cores.swapped().pro_core == {"q"}
