import io
import random
from collections import Counter
from itertools import combinations

import pytest

import oracles
from narrative_dynamics.narratives import (
    CoocNetwork,
    SubtopicLexicon,
    build_cooc,
    extract_trigrams,
    louvain,
    map_tweets_to_subtopics,
    modularity,
    parse_lexicon,
    read_subtopic_labels,
    tokenize,
    trigram_key,
    trigrams_of,
    write_clusters,
    write_lexicon,
    write_subtopic_labels,
)


def test_tokenize_examples():
    assert tokenize("NATO 烏克蘭") == ["nato", "烏", "克", "蘭"]
    assert tokenize("") == []
    assert tokenize("RT @someone: see https://t.co/x 戰爭!") == ["rt", "<user>", "see", "<url>", "戰", "爭"]
    assert tokenize("abc烏def") == ["abc", "烏", "def"]
    assert tokenize("Hello, World", "whitespace") == ["hello", "world"]
    assert tokenize("ab 烏", "cjk-char") == ["a", "b", "烏"]
    with pytest.raises(ValueError):
        tokenize("x", "bogus")


def test_tokenize_matches_constructed_tokens():
    for text, tokens in oracles.mixed_fixture(1, 100):
        assert tokenize(text) == tokens
        assert tokenize(text) == tokenize(text)


def test_sliding_window():
    assert trigrams_of(["a", "b", "c", "d"]) == [trigram_key("abc"), trigram_key("bcd")]
    assert trigrams_of(["a", "b"]) == []


def test_frequency_threshold():
    grams = {"t1": ["x", "y"], "t2": ["x", "y"], "t3": ["x"], "t4": ["x", "x"]}
    assert extract_trigrams(grams) == {"x": 4}
    assert extract_trigrams(grams, count="occurrences") == {"x": 5}
    assert extract_trigrams({"a": ["g"], "b": ["g"]}) == {}
    assert extract_trigrams({"a": ["g"], "b": ["g"], "c": ["g"]}) == {"g": 3}
    with pytest.raises(ValueError):
        extract_trigrams(grams, count="bytes")


def test_counts_match_naive_recount_on_50_tweets():
    fixture = oracles.mixed_fixture(2, 50)
    grams = {f"t{i}": trigrams_of(tokenize(text)) for i, (text, _) in enumerate(fixture)}
    naive = Counter()
    for _, tokens in fixture:
        naive.update({"‧".join(t) for t in oracles.naive_trigrams(tokens)})
    assert extract_trigrams(grams, min_freq=1) == dict(naive)


def test_cooc_examples():
    tri = build_cooc({"t": ["g1", "g2", "g3"]}, ["g1", "g2", "g3"])
    assert tri.edges == {("g1", "g2"): 1, ("g1", "g3"): 1, ("g2", "g3"): 1}
    two = build_cooc({"a": ["g1", "g2"], "b": ["g2", "g1", "g1"]}, ["g1", "g2"])
    assert two.edges == {("g1", "g2"): 2}
    apart = build_cooc({"a": ["g1"], "b": ["g2"]}, ["g1", "g2"])
    assert apart.edges == {} and apart.nodes == ["g1", "g2"]
    subset = build_cooc({"a": ["g1", "g2"], "b": ["g1", "g2"]}, ["g1", "g2"], tweet_ids=["a"], scope=("1", "pro"))
    assert subset.edges == {("g1", "g2"): 1}
    buf = io.StringIO()
    subset.write_csv(buf)
    assert buf.getvalue() == "# scope week=1 cohort=pro\ng1,g2,weight\ng1,g2,1\n"


def two_cliques():
    a, b = ["a1", "a2", "a3"], ["b1", "b2", "b3"]
    edges = {tuple(sorted(e)): 1 for grp in (a, b) for e in combinations(grp, 2)}
    edges[("a1", "b1")] = 1
    return CoocNetwork(sorted(a + b), edges)


def test_two_cliques():
    p = louvain(two_cliques())
    assert sorted(sorted(c.members) for c in p.clusters) == [["a1", "a2", "a3"], ["b1", "b2", "b3"]]
    assert p.modularity == pytest.approx(oracles.best_modularity(two_cliques().nodes, two_cliques().edges), abs=1e-12)


def test_edgeless_singletons():
    p = louvain(CoocNetwork([f"g{i}" for i in range(5)], {}))
    assert len(p.clusters) == 5 and p.modularity == 0.0


def test_reported_modularity_matches_formula():
    rng = random.Random(4)
    nodes = [f"g{i}" for i in range(25)]
    edges = {(a, b): rng.randint(1, 5) for a, b in combinations(nodes, 2) if rng.random() < 0.2}
    net = CoocNetwork(nodes, edges)
    p = louvain(net, seed=3)
    assert p.modularity == pytest.approx(oracles.dense_modularity(nodes, edges, p.membership), abs=1e-12)
    assert p.modularity == pytest.approx(modularity(nodes, edges, p.membership), abs=1e-15)
    assert sum(c.modularity_contribution for c in p.clusters) == pytest.approx(p.modularity, abs=1e-12)
    assert p.modularity >= oracles.dense_modularity(nodes, edges, {v: i for i, v in enumerate(nodes)}) - 1e-12
    assert oracles.locally_optimal(nodes, edges, p.membership)


def test_resolution_parameter():
    net = two_cliques()
    coarse = louvain(net, resolution=0.01)
    assert len(coarse.clusters) == 1
    assert coarse.modularity == pytest.approx(oracles.dense_modularity(net.nodes, net.edges, coarse.membership, 0.01))


def test_cluster_order_and_export():
    p = louvain(two_cliques())
    assert [c.cluster_id for c in p.clusters] == [0, 1]
    assert p.clusters[0].members == ["a1", "a2", "a3"]
    buf = io.StringIO()
    write_clusters(p, {"a2": 9}, buf)
    assert buf.getvalue().splitlines()[:2] == ["cluster_id,trigram,frequency", "0,a2,9"]


LEXICON_TEXT = """# demo lexicon
[biolab]
生‧物‧實
biolab‧in‧ukraine

[ww3]
ww3‧is‧coming
Bad‧Case‧Here
"""


def test_lexicon_parse_and_write():
    lex, diags = parse_lexicon(io.StringIO(LEXICON_TEXT))
    assert lex.names() == ["biolab", "ww3"]
    assert len(diags) == 1 and "Bad‧Case‧Here" in diags[0]
    buf = io.StringIO()
    write_lexicon(lex, buf)
    again, _ = parse_lexicon(io.StringIO(buf.getvalue()))
    assert again == lex
    with pytest.raises(ValueError):
        parse_lexicon(io.StringIO("[a]\nx‧y‧z\n[a]\nx‧y‧z\n"))
    with pytest.raises(ValueError):
        parse_lexicon(io.StringIO("x‧y‧z\n"))
    with pytest.raises(ValueError):
        SubtopicLexicon({"empty": frozenset()})


def test_mapping_multilabel_and_monotone():
    lex = SubtopicLexicon({"s1": frozenset({"g1"}), "s2": frozenset({"g2", "g9"})})
    grams = {"a": ["g1"], "b": ["g1", "g2"], "c": ["g3"]}
    mapping = map_tweets_to_subtopics(grams, lex)
    assert mapping.labels == {"a": {"s1"}, "b": {"s1", "s2"}, "c": frozenset()}
    assert mapping.subtopical_share == pytest.approx(2 / 3)
    bigger = SubtopicLexicon({"s1": frozenset({"g1", "g3"}), "s2": frozenset({"g2", "g9"})})
    wider = map_tweets_to_subtopics(grams, bigger)
    assert all(mapping.labels[t] <= wider.labels[t] for t in grams)
    buf = io.StringIO()
    write_subtopic_labels(mapping, buf)
    assert read_subtopic_labels(io.StringIO(buf.getvalue())).labels == mapping.labels


def test_mapping_share_equals_brute_force():
    fixture = oracles.mixed_fixture(3, 120)
    grams = {f"t{i}": trigrams_of(tokenize(text)) for i, (text, _) in enumerate(fixture)}
    lexicon_grams = {g for gs in list(grams.values())[:10] for g in gs[:1]}
    lex = SubtopicLexicon({"s": frozenset(lexicon_grams)})
    mapping = map_tweets_to_subtopics(grams, lex)
    brute = sum(1 for gs in grams.values() if any(g in lexicon_grams for g in gs)) / len(grams)
    assert mapping.subtopical_share == brute
