"""Trigram extraction, co-occurrence networks, Louvain clustering, subtopic mapping."""

from __future__ import annotations

import csv
import itertools
import logging
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .corpus import Tweet

log = logging.getLogger(__name__)

N = 3
JOINER = "‧"
URL_TOKEN = "<url>"
USER_TOKEN = "<user>"
PROFILES = ("mixed", "whitespace", "cjk-char")

_URL = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_PLACEHOLDER = re.compile(r"\x00(url|user)\x00")

_CJK_RANGES = (
    (0x3040, 0x30FF),  # kana
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xAC00, 0xD7AF),  # hangul syllables
    (0xF900, 0xFAFF),
    (0x20000, 0x3134F),
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def _is_word(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("L", "N")


def _mark_placeholders(text: str) -> str:
    text = _URL.sub(" \x00url\x00 ", text)
    return _MENTION.sub(" \x00user\x00 ", text)


def tokenize(text: str, profile: str = "mixed") -> list[str]:
    """Case-folded tokens with URLs and mentions replaced by placeholders.

    ``mixed``: each CJK character is a token, other letter/digit runs are
    single tokens. ``cjk-char``: every letter or digit is its own token.
    ``whitespace``: whitespace-separated chunks with punctuation removed.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown tokenizer profile {profile!r}")
    if not text:
        return []
    tokens: list[str] = []
    for chunk in _mark_placeholders(text).split():
        m = _PLACEHOLDER.fullmatch(chunk)
        if m:
            tokens.append(URL_TOKEN if m.group(1) == "url" else USER_TOKEN)
            continue
        chunk = chunk.casefold()
        if profile == "whitespace":
            word = "".join(ch for ch in chunk if _is_word(ch))
            if word:
                tokens.append(word)
            continue
        run: list[str] = []
        for ch in chunk:
            if not _is_word(ch):
                if run:
                    tokens.append("".join(run))
                    run = []
            elif profile == "cjk-char" or is_cjk(ch):
                if run:
                    tokens.append("".join(run))
                    run = []
                tokens.append(ch)
            else:
                run.append(ch)
        if run:
            tokens.append("".join(run))
    return tokens


def trigram_key(tokens: Sequence[str]) -> str:
    return JOINER.join(tokens)


def trigrams_of(tokens: Sequence[str], n: int = N) -> list[str]:
    return [trigram_key(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def tweet_trigrams(tweets: Iterable[Tweet], profile: str = "mixed") -> dict[str, list[str]]:
    """Tweet id -> trigram keys in text order (repeats kept)."""
    return {t.id: trigrams_of(tokenize(t.text, profile)) for t in tweets}


def extract_trigrams(
    grams_by_tweet: Mapping[str, Sequence[str]], min_freq: int = 3, count: str = "tweets"
) -> dict[str, int]:
    """Frequency table of trigrams seen at least ``min_freq`` times.

    ``count="tweets"`` counts distinct tweets containing the trigram;
    ``"occurrences"`` counts every position.
    """
    freq: Counter[str] = Counter()
    if count == "tweets":
        for grams in grams_by_tweet.values():
            freq.update(set(grams))
    elif count == "occurrences":
        for grams in grams_by_tweet.values():
            freq.update(grams)
    else:
        raise ValueError(f"count must be 'tweets' or 'occurrences', not {count!r}")
    return {g: c for g, c in sorted(freq.items()) if c >= min_freq}


@dataclass
class CoocNetwork:
    """Undirected trigram co-occurrence graph; edge keys are sorted pairs."""

    nodes: list[str]
    edges: dict[tuple[str, str], int]
    scope: tuple[str, str] = ("all", "all")

    def write_csv(self, out: IO[str]) -> None:
        out.write(f"# scope week={self.scope[0]} cohort={self.scope[1]}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["g1", "g2", "weight"])
        for (a, b), w in self.edges.items():
            writer.writerow([a, b, w])


def build_cooc(
    grams_by_tweet: Mapping[str, Sequence[str]],
    kept: Iterable[str],
    tweet_ids: Iterable[str] | None = None,
    scope: tuple[str, str] = ("all", "all"),
) -> CoocNetwork:
    """Edge weight = number of tweets containing both trigrams (set containment)."""
    keep = set(kept)
    ids = grams_by_tweet.keys() if tweet_ids is None else tweet_ids
    counts: Counter[tuple[str, str]] = Counter()
    present: set[str] = set()
    for tid in ids:
        grams = sorted(set(grams_by_tweet[tid]) & keep)
        present.update(grams)
        counts.update(itertools.combinations(grams, 2))
    return CoocNetwork(sorted(present), {e: counts[e] for e in sorted(counts)}, scope)


# ---------------------------------------------------------------------------
# Louvain


@dataclass
class NarrativeCluster:
    cluster_id: int
    members: list[str]
    modularity_contribution: float
    label: str | None = None


@dataclass
class Partition:
    clusters: list[NarrativeCluster]
    modularity: float
    membership: dict[str, int] = field(default_factory=dict)


def _undirected_csr(n: int, edges: Mapping[tuple[int, int], float]):
    """Symmetric CSR without self-loops, neighbours in ascending order."""
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for (a, b), w in edges.items():
        if a == b:
            continue
        rows += (a, b)
        cols += (b, a)
        vals += (w, w)
    rows_a = np.asarray(rows, dtype=kernels.IDX)
    cols_a = np.asarray(cols, dtype=kernels.IDX)
    vals_a = np.asarray(vals, dtype=np.float64)
    order = np.lexsort((cols_a, rows_a))
    indptr = np.zeros(n + 1, dtype=kernels.IDX)
    np.cumsum(np.bincount(rows_a, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols_a[order]), np.ascontiguousarray(vals_a[order])


def modularity(nodes: Sequence[str], edges: Mapping[tuple[str, str], float], membership: Mapping[str, int], resolution: float = 1.0) -> float:
    """Weighted modularity: sum over clusters of ``in_c/m - res*(tot_c/2m)^2``."""
    m = float(sum(edges.values()))
    if m == 0:
        return 0.0
    internal: defaultdict[int, float] = defaultdict(float)
    tot: defaultdict[int, float] = defaultdict(float)
    for (a, b), w in edges.items():
        tot[membership[a]] += w
        tot[membership[b]] += w
        if membership[a] == membership[b]:
            internal[membership[a]] += w
    return sum(internal[c] / m - resolution * (tot[c] / (2 * m)) ** 2 for c in tot)


def _relabel(comm: np.ndarray) -> np.ndarray:
    """Dense community ids in order of first appearance by node index."""
    _, first, inverse = np.unique(comm, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=kernels.IDX)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first), dtype=kernels.IDX)
    return rank[inverse.ravel()]


def _aggregate(indptr, indices, weights, k, comm, n_comm):
    src = np.repeat(np.arange(len(k), dtype=kernels.IDX), np.diff(indptr))
    a = comm[src]
    b = comm[indices]
    mask = a < b
    pairs: dict[tuple[int, int], float] = defaultdict(float)
    for x, y, w in zip(a[mask].tolist(), b[mask].tolist(), weights[mask].tolist()):
        pairs[(x, y)] += w
    agg_k = np.bincount(comm, weights=k, minlength=n_comm).astype(np.float64)
    return (*_undirected_csr(n_comm, dict(sorted(pairs.items()))), agg_k)


def louvain(net: CoocNetwork, seed: int = 42, resolution: float = 1.0, backend=None) -> Partition:
    """Two-phase Louvain on the weighted co-occurrence network.

    Levels repeat until a level merges nothing. The resulting partition is
    then polished by node-level moves on the original graph; if those move
    anything, aggregation resumes. The returned partition therefore admits
    no improving single-node move. Deterministic for fixed (network, seed,
    resolution).
    """
    nodes = list(net.nodes)
    n = len(nodes)
    if n == 0:
        return Partition([], 0.0, {})
    index = {v: i for i, v in enumerate(nodes)}
    iedges = {(index[a], index[b]): float(w) for (a, b), w in net.edges.items()}
    indptr, indices, weights = _undirected_csr(n, iedges)
    k = np.bincount(np.repeat(np.arange(n), np.diff(indptr)), weights=weights, minlength=n).astype(np.float64)
    m = k.sum() / 2.0
    rng = np.random.default_rng(seed)

    membership = np.arange(n, dtype=kernels.IDX)
    if m > 0:
        while True:
            # node-level pass on the original graph, seeded with the current partition
            comm = membership.copy()
            tot = np.bincount(comm, weights=k, minlength=n).astype(np.float64)
            size = np.bincount(comm, minlength=n).astype(kernels.IDX)
            order = rng.permutation(n).astype(kernels.IDX)
            moved = kernels.local_moves(indptr, indices, weights, k, order, comm, tot, size, resolution, m, backend=backend)
            membership = _relabel(comm)
            merged = False
            lvl = (indptr, indices, weights, k)
            level_comm = membership
            while True:
                n_comm = int(level_comm.max()) + 1
                if n_comm == len(lvl[3]):
                    break
                lvl = _aggregate(*lvl, level_comm, n_comm)
                comm = np.arange(n_comm, dtype=kernels.IDX)
                tot = lvl[3].copy()
                size = np.ones(n_comm, dtype=kernels.IDX)
                order = rng.permutation(n_comm).astype(kernels.IDX)
                if kernels.local_moves(*lvl, order, comm, tot, size, resolution, m, backend=backend) == 0:
                    break
                level_comm = _relabel(comm)
                membership = level_comm[membership]
                merged = True
            if not merged and moved == 0:
                break

    names = {v: int(c) for v, c in zip(nodes, membership.tolist())}
    return _partition(nodes, net.edges, names, resolution)


def _partition(nodes, edges, names: dict[str, int], resolution: float) -> Partition:
    groups: defaultdict[int, list[str]] = defaultdict(list)
    for v in nodes:
        groups[names[v]].append(v)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(g)))
    membership = {v: cid for cid, g in enumerate(ordered) for v in g}
    m = float(sum(edges.values()))
    internal: defaultdict[int, float] = defaultdict(float)
    tot: defaultdict[int, float] = defaultdict(float)
    for (a, b), w in edges.items():
        tot[membership[a]] += w
        tot[membership[b]] += w
        if membership[a] == membership[b]:
            internal[membership[a]] += w
    clusters = []
    for cid, g in enumerate(ordered):
        contrib = 0.0 if m == 0 else internal[cid] / m - resolution * (tot[cid] / (2 * m)) ** 2
        clusters.append(NarrativeCluster(cid, sorted(g), contrib))
    return Partition(clusters, modularity(nodes, edges, membership, resolution), membership)


def write_clusters(partition: Partition, freq: Mapping[str, int], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["cluster_id", "trigram", "frequency"])
    for c in partition.clusters:
        for g in sorted(c.members, key=lambda g: (-freq.get(g, 0), g)):
            writer.writerow([c.cluster_id, g, freq.get(g, 0)])


# ---------------------------------------------------------------------------
# subtopic lexicon


@dataclass
class SubtopicLexicon:
    subtopics: dict[str, frozenset[str]]

    def __post_init__(self) -> None:
        for name, grams in self.subtopics.items():
            if not grams:
                raise ValueError(f"subtopic {name!r} has no trigrams")

    def names(self) -> list[str]:
        return list(self.subtopics)

    def index(self) -> dict[str, list[str]]:
        inv: defaultdict[str, list[str]] = defaultdict(list)
        for name, grams in self.subtopics.items():
            for g in grams:
                inv[g].append(name)
        return inv


def _normal_form(gram: str, profile: str) -> bool:
    parts = gram.split(JOINER)
    return len(parts) == N and all(tokenize(p, profile) == [p] for p in parts)


def parse_lexicon(stream: Iterable[str], profile: str = "mixed") -> tuple[SubtopicLexicon, list[str]]:
    """Read ``[name]`` sections of trigram lines (tokens joined by U+2027).

    Blank lines and ``#`` comments are skipped. Trigrams that the tokenizer
    would not reproduce are kept but reported.
    """
    sections: dict[str, set[str]] = {}
    diagnostics: list[str] = []
    current: str | None = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ValueError(f"line {lineno}: duplicate subtopic {current!r}")
            sections[current] = set()
            continue
        if current is None:
            raise ValueError(f"line {lineno}: trigram outside a [subtopic] section")
        if not _normal_form(line, profile):
            diagnostics.append(f"line {lineno}: {line!r} is not in {profile} tokenizer normal form")
        sections[current].add(line)
    return SubtopicLexicon({k: frozenset(v) for k, v in sections.items()}), diagnostics


def write_lexicon(lexicon: SubtopicLexicon, out: IO[str]) -> None:
    for name, grams in lexicon.subtopics.items():
        out.write(f"[{name}]\n")
        for g in sorted(grams):
            out.write(g + "\n")
        out.write("\n")


@dataclass
class SubtopicMapping:
    labels: dict[str, frozenset[str]]

    @property
    def subtopical_share(self) -> float:
        if not self.labels:
            return 0.0
        return sum(1 for s in self.labels.values() if s) / len(self.labels)

    def subtopical(self, tweet_id: str) -> bool:
        return bool(self.labels.get(tweet_id))


def map_tweets_to_subtopics(grams_by_tweet: Mapping[str, Sequence[str]], lexicon: SubtopicLexicon) -> SubtopicMapping:
    """Multi-label: a tweet carries every subtopic whose lexicon meets its trigram set."""
    inv = lexicon.index()
    labels = {}
    for tid, grams in grams_by_tweet.items():
        found: set[str] = set()
        for g in set(grams):
            found.update(inv.get(g, ()))
        labels[tid] = frozenset(found)
    return SubtopicMapping(labels)


def write_subtopic_labels(mapping: SubtopicMapping, out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["tweet_id", "subtopics"])
    for tid in sorted(mapping.labels):
        writer.writerow([tid, "|".join(sorted(mapping.labels[tid]))])


def read_subtopic_labels(stream: Iterable[str]) -> SubtopicMapping:
    labels = {}
    for row in csv.DictReader(stream):
        labels[row["tweet_id"]] = frozenset(s for s in row["subtopics"].split("|") if s)
    return SubtopicMapping(labels)
