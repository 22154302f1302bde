"""Synthetic corpora with planted structure, and scale-free benchmark graphs.

``planted_corpus`` generates a study with two hub accounts per camp,
camp members who retweet their own hubs, three subtopics whose phrases
never share characters with filler text, and one subtopic that the pro
camp leads for the first weeks and the anti camp takes over afterwards.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import yaml

from .corpus import Kind, Label, LabelRecord, LabelSource, StanceScores, StudyWindow, Tweet, write_corpus, write_labels
from .narratives import SubtopicLexicon, tokenize, trigrams_of, write_lexicon

# phrase characters are disjoint from the filler pool
_PHRASE_CHARS = [chr(c) for c in range(0x6C00, 0x6D00)]
_FILLER_CHARS = [chr(c) for c in range(0x5000, 0x5800)]


@dataclass
class PlantedStudy:
    tweets: list[Tweet]
    window: StudyWindow
    labels: list[LabelRecord]
    lexicon: SubtopicLexicon
    hubs: dict[str, list[str]]
    members: dict[str, list[str]]
    official: list[str]
    hijacked_subtopic: str
    flip_week: int
    subtopic_camp: dict[str, str] = field(default_factory=dict)

    def write(self, directory: str | Path, name: str = "planted") -> Path:
        """Write corpus, labels, lexicon and a run config; returns the config path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_corpus(self.tweets, directory / f"{name}.jsonl")
        with (directory / "labels.csv").open("w", encoding="utf-8", newline="") as fh:
            write_labels(self.labels, fh)
        with (directory / "lexicon.txt").open("w", encoding="utf-8", newline="\n") as fh:
            write_lexicon(self.lexicon, fh)
        config = {
            "corpus": [f"{name}.jsonl"],
            "window": self.window.to_mapping(),
            "labels": "labels.csv",
            "lexicon": "lexicon.txt",
            "out": "out",
            "seed": 42,
            "thresholds": {"rank_n": 10, "sample_n": 10, "expansion_k": 20},
        }
        path = directory / "config.yaml"
        path.write_text(yaml.safe_dump(config, sort_keys=True, allow_unicode=True), encoding="utf-8")
        return path


def _phrase(rng: random.Random, pool: list[str], length: int) -> str:
    return "".join(pool.pop(rng.randrange(len(pool))) for _ in range(length))


def _filler(rng: random.Random, lo: int, hi: int) -> str:
    return "".join(rng.choice(_FILLER_CHARS) for _ in range(rng.randint(lo, hi)))


def _stance(rng: random.Random, camp: str) -> StanceScores:
    if camp == "pro":
        p_pro = rng.uniform(0.6, 0.95)
        p_anti = rng.uniform(0.0, 1.0 - p_pro)
    elif camp == "anti":
        p_anti = rng.uniform(0.6, 0.95)
        p_pro = rng.uniform(0.0, 1.0 - p_anti)
    else:
        p_pro = rng.uniform(0.1, 0.4)
        p_anti = rng.uniform(0.1, 0.4)
    return StanceScores(p_pro, p_anti, 1.0 - p_pro - p_anti)


def planted_corpus(
    seed: int = 7,
    n_tweets: int = 2000,
    n_pro_members: int = 40,
    n_anti_members: int = 60,
    n_neutral: int = 20,
    start: date = date(2022, 3, 1),
    num_weeks: int = 8,
    flip_week: int = 4,
) -> PlantedStudy:
    rng = random.Random(seed)
    # week-aligned boundary: weeks 1-4 in T1, 5-8 in T2
    window = StudyWindow(start, num_weeks, start + timedelta(days=28))
    hubs = {"pro": ["pro_hub_1", "pro_hub_2"], "anti": ["anti_hub_1", "anti_hub_2"]}
    members = {
        "pro": [f"pro_m{i:02d}" for i in range(n_pro_members)],
        "anti": [f"anti_m{i:02d}" for i in range(n_anti_members)],
    }
    neutral = [f"neutral_{i:02d}" for i in range(n_neutral)]
    official = ["pro_hub_1"]
    other = {"pro": "anti", "anti": "pro"}

    pool = list(_PHRASE_CHARS)
    subtopics = {
        "biolab_claims": [_phrase(rng, pool, 6) for _ in range(3)],
        "take_down_party": [_phrase(rng, pool, 6) for _ in range(3)],
        "ww3_blame": [_phrase(rng, pool, 3) + "ww3" + _phrase(rng, pool, 2) for _ in range(3)],
    }
    subtopic_camp = {"biolab_claims": "pro", "take_down_party": "anti", "ww3_blame": "hijacked"}
    hijacked = "ww3_blame"

    records: list[dict] = []

    def when(week: int, lo_day: float, hi_day: float) -> datetime:
        base = window.start + timedelta(days=7 * (week - 1))
        return base + timedelta(seconds=int(rng.uniform(lo_day, hi_day) * 86400))

    def add(author: str, week: int, text: str, camp: str, lo=0.0, hi=7.0, **extra) -> dict:
        rec = {"author": author, "time": when(week, lo, hi), "text": text, "camp": camp, **extra}
        records.append(rec)
        return rec

    def subtopic_text(name: str) -> str:
        phrases = subtopics[name]
        chosen = phrases if rng.random() < 0.5 else rng.sample(phrases, 2)
        parts = [_filler(rng, 2, 5)]
        for p in chosen:
            parts += [p, _filler(rng, 2, 4)]
        return "".join(parts)

    hub_posts: dict[tuple[str, int], list[dict]] = {}
    for week in window.weeks:
        # subtopical originals by camp members: (pro count, anti count)
        plan = {
            "biolab_claims": (6, 1),
            "take_down_party": (1, 6),
            hijacked: (7, 1) if week < flip_week else (1, 7),
        }
        for name, (n_pro, n_anti) in plan.items():
            for camp, count in (("pro", n_pro), ("anti", n_anti)):
                for _ in range(count):
                    add(rng.choice(members[camp]), week, subtopic_text(name), camp)
        # the official account's weekly subtopical post, retweeted once
        if week <= 4:
            post = add(official[0], week, subtopic_text("biolab_claims"), "pro", 0.0, 1.0)
            add(rng.choice(members["pro"]), week, "", "pro", 2.0, 7.0, retweet_of=post)
        # hub originals, retweeted later in the week
        for camp in ("pro", "anti"):
            for hub in hubs[camp]:
                for _ in range(3):
                    post = add(hub, week, _filler(rng, 12, 20), camp, 0.0, 1.5)
                    hub_posts.setdefault((hub, week), []).append(post)
            first, second = hubs[camp]
            add(first, week, "", camp, 2.0, 7.0, retweet_target=second)
            add(second, week, "", camp, 2.0, 7.0, retweet_target=first)
            for hub in hubs[camp]:
                add(hub, week, "", camp, 2.0, 7.0, retweet_target=rng.choice(members[camp]))

    def retweet_hub(author: str, camp: str, target_camp: str, weeks: list[int]) -> None:
        week = rng.choice(weeks)
        hub = rng.choice(hubs[target_camp])
        post = rng.choice(hub_posts[(hub, week)])
        add(author, week, "", camp, 2.0, 7.0, retweet_of=post)

    periods = ([w for w in window.weeks if w <= 4], [w for w in window.weeks if w > 4])
    for camp in ("pro", "anti"):
        for m in members[camp]:
            for weeks in periods:
                for _ in range(5):
                    retweet_hub(m, camp, camp, weeks)
                if rng.random() < 0.3:
                    retweet_hub(m, camp, other[camp], weeks)
    for u in neutral:
        for weeks in periods:
            for camp in ("pro", "anti"):
                for _ in range(2):
                    retweet_hub(u, "neutral", camp, weeks)

    # fill the remaining budget with members' and neutral accounts' originals
    everyone = [(m, c) for c in ("pro", "anti") for m in members[c]] + [(u, "neutral") for u in neutral]
    remaining = n_tweets - len(records)
    if remaining < 0:
        raise ValueError(f"n_tweets={n_tweets} too small for the planted structure ({len(records)} needed)")
    for _ in range(remaining):
        author, camp = rng.choice(everyone)
        add(author, rng.choice(list(window.weeks)), _filler(rng, 10, 25), camp)

    records.sort(key=lambda r: (r["time"], r["author"], r["text"]))
    for i, rec in enumerate(records):
        rec["id"] = f"t{i + 1:05d}"
    tweets = []
    for rec in records:
        camp = rec["camp"]
        if "retweet_of" in rec:
            src = rec["retweet_of"]
            tweet = Tweet(rec["id"], rec["author"], rec["time"], f"RT @{src['author']}: {src['text']}",
                          Kind.RETWEET, src["author"], src["id"], "zh", _stance(rng, camp))
        elif "retweet_target" in rec:
            target = rec["retweet_target"]
            tweet = Tweet(rec["id"], rec["author"], rec["time"], f"RT @{target}: {_filler(rng, 10, 15)}",
                          Kind.RETWEET, target, None, "zh", _stance(rng, camp))
        else:
            tweet = Tweet(rec["id"], rec["author"], rec["time"], rec["text"], Kind.ORIGINAL, None, None, "zh",
                          _stance(rng, camp))
        tweets.append(tweet)

    lexicon = SubtopicLexicon({
        name: frozenset(g for p in phrases for g in trigrams_of(tokenize(p)))
        for name, phrases in subtopics.items()
    })
    labels = [LabelRecord(h, Label.PRO, LabelSource.MANUAL) for h in hubs["pro"] if h not in official]
    labels += [LabelRecord(h, Label.OFFICIAL, LabelSource.MANUAL) for h in official]
    labels += [LabelRecord(h, Label.ANTI, LabelSource.MANUAL) for h in hubs["anti"]]
    return PlantedStudy(tweets, window, labels, lexicon, hubs, members, official, hijacked, flip_week, subtopic_camp)


def scale_free_digraph(n: int = 10_000, m: int = 100_000, seed: int = 0) -> list[tuple[int, int]]:
    """Directed preferential-attachment graph with exactly ``m`` distinct edges.

    Each new node links to earlier nodes picked proportionally to degree,
    with a random direction per edge, so the graph has a large strongly
    connected core and heavy-tailed degrees.
    """
    rng = random.Random(seed)
    per_node = max(1, m // n)
    edges: set[tuple[int, int]] = set()
    ends: list[int] = [0]
    for v in range(1, n):
        for _ in range(min(per_node, v)):
            t = rng.choice(ends) if rng.random() < 0.85 else rng.randrange(v)
            e = (v, t) if rng.random() < 0.5 else (t, v)
            if e[0] != e[1] and e not in edges:
                edges.add(e)
                ends += e
        ends.append(v)
    while len(edges) < m:
        a, b = rng.choice(ends), rng.choice(ends)
        if a != b and (a, b) not in edges:
            edges.add((a, b))
    return sorted(edges)[:m] if len(edges) > m else sorted(edges)
