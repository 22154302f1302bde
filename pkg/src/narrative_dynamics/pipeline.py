"""Stage runner: on-disk intermediates plus a manifest per stage.

Each stage reads earlier outputs from the run directory, writes its own
files, and records a manifest with input, output and config digests.
Outputs contain no timestamps or absolute paths, so identical inputs give
byte-identical trees.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import __version__
from .config import RunConfig
from .core import CoreSets, rank_candidates, resolve_core, stratified_candidates, write_candidates
from .corpus import Corpus, CorpusError, assign_week, parse_corpus, read_corpus, read_labels, write_corpus
from .dynamics import (
    COHORTS,
    OFFICIAL_SERIES,
    activity_series,
    introduction_and_appropriation,
    leaning_cells,
    official_breakdown,
    subtopic_cohort_counts,
    subtopic_week_distribution,
    write_rows,
    write_tidy,
)
from .graph import CentralityReport, build_network, centrality_report, expansion_set, read_network_csv, write_network_csv
from .leaning import compute_assignments, resolve_classes, transition_table, write_assignments, write_transitions
from .narratives import (
    CoocNetwork,
    build_cooc,
    extract_trigrams,
    louvain,
    map_tweets_to_subtopics,
    parse_lexicon,
    read_subtopic_labels,
    tweet_trigrams,
    write_clusters,
    write_subtopic_labels,
)

log = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "graph",
    "centrality",
    "core-candidates",
    "leaning",
    "ngrams",
    "cluster",
    "subtopics",
    "dynamics",
    "report",
)

NETWORK_COHORTS = ("all", "pro", "pro_core", "anti", "anti_core")

ASSUMPTIONS = [
    "activity counts every authored record (tweets, retweets, replies, quotes)",
    "subtopic leaning activity uses the same record counts as the activity series",
    "a tweet is attributed to its author's class in the period containing its week's first day",
]


class PrerequisiteError(Exception):
    """A stage was run before the stage that produces its inputs."""


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


@dataclass
class StageContext:
    config: RunConfig
    out: Path
    workers: int

    def path(self, rel: str) -> Path:
        return self.out / rel

    def require(self, stage: str, *rels: str) -> list[Path]:
        paths = [self.path(r) for r in rels]
        missing = [r for r, p in zip(rels, paths) if not p.exists()]
        if missing:
            raise PrerequisiteError(f"missing {stage} outputs: {', '.join(missing)}")
        return paths

    def write_text(self, rel: str, text: str) -> str:
        path = self.path(rel)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return rel

    def write_with(self, rel: str, writer: Callable, *args) -> str:
        buf = io.StringIO()
        writer(*args, buf)
        return self.write_text(rel, buf.getvalue())

    def corpus(self) -> Corpus:
        (path,) = self.require("ingest", "corpus.jsonl")
        with path.open(encoding="utf-8") as fh:
            return parse_corpus(fh)

    def cores(self) -> CoreSets:
        (path,) = self.require("leaning", "core_sets.json")
        return CoreSets.from_mapping(json.loads(path.read_text(encoding="utf-8")))

    def classes(self) -> dict[str, dict[str, str]]:
        (path,) = self.require("leaning", "classes.csv")
        classes: dict[str, dict[str, str]] = {"T1": {}, "T2": {}}
        with path.open(encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                classes[row["period"]][row["account_id"]] = row["class"]
        return classes


# each stage returns (input files, output relpaths)
StageResult = tuple[list[Path], list[str]]


def stage_ingest(ctx: StageContext) -> StageResult:
    corpus = read_corpus(ctx.config.corpus)
    if not corpus.tweets:
        raise CorpusError("corpus contains no valid tweets")
    buf = io.StringIO()
    write_rows(
        ("source", "line", "record_id", "reason"),
        [(d.source or "", d.line, d.record_id or "", d.reason) for d in corpus.diagnostics],
        buf,
    )
    outs = [ctx.write_text("ingest_diagnostics.csv", buf.getvalue())]
    path = ctx.path("corpus.jsonl")
    write_corpus(corpus.tweets, path)
    outs.append("corpus.jsonl")
    window = ctx.config.window
    in_window = sum(1 for t in corpus if assign_week(t, window) is not None)
    summary = {
        "accepted": len(corpus.tweets),
        "rejected": len(corpus.diagnostics),
        "in_window": in_window,
        "window": window.to_mapping(),
    }
    outs.append(ctx.write_text("ingest_summary.json", _dump_json(summary)))
    return list(ctx.config.corpus), outs


def stage_graph(ctx: StageContext) -> StageResult:
    window = ctx.config.window
    corpus = ctx.corpus()
    net = build_network(corpus, lambda t: window.start <= t.created_at < window.end)
    return [ctx.path("corpus.jsonl")], [ctx.write_with("network.csv", write_network_csv, net)]


def stage_centrality(ctx: StageContext) -> StageResult:
    (net_path,) = ctx.require("graph", "network.csv")
    with net_path.open(encoding="utf-8") as fh:
        net = read_network_csv(fh)
    report = centrality_report(net, workers=ctx.workers, closeness_direction=ctx.config.closeness_direction)
    outs = [ctx.write_with("centrality.csv", report.write_csv)]
    authors = {t.author_id for t in ctx.corpus()}
    expansion = expansion_set(report, ctx.config.t("expansion_k"), exclude=authors) if len(report) else []
    rows = [(i + 1, a, report[a].influence) for i, a in enumerate(expansion)]
    buf = io.StringIO()
    write_rows(("rank", "account_id", "influence"), rows, buf)
    outs.append(ctx.write_text("expansion.csv", buf.getvalue()))
    return [net_path, ctx.path("corpus.jsonl")], outs


def _load_report(ctx: StageContext) -> CentralityReport:
    (path,) = ctx.require("centrality", "centrality.csv")
    with path.open(encoding="utf-8") as fh:
        return CentralityReport.read_csv(fh)


def stage_core_candidates(ctx: StageContext) -> StageResult:
    cfg = ctx.config
    report = _load_report(ctx)
    ranked = rank_candidates(report, cfg.t("rank_n")) if len(report) else []
    by_author = defaultdict(list)
    for t in ctx.corpus():
        by_author[t.author_id].append(t)
    strat = stratified_candidates(
        report,
        by_author,
        indeg_pct=cfg.t("indeg_pct"),
        close_pct=cfg.t("close_pct"),
        sample_n=cfg.t("sample_n"),
        per_account_tweet_sample=cfg.t("per_account_tweet_sample"),
        keywords=cfg.topical_keywords,
        seed=cfg.seed,
    )
    outs = [ctx.write_with("candidates.csv", write_candidates, ranked, strat.candidates)]
    summary = {
        "ranked": len(ranked),
        "stratified_eligible": len(strat.eligible),
        "stratified": len(strat.candidates),
        "diagnostics": strat.diagnostics,
    }
    outs.append(ctx.write_text("candidates_summary.json", _dump_json(summary)))
    return [ctx.path("centrality.csv"), ctx.path("corpus.jsonl")], outs


def stage_leaning(ctx: StageContext) -> StageResult:
    cfg = ctx.config
    if cfg.labels is None or not cfg.labels.exists():
        raise PrerequisiteError("missing core-candidates labels (set 'labels' to the annotated label CSV)")
    labels, label_diags = read_labels(cfg.labels)
    cores = resolve_core(labels)
    corpus = ctx.corpus()
    assignments = compute_assignments(
        corpus,
        cores,
        cfg.window,
        min_core_retweets=cfg.t("min_core_retweets"),
        min_lang_tweets=cfg.t("min_lang_tweets"),
        lang=cfg.t("lang"),
    )
    table = transition_table(assignments.get("T1", []), assignments.get("T2", []))
    classes = resolve_classes(assignments, cores, labels)
    outs = [
        ctx.write_text("core_sets.json", _dump_json(cores.to_mapping())),
        ctx.write_with("leaning.csv", write_assignments, assignments),
        ctx.write_with("transitions.csv", write_transitions, table),
    ]
    rows = [(a, p, classes[p][a]) for p in ("T1", "T2") for a in sorted(classes[p])]
    buf = io.StringIO()
    write_rows(("account_id", "period", "class"), rows, buf)
    outs.append(ctx.write_text("classes.csv", buf.getvalue()))
    summary = {
        "core_sizes": {"pro_core": len(cores.pro_core), "anti_core": len(cores.anti_core), "official": len(cores.official)},
        "eligible": {p: len(v) for p, v in sorted(assignments.items())},
        "class_counts": {
            p: {c: sum(1 for a in v if a.cls == c) for c in ("pro", "anti", "unsure")}
            for p, v in sorted(assignments.items())
        },
        "new_account_share": table.new_account_share,
        "shift_share": {f"{a}->{b}": v for (a, b), v in sorted(table.shift_share.items())},
        "label_diagnostics": [str(d) for d in label_diags],
    }
    outs.append(ctx.write_text("leaning_summary.json", _dump_json(summary)))
    return [cfg.labels, ctx.path("corpus.jsonl")], outs


def _week_cohort_ids(ctx: StageContext, corpus: Corpus) -> dict[tuple[str, str], list[str]]:
    window = ctx.config.window
    cores = ctx.cores()
    classes = ctx.classes()
    scopes: dict[tuple[str, str], list[str]] = defaultdict(list)
    for t in corpus:
        week = assign_week(t, window)
        if week is None:
            continue
        scopes[("all", "all")].append(t.id)
        period = window.period_of_week(week).value
        cls = classes[period].get(t.author_id, "unsure")
        tags = ["all"]
        if cls in ("pro", "anti"):
            tags.append(cls)
        if t.author_id in cores.pro_core:
            tags.append("pro_core")
        elif t.author_id in cores.anti_core:
            tags.append("anti_core")
        for tag in tags:
            scopes[(str(week), tag)].append(t.id)
    return scopes


def _scope_name(scope: tuple[str, str]) -> str:
    week, cohort = scope
    return f"{cohort}_all" if week == "all" else f"week{int(week):02d}_{cohort}"


def stage_ngrams(ctx: StageContext) -> StageResult:
    cfg = ctx.config
    corpus = ctx.corpus()
    window = cfg.window
    in_window = [t for t in corpus if assign_week(t, window) is not None]
    grams = tweet_trigrams(in_window, cfg.tokenizer)
    freq = extract_trigrams(grams, cfg.t("min_freq"), cfg.trigram_count)
    buf = io.StringIO()
    write_rows(("trigram", "frequency"), sorted(freq.items(), key=lambda kv: (-kv[1], kv[0])), buf)
    outs = [ctx.write_text("trigrams.csv", buf.getvalue())]
    scopes = _week_cohort_ids(ctx, Corpus(in_window))
    index = []
    for week in ["all"] + [str(w) for w in window.weeks]:
        for cohort in ("all",) if week == "all" else NETWORK_COHORTS:
            ids = scopes.get((week, cohort), [])
            net = build_cooc(grams, freq, ids, scope=(week, cohort))
            rel = f"networks/{_scope_name((week, cohort))}.csv"
            outs.append(ctx.write_with(rel, net.write_csv))
            index.append({"scope": [week, cohort], "file": rel, "nodes": len(net.nodes), "edges": len(net.edges), "tweets": len(ids)})
    meta = {"tokenizer": cfg.tokenizer, "trigram_count": cfg.trigram_count, "min_freq": cfg.t("min_freq"),
            "kept_trigrams": len(freq), "networks": index}
    outs.append(ctx.write_text("ngrams_meta.json", _dump_json(meta)))
    inputs = [ctx.path("corpus.jsonl"), ctx.path("classes.csv"), ctx.path("core_sets.json")]
    return inputs, outs


def _read_cooc(path: Path) -> CoocNetwork:
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        parts = dict(p.split("=", 1) for p in header.strip("# \n").split()[1:])
        edges = {}
        nodes = set()
        for row in csv.DictReader(fh):
            edges[(row["g1"], row["g2"])] = int(row["weight"])
            nodes.update((row["g1"], row["g2"]))
    return CoocNetwork(sorted(nodes), edges, (parts.get("week", "all"), parts.get("cohort", "all")))


def stage_cluster(ctx: StageContext) -> StageResult:
    meta_path, freq_path = ctx.require("ngrams", "ngrams_meta.json", "trigrams.csv")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    freq = {}
    with freq_path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            freq[row["trigram"]] = int(row["frequency"])
    outs, inputs, summary = [], [meta_path, freq_path], []
    for entry in meta["networks"]:
        path = ctx.path(entry["file"])
        inputs.append(path)
        net = _read_cooc(path)
        if not net.nodes:
            continue
        # nodes come from the edge list; trigrams without partners are not clustered
        part = louvain(net, seed=ctx.config.seed, resolution=ctx.config.t("resolution"))
        rel = "clusters/" + Path(entry["file"]).name
        outs.append(ctx.write_with(rel, write_clusters, part, freq))
        summary.append({"scope": entry["scope"], "file": rel, "clusters": len(part.clusters), "modularity": part.modularity})
    main = "clusters/all_all.csv"
    if ctx.path(main).exists():
        outs.append(ctx.write_text("clusters.csv", ctx.path(main).read_text(encoding="utf-8")))
    outs.append(ctx.write_text("clusters_summary.json", _dump_json({"seed": ctx.config.seed, "networks": summary})))
    return inputs, outs


def stage_subtopics(ctx: StageContext) -> StageResult:
    cfg = ctx.config
    if cfg.lexicon is None or not cfg.lexicon.exists():
        raise PrerequisiteError("missing subtopic lexicon (set 'lexicon' to the curated lexicon file)")
    with cfg.lexicon.open(encoding="utf-8") as fh:
        lexicon, diags = parse_lexicon(fh, cfg.tokenizer)
    corpus = ctx.corpus()
    in_window = [t for t in corpus if assign_week(t, cfg.window) is not None]
    grams = tweet_trigrams(in_window, cfg.tokenizer)
    mapping = map_tweets_to_subtopics(grams, lexicon)
    outs = [ctx.write_with("subtopic_labels.csv", write_subtopic_labels, mapping)]
    counts = {s: sum(1 for v in mapping.labels.values() if s in v) for s in lexicon.names()}
    summary = {
        "tokenizer": cfg.tokenizer,
        "subtopics": lexicon.names(),
        "tweets": len(mapping.labels),
        "subtopical_tweets": sum(1 for v in mapping.labels.values() if v),
        "subtopical_share": mapping.subtopical_share,
        "per_subtopic": counts,
        "lexicon_diagnostics": diags,
    }
    outs.append(ctx.write_text("subtopics_summary.json", _dump_json(summary)))
    return [cfg.lexicon, ctx.path("corpus.jsonl")], outs


def stage_dynamics(ctx: StageContext) -> StageResult:
    cfg = ctx.config
    window = cfg.window
    labels_path, summary_path = ctx.require("subtopics", "subtopic_labels.csv", "subtopics_summary.json")
    with labels_path.open(encoding="utf-8") as fh:
        mapping = read_subtopic_labels(fh)
    subtopics = json.loads(summary_path.read_text(encoding="utf-8"))["subtopics"]
    corpus = ctx.corpus()
    tweets = corpus.tweets
    cores = ctx.cores()
    classes = ctx.classes()

    tidy: list[tuple] = []
    fig4 = []
    for scope in ("all", "subtopical"):
        series = activity_series(tweets, window, classes, cores, mapping, scope)
        for cohort in COHORTS:
            for w, v in zip(window.weeks, series[cohort]):
                tidy.append((f"activity_{scope}", cohort, "", w, v))
                fig4.append((scope, cohort, w, v))

    dist = subtopic_week_distribution(tweets, window, mapping, subtopics)
    fig9 = [(s, w, v) for s in subtopics for w, v in zip(window.weeks, dist[s])]
    tidy += [("subtopic_count", "all", s, w, v) for s, w, v in fig9]

    per_cohort = subtopic_cohort_counts(tweets, window, classes, cores, mapping, subtopics)
    fig1 = [(s, c, per_cohort[s][c]) for s in subtopics for c in COHORTS]

    cells = leaning_cells(tweets, window, classes, mapping, subtopics)
    fig2b = []
    events = []
    for s in subtopics:
        for cell in cells[s]:
            fig2b.append((s, cell.week, cell.anti_activity, cell.pro_activity, cell.score))
            tidy.append(("subtopic_leaning", "", s, cell.week, cell.score))
        ev = introduction_and_appropriation(cells[s], cfg.t("dominance"), cfg.t("persistence"), s)
        if ev.introduced_by is not None:
            events.append((s, "introduction", ev.introduced_week, ev.introduced_by, ""))
        for week, before, after in ev.appropriations:
            events.append((s, "appropriation", week, after, before))

    officials, official_diags = official_breakdown(cores.official, tweets, window, mapping)
    fig2c = [(name, w, v) for name in OFFICIAL_SERIES for w, v in zip(window.weeks, officials[name])]
    tidy += [(f"official_{name}", "official", "", w, v) for name, w, v in fig2c]

    outs = []

    def emit(rel, header, rows):
        buf = io.StringIO()
        write_rows(header, rows, buf)
        outs.append(ctx.write_text(rel, buf.getvalue()))

    buf = io.StringIO()
    write_tidy(tidy, buf)
    outs.append(ctx.write_text("dynamics.csv", buf.getvalue()))
    emit("plots/fig1_subtopics.csv", ("subtopic", "cohort", "count"), fig1)
    emit("plots/fig4_activity.csv", ("scope", "cohort", "week", "value"), fig4)
    emit("plots/fig9_distribution.csv", ("subtopic", "week", "count"), fig9)
    emit("plots/fig2b_leaning.csv", ("subtopic", "week", "anti", "pro", "score"), fig2b)
    emit("plots/fig2c_official.csv", ("series", "week", "value"), fig2c)
    emit("events.csv", ("subtopic", "event", "week", "camp", "previous_camp"), events)
    meta = {
        "assumptions": ASSUMPTIONS,
        "dominance": cfg.t("dominance"),
        "persistence": cfg.t("persistence"),
        "min_scored_total_exclusive": 3,
        "official_diagnostics": official_diags,
    }
    outs.append(ctx.write_text("dynamics_meta.json", _dump_json(meta)))
    inputs = [labels_path, summary_path, ctx.path("corpus.jsonl"), ctx.path("core_sets.json"), ctx.path("classes.csv")]
    return inputs, outs


def stage_report(ctx: StageContext) -> StageResult:
    parts = {
        "ingest": "ingest_summary.json",
        "leaning": "leaning_summary.json",
        "subtopics": "subtopics_summary.json",
        "cluster": "clusters_summary.json",
    }
    paths = ctx.require("dynamics", "events.csv", "dynamics_meta.json")
    report: dict = {"version": __version__, "config": ctx.config.provenance()}
    inputs = list(paths)
    for key, rel in parts.items():
        path = ctx.path(rel)
        if path.exists():
            inputs.append(path)
            data = json.loads(path.read_text(encoding="utf-8"))
            if key == "cluster":
                data = {"networks": len(data["networks"])}
            report[key] = data
    report["events"] = [line for line in paths[0].read_text(encoding="utf-8").splitlines()[1:]]
    lines = ["# Narrative dynamics report", ""]
    ing = report.get("ingest", {})
    lines.append(f"- tweets accepted: {ing.get('accepted')} (rejected {ing.get('rejected')}, in window {ing.get('in_window')})")
    if "leaning" in report:
        lines.append(f"- core sizes: {report['leaning']['core_sizes']}")
        lines.append(f"- eligible accounts: {report['leaning']['eligible']}")
    if "subtopics" in report:
        lines.append(f"- subtopical share: {report['subtopics']['subtopical_share']:.4f}")
    lines.append("")
    lines.append("## Events")
    lines += [f"- {e}" for e in report["events"]] or ["- none"]
    outs = [
        ctx.write_text("report.json", _dump_json(report)),
        ctx.write_text("report.md", "\n".join(lines) + "\n"),
    ]
    return inputs, outs


STAGE_FUNCS: dict[str, Callable[[StageContext], StageResult]] = {
    "ingest": stage_ingest,
    "graph": stage_graph,
    "centrality": stage_centrality,
    "core-candidates": stage_core_candidates,
    "leaning": stage_leaning,
    "ngrams": stage_ngrams,
    "cluster": stage_cluster,
    "subtopics": stage_subtopics,
    "dynamics": stage_dynamics,
    "report": stage_report,
}


def _rel(path: Path, ctx: StageContext) -> str:
    try:
        return path.resolve().relative_to(ctx.out.resolve()).as_posix()
    except ValueError:
        return f"input:{path.name}"


def run_stage(stage: str, config: RunConfig, out: Path | None = None, workers: int | None = None) -> dict:
    """Run one stage and write ``manifests/<stage>.json``; returns the manifest."""
    if stage not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}")
    out = Path(out or config.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = StageContext(config, out, workers or config.threads)
    (out / "config.json").write_text(_dump_json(config.provenance()), encoding="utf-8")
    log.info("stage %s", stage)
    inputs, outputs = STAGE_FUNCS[stage](ctx)
    manifest = {
        "stage": stage,
        "version": __version__,
        "config_digest": config.digest(),
        "inputs": {_rel(p, ctx): sha256_file(p) for p in inputs},
        "outputs": {rel: sha256_file(ctx.path(rel)) for rel in sorted(outputs)},
    }
    ctx.write_text(f"manifests/{stage}.json", _dump_json(manifest))
    return manifest


def run_pipeline(config: RunConfig, out: Path | None = None, stage_from: str | None = None, stage_to: str | None = None, workers: int | None = None) -> list[dict]:
    lo = STAGES.index(stage_from) if stage_from else 0
    hi = STAGES.index(stage_to) if stage_to else len(STAGES) - 1
    if lo > hi:
        raise ValueError(f"stage range {stage_from}..{stage_to} is empty")
    return [run_stage(s, config, out, workers) for s in STAGES[lo:hi + 1]]


def tree_digest(root: Path) -> dict[str, str]:
    """Relative path -> sha256 for every file under ``root``."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): sha256_file(p) for p in sorted(root.rglob("*")) if p.is_file()}
