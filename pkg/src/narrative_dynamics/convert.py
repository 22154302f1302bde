"""Offline adapters from raw platform API exports to interchange records.

Two built-in mapping profiles cover API v2 (``twitter-v2``; single tweet
objects or response pages with ``data``/``includes``) and v1.1
(``twitter-v1``). A custom profile is a mapping of interchange field to a
dotted path inside each raw object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Any, Iterable, Iterator

from .corpus import CorpusError, Diagnostic, format_timestamp, tweet_from_record


def _get(obj: Any, path: str) -> Any:
    for part in path.split("."):
        if isinstance(obj, dict):
            obj = obj.get(part)
        elif isinstance(obj, list) and part.isdigit() and int(part) < len(obj):
            obj = obj[int(part)]
        else:
            return None
        if obj is None:
            return None
    return obj


def _v1_time(value: str) -> str:
    parsed = datetime.strptime(value, "%a %b %d %H:%M:%S %z %Y")
    return format_timestamp(parsed.astimezone(timezone.utc))


@dataclass(frozen=True)
class MappingProfile:
    name: str
    fields: dict[str, str]


BUILTIN_PROFILES: dict[str, MappingProfile] = {
    "twitter-v2": MappingProfile(
        "twitter-v2",
        {
            "id": "id",
            "author_id": "author_id",
            "created_at": "created_at",
            "text": "text",
            "lang": "lang",
            "referenced_tweets": "referenced_tweets",
        },
    ),
    "twitter-v1": MappingProfile(
        "twitter-v1",
        {
            "id": "id_str",
            "author_id": "user.id_str",
            "created_at": "created_at",
            "text": "full_text|text",
            "lang": "lang",
            "retweeted_user_id": "retweeted_status.user.id_str",
            "retweeted_status_id": "retweeted_status.id_str",
            "reply_to": "in_reply_to_status_id_str",
            "quoted": "quoted_status_id_str",
        },
    ),
}


def resolve_profile(profile: str | dict) -> MappingProfile:
    if isinstance(profile, dict):
        missing = {"id", "author_id", "created_at", "text"} - profile.keys()
        if missing:
            raise CorpusError(f"mapping profile lacks paths for {sorted(missing)}")
        return MappingProfile("custom", dict(profile))
    try:
        return BUILTIN_PROFILES[profile]
    except KeyError:
        raise CorpusError(f"unknown mapping profile {profile!r}") from None


def _lookup(raw: dict, profile: MappingProfile, key: str) -> Any:
    path = profile.fields.get(key)
    if path is None:
        return None
    for alternative in path.split("|"):
        value = _get(raw, alternative)
        if value is not None:
            return value
    return None


def _v2_objects(page: dict) -> Iterator[tuple[dict, dict[str, dict]]]:
    """Yield (tweet, included-tweets-by-id) pairs from a v2 object or page."""
    if "data" in page:
        includes = {str(t.get("id")): t for t in _get(page, "includes.tweets") or []}
        data = page["data"]
        for item in data if isinstance(data, list) else [data]:
            yield item, includes
    else:
        yield page, {}


def _convert_one(raw: dict, profile: MappingProfile, included: dict[str, dict]) -> dict:
    record = {
        "id": _lookup(raw, profile, "id"),
        "author_id": _lookup(raw, profile, "author_id"),
        "created_at": _lookup(raw, profile, "created_at"),
        "text": _lookup(raw, profile, "text"),
        "lang": _lookup(raw, profile, "lang"),
        "kind": "original",
        "retweeted_user_id": None,
        "retweeted_status_id": None,
        "stance": None,
    }
    if record["text"] is None:
        raise ValueError("missing text")
    if profile.name == "twitter-v1" and isinstance(record["created_at"], str):
        try:
            record["created_at"] = _v1_time(record["created_at"])
        except ValueError:
            pass  # leave as-is; validated as RFC 3339 below

    refs = _lookup(raw, profile, "referenced_tweets")
    if refs:
        by_type = {r.get("type"): str(r.get("id")) for r in refs if isinstance(r, dict)}
        if "retweeted" in by_type:
            target_id = by_type["retweeted"]
            record["kind"] = "retweet"
            record["retweeted_status_id"] = target_id
            target = included.get(target_id)
            user = target.get("author_id") if target else None
            if user is None:
                mentions = _get(raw, "entities.mentions") or []
                if mentions and str(record["text"]).startswith("RT @"):
                    user = mentions[0].get("id")
            record["retweeted_user_id"] = None if user is None else str(user)
        elif "quoted" in by_type:
            record["kind"] = "quote"
        elif "replied_to" in by_type:
            record["kind"] = "reply"
    else:
        rt_user = _lookup(raw, profile, "retweeted_user_id")
        if rt_user is not None:
            record["kind"] = "retweet"
            record["retweeted_user_id"] = str(rt_user)
            status = _lookup(raw, profile, "retweeted_status_id")
            record["retweeted_status_id"] = None if status is None else str(status)
        elif _lookup(raw, profile, "quoted") is not None:
            record["kind"] = "quote"
        elif _lookup(raw, profile, "reply_to") is not None:
            record["kind"] = "reply"

    for key in ("id", "author_id"):
        if record[key] is not None:
            record[key] = str(record[key])
    # validate through the same path parse_corpus uses
    tweet_from_record(record)
    return record


def convert_platform_export(
    stream: Iterable[str], profile: str | dict = "twitter-v2"
) -> tuple[list[dict], list[Diagnostic]]:
    """Convert raw export lines into interchange records plus diagnostics."""
    mapping = resolve_profile(profile)
    records: list[dict] = []
    diagnostics: list[Diagnostic] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(lineno, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(raw, dict):
            diagnostics.append(Diagnostic(lineno, "record is not an object"))
            continue
        objects = _v2_objects(raw) if mapping.name == "twitter-v2" else [(raw, {})]
        for obj, included in objects:
            try:
                records.append(_convert_one(obj, mapping, included))
            except ValueError as exc:
                rid = obj.get("id") if isinstance(obj, dict) else None
                diagnostics.append(Diagnostic(lineno, str(exc), None if rid is None else str(rid)))
    return records, diagnostics


def write_records(records: Iterable[dict], out: IO[str]) -> None:
    for record in records:
        out.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
        out.write("\n")
