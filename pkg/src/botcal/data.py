"""Account records, labeled corpora, and their on-disk formats.

Accounts are stored one JSON object per line (UTF-8). Labels are a two
column CSV with header ``id,label`` where label is ``human`` or ``bot``
(case-insensitive).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from botcal.errors import ParseError, ValidationError

log = logging.getLogger(__name__)

HUMAN = 0
BOT = 1
LABEL_NAMES = {HUMAN: "human", BOT: "bot"}
LABEL_TOKENS = {"human": HUMAN, "bot": BOT}
RELATIONS = ("friend", "follower")


def parse_timestamp(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (TypeError, ValueError, AttributeError) as exc:
        raise ValidationError(f"bad timestamp {text!r}") from exc
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class Post:
    text: str
    created_at: datetime
    source: str = ""
    lang: str = ""
    url_count: int = 0
    hashtag_count: int = 0
    mention_count: int = 0
    is_repost: bool = False

    def __post_init__(self):
        for name in ("url_count", "hashtag_count", "mention_count"):
            if getattr(self, name) < 0:
                raise ValidationError(f"post {name} must be >= 0")


@dataclass(frozen=True)
class NeighborSummary:
    relation: str
    lang: str = ""
    tz_offset_minutes: int | None = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValidationError(f"neighbor relation must be one of {RELATIONS}, got {self.relation!r}")


@dataclass(frozen=True)
class Account:
    """One social-media account.

    ``posts`` are most recent first. ``collected_at`` is the crawl time used
    as the reference clock for age and rate features; when absent the newest
    post (or account creation) stands in for it.
    """

    id: str
    screen_name: str
    created_at: datetime
    followers_count: int = 0
    friends_count: int = 0
    statuses_count: int = 0
    description: str = ""
    lang: str = ""
    tz_offset_minutes: int | None = None
    posts: tuple[Post, ...] = ()
    neighbors: tuple[NeighborSummary, ...] = ()
    collected_at: datetime | None = None

    def __post_init__(self):
        object.__setattr__(self, "posts", tuple(self.posts))
        object.__setattr__(self, "neighbors", tuple(self.neighbors))
        for name in ("followers_count", "friends_count", "statuses_count"):
            if getattr(self, name) < 0:
                raise ValidationError(f"account {self.id}: {name} must be >= 0")
        for newer, older in zip(self.posts, self.posts[1:]):
            if newer.created_at < older.created_at:
                raise ValidationError(f"account {self.id}: posts must be sorted newest first")
        if self.posts and self.created_at > self.posts[0].created_at:
            raise ValidationError(f"account {self.id}: created_at is after its newest post")

    @property
    def reference_time(self) -> datetime:
        if self.collected_at is not None:
            return self.collected_at
        if self.posts:
            return self.posts[0].created_at
        return self.created_at


# -- record (de)serialization -------------------------------------------------

def _post_to_record(p: Post) -> dict:
    return {
        "text": p.text,
        "created_at": format_timestamp(p.created_at),
        "source": p.source,
        "lang": p.lang,
        "url_count": p.url_count,
        "hashtag_count": p.hashtag_count,
        "mention_count": p.mention_count,
        "is_repost": p.is_repost,
    }


def _neighbor_to_record(n: NeighborSummary) -> dict:
    rec = {"relation": n.relation, "lang": n.lang}
    if n.tz_offset_minutes is not None:
        rec["tz_offset_minutes"] = n.tz_offset_minutes
    return rec


def account_to_record(a: Account) -> dict:
    rec = {
        "id": a.id,
        "screen_name": a.screen_name,
        "created_at": format_timestamp(a.created_at),
        "followers_count": a.followers_count,
        "friends_count": a.friends_count,
        "statuses_count": a.statuses_count,
        "description": a.description,
        "lang": a.lang,
    }
    if a.tz_offset_minutes is not None:
        rec["tz_offset_minutes"] = a.tz_offset_minutes
    if a.collected_at is not None:
        rec["collected_at"] = format_timestamp(a.collected_at)
    rec["posts"] = [_post_to_record(p) for p in a.posts]
    rec["neighbors"] = [_neighbor_to_record(n) for n in a.neighbors]
    return rec


def _int(rec: dict, key: str, default: int | None = 0) -> int | None:
    value = rec.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"field {key!r} must be an integer, got {value!r}")
    return value


def _str(rec: dict, key: str, default: str = "") -> str:
    value = rec.get(key, default)
    if value is None:
        return default
    if not isinstance(value, str):
        raise ValidationError(f"field {key!r} must be a string, got {value!r}")
    return value


def account_from_record(rec: dict) -> Account:
    """Build an Account from a decoded JSON object. Raises ValidationError."""
    if not isinstance(rec, dict):
        raise ValidationError("account record must be a JSON object")
    for key in ("id", "created_at"):
        if key not in rec:
            raise ValidationError(f"account record missing {key!r}")
    posts = []
    for p in rec.get("posts") or []:
        if not isinstance(p, dict) or "created_at" not in p:
            raise ValidationError("post record must be an object with created_at")
        posts.append(Post(
            text=_str(p, "text"),
            created_at=parse_timestamp(p["created_at"]),
            source=_str(p, "source"),
            lang=_str(p, "lang"),
            url_count=_int(p, "url_count"),
            hashtag_count=_int(p, "hashtag_count"),
            mention_count=_int(p, "mention_count"),
            is_repost=bool(p.get("is_repost", False)),
        ))
    neighbors = []
    for n in rec.get("neighbors") or []:
        if not isinstance(n, dict):
            raise ValidationError("neighbor record must be an object")
        neighbors.append(NeighborSummary(
            relation=_str(n, "relation"),
            lang=_str(n, "lang"),
            tz_offset_minutes=_int(n, "tz_offset_minutes", None),
        ))
    collected = rec.get("collected_at")
    return Account(
        id=str(rec["id"]),
        screen_name=_str(rec, "screen_name"),
        created_at=parse_timestamp(rec["created_at"]),
        followers_count=_int(rec, "followers_count"),
        friends_count=_int(rec, "friends_count"),
        statuses_count=_int(rec, "statuses_count"),
        description=_str(rec, "description"),
        lang=_str(rec, "lang"),
        tz_offset_minutes=_int(rec, "tz_offset_minutes", None),
        posts=posts,
        neighbors=neighbors,
        collected_at=parse_timestamp(collected) if collected is not None else None,
    )


def dumps_account(a: Account) -> str:
    return json.dumps(account_to_record(a), ensure_ascii=False, separators=(",", ":"))


def loads_account(text: str) -> Account:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed account JSON: {exc}") from exc
    return account_from_record(rec)


def iter_accounts(path: str | Path) -> Iterator[Account]:
    """Yield accounts from a line-delimited file; errors name the line number."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield loads_account(line)
            except ValidationError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc


def read_accounts(path: str | Path) -> list[Account]:
    accounts = list(iter_accounts(path))
    seen = set()
    for a in accounts:
        if a.id in seen:
            raise ValidationError(f"{path}: duplicate account id {a.id!r}")
        seen.add(a.id)
    return accounts


def write_accounts(path: str | Path, accounts: Iterable[Account]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in accounts:
            fh.write(dumps_account(a))
            fh.write("\n")


def read_labels(path: str | Path) -> dict[str, int]:
    labels: dict[str, int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return labels
        if [h.strip().lower() for h in header] != ["id", "label"]:
            raise ParseError(f"{path}: expected header 'id,label', got {','.join(header)!r}")
        for rowno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{rowno}: expected 2 columns, got {len(row)}")
            acc_id, token = row[0].strip(), row[1].strip().lower()
            if token not in LABEL_TOKENS:
                raise ValidationError(f"{path}:{rowno}: unknown label {row[1]!r} (expected human or bot)")
            if acc_id in labels:
                raise ValidationError(f"{path}:{rowno}: duplicate label for id {acc_id!r}")
            labels[acc_id] = LABEL_TOKENS[token]
    return labels


def write_labels(path: str | Path, corpus: "LabeledCorpus") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,label\n")
        for a, y in corpus.entries:
            fh.write(f"{a.id},{LABEL_NAMES[y]}\n")


@dataclass(frozen=True)
class LabeledCorpus:
    """Named list of (account, label) pairs; label is HUMAN (0) or BOT (1)."""

    name: str
    entries: tuple[tuple[Account, int], ...]
    unlabeled_ids: tuple[str, ...] = field(default=(), compare=False)
    orphan_label_ids: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((a, int(y)) for a, y in self.entries))
        seen = set()
        for a, y in self.entries:
            if y not in LABEL_NAMES:
                raise ValidationError(f"corpus {self.name}: label {y!r} for {a.id} is not human/bot")
            if a.id in seen:
                raise ValidationError(f"corpus {self.name}: duplicate account id {a.id!r}")
            seen.add(a.id)

    def __len__(self):
        return len(self.entries)

    @property
    def accounts(self) -> list[Account]:
        return [a for a, _ in self.entries]

    @property
    def labels(self) -> list[int]:
        return [y for _, y in self.entries]

    def counts(self) -> tuple[int, int]:
        """(n_humans, n_bots)"""
        n_bots = sum(self.labels)
        return len(self.entries) - n_bots, n_bots

    def subset(self, indices: Iterable[int], name: str | None = None) -> "LabeledCorpus":
        return LabeledCorpus(name or self.name, tuple(self.entries[i] for i in indices))

    def relabeled(self, labels: Iterable[int], name: str | None = None) -> "LabeledCorpus":
        return LabeledCorpus(name or self.name, tuple(zip(self.accounts, labels)))

    @staticmethod
    def union(corpora: Iterable["LabeledCorpus"], name: str | None = None) -> "LabeledCorpus":
        corpora = list(corpora)
        entries = tuple(e for c in corpora for e in c.entries)
        return LabeledCorpus(name or "+".join(c.name for c in corpora), entries)


def load_corpus(accounts_path: str | Path, labels_path: str | Path, name: str | None = None) -> LabeledCorpus:
    """Join an accounts file with a labels file.

    Accounts without a label are skipped (counted in ``unlabeled_ids``);
    labels naming no account are reported in ``orphan_label_ids``.
    """
    accounts = read_accounts(accounts_path)
    labels = read_labels(labels_path)
    entries = [(a, labels[a.id]) for a in accounts if a.id in labels]
    unlabeled = tuple(a.id for a in accounts if a.id not in labels)
    known = {a.id for a in accounts}
    orphans = tuple(i for i in labels if i not in known)
    if unlabeled:
        log.warning("%d account(s) without a label skipped", len(unlabeled))
    if orphans:
        log.warning("%d label(s) refer to missing accounts: %s", len(orphans), ", ".join(orphans[:10]))
    return LabeledCorpus(
        name or Path(accounts_path).stem,
        tuple(entries),
        unlabeled_ids=unlabeled,
        orphan_label_ids=orphans,
    )
