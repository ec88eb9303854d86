"""Account -> named feature vector.

Features are partitioned into six groups (user metadata, friend metadata,
network, content/language, sentiment, timing). Each feature carries a
``linguistic`` flag (derived from post text or language tags) so that a
language-independent model can be trained without them.
"""

from __future__ import annotations

import hashlib
import math
import re
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from botcal.data import Account
from botcal.errors import ValidationError

SCHEMA_VERSION = "features-v1"

GROUPS = ("user_meta", "friend_meta", "network", "content_language", "sentiment", "temporal")

TZ_MISMATCH_MINUTES = 120
MIN_RECENT_WINDOW_DAYS = 1.0 / 24.0

# imputation defaults
RATE = 0.0
RATIO = 0.5
ENTROPY = 0.0


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    group: str
    linguistic: bool
    default: float


def _spec(name, group, default, linguistic=False):
    return FeatureSpec(name, group, linguistic, float(default))


_ROSTER = (
    # user metadata
    _spec("account_age_days", "user_meta", RATE),
    _spec("log_followers", "user_meta", RATE),
    _spec("log_friends", "user_meta", RATE),
    _spec("log_statuses", "user_meta", RATE),
    _spec("follower_friend_ratio", "user_meta", RATIO),
    _spec("screen_name_length", "user_meta", RATE),
    _spec("screen_name_digits", "user_meta", RATE),
    _spec("description_length", "user_meta", RATE),
    _spec("posts_per_day", "user_meta", RATE),
    _spec("log_deletion_mismatch", "user_meta", RATE),
    _spec("log_followers_per_day", "user_meta", RATE),
    _spec("log_friends_per_day", "user_meta", RATE),
    _spec("has_description", "user_meta", RATE),
    _spec("has_tz", "user_meta", RATE),
    # friend metadata
    _spec("log_neighbor_count", "friend_meta", RATE),
    _spec("neighbor_lang_match", "friend_meta", RATIO, linguistic=True),
    _spec("neighbor_lang_majority", "friend_meta", RATIO, linguistic=True),
    _spec("neighbor_lang_entropy", "friend_meta", ENTROPY, linguistic=True),
    _spec("timezone_mismatch", "friend_meta", 0.0),
    _spec("follower_fraction", "friend_meta", RATIO),
    # network (local proxies for retweet/mention structure)
    _spec("repost_fraction", "network", RATIO),
    _spec("mention_rate", "network", RATE),
    _spec("mention_post_fraction", "network", RATIO),
    _spec("hashtag_rate", "network", RATE),
    # content and language
    _spec("mean_words", "content_language", RATE, linguistic=True),
    _spec("std_words", "content_language", RATE, linguistic=True),
    _spec("mean_chars", "content_language", RATE, linguistic=True),
    _spec("url_rate", "content_language", RATE),
    _spec("url_post_fraction", "content_language", RATIO),
    _spec("lexical_diversity", "content_language", RATIO, linguistic=True),
    _spec("duplicate_fraction", "content_language", RATIO, linguistic=True),
    _spec("uppercase_ratio", "content_language", RATIO, linguistic=True),
    _spec("post_lang_entropy", "content_language", ENTROPY, linguistic=True),
    _spec("post_lang_match", "content_language", RATIO, linguistic=True),
    # sentiment
    _spec("valence_mean", "sentiment", RATE, linguistic=True),
    _spec("valence_std", "sentiment", RATE, linguistic=True),
    _spec("positive_fraction", "sentiment", RATIO, linguistic=True),
    _spec("negative_fraction", "sentiment", RATIO, linguistic=True),
    # timing and device
    _spec("log_gap_mean", "temporal", RATE),
    _spec("log_gap_std", "temporal", RATE),
    _spec("log_gap_min", "temporal", RATE),
    _spec("gap_cv", "temporal", RATE),
    _spec("hour_entropy", "temporal", ENTROPY),
    _spec("weekday_entropy", "temporal", ENTROPY),
    _spec("log_recent_rate", "temporal", RATE),
    _spec("source_entropy", "temporal", ENTROPY),
    _spec("source_count", "temporal", RATE),
)


class FeatureSchema:
    """Ordered, immutable feature roster."""

    def __init__(self, specs: Sequence[FeatureSpec], version: str = SCHEMA_VERSION):
        self.specs = tuple(specs)
        self.version = version
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise ValidationError("feature names must be unique")
        for s in self.specs:
            if s.group not in GROUPS:
                raise ValidationError(f"feature {s.name}: unknown group {s.group!r}")
        self.names = tuple(names)
        self._index = {n: i for i, n in enumerate(names)}
        self.defaults = np.array([s.default for s in self.specs], dtype=float)
        digest = hashlib.sha256(self.to_csv().encode()).hexdigest()[:16]
        self.fingerprint = f"{version}:{digest}"

    def __len__(self):
        return len(self.specs)

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and other.fingerprint == self.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        return f"FeatureSchema({len(self)} features, {self.fingerprint})"

    def index(self, name: str) -> int:
        return self._index[name]

    def to_csv(self) -> str:
        lines = ["name,group,linguistic,default"]
        for s in self.specs:
            lines.append(f"{s.name},{s.group},{str(s.linguistic).lower()},{s.default!r}")
        return "\n".join(lines) + "\n"

    def group_indices(self, group: str) -> list[int]:
        if group not in GROUPS:
            raise ValidationError(f"unknown feature group {group!r}; expected one of {GROUPS}")
        return [i for i, s in enumerate(self.specs) if s.group == group]

    def nonlinguistic_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.specs) if not s.linguistic]

    def restrict(self, indices: Iterable[int], tag: str) -> "FeatureSchema":
        return FeatureSchema([self.specs[i] for i in indices], version=f"{self.version}/{tag}")


DEFAULT_SCHEMA = FeatureSchema(_ROSTER)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.schema),):
            raise ValidationError(f"vector has {values.shape} values for {len(self.schema)} features")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        return (isinstance(other, FeatureVector) and self.schema == other.schema
                and np.array_equal(self.values, other.values))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.schema.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.schema.names, self.values.tolist()))


def group_slice(vec: FeatureVector, group: str) -> FeatureVector:
    idx = vec.schema.group_indices(group)
    if vec.schema.version.endswith("/" + group):
        return vec
    return FeatureVector(vec.schema.restrict(idx, group), vec.values[idx])


def strip_linguistic(vec: FeatureVector) -> FeatureVector:
    idx = vec.schema.nonlinguistic_indices()
    if not idx:
        raise ValidationError("every feature is linguistic; a language-independent model is impossible")
    if len(idx) == len(vec.schema):
        return vec
    return FeatureVector(vec.schema.restrict(idx, "nonlinguistic"), vec.values[idx])


# -- primitive statistics ------------------------------------------------------

def entropy_bits(symbols: Iterable) -> float:
    counts = np.array(list(Counter(symbols).values()), dtype=float)
    if counts.size <= 1:
        return 0.0
    p = counts / counts.sum()
    return float(max(0.0, -(p * np.log2(p)).sum()))


def neighbor_language_match(account: Account) -> float:
    """Share of neighbors whose language equals the account's; 0.5 when undefined."""
    if not account.neighbors or not account.lang:
        return 0.5
    return sum(n.lang == account.lang for n in account.neighbors) / len(account.neighbors)


def timezone_mismatch(account: Account) -> float:
    """Share of timezone-bearing neighbors more than two hours away from the account."""
    if account.tz_offset_minutes is None:
        return 0.0
    offsets = [n.tz_offset_minutes for n in account.neighbors if n.tz_offset_minutes is not None]
    if not offsets:
        return 0.0
    far = sum(abs(o - account.tz_offset_minutes) > TZ_MISMATCH_MINUTES for o in offsets)
    return far / len(offsets)


def account_age_days(account: Account) -> float:
    return max((account.reference_time - account.created_at).total_seconds() / 86400.0, 1.0)


def recent_rate(account: Account) -> float:
    """Posts per day over the window from the oldest available post to the reference time."""
    if not account.posts:
        return 0.0
    window = (account.reference_time - account.posts[-1].created_at).total_seconds() / 86400.0
    return len(account.posts) / max(window, MIN_RECENT_WINDOW_DAYS)


def deletion_mismatch(account: Account) -> float:
    """Recent posting rate relative to the lifetime rate implied by statuses_count.

    Large values flag accounts that post heavily but keep a small lifetime
    total, i.e. create and delete content.
    """
    age = account_age_days(account)
    lifetime = max(account.statuses_count / age, 1.0 / age)
    return recent_rate(account) / lifetime


_WORD = re.compile(r"\w+", re.UNICODE)

_POSITIVE = frozenset("""
good great love happy best awesome nice thanks thank excellent amazing wonderful
beautiful win fun glad enjoy like cool fantastic perfect proud success hope brilliant
kind friend favorite celebrate peace smile lucky joy fresh yay congrats well
""".split())
_NEGATIVE = frozenset("""
bad worst hate sad angry terrible awful horrible fail lose fear war kill
stupid corrupt liar fake crisis disaster ugly wrong sick hurt pain crime evil
scandal threat attack enemy shame disgusting poor broken dead traitor
""".split())


def word_valence(word: str) -> int:
    w = word.lower()
    return 1 if w in _POSITIVE else -1 if w in _NEGATIVE else 0


def _share(flags: Sequence[bool], default: float) -> float:
    return sum(flags) / len(flags) if flags else default


def _compute(account: Account) -> dict[str, float | None]:
    """Raw feature values; None marks an undefined value to be imputed."""
    f: dict[str, float | None] = {}
    posts = account.posts
    n_posts = len(posts)
    age = account_age_days(account)

    f["account_age_days"] = age
    f["log_followers"] = math.log1p(account.followers_count)
    f["log_friends"] = math.log1p(account.friends_count)
    f["log_statuses"] = math.log1p(account.statuses_count)
    f["follower_friend_ratio"] = (account.followers_count + 1) / (account.friends_count + 1)
    f["screen_name_length"] = len(account.screen_name)
    f["screen_name_digits"] = sum(c.isdigit() for c in account.screen_name)
    f["description_length"] = len(account.description)
    f["posts_per_day"] = account.statuses_count / age
    f["log_deletion_mismatch"] = math.log1p(deletion_mismatch(account))
    f["log_followers_per_day"] = math.log1p(account.followers_count / age)
    f["log_friends_per_day"] = math.log1p(account.friends_count / age)
    f["has_description"] = float(bool(account.description.strip()))
    f["has_tz"] = float(account.tz_offset_minutes is not None)

    nb = account.neighbors
    f["log_neighbor_count"] = math.log1p(len(nb))
    if nb and account.lang:
        matches = [float(n.lang == account.lang) for n in nb]
        f["neighbor_lang_match"] = neighbor_language_match(account)
        f["neighbor_lang_majority"] = float(statistics.median(matches))
    else:
        f["neighbor_lang_match"] = f["neighbor_lang_majority"] = None
    f["neighbor_lang_entropy"] = entropy_bits(n.lang for n in nb) if nb else None
    f["timezone_mismatch"] = timezone_mismatch(account)
    f["follower_fraction"] = _share([n.relation == "follower" for n in nb], None)

    if n_posts:
        f["repost_fraction"] = _share([p.is_repost for p in posts], None)
        f["mention_rate"] = sum(p.mention_count for p in posts) / n_posts
        f["mention_post_fraction"] = _share([p.mention_count > 0 for p in posts], None)
        f["hashtag_rate"] = sum(p.hashtag_count for p in posts) / n_posts
        f["url_rate"] = sum(p.url_count for p in posts) / n_posts
        f["url_post_fraction"] = _share([p.url_count > 0 for p in posts], None)

        tokens = [_WORD.findall(p.text) for p in posts]
        counts = np.array([len(t) for t in tokens], dtype=float)
        f["mean_words"] = float(counts.mean())
        f["std_words"] = float(counts.std())
        f["mean_chars"] = float(np.mean([len(p.text) for p in posts]))
        all_tokens = [w.lower() for t in tokens for w in t]
        f["lexical_diversity"] = len(set(all_tokens)) / len(all_tokens) if all_tokens else None
        seen: set[str] = set()
        dups = 0
        for p in reversed(posts):
            key = " ".join(p.text.lower().split())
            dups += key in seen
            seen.add(key)
        f["duplicate_fraction"] = dups / n_posts
        letters = [c for p in posts for c in p.text if c.isalpha()]
        f["uppercase_ratio"] = sum(c.isupper() for c in letters) / len(letters) if letters else None
        f["post_lang_entropy"] = entropy_bits(p.lang for p in posts)
        f["post_lang_match"] = _share([p.lang == account.lang for p in posts], None) if account.lang else None

        valences = []
        for t in tokens:
            hits = [v for v in map(word_valence, t) if v]
            valences.append(sum(hits) / len(hits) if hits else 0.0)
        val = np.array(valences)
        f["valence_mean"] = float(val.mean())
        f["valence_std"] = float(val.std())
        f["positive_fraction"] = float((val > 0).mean())
        f["negative_fraction"] = float((val < 0).mean())

        times = [p.created_at for p in posts]
        f["hour_entropy"] = entropy_bits(t.hour for t in times)
        f["weekday_entropy"] = entropy_bits(t.weekday() for t in times)
        f["log_recent_rate"] = math.log1p(recent_rate(account))
        f["source_entropy"] = entropy_bits(p.source for p in posts)
        f["source_count"] = len({p.source for p in posts})
        if n_posts >= 2:
            stamps = np.array([t.timestamp() for t in times])
            gaps = np.maximum(-np.diff(stamps), 0.0)
            mean = float(gaps.mean())
            std = float(gaps.std())
            f["log_gap_mean"] = math.log1p(mean)
            f["log_gap_std"] = math.log1p(std)
            f["log_gap_min"] = math.log1p(float(gaps.min()))
            f["gap_cv"] = std / mean if mean > 0 else 0.0
    return f


def extract(account: Account, schema: FeatureSchema = DEFAULT_SCHEMA) -> FeatureVector:
    """Compute the feature vector of ``account`` under ``schema``.

    Undefined values (no posts, no neighbors, no timezone) take the schema's
    imputation default. Always returns finite values.
    """
    raw = _compute(account)
    values = schema.defaults.copy()
    for i, name in enumerate(schema.names):
        v = raw.get(name)
        if v is not None and math.isfinite(v):
            values[i] = v
    return FeatureVector(schema, values)


def extract_matrix(accounts: Sequence[Account], schema: FeatureSchema = DEFAULT_SCHEMA) -> np.ndarray:
    if not accounts:
        return np.empty((0, len(schema)))
    return np.vstack([extract(a, schema).values for a in accounts])
