"""Subjective-study protocol: session plans and collected ratings.

A session is a training pair followed by a seeded shuffle of the rated
items (test stimuli, hidden references, and a handful of repeats for
intra-observer consistency). Plans are pure functions of their inputs
and serialize to JSON; ratings travel as CSV so analysis never depends
on the live session service.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, asdict
from pathlib import Path

__all__ = [
    "StimulusRecord",
    "SessionPlan",
    "Rating",
    "RatingSet",
    "PlanError",
    "RatingsIngestError",
    "DEFAULT_SCALE_LABELS",
    "build_session",
    "validate_session",
    "save_plan",
    "load_plan",
    "ingest_ratings",
    "write_ratings_header",
    "RATINGS_HEADER",
]

DEFAULT_SCALE_LABELS = ("Bad", "Poor", "Fair", "Good", "Excellent")
RATINGS_HEADER = ["observer", "stimulus", "score", "timestamp", "presentation_index"]

RATED_ROLES = {"test", "hidden_reference"}
TRAINING_ROLES = {"training_good", "training_bad"}


class PlanError(ValueError):
    """Session plan cannot be built or violates its invariants."""


class RatingsIngestError(ValueError):
    """Ratings CSV is malformed; message carries the row number."""


@dataclass(frozen=True)
class StimulusRecord:
    """One presentable item. Repeat entries reuse the id of the rated
    item they duplicate; all other ids are unique."""

    id: str
    media: str
    role: str = "test"
    config: str = ""


@dataclass
class SessionPlan:
    items: list[StimulusRecord]
    training: tuple[StimulusRecord, StimulusRecord]
    seed: int
    scale_labels: tuple[str, ...] = DEFAULT_SCALE_LABELS
    policies: dict = field(
        default_factory=lambda: {"single_playback": True, "unlimited_rating_time": True}
    )

    @property
    def sequence(self) -> list[StimulusRecord]:
        """Full presentation order: training pair then the main list."""
        return [self.training[0], self.training[1], *self.items]


def build_session(
    stimuli: list[StimulusRecord],
    repeat_count: int,
    seed: int,
    training: tuple[StimulusRecord, StimulusRecord],
    fixed_repeats: list[str] | None = None,
    enforce_nonadjacency: bool = True,
    max_reshuffles: int = 1000,
) -> SessionPlan:
    """Assemble a randomized session plan; deterministic in the seed.

    Repeats are drawn uniformly without replacement from the rated items
    unless fixed_repeats pins them (the reproduction mode for a study
    that reused one global repeat list). Non-adjacency of an item and
    its own repeat is enforced by bounded reshuffles.
    """
    rated = [s for s in stimuli if s.role in RATED_ROLES]
    if len(rated) != len(stimuli):
        bad = [s.id for s in stimuli if s.role not in RATED_ROLES]
        raise PlanError(f"stimuli must have test/hidden_reference roles; got {bad}")
    if not any(s.role == "hidden_reference" for s in rated):
        raise PlanError("no hidden_reference items among the stimuli")
    ids = [s.id for s in rated]
    if len(set(ids)) != len(ids):
        raise PlanError("duplicate stimulus ids in the input")
    if repeat_count > len(rated):
        raise PlanError(f"repeat_count {repeat_count} exceeds the {len(rated)} rated items")
    if training[0].role != "training_good" or training[1].role != "training_bad":
        raise PlanError("training must be a (training_good, training_bad) pair")

    rng = random.Random(seed)
    by_id = {s.id: s for s in rated}
    if fixed_repeats is not None:
        missing = [rid for rid in fixed_repeats if rid not in by_id]
        if missing:
            raise PlanError(f"fixed_repeats not among the rated items: {missing}")
        if len(fixed_repeats) != repeat_count:
            raise PlanError(
                f"fixed_repeats has {len(fixed_repeats)} ids, expected {repeat_count}"
            )
        repeat_ids = list(fixed_repeats)
    else:
        repeat_ids = rng.sample(ids, repeat_count)

    repeats = [
        StimulusRecord(by_id[rid].id, by_id[rid].media, "repeat", by_id[rid].config)
        for rid in repeat_ids
    ]
    items = rated + repeats
    for attempt in range(max_reshuffles):
        rng.shuffle(items)
        if not enforce_nonadjacency or not _adjacent_duplicates(items):
            break
    else:
        raise PlanError(
            f"could not find a non-adjacent ordering in {max_reshuffles} reshuffles"
        )
    return SessionPlan(items=list(items), training=training, seed=seed)


def _adjacent_duplicates(items: list[StimulusRecord]) -> bool:
    return any(a.id == b.id for a, b in zip(items, items[1:]))


def validate_session(plan: SessionPlan) -> list[str]:
    """All plan invariants; empty list iff the plan is valid.

    Each violation string starts with a stable class tag.
    """
    violations = []
    main_ids = [s.id for s in plan.items]

    for s in plan.items:
        if s.role in TRAINING_ROLES:
            violations.append(f"training-in-main: {s.id} appears in the main list")
    for t in plan.training:
        if t.role not in TRAINING_ROLES:
            violations.append(f"bad-training-role: {t.id} has role {t.role}")

    counts: dict[str, int] = {}
    for sid in main_ids:
        counts[sid] = counts.get(sid, 0) + 1
    repeat_ids = {s.id for s in plan.items if s.role == "repeat"}
    for sid, n in counts.items():
        if n > 2 or (n == 2 and sid not in repeat_ids):
            violations.append(f"duplicate-id: {sid} appears {n} times without a repeat role")
    for rid in repeat_ids:
        if counts.get(rid, 0) != 2:
            violations.append(f"unpaired-repeat: {rid} lacks its original presentation")

    for a, b in zip(plan.items, plan.items[1:]):
        if a.id == b.id:
            violations.append(f"adjacent-repeat: {a.id} is adjacent to its repeat")

    if len(plan.scale_labels) != 5:
        violations.append(f"scale-labels: expected 5 labels, got {len(plan.scale_labels)}")
    return violations


def save_plan(plan: SessionPlan, path) -> None:
    doc = {
        "seed": plan.seed,
        "scale_labels": list(plan.scale_labels),
        "policies": plan.policies,
        "training": [asdict(t) for t in plan.training],
        "items": [asdict(s) for s in plan.items],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_plan(path) -> SessionPlan:
    doc = json.loads(Path(path).read_text())
    training = tuple(StimulusRecord(**t) for t in doc["training"])
    if len(training) != 2:
        raise PlanError(f"{path}: plan must carry exactly 2 training items")
    return SessionPlan(
        items=[StimulusRecord(**s) for s in doc["items"]],
        training=training,  # type: ignore[arg-type]
        seed=doc["seed"],
        scale_labels=tuple(doc["scale_labels"]),
        policies=doc.get("policies", {}),
    )


@dataclass(frozen=True)
class Rating:
    observer: str
    stimulus: str
    score: int
    timestamp: str
    presentation_index: int


@dataclass
class RatingSet:
    ratings: list[Rating] = field(default_factory=list)

    def observers(self) -> list[str]:
        return sorted({r.observer for r in self.ratings})

    def stimuli(self) -> list[str]:
        return sorted({r.stimulus for r in self.ratings})

    def for_observer(self, observer: str) -> list[Rating]:
        return [r for r in self.ratings if r.observer == observer]

    def for_stimulus(self, stimulus: str) -> list[Rating]:
        return [r for r in self.ratings if r.stimulus == stimulus]


def write_ratings_header(path) -> None:
    with Path(path).open("w", newline="") as fh:
        csv.writer(fh).writerow(RATINGS_HEADER)


def ingest_ratings(path) -> RatingSet:
    """Load and validate a ratings CSV.

    Scores must be integers in [1, 5] (1=Bad .. 5=Excellent) and each
    (observer, presentation_index) may appear only once; violations name
    the offending row.
    """
    ratings = []
    seen: set[tuple[str, int]] = set()
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RATINGS_HEADER:
            raise RatingsIngestError(
                f"{path}: header must be {','.join(RATINGS_HEADER)}, got {header}"
            )
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RATINGS_HEADER):
                raise RatingsIngestError(f"{path}: row {rownum}: expected 5 fields")
            observer, stimulus, score_s, timestamp, index_s = row
            try:
                score = int(score_s)
                index = int(index_s)
            except ValueError:
                raise RatingsIngestError(
                    f"{path}: row {rownum}: non-integer score or index"
                ) from None
            if not 1 <= score <= 5:
                raise RatingsIngestError(
                    f"{path}: row {rownum}: score {score} outside [1, 5]"
                )
            key = (observer, index)
            if key in seen:
                raise RatingsIngestError(
                    f"{path}: row {rownum}: duplicate rating for observer "
                    f"{observer!r} at presentation index {index}"
                )
            seen.add(key)
            ratings.append(Rating(observer, stimulus, score, timestamp, index))
    return RatingSet(ratings)
