"""Trial success labeling, dataset filtering, and dataset/survey statistics."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path

from .errors import (
    EmptyInput,
    EmptyQuestion,
    OutOfRangeRating,
    UnknownTrial,
    UnlabeledTrial,
)
from .session import SessionManifest, Task, _manifest_from_dict, _manifest_to_dict


class Violation(str, Enum):
    OBJECT_DROP = "object_drop"
    ITEM_FELL = "item_fell"
    ENVIRONMENT_COLLISION = "environment_collision"
    INAPPROPRIATE_FORCE = "inappropriate_force"

    @classmethod
    def parse(cls, raw: str) -> str:
        """Known kinds map to the closed set; anything else is kept as
        ``other:<text>`` so no information is lost."""
        try:
            return cls(raw).value
        except ValueError:
            if raw.startswith("other:"):
                return raw
            return f"other:{raw}"


def _iter_manifest_paths(root: Path):
    for path in sorted(root.glob("*/manifest.json")):
        yield path


def label_trial(dataset_root: str | Path, trial_id: str, flags: list[str]) -> SessionManifest:
    """Set a trial's violation flags; success is exactly 'no flags'.

    Relabeling overwrites any previous flags. The updated manifest is written
    back in place and returned.
    """
    root = Path(dataset_root)
    for path in _iter_manifest_paths(root):
        manifest = _manifest_from_dict(json.loads(path.read_text(encoding="utf-8")))
        if manifest.session_id != trial_id:
            continue
        parsed = tuple(Violation.parse(f) for f in flags)
        from dataclasses import replace

        updated = replace(manifest, violation_flags=parsed, success=len(parsed) == 0)
        path.write_text(
            json.dumps(_manifest_to_dict(updated), indent=2) + "\n", encoding="utf-8"
        )
        return updated
    raise UnknownTrial(trial_id)


@dataclass(frozen=True)
class DatasetStats:
    per_task: dict[str, dict[str, int]]  # task -> {"raw": n, "successful": n}
    total_raw: int
    total_successful: int
    success_percentage: str  # 2 decimals, half-up, e.g. "80.30"

    def to_json_dict(self) -> dict:
        return {
            "per_task": self.per_task,
            "total_raw": self.total_raw,
            "total_successful": self.total_successful,
            "success_percentage": self.success_percentage,
        }


def _percentage(successful: int, raw: int) -> str:
    if raw == 0:
        return "0.00"
    pct = Decimal(100) * Decimal(successful) / Decimal(raw)
    return str(pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def dataset_stats(manifests: list[SessionManifest]) -> DatasetStats:
    """Raw vs successful counts per task, plus the overall percentage."""
    if not manifests:
        raise EmptyInput("no manifests")
    per_task: dict[str, dict[str, int]] = {}
    for m in manifests:
        task = m.task.value if isinstance(m.task, Task) else str(m.task)
        row = per_task.setdefault(task, {"raw": 0, "successful": 0})
        row["raw"] += 1
        if m.success:
            row["successful"] += 1
    per_task = dict(sorted(per_task.items()))
    total_raw = sum(r["raw"] for r in per_task.values())
    total_successful = sum(r["successful"] for r in per_task.values())
    return DatasetStats(
        per_task=per_task,
        total_raw=total_raw,
        total_successful=total_successful,
        success_percentage=_percentage(total_successful, total_raw),
    )


def load_manifests(dataset_root: str | Path) -> list[SessionManifest]:
    root = Path(dataset_root)
    return [
        _manifest_from_dict(json.loads(p.read_text(encoding="utf-8")))
        for p in _iter_manifest_paths(root)
    ]


def filter_successful(dataset_root: str | Path, strict: bool = True) -> list[str]:
    """Trial ids of successful trials, ordered by (task, trial_id).

    Unlabeled trials (success is null) raise in strict mode and are excluded
    with a warning otherwise.
    """
    selected = []
    for m in load_manifests(dataset_root):
        if m.success is None:
            if strict:
                raise UnlabeledTrial(m.session_id)
            warnings.warn(f"trial {m.session_id} unlabeled; excluded")
            continue
        if m.success:
            task = m.task.value if isinstance(m.task, Task) else str(m.task)
            selected.append((task, m.session_id))
    return [trial_id for _, trial_id in sorted(selected)]


@dataclass(frozen=True)
class SurveySummary:
    per_question: dict[str, dict]  # qid -> {"median": float, "top_box_percent": float, "n": int}


def survey_stats(responses: dict[str, list[int]]) -> SurveySummary:
    """Median and top-box percentage (ratings of 4 or 5) per question.

    Even-length rating lists take the mean of the middle two for the median.
    """
    per_question = {}
    for qid, ratings in responses.items():
        if not ratings:
            raise EmptyQuestion(qid)
        for r in ratings:
            if r not in (1, 2, 3, 4, 5):
                raise OutOfRangeRating(f"{qid}: rating {r}")
        ordered = sorted(ratings)
        n = len(ordered)
        if n % 2 == 1:
            median = float(ordered[n // 2])
        else:
            median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
        top_box = 100.0 * sum(1 for r in ratings if r >= 4) / n
        per_question[qid] = {"median": median, "top_box_percent": top_box, "n": n}
    return SurveySummary(per_question=per_question)


def load_survey_csv(path: str | Path) -> dict[str, list[int]]:
    """Read survey responses: CSV columns question_id, participant_id, rating."""
    import csv

    responses: dict[str, list[int]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            responses.setdefault(row["question_id"], []).append(int(row["rating"]))
    return responses
