"""Prediction output: one JSON line per sample plus a summary document."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IoFailureError


def summary_path(path) -> Path:
    return Path(str(path) + ".summary.json")


def write_predictions(results, path, extra: dict | None = None) -> dict:
    """Write one line per sample to `path` and the summary alongside it.

    Returns the summary: sample count, labeled count, correct count and
    top-1 accuracy (null when no labels were present), merged with any
    `extra` stream statistics the caller supplies.
    """
    count = labeled = correct = 0
    target = Path(path)
    try:
        with open(target, "w") as fh:
            for result in results:
                line = {
                    "id": result.sample_id,
                    "pred": result.pred_index,
                    "class": result.class_name,
                    "probs": [float(p) for p in result.probs],
                    "soft_vote": bool(result.soft_vote_applied),
                }
                if result.true_label is not None:
                    line["label"] = int(result.true_label)
                    labeled += 1
                    if result.pred_index == result.true_label:
                        correct += 1
                fh.write(json.dumps(line) + "\n")
                count += 1
        summary = {
            "count": count,
            "labeled": labeled,
            "correct": correct,
            "accuracy": (correct / labeled) if labeled else None,
        }
        if extra:
            summary.update(extra)
        summary_path(target).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write predictions to {target}: {exc}") from exc
    return summary


def read_predictions(path):
    """Parse a prediction file back into a list of line dicts."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        if raw.strip():
            lines.append(json.loads(raw))
    return lines
