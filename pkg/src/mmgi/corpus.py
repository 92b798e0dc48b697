"""On-disk corpus format, example bundles, and validation.

One JSON object per line. Feature vectors are base64-encoded float64 arrays
(row-major) so a corpus stays a single human-inspectable document. All indices
are 0-based on disk and all times are seconds; span indices are converted to
the 1-based inclusive convention used internally.

Schema per line::

    {"id": str,
     "tokens": [str, ...]?,                 # absent in textless-only corpora
     "clips": [{"start": s, "end": s}, ...],
     "clip_feats_ref": base64,              # T x d_s float64
     "f0_frames": [[hz, ...], ...],         # per clip; 0 marks unvoiced frames
     "vad_frames": [[0|1, ...], ...],       # per clip
     "regions": [{"feat_ref": base64, "bbox": [x0, y0, x1, y1],
                  "category": int}, ...],
     "image_size": [w, h],
     "gold_brackets": [[i, j], ...]?,       # 0-based inclusive token spans
     "gold_labels": [str, ...]?}            # aligned with gold_brackets
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DataValidationError
from .features import RegionSet, SpeechTrack
from .trees import Tree

__all__ = ["ExampleBundle", "load_corpus", "save_corpus", "brackets_to_tree"]


def _encode(array: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(array, dtype=np.float64).tobytes()).decode()


def _decode(blob: str, rows: int) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(blob), dtype=np.float64)
    if rows > 0 and raw.size % rows != 0:
        raise DataValidationError(f"feature blob of {raw.size} floats not divisible by {rows}")
    return raw.reshape(rows, -1).copy() if rows > 0 else raw.copy()


@dataclass
class ExampleBundle:
    """One aligned (tokens, speech, image) training or evaluation instance."""

    id: str
    tokens: list[str] | None
    speech: SpeechTrack
    regions: RegionSet
    gold_brackets: list[tuple[int, int]] | None = None  # 1-based inclusive
    gold_labels: list[str] | None = None

    @property
    def n(self) -> int:
        """Sequence length: token count in the full setting, else clip count."""
        return len(self.tokens) if self.tokens is not None else self.speech.count

    def validate(self, mode: str = "full") -> None:
        self.speech.validate(self.id)
        self.regions.validate(self.id)
        if mode == "full":
            if self.tokens is None:
                raise DataValidationError(f"example {self.id}: full mode needs tokens")
            if len(self.tokens) != self.speech.count:
                raise AlignmentError(
                    f"example {self.id}: {len(self.tokens)} tokens but "
                    f"{self.speech.count} clips; full mode requires one clip per token"
                )
        if self.gold_brackets is not None:
            n = self.n
            for i, j in self.gold_brackets:
                if not (1 <= i <= j <= n):
                    raise DataValidationError(
                        f"example {self.id}: gold bracket ({i}, {j}) outside 1..{n}"
                    )
            if n >= 2:
                try:
                    brackets_to_tree(self.gold_brackets, n)
                except DataValidationError as exc:
                    raise DataValidationError(f"example {self.id}: {exc}") from exc
        if self.gold_labels is not None:
            if self.gold_brackets is None or len(self.gold_labels) != len(self.gold_brackets):
                raise DataValidationError(
                    f"example {self.id}: gold_labels must pair with gold_brackets"
                )

    def gold_tree(self) -> Tree | None:
        if self.gold_brackets is None:
            return None
        return brackets_to_tree(self.gold_brackets, self.n)


def brackets_to_tree(brackets: list[tuple[int, int]], n: int) -> Tree:
    """Rebuild the binary tree from its internal-node spans."""
    if n == 1:
        return 1
    spans = set(brackets) | {(i, i) for i in range(1, n + 1)}
    if (1, n) not in spans:
        raise DataValidationError("bracket set lacks the root span")
    if len(set(brackets)) != n - 1:
        raise DataValidationError(
            f"{len(set(brackets))} brackets cannot form a binary tree over {n} leaves"
        )

    def build(i: int, j: int) -> Tree:
        if i == j:
            return i
        for k in range(i, j):
            if (i, k) in spans and (k + 1, j) in spans:
                return (build(i, k), build(k + 1, j))
        raise DataValidationError(f"span ({i}, {j}) has no valid decomposition")

    return build(1, n)


# ---------------------------------------------------------------------------
# serialization


def _bundle_to_record(ex: ExampleBundle) -> dict:
    record: dict = {"id": ex.id}
    if ex.tokens is not None:
        record["tokens"] = list(ex.tokens)
    record["clips"] = [{"start": s, "end": e} for s, e in ex.speech.clips]
    record["clip_feats_ref"] = _encode(ex.speech.clip_features)
    record["f0_frames"] = [[float(v) for v in fr] for fr in ex.speech.f0_frames]
    record["vad_frames"] = [[1 if v else 0 for v in fr] for fr in ex.speech.vad_frames]
    record["frame_period"] = ex.speech.frame_period
    record["regions"] = [
        {
            "feat_ref": _encode(ex.regions.features[m]),
            "bbox": [float(v) for v in ex.regions.bboxes[m]],
            "category": int(ex.regions.categories[m]),
        }
        for m in range(ex.regions.count)
    ]
    record["image_size"] = [float(ex.regions.image_size[0]), float(ex.regions.image_size[1])]
    if ex.gold_brackets is not None:
        record["gold_brackets"] = [[i - 1, j - 1] for i, j in ex.gold_brackets]
    if ex.gold_labels is not None:
        record["gold_labels"] = list(ex.gold_labels)
    return record


def _record_to_bundle(record: dict, line_no: int) -> ExampleBundle:
    try:
        ex_id = str(record["id"])
        clips = [(float(c["start"]), float(c["end"])) for c in record["clips"]]
        clip_feats = _decode(record["clip_feats_ref"], len(clips))
        speech = SpeechTrack(
            clips=clips,
            clip_features=clip_feats,
            f0_frames=[[float(v) for v in fr] for fr in record["f0_frames"]],
            vad_frames=[[bool(v) for v in fr] for fr in record["vad_frames"]],
            frame_period=float(record.get("frame_period", 0.01)),
        )
        feats = np.stack([_decode(r["feat_ref"], 1)[0] for r in record["regions"]]) \
            if record["regions"] else np.zeros((0, 0))
        regions = RegionSet(
            features=feats,
            bboxes=np.array([r["bbox"] for r in record["regions"]], dtype=np.float64),
            categories=np.array([r["category"] for r in record["regions"]], dtype=np.intp),
            image_size=(float(record["image_size"][0]), float(record["image_size"][1])),
        )
        gold = None
        if "gold_brackets" in record:
            gold = [(int(i) + 1, int(j) + 1) for i, j in record["gold_brackets"]]
        return ExampleBundle(
            id=ex_id,
            tokens=[str(t) for t in record["tokens"]] if "tokens" in record else None,
            speech=speech,
            regions=regions,
            gold_brackets=gold,
            gold_labels=[str(s) for s in record["gold_labels"]] if "gold_labels" in record else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"corpus line {line_no}: {exc!r}") from exc


def save_corpus(examples: list[ExampleBundle], path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for ex in examples:
            fh.write(json.dumps(_bundle_to_record(ex)) + "\n")


def load_corpus(path: str | Path, mode: str = "full") -> list[ExampleBundle]:
    """Parse, validate, and deterministically order (by id) a corpus file."""
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"corpus file not found: {path}")
    examples = []
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataValidationError(f"corpus line {line_no}: {exc.msg}") from exc
            examples.append(_record_to_bundle(record, line_no))
    if not examples:
        raise DataValidationError(f"corpus file {path} contains no examples")
    seen: set[str] = set()
    for ex in examples:
        if ex.id in seen:
            raise DataValidationError(f"duplicate example id {ex.id!r}")
        seen.add(ex.id)
        ex.validate(mode)
    return sorted(examples, key=lambda ex: ex.id)
