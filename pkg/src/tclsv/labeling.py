"""Time-contrastive labeling: unsupervised class labels from temporal segmentation.

Two strategies: stream-wise (concatenate utterances in a seeded random order,
cut the stream into fixed-length segments, assign classes cyclically) and
utterance-wise (divide each utterance into one contiguous segment per class).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, InsufficientFrames, UtteranceTooShort
from .frontend import FeatureMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TclConfig:
    num_classes: int = 10
    frames_per_segment: int = 6
    mode: str = "utterance"
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise DataError("num_classes must be >= 2")
        if self.frames_per_segment < 1:
            raise DataError("frames_per_segment must be >= 1")
        if self.mode not in ("stream", "utterance"):
            raise DataError(f"unknown TCL mode {self.mode!r}")


@dataclass(frozen=True)
class LabeledFrames:
    """Concatenated frame vectors with one class label per frame.

    ``utterance_boundaries[k] : utterance_boundaries[k+1]`` is the slice of
    ``features``/``labels`` belonging to ``utterance_ids[k]``; utterances whose
    frames were all dropped appear as empty slices.
    """

    features: np.ndarray
    labels: np.ndarray
    utterance_boundaries: list[int]
    utterance_ids: list[str]

    @property
    def num_frames(self) -> int:
        return len(self.labels)


def assign_stream_labels(utterances: list[FeatureMatrix], config: TclConfig) -> LabeledFrames:
    """Stream-wise labeling: segment j of the shuffled stream gets class j mod N.

    Utterance order is shuffled by ``config.shuffle_seed`` (frames within an
    utterance are never reordered).  The trailing partial segment (< d frames)
    is dropped; a final group with fewer than N segments keeps its cyclic labels.
    """
    d = config.frames_per_segment
    total = sum(u.num_frames for u in utterances)
    if total < d:
        raise InsufficientFrames(f"stream has {total} frames, need at least {d}")

    order = np.random.default_rng(config.shuffle_seed).permutation(len(utterances))
    stream = np.vstack([utterances[i].frames for i in order])
    num_labeled = (total // d) * d

    segment_index = np.arange(num_labeled) // d
    labels = segment_index % config.num_classes

    boundaries = [0]
    ids = []
    for i in order:
        end = min(boundaries[-1] + utterances[i].num_frames, num_labeled)
        boundaries.append(end)
        ids.append(utterances[i].utterance_id)
    return LabeledFrames(
        features=stream[:num_labeled],
        labels=labels.astype(np.int64),
        utterance_boundaries=boundaries,
        utterance_ids=ids,
    )


def assign_utterance_labels(utterance: FeatureMatrix, num_classes: int) -> LabeledFrames:
    """Utterance-wise labeling: N contiguous segments, segment n gets class n.

    Segment lengths differ by at most one; the first ``T mod N`` segments are
    one frame longer.
    """
    T = utterance.num_frames
    if T < num_classes:
        raise UtteranceTooShort(
            f"utterance {utterance.utterance_id!r} has {T} frames, need >= {num_classes}"
        )
    base, extra = divmod(T, num_classes)
    lengths = [base + 1 if n < extra else base for n in range(num_classes)]
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), lengths)
    return LabeledFrames(
        features=utterance.frames,
        labels=labels,
        utterance_boundaries=[0, T],
        utterance_ids=[utterance.utterance_id],
    )


def label_utterances(utterances: list[FeatureMatrix], config: TclConfig) -> LabeledFrames:
    """Label a dataset with the configured strategy.

    In utterance mode, utterances shorter than ``num_classes`` frames are
    skipped with a warning instead of failing the whole run.
    """
    if config.mode == "stream":
        return assign_stream_labels(utterances, config)

    parts = []
    for utt in utterances:
        try:
            parts.append(assign_utterance_labels(utt, config.num_classes))
        except UtteranceTooShort:
            logger.warning(
                "skipping %r: %d frames < %d classes",
                utt.utterance_id, utt.num_frames, config.num_classes,
            )
    if not parts:
        raise InsufficientFrames("no utterance was long enough to label")
    boundaries = [0]
    ids = []
    for part in parts:
        boundaries.append(boundaries[-1] + part.num_frames)
        ids.append(part.utterance_ids[0])
    return LabeledFrames(
        features=np.vstack([p.features for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        utterance_boundaries=boundaries,
        utterance_ids=ids,
    )


def summarize_label_distribution(
    labeled: LabeledFrames, num_classes: int | None = None
) -> dict[int, int]:
    """Per-class frame counts; counts sum to the number of labeled frames."""
    if num_classes is None:
        num_classes = int(labeled.labels.max()) + 1 if len(labeled.labels) else 0
    counts = dict.fromkeys(range(num_classes), 0)
    values, freq = np.unique(labeled.labels, return_counts=True)
    for v, f in zip(values, freq):
        counts[int(v)] = int(f)
    return counts


def labels_by_utterance(labeled: LabeledFrames) -> dict[str, np.ndarray]:
    """Split the per-frame labels back into per-utterance vectors."""
    out = {}
    for k, utt_id in enumerate(labeled.utterance_ids):
        start, end = labeled.utterance_boundaries[k], labeled.utterance_boundaries[k + 1]
        out[utt_id] = labeled.labels[start:end]
    return out


def write_label_archive(path: str | Path, labels: dict[str, np.ndarray]) -> None:
    """One line per utterance: ``<utterance_id>\\t<space-separated labels>``."""
    lines = []
    for utt_id, vec in labels.items():
        lines.append(f"{utt_id}\t{' '.join(str(int(v)) for v in vec)}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_label_archive(path: str | Path) -> dict[str, np.ndarray]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected '<id>\\t<labels>'")
        utt_id, payload = parts
        vec = np.array([int(v) for v in payload.split()], dtype=np.int64)
        if utt_id in out:
            raise DataError(f"{path}:{lineno}: duplicate utterance id {utt_id!r}")
        out[utt_id] = vec
    return out
