"""Corpus scanning, manifest handling, and train/test splitting.

Three directory layouts are recognized:

* ``emodb``: flat .wav files whose 7-character stem encodes speaker
  (2 digits), spoken-text code (3 chars), an emotion letter, and a
  version character.
* ``savee``: one directory per speaker (DC, JE, JK, KL) holding files
  like ``sa01.wav``; the letter prefix before the 2-digit take number is
  the emotion code, matched longest first.
* ``synth``: one directory per emotion name holding files like
  ``angry_s03_012.wav`` (emotion, synthetic speaker, clip index).

Splits are stratified per emotion with largest-remainder quota rounding,
then filled by a seeded shuffle within each class, so the same seed and
manifest always produce the same split.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    BadNameError,
    DatasetError,
    DuplicatePathError,
    EmptyDatasetError,
    InvalidCountError,
    MissingDirectoryError,
    UnknownEmotionCodeError,
    UnknownSpeakerError,
)
from .labels import CLASS_NAMES, SURPRISE
from .rng import Rng

DATASET_KINDS = ("emodb", "savee", "synth")

EMODB_EMOTION_LETTERS = {
    "W": "angry",
    "L": "boredom",
    "E": "disgust",
    "A": "fear",
    "F": "happy",
    "T": "sad",
    "N": "neutral",
}

SAVEE_SPEAKERS = ("DC", "JE", "JK", "KL")
# longest codes first so "sa"/"su" win over "a"
SAVEE_EMOTION_CODES = (
    ("sa", "sad"),
    ("su", SURPRISE),
    ("a", "angry"),
    ("d", "disgust"),
    ("f", "fear"),
    ("h", "happy"),
    ("n", "neutral"),
)

EXPECTED_CLIP_COUNTS = {"emodb": 535, "savee": 480}


@dataclass
class ClipRecord:
    path: str          # POSIX-style path relative to the dataset root
    dataset: str
    speaker: str
    emotion: str
    aux: str = ""      # layout-specific extra (text code, take number, clip index)
    split: str = ""    # "", "train", or "test"


@dataclass
class Manifest:
    kind: str
    records: list[ClipRecord] = field(default_factory=list)

    def subset(self, split: str) -> list[ClipRecord]:
        return [r for r in self.records if r.split == split]

    def emotions(self) -> list[str]:
        return sorted({r.emotion for r in self.records})


def parse_emodb_filename(name: str) -> tuple[str, str, str]:
    """(speaker, emotion, aux) from a stem like ``03a01Fa``."""
    stem, dot, ext = name.partition(".")
    if dot and ext.lower() != "wav":
        raise BadNameError(f"{name!r}: expected a .wav file")
    if len(stem) != 7:
        raise BadNameError(f"{name!r}: stem must have 7 characters, got {len(stem)}")
    speaker, text_code, letter, version = stem[0:2], stem[2:5], stem[5], stem[6]
    if not speaker.isdigit():
        raise BadNameError(f"{name!r}: speaker field {speaker!r} is not numeric")
    if letter not in EMODB_EMOTION_LETTERS:
        raise UnknownEmotionCodeError(f"{name!r}: unknown emotion letter {letter!r}")
    return speaker, EMODB_EMOTION_LETTERS[letter], text_code + version


def parse_savee_path(rel_path: str) -> tuple[str, str, str]:
    """(speaker, emotion, aux) from a path like ``DC/sa01.wav``."""
    parts = Path(rel_path).parts
    if len(parts) != 2:
        raise BadNameError(f"{rel_path!r}: expected <speaker>/<clip>.wav")
    speaker, name = parts
    if speaker not in SAVEE_SPEAKERS:
        raise UnknownSpeakerError(f"{rel_path!r}: unknown speaker {speaker!r}")
    stem, dot, ext = name.partition(".")
    if dot and ext.lower() != "wav":
        raise BadNameError(f"{rel_path!r}: expected a .wav file")
    for code, emotion in SAVEE_EMOTION_CODES:
        if stem.startswith(code):
            take = stem[len(code) :]
            if len(take) == 2 and take.isdigit():
                return speaker, emotion, take
            break
    raise UnknownEmotionCodeError(f"{rel_path!r}: unrecognized emotion prefix in {stem!r}")


def parse_synth_path(rel_path: str) -> tuple[str, str, str]:
    """(speaker, emotion, aux) from a path like ``angry/angry_s03_012.wav``."""
    parts = Path(rel_path).parts
    if len(parts) != 2:
        raise BadNameError(f"{rel_path!r}: expected <emotion>/<clip>.wav")
    emotion, name = parts
    if emotion not in CLASS_NAMES:
        raise UnknownEmotionCodeError(f"{rel_path!r}: unknown emotion directory {emotion!r}")
    stem = Path(name).stem
    pieces = stem.split("_")
    if len(pieces) != 3 or pieces[0] != emotion:
        raise BadNameError(f"{rel_path!r}: expected <emotion>_s<speaker>_<index>.wav")
    speaker, index = pieces[1], pieces[2]
    if not (speaker.startswith("s") and speaker[1:].isdigit() and index.isdigit()):
        raise BadNameError(f"{rel_path!r}: bad speaker or index field")
    return speaker, emotion, index


_PARSERS = {
    "emodb": lambda rel: parse_emodb_filename(Path(rel).name),
    "savee": parse_savee_path,
    "synth": parse_synth_path,
}


def build_manifest(root: str | Path, kind: str) -> Manifest:
    if kind not in DATASET_KINDS:
        raise DatasetError(f"unknown dataset kind {kind!r}, expected one of {DATASET_KINDS}")
    root = Path(root)
    if not root.is_dir():
        raise MissingDirectoryError(f"dataset root {root} is not a directory")

    rel_paths = sorted(p.relative_to(root).as_posix() for p in root.rglob("*.wav"))
    if not rel_paths:
        raise EmptyDatasetError(f"no .wav files under {root}")

    records, failures = [], []
    for rel in rel_paths:
        try:
            speaker, emotion, aux = _PARSERS[kind](rel)
        except DatasetError as exc:
            failures.append(str(exc))
            continue
        records.append(ClipRecord(path=rel, dataset=kind, speaker=speaker, emotion=emotion, aux=aux))
    if failures:
        shown = "; ".join(failures[:5])
        more = f" (+{len(failures) - 5} more)" if len(failures) > 5 else ""
        raise DatasetError(f"{len(failures)} unparsable clip names under {root}: {shown}{more}")

    expected = EXPECTED_CLIP_COUNTS.get(kind)
    if expected is not None and len(records) != expected:
        warnings.warn(
            f"{kind} corpus at {root} has {len(records)} clips, expected {expected}",
            stacklevel=2,
        )
    return Manifest(kind=kind, records=records)


def split_manifest(
    manifest: Manifest,
    seed: int,
    train_count: int | None = None,
    train_fraction: float = 0.8,
    stratify: bool = True,
) -> Manifest:
    """Assign train/test splits; returns a new manifest, records copied."""
    n = len(manifest.records)
    if n == 0:
        raise EmptyDatasetError("cannot split an empty manifest")
    if train_count is None:
        train_count = int(round(n * train_fraction))
    if not 0 <= train_count <= n:
        raise InvalidCountError(f"train_count {train_count} outside [0, {n}]")

    rng = Rng(seed)
    records = [replace(r) for r in manifest.records]

    if not stratify:
        order = list(range(n))
        rng.shuffle(order)
        train_idx = set(order[:train_count])
    else:
        by_emotion: dict[str, list[int]] = {}
        for i, r in enumerate(records):
            by_emotion.setdefault(r.emotion, []).append(i)
        emotions = sorted(by_emotion)
        quotas = {}
        remainders = []
        for e in emotions:
            exact = train_count * len(by_emotion[e]) / n
            quotas[e] = int(exact)
            remainders.append((-(exact - int(exact)), -len(by_emotion[e]), e))
        leftover = train_count - sum(quotas.values())
        # hand out leftover seats by largest fractional remainder, then
        # class size, then name; skip classes already fully consumed
        for _, _, e in sorted(remainders):
            if leftover == 0:
                break
            if quotas[e] < len(by_emotion[e]):
                quotas[e] += 1
                leftover -= 1
        while leftover > 0:
            for e in emotions:
                if leftover > 0 and quotas[e] < len(by_emotion[e]):
                    quotas[e] += 1
                    leftover -= 1
        train_idx = set()
        for e in emotions:
            members = list(by_emotion[e])
            rng.shuffle(members)
            train_idx.update(members[: quotas[e]])

    for i, r in enumerate(records):
        r.split = "train" if i in train_idx else "test"
    return Manifest(kind=manifest.kind, records=records)


MANIFEST_COLUMNS = ("path", "dataset", "speaker", "emotion", "aux", "split")


def write_manifest_csv(path: str | Path, manifest: Manifest) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for r in manifest.records:
            writer.writerow([r.path, r.dataset, r.speaker, r.emotion, r.aux, r.split])


def read_manifest_csv(path: str | Path) -> Manifest:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty manifest") from None
        if tuple(header) != MANIFEST_COLUMNS:
            raise DatasetError(f"{path}: bad manifest header {header!r}")
        records, seen, kinds = [], set(), set()
        for row in reader:
            if len(row) != len(MANIFEST_COLUMNS):
                raise DatasetError(f"{path}: row has {len(row)} fields: {row!r}")
            rec = ClipRecord(*row)
            if rec.path in seen:
                raise DuplicatePathError(f"{path}: duplicate clip path {rec.path!r}")
            seen.add(rec.path)
            kinds.add(rec.dataset)
            records.append(rec)
    if not records:
        raise EmptyDatasetError(f"{path}: manifest has no clips")
    if len(kinds) != 1:
        raise DatasetError(f"{path}: manifest mixes dataset kinds {sorted(kinds)}")
    return Manifest(kind=kinds.pop(), records=records)
