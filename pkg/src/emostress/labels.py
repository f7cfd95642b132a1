"""Emotion label vocabulary and per-dataset class-code maps."""

from __future__ import annotations

from enum import IntEnum


class EmotionLabel(IntEnum):
    """The seven training classes with fixed codes, in this order."""

    ANGRY = 0
    BOREDOM = 1
    DISGUST = 2
    FEAR = 3
    HAPPY = 4
    NEUTRAL = 5
    SAD = 6


CLASS_NAMES = tuple(label.name.lower() for label in EmotionLabel)

# Surprise has no slot of its own: on SAVEE it takes the code Boredom
# holds elsewhere, keeping the classifier head 7-wide for every corpus.
SURPRISE = "surprise"

_CANONICAL = {name: int(label) for name, label in zip(CLASS_NAMES, EmotionLabel)}

CLASS_CODE_MAPS: dict[str, dict[str, int]] = {
    "emodb": dict(_CANONICAL),
    "synth": dict(_CANONICAL),
    "savee": {**{k: v for k, v in _CANONICAL.items() if k != "boredom"}, SURPRISE: 1},
}


def class_code(emotion: str, dataset_kind: str) -> int:
    """Class code of an emotion name under a dataset's label map."""
    try:
        return CLASS_CODE_MAPS[dataset_kind][emotion]
    except KeyError:
        raise KeyError(f"emotion {emotion!r} has no class code for dataset {dataset_kind!r}") from None


def class_names_for(dataset_kind: str) -> tuple[str, ...]:
    """Class names by code order for a dataset kind."""
    inverse = {code: name for name, code in CLASS_CODE_MAPS[dataset_kind].items()}
    return tuple(inverse[i] for i in range(len(inverse)))
