"""Shared run configuration: marker literals and defaults used across the pipeline."""

from __future__ import annotations

from dataclasses import asdict, dataclass

DEFAULT_GAMMA = 0.7
DEFAULT_SEED = 0
DEFAULT_LENGTH = 5

CLEANING_RULES_VERSION = 1


@dataclass(frozen=True)
class Markers:
    """Marker literals rendered into prompts and training samples.

    Trained backends must be given the same literals they were fine-tuned
    with, so these are recorded in every run config.
    """

    mask: str = "<mask>"
    sep: str = "<sep>"
    phrase_list: str = "<plist>"
    stop: str = "<stop>"

    def to_dict(self) -> dict[str, str]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, str]) -> "Markers":
        return cls(**{k: v for k, v in data.items() if k in ("mask", "sep", "phrase_list", "stop")})
