"""Condition tokens accepted by every eps-predictor.

Three kinds exist: the null (unconditioned) token, named class conditions,
and a dedicated "degraded" condition that plays the role of a negative
prompt at toy scale. Conditions are small frozen values usable as dict
keys.
"""

from __future__ import annotations

from dataclasses import dataclass

# The negative-prompt string used when a condition is mapped onto a live
# text-to-image model (truncated to its leading clause elsewhere only for
# display).
NEGATIVE_PROMPT = (
    "unrealistic, blurry, low quality, out of focus, ugly, low contrast, "
    "dull, dark, low-resolution, gloomy"
)


@dataclass(frozen=True)
class Condition:
    """A condition token: exactly one of null / class(id) / degraded."""

    tag: str
    class_id: int | None = None

    def __post_init__(self):
        if self.tag not in ("null", "class", "degraded"):
            raise ValueError(f"unknown condition tag {self.tag!r}")
        if (self.tag == "class") != (self.class_id is not None):
            raise ValueError("class_id is required iff tag == 'class'")

    @property
    def is_null(self) -> bool:
        return self.tag == "null"

    def __str__(self) -> str:
        if self.tag == "class":
            return f"class({self.class_id})"
        return self.tag


NULL = Condition("null")
DEGRADED = Condition("degraded")


def class_condition(class_id: int) -> Condition:
    return Condition("class", class_id)


def parse_condition(text: str) -> Condition:
    """Parse "null" / "degraded" / "class(3)" / a bare integer."""
    text = text.strip()
    if text in ("null", "none", ""):
        return NULL
    if text == "degraded":
        return DEGRADED
    if text.startswith("class(") and text.endswith(")"):
        return class_condition(int(text[6:-1]))
    if text.lstrip("-").isdigit():
        return class_condition(int(text))
    raise ValueError(f"cannot parse condition {text!r}")
