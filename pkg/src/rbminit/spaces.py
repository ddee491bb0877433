"""Sample spaces of the two layers.

Visible units always take values in {-1, +1}.  Hidden units take values in
{-1, +1} ("ising") or {0, 1} ("binary"); several formulas branch on this
choice, so it is carried around as an explicit tag.
"""
from __future__ import annotations

import enum


class HiddenSpace(enum.Enum):
    ISING = "ising"
    BINARY = "binary"

    @classmethod
    def parse(cls, label: str) -> "HiddenSpace":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown hidden sample space {label!r}; expected 'ising' or 'binary'"
            ) from None

    @property
    def label(self) -> str:
        return self.value

    @property
    def low_state(self) -> int:
        """Value taken by a hidden unit in its 'off' state."""
        return -1 if self is HiddenSpace.ISING else 0
