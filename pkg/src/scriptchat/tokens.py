"""Token estimation for budget arithmetic.

The default estimator is a dependency-free character heuristic; anything
token-exact (a real tokenizer) can be plugged in via the protocol. The
budget's safety margin exists to absorb estimator error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable


@runtime_checkable
class TokenEstimator(Protocol):
    """Protocol for prompt-size estimation."""

    def estimate(self, text: str) -> int:
        """Deterministic token estimate; 0 for empty text, monotone under concatenation."""
        ...


@dataclass(frozen=True)
class CharHeuristicEstimator:
    """ceil(len / chars_per_token); conservative and deterministic."""

    chars_per_token: int = 4

    def estimate(self, text: str) -> int:
        return math.ceil(len(text) / self.chars_per_token)


DEFAULT_ESTIMATOR = CharHeuristicEstimator()


def estimate_tokens(text: str) -> int:
    """Estimate with the default ceil(length/4) heuristic."""
    return DEFAULT_ESTIMATOR.estimate(text)
