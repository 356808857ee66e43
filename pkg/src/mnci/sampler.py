"""Degree^0.75 negative sampler."""

from __future__ import annotations

import numpy as np

from mnci.errors import ContractError


class NegativeSampler:
    power = 0.75

    def __init__(self, degrees, rng: np.random.Generator):
        deg = np.asarray(degrees, dtype=np.float64)
        if np.any(deg < 0) or not np.any(deg > 0):
            raise ContractError("degrees must be non-negative with at least one positive")
        mass = deg ** self.power
        self.probs = mass / mass.sum()
        self.cdf = np.cumsum(self.probs)
        self.cdf[-1] = 1.0
        self.rng = rng

    def draw(self, count: int, exclude=()) -> np.ndarray:
        """``count`` i.i.d. node positions, rejecting anything in ``exclude``."""
        exclude = np.fromiter(exclude, dtype=np.int64)
        if exclude.size and self.probs[np.setdiff1d(np.arange(self.probs.size), exclude)].sum() <= 0:
            raise ContractError("no eligible nodes left to sample")
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            picks = np.searchsorted(self.cdf, self.rng.random(count - filled), side="right")
            for x in exclude:
                picks = picks[picks != x]
            out[filled:filled + picks.size] = picks
            filled += picks.size
        return out


def draw_negatives(sampler: NegativeSampler, count: int, exclude=()) -> np.ndarray:
    return sampler.draw(count, exclude)
