"""Deterministic emulation of lockstep warp primitives.

A warp is a group of `width` lanes executing in lockstep. The collectives
below are pure functions on per-lane value vectors, so kernel transcriptions
behave identically across runs and host thread schedules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

DEFAULT_WIDTH = 32
_ALLOWED_WIDTHS = (4, 8, 16, 32, 64)


@dataclass(frozen=True)
class WarpState:
    """Per-lane register file: one 32-bit value per lane."""

    lanes: tuple[int, ...]

    def __post_init__(self):
        if len(self.lanes) not in _ALLOWED_WIDTHS:
            raise ValueError(f"warp width must be one of {_ALLOWED_WIDTHS}")

    @property
    def width(self) -> int:
        return len(self.lanes)


def check_width(width: int) -> int:
    if width not in _ALLOWED_WIDTHS:
        raise ValueError(f"warp width must be one of {_ALLOWED_WIDTHS}")
    return width


def shfl(state: WarpState, src_lane: int) -> WarpState:
    """
    Broadcast: every lane receives the value held by `src_lane`.
    """
    if not 0 <= src_lane < state.width:
        raise ValueError(f"source lane {src_lane} out of range for width {state.width}")
    return WarpState((state.lanes[src_lane],) * state.width)


def ballot(predicates: Sequence[bool]) -> int:
    """
    Returns a lane mask with bit i set iff lane i's predicate is true.
    """
    mask = 0
    for i, p in enumerate(predicates):
        if p:
            mask |= 1 << i
    return mask


def ffs(mask: int) -> int:
    """
    1-based position of the least-significant set bit; 0 for an empty mask.
    Matches the CUDA/POSIX convention, so ffs(m) - 1 yields -1 as the
    "no bit set" marker.
    """
    if mask == 0:
        return 0
    return (mask & -mask).bit_length()


def lane_bit(fill: int, width: int) -> int:
    """
    Single-lane mask 1 << fill, clamped to the warp: shifts at or past the
    register width produce 0, mirroring 32-bit shift behavior on hardware.
    """
    if fill >= width:
        return 0
    return 1 << fill
