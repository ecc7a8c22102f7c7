"""Uniform quantizers with a hard error bound.

Only the midpoint quantizer ships: values in [(2k-1)*delta, (2k+1)*delta)
map to 2k*delta, so the error never exceeds delta. Intervals are
left-closed/right-open, which pins the output at cell boundaries and
keeps traces bit-reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class UniformQuantizer:
    """Midpoint uniform quantizer; `delta` is the maximum quantization error."""

    delta: float

    def __post_init__(self) -> None:
        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta)):
            raise ValidationError(f"delta must be finite, got {self.delta!r}")
        if not self.delta > 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")

    @property
    def step(self) -> float:
        """Spacing between quantizer output levels (= 2 * delta)."""
        return 2.0 * self.delta

    def quantize(self, a: float) -> float:
        if not math.isfinite(a):
            raise ValidationError(f"cannot quantize non-finite value {a!r}")
        step = 2.0 * self.delta
        # floor(a/step + 0.5) keeps boundary points in the upper cell
        return step * math.floor(a / step + 0.5)

    def quantize_vector(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("cannot quantize non-finite vector entries")
        step = 2.0 * self.delta
        return step * np.floor(arr / step + 0.5)
