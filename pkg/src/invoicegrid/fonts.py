"""Monospace font metrics used for analytic text geometry.

With a fixed-advance font, every word box is exactly computable from the
string length alone — no font file parsing, no rasterizer in the loop.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FontMetric:
    """Em-fraction metrics of a monospace face."""

    name: str
    advance: float  # per-glyph advance
    ascent: float
    descent: float  # negative, points below baseline

    def __post_init__(self) -> None:
        if self.advance <= 0:
            raise ValueError(f"advance must be positive, got {self.advance}")
        if self.ascent + abs(self.descent) > 1.2:
            raise ValueError(
                f"ascent + |descent| must be <= 1.2, got {self.ascent + abs(self.descent)}"
            )

    def text_width(self, text: str, font_size: float) -> float:
        return len(text) * self.advance * font_size

    def text_height(self, font_size: float) -> float:
        return (self.ascent + abs(self.descent)) * font_size

    def baseline_offset(self, font_size: float) -> float:
        """Distance from the top of the text box down to the baseline."""
        return self.ascent * font_size


# Standard Courier AFM values: advance 600/1000 em, ascent 629, descent -157.
COURIER = FontMetric(name="Courier", advance=0.6, ascent=0.629, descent=-0.157)
