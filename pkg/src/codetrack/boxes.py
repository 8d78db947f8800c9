"""Axis-aligned bounding boxes, top-left convention, float pixels."""
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def cx(self):
        return self.x + 0.5 * self.w

    @property
    def cy(self):
        return self.y + 0.5 * self.h

    def moved_to(self, cx, cy):
        """Same size, new center."""
        return BBox(cx - 0.5 * self.w, cy - 0.5 * self.h, self.w, self.h)

    def scaled(self, factor):
        """Rescale both sides about the center."""
        return BBox(
            self.cx - 0.5 * self.w * factor,
            self.cy - 0.5 * self.h * factor,
            self.w * factor,
            self.h * factor,
        )

    def as_tuple(self):
        return (self.x, self.y, self.w, self.h)
