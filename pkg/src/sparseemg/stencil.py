"""Printable electrode-placement stencils.

The forearm is modeled as a truncated cone, unrolled flat: x runs from the
wrist line along the forearm, y runs around the circumference, whose width
C(x) linearly interpolates the user's circumference measurements. Electrode
map coordinates are normalized to (u, v) fractions of the map frame
(ring_index / ring size for ring layouts, min-max otherwise) and mapped to
x = u * forearm_length, y = v * C(x). Output is a standalone SVG in
physical millimeters: outline, one hole circle per electrode, id labels,
wrist baseline and an ulna reference notch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetManifest
from .validation import ValidationError

PAGE_MARGIN_MM = 15.0


@dataclass(frozen=True)
class ArmMeasurements:
    forearm_length_mm: float
    # (distance from wrist, circumference) pairs, strictly increasing distances
    circumference_samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.forearm_length_mm <= 0:
            raise ValidationError("forearm_length_mm", "must be positive")
        samples = tuple((float(d), float(c)) for d, c in self.circumference_samples)
        if len(samples) < 2:
            raise ValidationError("circumference_samples", "need at least 2 levels")
        distances = [d for d, _ in samples]
        if any(b <= a for a, b in zip(distances, distances[1:])):
            raise ValidationError("circumference_samples",
                                  "distances must be strictly increasing")
        for d, c in samples:
            if d < 0 or d > self.forearm_length_mm:
                raise ValidationError("circumference_samples",
                                      f"distance {d} outside 0..forearm_length_mm")
            if c <= 0:
                raise ValidationError("circumference_samples",
                                      f"circumference {c} must be positive")
        object.__setattr__(self, "circumference_samples", samples)

    def circumference_at(self, x_mm: float) -> float:
        """Linear interpolation, clamped to the measured range."""
        distances = np.array([d for d, _ in self.circumference_samples])
        values = np.array([c for _, c in self.circumference_samples])
        return float(np.interp(x_mm, distances, values))


def _fmt(value: float) -> str:
    return format(value, ".6f")


def normalized_positions(manifest: DatasetManifest,
                         layout: list[int]) -> list[tuple[int, float, float]]:
    """(id, u, v) for each layout electrode in the unit map frame.

    v uses ring_index / ring size when the site carries ring metadata
    (periodic coordinate), otherwise min-max normalization over the whole
    map; degenerate extents collapse to 0.5.
    """
    sites = {e.id: e for e in manifest.electrodes}
    unknown = [e for e in layout if e not in sites]
    if unknown:
        raise ValidationError("layout", f"unknown electrode ids: {unknown}")
    xs = [e.x_mm for e in manifest.electrodes]
    ys = [e.y_mm for e in manifest.electrodes]
    x_min, x_span = min(xs), max(xs) - min(xs)
    y_min, y_span = min(ys), max(ys) - min(ys)
    ring_size = sum(1 for e in manifest.electrodes if e.ring_index is not None)

    out = []
    for electrode_id in layout:
        site = sites[electrode_id]
        u = 0.5 if x_span == 0 else (site.x_mm - x_min) / x_span
        if site.ring_index is not None and ring_size > 0:
            v = site.ring_index / ring_size
        elif y_span == 0:
            v = 0.5
        else:
            v = (site.y_mm - y_min) / y_span
        out.append((electrode_id, u, v))
    return out


def generate_stencil(layout: list[int], manifest: DatasetManifest,
                     measurements: ArmMeasurements) -> str:
    """Render the chosen layout as a cuttable SVG stencil (units: mm)."""
    if not layout:
        raise ValidationError("layout", "must be non-empty")
    length = measurements.forearm_length_mm
    hole_d = manifest.electrode_diameter_mm

    positions = []
    for electrode_id, u, v in normalized_positions(manifest, layout):
        x = u * length
        c = measurements.circumference_at(x)
        y = v * c
        if not (0.0 <= y <= c):
            raise ValidationError(
                "layout", f"electrode {electrode_id} maps outside the arm outline"
            )
        positions.append((electrode_id, x, y))

    # outline: bottom edge y=0, top edge y=C(x) sampled at measurement levels
    levels = [0.0] + [d for d, _ in measurements.circumference_samples] + [length]
    levels = sorted(set(levels))
    top = [(x, measurements.circumference_at(x)) for x in levels]
    max_c = max(c for _, c in top)

    margin = PAGE_MARGIN_MM
    width = length + 2 * margin
    height = max_c + 2 * margin

    def px(x):
        return _fmt(margin + x)

    def py(y):
        return _fmt(margin + y)

    lines = []
    lines.append('<?xml version="1.0" encoding="UTF-8"?>')
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}mm" height="{_fmt(height)}mm" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">'
    )
    outline = [f"M {px(0)} {py(0)}"]
    outline.append(f"L {px(length)} {py(0)}")
    for x, c in reversed(top):
        outline.append(f"L {px(x)} {py(c)}")
    outline.append("Z")
    lines.append(
        f'<path class="outline" d="{" ".join(outline)}" '
        f'fill="none" stroke="black" stroke-width="0.5"/>'
    )
    # registration: wrist baseline and ulna notch at the wrist corner
    lines.append(
        f'<line class="wrist-line" x1="{px(0)}" y1="{py(0)}" '
        f'x2="{px(0)}" y2="{py(measurements.circumference_at(0.0))}" '
        f'stroke="black" stroke-width="0.8"/>'
    )
    notch = 4.0
    lines.append(
        f'<path class="ulna-notch" d="M {px(0)} {py(0)} '
        f'L {_fmt(margin - notch)} {py(0)} L {px(0)} {_fmt(margin + notch)} Z" '
        f'fill="black"/>'
    )
    for electrode_id, x, y in positions:
        lines.append(
            f'<circle class="hole" id="hole-{electrode_id}" '
            f'cx="{px(x)}" cy="{py(y)}" r="{_fmt(hole_d / 2.0)}" '
            f'fill="none" stroke="black" stroke-width="0.3"/>'
        )
        lines.append(
            f'<text x="{_fmt(margin + x + hole_d / 2.0 + 1.0)}" '
            f'y="{py(y)}" font-size="4">{electrode_id}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def generate_electrode_map(manifest: DatasetManifest) -> str:
    """Selectable electrode map SVG: one circle per site, element id equal
    to ``electrode-<id>``, for the UI's click/sketch selection."""
    xs = [e.x_mm for e in manifest.electrodes]
    ys = [e.y_mm for e in manifest.electrodes]
    pad = max(manifest.electrode_diameter_mm, 10.0)
    x_min, x_max = min(xs) - pad, max(xs) + pad
    y_min, y_max = min(ys) - pad, max(ys) + pad
    width, height = x_max - x_min, y_max - y_min
    r = manifest.electrode_diameter_mm / 2.0

    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}mm" height="{_fmt(height)}mm" '
        f'viewBox="{_fmt(x_min)} {_fmt(y_min)} {_fmt(width)} {_fmt(height)}">'
    )
    for e in manifest.electrodes:
        lines.append(
            f'<circle class="electrode" id="electrode-{e.id}" '
            f'data-electrode-id="{e.id}" cx="{_fmt(e.x_mm)}" cy="{_fmt(e.y_mm)}" '
            f'r="{_fmt(r)}" fill="#dddddd" stroke="black" stroke-width="0.3"/>'
        )
        lines.append(
            f'<text x="{_fmt(e.x_mm)}" y="{_fmt(e.y_mm)}" font-size="{_fmt(r)}" '
            f'text-anchor="middle" dominant-baseline="middle">{e.id}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
