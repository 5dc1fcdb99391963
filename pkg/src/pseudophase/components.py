"""Linear optical components acting on :class:`~pseudophase.fields.OpticalField`.

All components are complex-linear. The 2x2 coupler is the symmetric unitary
50/50 coupler ``(1, i; i, 1)/sqrt(2)``; rotators use the active rotation that
maps pure UP at 45 degrees to ``(UP + RIGHT)/sqrt(2)``.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .fields import Mode, OpticalField, _check_same_length, scale, superpose_all

COUPLER_MATRIX = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)


class FilterPass(enum.Enum):
    ALL = "all"
    UP_ONLY = "up"
    RIGHT_ONLY = "right"


def coupler2(a: OpticalField, b: OpticalField) -> tuple[OpticalField, OpticalField]:
    """Balanced 2x2 coupler: ``out1 = (a + i b)/sqrt2``, ``out2 = (i a + b)/sqrt2``."""
    _check_same_length(a, b)
    (t11, t12), (t21, t22) = COUPLER_MATRIX
    out1 = OpticalField(a.label, t11 * a.amps + t12 * b.amps)
    out2 = OpticalField(b.label, t21 * a.amps + t22 * b.amps)
    return out1, out2


def pbs(a: OpticalField, b: OpticalField) -> tuple[OpticalField, OpticalField]:
    """Polarization beam splitter: UP passes straight, RIGHT swaps ports."""
    _check_same_length(a, b)
    out1 = np.column_stack([a.amps[:, 0], b.amps[:, 1]])
    out2 = np.column_stack([b.amps[:, 0], a.amps[:, 1]])
    return OpticalField(a.label, out1), OpticalField(b.label, out2)


def rotator(f: OpticalField, angle_deg: float) -> OpticalField:
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    # snap exact multiples of 45 degrees so 90-degree rotations leave clean zeros
    c, s = _snap(c), _snap(s)
    up, right = f.amps[:, 0], f.amps[:, 1]
    return OpticalField(f.label, np.column_stack([c * up - s * right, s * up + c * right]))


def _snap(x: float) -> float:
    for exact in (0.0, 1.0, -1.0, math.sqrt(0.5), -math.sqrt(0.5)):
        if abs(x - exact) < 1e-15:
            return exact
    return x


def mode_filter(f: OpticalField, passing: FilterPass | str) -> OpticalField:
    passing = FilterPass(passing)
    if passing is FilterPass.ALL:
        return f
    keep = Mode.UP if passing is FilterPass.UP_ONLY else Mode.RIGHT
    amps = np.zeros_like(f.amps)
    amps[:, int(keep)] = f.amps[:, int(keep)]
    return OpticalField(f.label, amps)


def splitter(f: OpticalField, n: int) -> list[OpticalField]:
    """Equal ``n``-way fan-out; each output carries ``1/sqrt(n)`` of the amplitude."""
    if n < 2:
        raise ValueError(f"splitter needs n >= 2 outputs, got {n}")
    part = scale(f, 1 / math.sqrt(n))
    return [part.relabel(f"{f.label}.{i + 1}") for i in range(n)]


def combiner(fields: list[OpticalField], label: str = "combined") -> OpticalField:
    """Adjoint of :func:`splitter`: sum of the inputs scaled by ``1/sqrt(n)``."""
    n = len(fields)
    if n < 2:
        raise ValueError(f"combiner needs n >= 2 inputs, got {n}")
    return scale(superpose_all(fields, label), 1 / math.sqrt(n))
