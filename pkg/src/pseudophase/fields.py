"""Baseband phasor model of two-mode classical optical fields.

The optical carrier is common to every field derived from one source, so it
is factored out: a field is an ``(L, 2)`` complex array holding one phasor per
slot for each polarization mode. Column 0 is the UP mode (qubit value 0),
column 1 the RIGHT mode (qubit value 1).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .sequences import PhaseSequence

# exp(-i * q * pi/2) for q = 0..3, exact
_QUARTER_PHASORS = np.array([1, -1j, -1, 1j], dtype=complex)


class Mode(enum.IntEnum):
    UP = 0
    RIGHT = 1

    @property
    def bit(self) -> int:
        return int(self)


@dataclass(frozen=True, eq=False)
class OpticalField:
    label: str
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != 2:
            raise ValueError(f"field amplitudes must have shape (L, 2), got {amps.shape}")
        if amps.shape[0] < 1:
            raise ValueError("a field needs at least one slot")
        if not np.all(np.isfinite(amps)):
            raise ValueError(f"field {self.label!r} has non-finite phasors")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    def __len__(self):
        return self.amps.shape[0]

    @property
    def slots(self) -> int:
        return self.amps.shape[0]

    def mode(self, m: Mode) -> np.ndarray:
        return self.amps[:, int(m)]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def occupied_modes(self, atol: float = 0.0) -> set[Mode]:
        return {m for m in Mode if np.any(np.abs(self.amps[:, int(m)]) > atol)}

    def relabel(self, label: str) -> OpticalField:
        return OpticalField(label, self.amps)

    def allclose(self, other: OpticalField, atol: float = 1e-12) -> bool:
        return self.amps.shape == other.amps.shape and bool(np.allclose(self.amps, other.amps, rtol=0, atol=atol))

    def __repr__(self):
        return f"OpticalField({self.label!r}, slots={self.slots}, energy={self.energy():.6g})"


def _check_same_length(a: OpticalField, b: OpticalField) -> None:
    if a.slots != b.slots:
        raise ValueError(f"slot counts differ: {a.label!r} has {a.slots}, {b.label!r} has {b.slots}")


def make_source(amp_up: float, amp_right: float, L: int, label: str = "source") -> OpticalField:
    if L < 1:
        raise ValueError("a source needs L >= 1 slots")
    if amp_up < 0 or amp_right < 0:
        raise ValueError("source amplitudes must be nonnegative")
    amps = np.empty((L, 2), dtype=complex)
    amps[:, 0] = amp_up
    amps[:, 1] = amp_right
    return OpticalField(label, amps)


def dark(L: int, label: str = "dark") -> OpticalField:
    return make_source(0.0, 0.0, L, label)


def modulate(f: OpticalField, s: PhaseSequence, label: str | None = None) -> OpticalField:
    """Multiply slot k of both modes by ``exp(-i * s_k)``."""
    if f.slots != len(s):
        raise ValueError(f"field {f.label!r} has {f.slots} slots but sequence has {len(s)} codes")
    phasors = _QUARTER_PHASORS[np.asarray(s.codes)]
    return OpticalField(f.label if label is None else label, f.amps * phasors[:, None])


def superpose(a: OpticalField, b: OpticalField, label: str | None = None) -> OpticalField:
    _check_same_length(a, b)
    return OpticalField(a.label if label is None else label, a.amps + b.amps)


def superpose_all(fields: Iterable[OpticalField], label: str) -> OpticalField:
    fields = list(fields)
    if not fields:
        raise ValueError("nothing to superpose")
    out = fields[0]
    for f in fields[1:]:
        out = superpose(out, f)
    return out.relabel(label)


def scale(f: OpticalField, factor: complex) -> OpticalField:
    return OpticalField(f.label, f.amps * factor)


def mode_project(f: OpticalField, m: Mode) -> OpticalField:
    """Keep mode ``m`` and zero the other one."""
    amps = np.zeros_like(f.amps)
    amps[:, int(m)] = f.amps[:, int(m)]
    return OpticalField(f.label, amps)


def sample_and_hold(values: np.ndarray, samples_per_slot: int) -> np.ndarray:
    """Repeat each per-slot value ``samples_per_slot`` times (waveform output)."""
    if samples_per_slot < 1:
        raise ValueError("samples_per_slot must be >= 1")
    return np.repeat(np.asarray(values), samples_per_slot, axis=0)


def fields_to_csv(fields: Iterable[OpticalField], samples_per_slot: int = 1) -> str:
    """Dump fields as CSV rows ``field, slot, mode, re, im``.

    With ``samples_per_slot > 1`` each slot is emitted that many times and a
    fractional time column ``t`` distinguishes the copies.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["field", "slot", "mode", "re", "im"]
    if samples_per_slot > 1:
        header.insert(2, "t")
    writer.writerow(header)
    for f in fields:
        for k in range(f.slots):
            for j in range(samples_per_slot):
                for m in Mode:
                    z = f.amps[k, int(m)]
                    row = [f.label, k, m.name, repr(float(z.real)), repr(float(z.imag))]
                    if samples_per_slot > 1:
                        row.insert(2, repr(k + j / samples_per_slot))
                    writer.writerow(row)
    return buf.getvalue()
