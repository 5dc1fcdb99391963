"""Balanced coherent detection and correlation scans.

A signal branch and a local-oscillator (LO) field meet in the 2x2 coupler;
two photodetectors give ``I1 = mu |E1|^2`` and ``I2 = mu |E2|^2``, and the
correlator integrates ``I1 * I2`` over one sequence period. For unit
single-sequence fields this gives ``mu^2 tau / 2 * sum(1 + cos 2(dl))``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .components import coupler2
from .fields import Mode, OpticalField, make_source, mode_project, modulate, sample_and_hold
from .sequences import PhaseSequence

LO_AMPLITUDE = 1.0


@dataclass(frozen=True, eq=False)
class DetectorTrace:
    samples: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class CorrelationRecord:
    field_label: str
    mode: Mode
    lo_sequence: int
    value: float


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Dense correlation values indexed ``[field, mode, lo]``."""

    field_labels: tuple[str, ...]
    lo_ids: tuple[int, ...]
    values: np.ndarray
    tau_slot: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = (len(self.field_labels), len(Mode), len(self.lo_ids))
        if values.shape != expected:
            raise ValueError(f"table shape {values.shape} does not match {expected}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def branch(self, field_index: int, mode: Mode) -> np.ndarray:
        return self.values[field_index, int(mode)]

    def records(self) -> Iterator[CorrelationRecord]:
        for i, label in enumerate(self.field_labels):
            for m in Mode:
                for j, seq in enumerate(self.lo_ids):
                    yield CorrelationRecord(label, m, seq, float(self.values[i, int(m), j]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "mode", "sequence", "value"])
        for r in self.records():
            w.writerow([r.field_label, r.mode.name, r.lo_sequence, repr(r.value)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "mu": self.mu,
            "tau_slot": self.tau_slot,
            "records": [
                {"field": r.field_label, "mode": r.mode.name, "sequence": r.lo_sequence, "value": r.value}
                for r in self.records()
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def photodetect(f: OpticalField, mu: float = 1.0) -> DetectorTrace:
    if not mu > 0:
        raise ValueError(f"detector sensitivity mu must be > 0, got {mu}")
    return DetectorTrace(mu * np.sum(np.abs(f.amps) ** 2, axis=1), mu)


def _single_mode(f: OpticalField) -> Mode | None:
    modes = f.occupied_modes()
    if len(modes) > 1:
        raise ValueError(f"field {f.label!r} occupies both modes; split it with a PBS first")
    return next(iter(modes), None)


def balanced_pair(signal: OpticalField, lo: OpticalField, mu: float = 1.0) -> tuple[DetectorTrace, DetectorTrace]:
    """Interfere ``signal`` with ``lo`` in the coupler and detect both outputs."""
    sig_mode, lo_mode = _single_mode(signal), _single_mode(lo)
    if sig_mode is not None and lo_mode is not None and sig_mode != lo_mode:
        raise ValueError(f"signal is on mode {sig_mode.name} but LO is on {lo_mode.name}")
    out1, out2 = coupler2(signal, lo)
    return photodetect(out1, mu), photodetect(out2, mu)


def correlate(t1: DetectorTrace, t2: DetectorTrace, tau_slot: float = 1.0) -> float:
    if len(t1) != len(t2):
        raise ValueError(f"trace lengths differ: {len(t1)} vs {len(t2)}")
    if not tau_slot > 0:
        raise ValueError(f"tau_slot must be > 0, got {tau_slot}")
    return float(np.dot(t1.samples, t2.samples) * tau_slot)


def lo_field(seq: PhaseSequence, mode: Mode, amplitude: float = LO_AMPLITUDE) -> OpticalField:
    up, right = (amplitude, 0.0) if mode is Mode.UP else (0.0, amplitude)
    return modulate(make_source(up, right, len(seq), f"LO{seq.id}"), seq)


def correlation_scan(
    fields: Sequence[OpticalField],
    lo_family: Sequence[PhaseSequence],
    mu: float = 1.0,
    tau_slot: float = 1.0,
) -> CorrelationTable:
    """Correlate both polarization branches of every field against every LO."""
    if not fields or not lo_family:
        raise ValueError("correlation_scan needs at least one field and one LO sequence")
    L = fields[0].slots
    if any(f.slots != L for f in fields) or any(len(s) != L for s in lo_family):
        raise ValueError("fields and LO sequences must share one slot count")
    values = np.empty((len(fields), len(Mode), len(lo_family)))
    for m in Mode:
        los = [lo_field(s, m) for s in lo_family]
        for i, f in enumerate(fields):
            branch = mode_project(f, m)
            for j, lo in enumerate(los):
                t1, t2 = balanced_pair(branch, lo, mu)
                values[i, int(m), j] = correlate(t1, t2, tau_slot)
    return CorrelationTable(
        tuple(f.label for f in fields),
        tuple(s.id for s in lo_family),
        values,
        tau_slot=tau_slot,
        mu=mu,
    )


def traces_to_csv(
    fields: Sequence[OpticalField],
    lo_family: Sequence[PhaseSequence],
    mu: float = 1.0,
    samples_per_slot: int = 1,
) -> str:
    """Detector traces for every (field, mode, LO) as CSV ``field,mode,lo,slot,t,I1,I2``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "mode", "lo", "slot", "t", "I1", "I2"])
    for f in fields:
        for m in Mode:
            branch = mode_project(f, m)
            for seq in lo_family:
                t1, t2 = balanced_pair(branch, lo_field(seq, m), mu)
                i1 = sample_and_hold(t1.samples, samples_per_slot)
                i2 = sample_and_hold(t2.samples, samples_per_slot)
                for n in range(len(i1)):
                    slot = n // samples_per_slot
                    t = n / samples_per_slot
                    w.writerow([f.label, m.name, seq.id, slot, repr(t), repr(float(i1[n])), repr(float(i2[n]))])
    return buf.getvalue()
