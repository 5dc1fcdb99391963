"""Multi-field states built directly from their defining field expressions.

``product``, ``ghz`` and ``w`` are three-field states on a caller-chosen
triple of sequences. ``shor15`` is the eight-field result state of
``f(x) = 7**x mod 15``: fields 1-4 hold the x register, fields 5-8 the f
register.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .analysis import MPresence, ModeMatrix
from .components import rotator
from .fields import OpticalField, dark, make_source, modulate, superpose_all
from .sequences import PhaseSequence, builtin_table

N, U, R, B = MPresence.NONE, MPresence.UP_ONLY, MPresence.RIGHT_ONLY, MPresence.BOTH

SCENARIOS = ("product", "ghz", "w", "shor15")

# (UP sequence ids, RIGHT sequence ids) per field; id 8 wraps to the all-zero
# sequence 0
SHOR15_TERMS = (
    ((1, 2, 3, 4), (1, 2, 3, 4)),
    ((2, 3, 4, 5), (2, 3, 4, 5)),
    ((3, 4), (5, 6)),
    ((4, 6), (5, 7)),
    ((5, 6, 7), (8,)),
    ((6,), (7, 8, 1)),
    ((7, 1, 2), (8,)),
    ((8, 2), (1, 3)),
)

# measured M matrix of the shor15 state, columns lambda1..lambda7, lambda8
SHOR15_COLUMNS = (1, 2, 3, 4, 5, 6, 7, 0)
SHOR15_M = (
    (B, B, B, B, N, N, N, N),
    (N, B, B, B, B, N, N, N),
    (N, N, U, U, R, R, N, N),
    (N, N, N, U, R, U, R, N),
    (N, N, N, N, U, U, U, R),
    (R, N, N, N, N, U, R, R),
    (U, U, N, N, N, N, U, R),
    (R, U, R, N, N, N, N, U),
)

SHOR15_SPLIT = ((0, 1, 2, 3), (4, 5, 6, 7))


@dataclass(frozen=True)
class Scenario:
    name: str
    fields: tuple[OpticalField, ...]
    expected_m: ModeMatrix | None
    lo_ids: tuple[int, ...]
    seq_ids: tuple[int, ...] = ()
    register_split: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "sequence_ids": list(self.seq_ids),
            "lo_sequence_ids": list(self.lo_ids),
            "register_split": None if self.register_split is None else [list(p) for p in self.register_split],
        }

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), indent=1, sort_keys=True) + "\n"


def _family(family: Sequence[PhaseSequence] | None) -> list[PhaseSequence]:
    return builtin_table() if family is None else list(family)


def _lookup(family: list[PhaseSequence], seq_id: int) -> PhaseSequence:
    return family[seq_id % len(family)]


def _check_ids(seq_ids: Sequence[int], family: list[PhaseSequence], count: int = 3) -> tuple[int, ...]:
    ids = tuple(int(i) for i in seq_ids)
    if len(ids) != count:
        raise ValueError(f"expected {count} sequence ids, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ValueError(f"sequence ids must be distinct, got {ids}")
    for i in ids:
        if not 0 <= i < len(family):
            raise ValueError(f"sequence id {i} is not in the family (0..{len(family) - 1})")
    return ids


def tagged_field(label: str, up_ids: Sequence[int], right_ids: Sequence[int],
                 family: Sequence[PhaseSequence] | None = None, amplitude: float = 1.0) -> OpticalField:
    """Sum of unit single-mode fields, one per (mode, sequence) term."""
    fam = _family(family)
    L = len(fam[0])
    parts = [modulate(make_source(amplitude, 0.0, L), _lookup(fam, i)) for i in up_ids]
    parts += [modulate(make_source(0.0, amplitude, L), _lookup(fam, i)) for i in right_ids]
    if not parts:
        return dark(L, label)
    return superpose_all(parts, label)


def build_product(seq_ids: Sequence[int] = (1, 2, 3), family=None) -> Scenario:
    fam = _family(family)
    ids = _check_ids(seq_ids, fam)
    L = len(fam[0])
    rotated = rotator(make_source(1.0, 0.0, L), 45.0)
    fields = tuple(modulate(rotated, fam[s], label=f"E{i + 1}") for i, s in enumerate(ids))
    expected = ModeMatrix(tuple(f.label for f in fields), ids,
                          tuple(tuple(B if i == j else N for j in range(3)) for i in range(3)))
    return Scenario("product", fields, expected, ids, ids)


def build_ghz(seq_ids: Sequence[int] = (1, 2, 3), family=None) -> Scenario:
    fam = _family(family)
    ids = _check_ids(seq_ids, fam)
    fields = tuple(tagged_field(f"E{i + 1}", [ids[i]], [ids[(i + 1) % 3]], fam) for i in range(3))
    expected = ModeMatrix(
        tuple(f.label for f in fields), ids,
        ((U, R, N),
         (N, U, R),
         (R, N, U)),
    )
    return Scenario("ghz", fields, expected, ids, ids)


def build_w(seq_ids: Sequence[int] = (1, 2, 3), family=None) -> Scenario:
    fam = _family(family)
    ids = _check_ids(seq_ids, fam)
    # the three fields are identical
    fields = tuple(tagged_field(f"E{i + 1}", [ids[0]], [ids[1], ids[2]], fam) for i in range(3))
    expected = ModeMatrix(tuple(f.label for f in fields), ids, ((U, R, R),) * 3)
    return Scenario("w", fields, expected, ids, ids)


def build_shor15(family=None) -> Scenario:
    fam = _family(family)
    if len(fam) != 8:
        raise ValueError("the shor15 state needs an eight-member family")
    fields = tuple(tagged_field(f"E{i + 1}", up, right, fam) for i, (up, right) in enumerate(SHOR15_TERMS))
    expected = ModeMatrix(tuple(f.label for f in fields), SHOR15_COLUMNS, SHOR15_M)
    return Scenario("shor15", fields, expected, SHOR15_COLUMNS, tuple(range(1, 9)), SHOR15_SPLIT)


def build(name: str, seq_ids: Sequence[int] | None = None, family=None) -> Scenario:
    if name == "shor15":
        return build_shor15(family)
    builders = {"product": build_product, "ghz": build_ghz, "w": build_w}
    if name not in builders:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    return builders[name](tuple(seq_ids) if seq_ids else (1, 2, 3), family)


def from_descriptor(doc: dict, family=None) -> Scenario:
    return build(doc["name"], doc.get("sequence_ids") or None, family)


def global_phase_equal(a: OpticalField, b: OpticalField, atol: float = 1e-12) -> bool:
    """True when ``a = c * b`` for some nonzero complex ``c`` (compared after unit-norm scaling)."""
    na, nb = math.sqrt(a.energy()), math.sqrt(b.energy())
    if na == 0 or nb == 0:
        return na == nb
    va, vb = a.amps.ravel() / na, b.amps.ravel() / nb
    k = int(abs(vb).argmax())
    phase = va[k] / vb[k]
    return bool(abs(abs(phase) - 1) < 1e-9 and (abs(va - phase * vb) < atol).all())
