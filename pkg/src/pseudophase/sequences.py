"""Pseudorandom phase-sequence families.

Phase codes are stored as integer quarter turns (``q`` means a phase of
``q * pi/2``), so GF(4) families are representable without rounding. The
built-in family is the eight-member GF(2) code used throughout the package:
seven balanced length-8 sequences plus the all-zero sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

QUARTER_TURN = np.pi / 2

# rows 1..7 of the built-in family; 1 marks a pi/2 code
_BUILTIN_ROWS = (
    (1, 0, 0, 1, 0, 1, 1, 0),
    (1, 1, 0, 0, 1, 0, 1, 0),
    (1, 1, 1, 0, 0, 1, 0, 0),
    (0, 1, 1, 1, 0, 0, 1, 0),
    (1, 0, 1, 1, 1, 0, 0, 0),
    (0, 1, 0, 1, 1, 1, 0, 0),
    (0, 0, 1, 0, 1, 1, 1, 0),
)


class FamilyFormatError(ValueError):
    """Raised when a sequence-family text file cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class PhaseSequence:
    """A fixed-length vector of quarter-turn phase codes.

    Equality and hashing look at the codes only; ``id`` is a label.
    """

    id: int | None
    codes: tuple[int, ...]

    def __post_init__(self):
        codes = tuple(int(c) for c in self.codes)
        if not codes:
            raise ValueError("a phase sequence needs at least one code")
        if any(c < 0 or c > 3 for c in codes):
            raise ValueError(f"quarter-turn codes must lie in 0..3, got {codes}")
        object.__setattr__(self, "codes", codes)

    def __eq__(self, other):
        if not isinstance(other, PhaseSequence):
            return NotImplemented
        return self.codes == other.codes

    def __hash__(self):
        return hash(self.codes)

    def __len__(self):
        return len(self.codes)

    @property
    def phases(self) -> np.ndarray:
        """Phases in radians."""
        return np.asarray(self.codes, dtype=float) * QUARTER_TURN

    @property
    def is_binary(self) -> bool:
        return all(c in (0, 1) for c in self.codes)

    @property
    def label(self) -> str:
        return f"lambda{self.id}" if self.id is not None else "lambda?"


@dataclass(frozen=True)
class FamilyReport:
    balanced: tuple[bool, ...]
    pairwise_agreements: np.ndarray
    closed_under_xor: bool
    all_zero: tuple[bool, ...] = ()

    @property
    def length(self) -> int:
        return int(self.pairwise_agreements[0, 0])

    @property
    def nonzero_balanced(self) -> bool:
        """Every sequence except the all-zero one is balanced."""
        zero = self.all_zero or (False,) * len(self.balanced)
        return all(b or z for b, z in zip(self.balanced, zero))

    @property
    def orthogonal(self) -> bool:
        """All distinct pairs agree on exactly half of the slots."""
        agree = self.pairwise_agreements
        n = agree.shape[0]
        off = agree[~np.eye(n, dtype=bool)]
        return bool(np.all(2 * off == self.length))

    @property
    def ok(self) -> bool:
        return self.nonzero_balanced and self.orthogonal and self.closed_under_xor


def builtin_table() -> list[PhaseSequence]:
    """The eight built-in sequences, index 0 being the all-zero sequence."""
    rows = [(0,) * 8, *_BUILTIN_ROWS]
    return [PhaseSequence(i, row) for i, row in enumerate(rows)]


def _check_lengths(a: PhaseSequence, b: PhaseSequence) -> None:
    if len(a) != len(b):
        raise ValueError(f"sequence lengths differ: {len(a)} vs {len(b)}")


def agreement_count(a: PhaseSequence, b: PhaseSequence) -> int:
    """Number of slots where the two sequences carry the same code."""
    _check_lengths(a, b)
    return sum(x == y for x, y in zip(a.codes, b.codes))


def xor_compose(a: PhaseSequence, b: PhaseSequence) -> PhaseSequence:
    """Slotwise GF(2) sum of two binary sequences.

    The result carries no id; look it up in a family with :func:`find_member`.
    """
    _check_lengths(a, b)
    if not (a.is_binary and b.is_binary):
        raise ValueError("xor_compose needs GF(2) sequences (codes 0 or 1)")
    return PhaseSequence(None, tuple(x ^ y for x, y in zip(a.codes, b.codes)))


def find_member(seq: PhaseSequence, family: Sequence[PhaseSequence]) -> PhaseSequence | None:
    for member in family:
        if member == seq:
            return member
    return None


def is_balanced(seq: PhaseSequence) -> bool:
    zeros = seq.codes.count(0)
    return 2 * zeros == len(seq)


def verify_family(seqs: Sequence[PhaseSequence]) -> FamilyReport:
    """Exhaustively check balance, pairwise agreement and XOR closure."""
    if not seqs:
        raise ValueError("empty sequence family")
    n = len(seqs)
    length = len(seqs[0])
    if any(len(s) != length for s in seqs):
        raise ValueError("sequence family has non-uniform length")

    agree = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i, n):
            agree[i, j] = agree[j, i] = agreement_count(seqs[i], seqs[j])

    members = set(seqs)
    closed = all(s.is_binary for s in seqs) and all(
        xor_compose(a, b) in members for a in seqs for b in seqs
    )
    return FamilyReport(
        balanced=tuple(is_balanced(s) for s in seqs),
        pairwise_agreements=agree,
        closed_under_xor=closed,
        all_zero=tuple(not any(s.codes) for s in seqs),
    )


def analytic_correlation(
    a: PhaseSequence, b: PhaseSequence, mu: float = 1.0, amplitude: float = 1.0, tau_slot: float = 1.0
) -> float:
    """Closed-form balanced-detector correlation of two unit single-sequence fields.

    Returns ``mu**2 * amplitude**4 * tau_slot / 2 * sum(1 + cos(2*(a_k - b_k)))``,
    i.e. 8 for identical and 4 for distinct members of the built-in family.
    """
    _check_lengths(a, b)
    diff = a.phases - b.phases
    total = np.sum(1.0 + np.cos(2.0 * diff))
    return float(mu**2 * amplitude**4 * tau_slot / 2.0 * total)


def parse_family(text: str) -> list[PhaseSequence]:
    """Parse a family file: one sequence per line, comma-separated quarter turns.

    ``#`` starts a comment; blank lines are skipped; ids follow line order
    starting at 0.
    """
    seqs: list[PhaseSequence] = []
    length = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            codes = tuple(int(tok) for tok in line.split(","))
        except ValueError:
            raise FamilyFormatError(f"expected comma-separated integers, got {line!r}", lineno) from None
        if any(c < 0 or c > 3 for c in codes):
            raise FamilyFormatError(f"codes must lie in 0..3: {line!r}", lineno)
        if length is None:
            length = len(codes)
        elif len(codes) != length:
            raise FamilyFormatError(f"sequence has {len(codes)} codes, expected {length}", lineno)
        seqs.append(PhaseSequence(len(seqs), codes))
    if not seqs:
        raise FamilyFormatError("no sequences found")
    return seqs


def load_family(path: str | Path) -> list[PhaseSequence]:
    return parse_family(Path(path).read_text())


def format_family(seqs: Iterable[PhaseSequence]) -> str:
    return "".join(",".join(str(c) for c in s.codes) + "\n" for s in seqs)
