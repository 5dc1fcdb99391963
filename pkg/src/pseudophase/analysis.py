"""From correlation tables to M matrices, reconstructed states and periods.

An M matrix records, for every (field, sequence) pair, which polarization
modes carry that sequence. A basis pattern (one bit per field) is present in
the reconstructed state when each field can contribute the mode encoding its
bit under some sequence, with all fields using pairwise distinct sequences.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .detection import CorrelationTable
from .fields import Mode

DEFAULT_EPSILON_FLAT = 0.05
DEFAULT_THETA = 0.5


class MPresence(enum.Enum):
    NONE = "0"
    UP_ONLY = "(1,0)"
    RIGHT_ONLY = "(0,1)"
    BOTH = "(1,1)"

    @classmethod
    def from_flags(cls, up: bool, right: bool) -> MPresence:
        return {(False, False): cls.NONE, (True, False): cls.UP_ONLY,
                (False, True): cls.RIGHT_ONLY, (True, True): cls.BOTH}[(bool(up), bool(right))]

    @classmethod
    def parse(cls, token: str) -> MPresence:
        token = token.replace(" ", "")
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"not an M-matrix entry: {token!r}")

    def covers(self, bit: int) -> bool:
        if bit == 0:
            return self in (MPresence.UP_ONLY, MPresence.BOTH)
        return self in (MPresence.RIGHT_ONLY, MPresence.BOTH)

    def __str__(self):
        return self.value


class BitOrder(enum.Enum):
    MSB_FIRST = "msb"
    LSB_FIRST = "lsb"


class Scheme(enum.Enum):
    MATCHING = "matching"  # any assignment of pairwise-distinct sequences
    CYCLIC = "cyclic"  # field i reads column (i + s) mod ncols


@dataclass(frozen=True)
class ModeMatrix:
    rows: tuple[str, ...]
    cols: tuple[int, ...]
    entries: tuple[tuple[MPresence, ...], ...]

    def __post_init__(self):
        entries = tuple(tuple(MPresence(e) if not isinstance(e, MPresence) else e for e in r)
                        for r in self.entries)
        if len(entries) != len(self.rows) or any(len(r) != len(self.cols) for r in entries):
            raise ValueError("M matrix entries do not match its row/column labels")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def __getitem__(self, idx: tuple[int, int]) -> MPresence:
        i, j = idx
        return self.entries[i][j]

    def select_columns(self, cols: Sequence[int]) -> ModeMatrix:
        index = {c: j for j, c in enumerate(self.cols)}
        missing = [c for c in cols if c not in index]
        if missing:
            raise KeyError(f"sequences {missing} not in matrix columns {self.cols}")
        return ModeMatrix(self.rows, tuple(cols), tuple(tuple(r[index[c]] for c in cols) for r in self.entries))

    def same_entries(self, other: ModeMatrix) -> bool:
        return self.cols == other.cols and self.entries == other.entries

    def diff(self, other: ModeMatrix) -> list[tuple[int, int, MPresence, MPresence]]:
        """Entries that differ, as (row, col index, self, other)."""
        if self.shape != other.shape:
            raise ValueError(f"cannot diff M matrices of shapes {self.shape} and {other.shape}")
        return [(i, j, a, b)
                for i, (ra, rb) in enumerate(zip(self.entries, other.entries))
                for j, (a, b) in enumerate(zip(ra, rb)) if a != b]

    def render(self, header: bool = True) -> str:
        width = max(len(e.value) for r in self.entries for e in r) if self.entries else 1
        lines = []
        if header:
            lines.append("# sequences: " + " ".join(str(c) for c in self.cols))
            lines.append("# rows: " + " ".join(self.rows))
        for r in self.entries:
            lines.append(" ".join(e.value.ljust(width) for e in r).rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> ModeMatrix:
        """Parse the rendered form; ``# sequences:``/``# rows:`` headers are optional."""
        cols = rows = None
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            stripped = raw.strip()
            if stripped.startswith("#"):
                m = re.match(r"#\s*(sequences|rows)\s*:(.*)$", stripped)
                if m and m.group(1) == "sequences":
                    try:
                        cols = tuple(int(t) for t in m.group(2).split())
                    except ValueError:
                        raise ValueError(f"line {lineno}: bad sequence ids in header") from None
                elif m:
                    rows = tuple(m.group(2).split())
                continue
            body = stripped.split("#", 1)[0]
            if not body:
                continue
            try:
                entries.append(tuple(MPresence.parse(t) for t in re.findall(r"\([^)]*\)|\S+", body)))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if not entries:
            raise ValueError("M matrix file has no rows")
        ncols = len(entries[0])
        if any(len(r) != ncols for r in entries):
            raise ValueError("M matrix rows have unequal lengths")
        cols = cols or tuple(range(1, ncols + 1))
        rows = rows or tuple(f"E{i + 1}" for i in range(len(entries)))
        return cls(rows, cols, tuple(entries))


def render_diff(expected: ModeMatrix, got: ModeMatrix) -> str:
    lines = []
    for i, j, a, b in expected.diff(got):
        lines.append(f"{expected.rows[i]} x lambda{expected.cols[j]}: expected {a.value}, got {b.value}")
    return "\n".join(lines) + ("\n" if lines else "")


def classify_branch(values: Sequence[float], epsilon_flat: float = DEFAULT_EPSILON_FLAT,
                    theta: float = DEFAULT_THETA) -> frozenset[int]:
    """Indices of the LO sequences present in one polarization branch.

    A branch whose relative spread ``(max - min)/max`` is below
    ``epsilon_flat`` carries no sequence. Otherwise the values are min-max
    normalized and those above ``theta`` are present.
    """
    check_thresholds(epsilon_flat, theta)
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("classify_branch needs at least one value")
    lo, hi = float(v.min()), float(v.max())
    if hi <= 0 or (hi - lo) / hi < epsilon_flat:
        return frozenset()
    norm = (v - lo) / (hi - lo)
    return frozenset(int(i) for i in np.flatnonzero(norm > theta))


def check_thresholds(epsilon_flat: float, theta: float) -> None:
    if not 0 < epsilon_flat < 1:
        raise ValueError(f"epsilon_flat must lie in (0, 1), got {epsilon_flat}")
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")


def extract_m_matrix(table: CorrelationTable, epsilon_flat: float = DEFAULT_EPSILON_FLAT,
                     theta: float = DEFAULT_THETA) -> ModeMatrix:
    rows = []
    for i in range(len(table.field_labels)):
        up = classify_branch(table.branch(i, Mode.UP), epsilon_flat, theta)
        right = classify_branch(table.branch(i, Mode.RIGHT), epsilon_flat, theta)
        rows.append(tuple(MPresence.from_flags(j in up, j in right) for j in range(len(table.lo_ids))))
    return ModeMatrix(table.field_labels, table.lo_ids, tuple(rows))


@dataclass(frozen=True)
class StateTerm:
    bits: tuple[int, ...]
    witness: tuple[int, ...] = ()  # sequence id used by each field

    @property
    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class SuperpositionState:
    terms: tuple[StateTerm, ...]
    register_split: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    bit_order: BitOrder = BitOrder.MSB_FIRST
    candidates: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        seen = set()
        for t in self.terms:
            if t.bits in seen:
                raise ValueError(f"duplicate basis pattern {t.bitstring}")
            seen.add(t.bits)
        object.__setattr__(self, "bit_order", BitOrder(self.bit_order))

    def __len__(self):
        return len(self.terms)

    @property
    def bitstrings(self) -> list[str]:
        return [t.bitstring for t in self.terms]

    def with_register(self, x_fields: Sequence[int], f_fields: Sequence[int],
                      bit_order: BitOrder | str | None = None) -> SuperpositionState:
        return SuperpositionState(self.terms, (tuple(x_fields), tuple(f_fields)),
                                  BitOrder(bit_order) if bit_order else self.bit_order, self.candidates)

    def register_value(self, term: StateTerm, fields: Sequence[int]) -> int:
        bits = [term.bits[i] for i in fields]
        if self.bit_order is BitOrder.LSB_FIRST:
            bits = bits[::-1]
        return int("".join(map(str, bits)), 2) if bits else 0

    def pairs(self) -> list[tuple[int, int]]:
        if self.register_split is None:
            raise ValueError("state has no register split")
        xs, fs = self.register_split
        return [(self.register_value(t, xs), self.register_value(t, fs)) for t in self.terms]

    @classmethod
    def from_bitstrings(cls, strings: Iterable[str], register_split=None,
                        bit_order: BitOrder | str = BitOrder.MSB_FIRST) -> SuperpositionState:
        bits = sorted({tuple(int(ch) for ch in "".join(s.split())) for s in strings if s.strip()})
        return cls(tuple(StateTerm(b) for b in bits), register_split, BitOrder(bit_order))


def _sdr(allowed: list[list[int]]) -> list[int] | None:
    """Distinct representative per row (augmenting paths), or None."""
    owner: dict[int, int] = {}

    def augment(row: int, seen: set[int]) -> bool:
        for c in allowed[row]:
            if c in seen:
                continue
            seen.add(c)
            if c not in owner or augment(owner[c], seen):
                owner[c] = row
                return True
        return False

    for row in range(len(allowed)):
        if not augment(row, set()):
            return None
    pick = [0] * len(allowed)
    for c, row in owner.items():
        pick[row] = c
    return pick


def reconstruct_terms(
    m: ModeMatrix,
    scheme: Scheme | str = Scheme.MATCHING,
    register_split: tuple[Sequence[int], Sequence[int]] | None = None,
    bit_order: BitOrder | str = BitOrder.MSB_FIRST,
) -> SuperpositionState:
    """Basis patterns supported by ``m``, sorted lexicographically.

    ``matching`` admits any assignment of pairwise-distinct sequences;
    ``cyclic`` only the shifts where field ``i`` uses column ``(i + s) mod n``.
    An unsupported matrix gives an empty state; ``candidates`` then reports
    how many nonzero entries each field had.
    """
    scheme = Scheme(scheme)
    nrows, ncols = m.shape
    candidates = tuple(sum(e is not MPresence.NONE for e in r) for r in m.entries)
    found: dict[tuple[int, ...], tuple[int, ...]] = {}

    if scheme is Scheme.MATCHING:
        for bits in itertools.product((0, 1), repeat=nrows):
            allowed = [[j for j in range(ncols) if m.entries[i][j].covers(b)] for i, b in enumerate(bits)]
            if any(not a for a in allowed):
                continue
            pick = _sdr(allowed)
            if pick is not None:
                found[bits] = tuple(m.cols[j] for j in pick)
    elif nrows <= ncols:
        for s in range(ncols):
            cols = [(i + s) % ncols for i in range(nrows)]
            options = [[b for b in (0, 1) if m.entries[i][j].covers(b)] for i, j in enumerate(cols)]
            for bits in itertools.product(*options):
                found.setdefault(bits, tuple(m.cols[j] for j in cols))

    terms = tuple(StateTerm(b, found[b]) for b in sorted(found))
    split = None if register_split is None else (tuple(register_split[0]), tuple(register_split[1]))
    return SuperpositionState(terms, split, BitOrder(bit_order), candidates)


def witness_ok(m: ModeMatrix, term: StateTerm) -> bool:
    """Check coverage and distinctness of a term's witness assignment."""
    if len(term.witness) != len(term.bits) or len(set(term.witness)) != len(term.witness):
        return False
    col = {c: j for j, c in enumerate(m.cols)}
    return all(m.entries[i][col[s]].covers(b) for i, (b, s) in enumerate(zip(term.bits, term.witness)))


@dataclass(frozen=True)
class PeriodReport:
    r: int
    groups: dict[int, tuple[int, ...]]  # f-value -> x-values, ordered by smallest x

    @property
    def f_values(self) -> tuple[int, ...]:
        return tuple(self.groups)

    def to_dict(self) -> dict:
        return {"r": self.r, "groups": [{"f": f, "x": list(xs)} for f, xs in self.groups.items()]}


def extract_period(state: SuperpositionState) -> PeriodReport:
    """Count the distinct values held by the f register."""
    if not state.terms:
        raise ValueError("cannot extract a period from an empty state")
    pairs = sorted(state.pairs())
    groups: dict[int, list[int]] = {}
    for x, f in pairs:
        groups.setdefault(f, []).append(x)
    return PeriodReport(len(groups), {f: tuple(xs) for f, xs in groups.items()})
