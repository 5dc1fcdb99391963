"""Line-oriented netlist format for optical networks, plus a DAG evaluator.

Grammar (one component per line, ``#`` comments)::

    pseudophase-net v1
    source     s1 amp_up=1 amp_right=0
    phase_mod  m1 seq=1 in=s1
    rotator    r1 angle=45 in=m1
    pbs        p1 in=r1 in=r2
    sink       E1 in=p1.out_1

A port reference is ``id`` (components with a single output) or ``id.out_k``
with ``k`` counted from 1. ``in=`` tokens bind input ports in order.
Components may be declared in any order; the graph must be acyclic, every
input bound exactly once, and every output consumed at most once.
"""

from __future__ import annotations

import enum
import heapq
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from . import components as comp
from .fields import OpticalField, make_source, modulate
from .sequences import PhaseSequence, builtin_table

HEADER = "pseudophase-net v1"
_HEADER_RE = re.compile(r"pseudophase-net\s+v(\S+)$")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_PORT_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(?:\.out_([0-9]+))?$")


class Kind(enum.Enum):
    SOURCE = "source"
    PHASE_MOD = "phase_mod"
    COUPLER2 = "coupler2"
    PBS = "pbs"
    ROTATOR = "rotator"
    MODE_FILTER = "mode_filter"
    SPLITTER = "splitter"
    COMBINER = "combiner"
    SINK = "sink"


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: Severity = Severity.ERROR

    def format(self, filename: str = "<netlist>") -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity.value}: {self.message}"


class NetlistError(ValueError):
    def __init__(self, diagnostics: Sequence[ParseDiagnostic], filename: str = "<netlist>"):
        self.diagnostics = list(diagnostics)
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in self.diagnostics))


class NetworkError(RuntimeError):
    """Raised when a validated network cannot be evaluated."""


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0 or value == float("inf"):
        raise ValueError("expected a finite nonnegative number")
    return value


def _finite_float(text: str) -> float:
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("expected a finite number")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError("expected a nonnegative integer")
    return value


def _fanout(text: str) -> int:
    value = int(text)
    if value < 2:
        raise ValueError("expected an integer >= 2")
    return value


def _filter_pass(text: str) -> str:
    return comp.FilterPass(text).value


# kind -> {param: (converter, default or None if required)}
_PARAMS: dict[Kind, dict[str, tuple[Callable[[str], object], object]]] = {
    Kind.SOURCE: {"amp_up": (_nonneg_float, 0.0), "amp_right": (_nonneg_float, 0.0)},
    Kind.PHASE_MOD: {"seq": (_nonneg_int, None)},
    Kind.COUPLER2: {},
    Kind.PBS: {},
    Kind.ROTATOR: {"angle": (_finite_float, None)},
    Kind.MODE_FILTER: {"pass": (_filter_pass, None)},
    Kind.SPLITTER: {"n": (_fanout, None)},
    Kind.COMBINER: {"n": (_fanout, None)},
    Kind.SINK: {},
}

_FIXED_ARITY = {
    Kind.SOURCE: (0, 1),
    Kind.PHASE_MOD: (1, 1),
    Kind.COUPLER2: (2, 2),
    Kind.PBS: (2, 2),
    Kind.ROTATOR: (1, 1),
    Kind.MODE_FILTER: (1, 1),
    Kind.SINK: (1, 0),
}


@dataclass(frozen=True)
class PortRef:
    component: str
    port: int  # 0-based output index

    def render(self, single_output: bool) -> str:
        return self.component if single_output else f"{self.component}.out_{self.port + 1}"


@dataclass(frozen=True)
class Component:
    id: str
    kind: Kind
    params: tuple[tuple[str, object], ...] = ()
    inputs: tuple[PortRef, ...] = ()

    def param(self, key: str):
        return dict(self.params)[key]

    @property
    def arity(self) -> tuple[int, int]:
        if self.kind is Kind.SPLITTER:
            return 1, self.param("n")
        if self.kind is Kind.COMBINER:
            return self.param("n"), 1
        return _FIXED_ARITY[self.kind]


@dataclass(frozen=True)
class Network:
    components: tuple[Component, ...]
    warnings: tuple[ParseDiagnostic, ...] = field(default=(), compare=False)
    lines: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __getitem__(self, cid: str) -> Component:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    @property
    def sinks(self) -> list[str]:
        return [c.id for c in self.components if c.kind is Kind.SINK]

    @property
    def sources(self) -> list[str]:
        return [c.id for c in self.components if c.kind is Kind.SOURCE]

    @property
    def edges(self) -> list[tuple[PortRef, PortRef]]:
        """(from output port, to input port) pairs."""
        return [(src, PortRef(c.id, k)) for c in self.components for k, src in enumerate(c.inputs)]


@dataclass
class _Decl:
    comp_id: str
    kind: Kind | None  # None when the kind token was invalid
    line: int
    id_col: int
    params: dict = field(default_factory=dict)
    refs: list = field(default_factory=list)  # (text, column)
    n_in: int = 0
    n_out: int = 0
    ok: bool = True


def _tokens(line: str) -> list[tuple[str, int]]:
    body = line.split("#", 1)[0]
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]


def parse_netlist(text: str, filename: str = "<netlist>") -> Network:
    """Parse and validate netlist text.

    Raises :class:`NetlistError` carrying every error diagnostic. Warnings
    (unconsumed outputs, no sinks) are attached to the returned network.
    """
    errors: list[ParseDiagnostic] = []
    warnings: list[ParseDiagnostic] = []

    def error(line, col, msg):
        errors.append(ParseDiagnostic(line, col, msg))

    lines = text.splitlines()
    decls: dict[str, _Decl] = {}
    order: list[str] = []
    header_seen = False

    for lineno, raw in enumerate(lines, start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        if not header_seen:
            header_seen = True
            body = " ".join(t for t, _ in toks)
            m = _HEADER_RE.match(body)
            if m is None:
                error(lineno, toks[0][1], f"missing header line '{HEADER}'")
                return _fail(errors, filename)
            if m.group(1) != "1":
                error(lineno, toks[0][1], f"unsupported netlist version 'v{m.group(1)}' (expected v1)")
                return _fail(errors, filename)
            continue

        (kind_tok, kind_col), rest = toks[0], toks[1:]
        try:
            kind: Kind | None = Kind(kind_tok)
        except ValueError:
            kind = None
            error(lineno, kind_col, f"unknown component kind '{kind_tok}'")

        if not rest:
            if kind is not None:
                error(lineno, kind_col + len(kind_tok), f"{kind_tok} is missing a component id")
            continue
        (cid, id_col), rest = rest[0], rest[1:]
        if "=" in cid or not _IDENT_RE.match(cid):
            if kind is not None:
                error(lineno, id_col, f"invalid component id '{cid}'")
            continue
        if cid in decls:
            error(lineno, id_col, f"duplicate component id '{cid}' (first declared on line {decls[cid].line})")
            continue

        decl = _Decl(cid, kind, lineno, id_col)
        decls[cid] = decl
        order.append(cid)
        if kind is None:
            decl.ok = False
            continue

        specs = _PARAMS[kind]
        for tok, col in rest:
            key, eq, value = tok.partition("=")
            if not eq:
                error(lineno, col, f"expected key=value, got '{tok}'")
                decl.ok = False
                continue
            value_col = col + len(key) + 1
            if key == "in":
                decl.refs.append((value, value_col))
                continue
            if key not in specs:
                error(lineno, col, f"unknown parameter '{key}' for {kind.value}")
                decl.ok = False
                continue
            if key in decl.params:
                error(lineno, col, f"parameter '{key}' given twice")
                decl.ok = False
                continue
            convert, _ = specs[key]
            try:
                decl.params[key] = convert(value)
            except ValueError:
                error(lineno, value_col, f"invalid value '{value}' for parameter '{key}'")
                decl.ok = False
        if not decl.ok:
            continue
        for key, (_, default) in specs.items():
            if key not in decl.params:
                if default is None:
                    error(lineno, id_col, f"{kind.value} '{cid}' requires parameter '{key}'")
                    decl.ok = False
                else:
                    decl.params[key] = default
        if not decl.ok:
            continue
        if kind is Kind.SPLITTER:
            decl.n_in, decl.n_out = 1, decl.params["n"]
        elif kind is Kind.COMBINER:
            decl.n_in, decl.n_out = decl.params["n"], 1
        else:
            decl.n_in, decl.n_out = _FIXED_ARITY[kind]
        if len(decl.refs) != decl.n_in:
            error(lineno, id_col, f"{kind.value} '{cid}' expects {decl.n_in} input(s), got {len(decl.refs)}")
            decl.ok = False

    if not header_seen:
        error(1, 1, f"missing header line '{HEADER}'")
        return _fail(errors, filename)

    # resolve port references
    resolved: dict[str, list[PortRef]] = {}
    consumers: dict[PortRef, tuple[str, int]] = {}
    for cid in order:
        decl = decls[cid]
        if not decl.ok:
            continue
        refs = []
        for text_ref, col in decl.refs:
            m = _PORT_RE.match(text_ref)
            if m is None:
                error(decl.line, col, f"malformed port reference '{text_ref}'")
                decl.ok = False
                continue
            target_id, port_txt = m.group(1), m.group(2)
            target = decls.get(target_id)
            if target is None:
                error(decl.line, col, f"reference to undeclared component '{target_id}'")
                decl.ok = False
                continue
            if not target.ok:
                decl.ok = False
                continue
            if port_txt is None:
                if target.n_out != 1:
                    if target.n_out == 0:
                        msg = f"'{target_id}' ({target.kind.value}) has no output ports"
                    else:
                        msg = (f"port reference '{target_id}' is ambiguous: {target.kind.value} has "
                               f"{target.n_out} outputs, use '{target_id}.out_k'")
                    error(decl.line, col, msg)
                    decl.ok = False
                    continue
                port = 0
            else:
                port = int(port_txt) - 1
                if not 0 <= port < target.n_out:
                    error(decl.line, col, f"'{target_id}' has no output port out_{port_txt} "
                          f"({target.kind.value} has {target.n_out} output(s))")
                    decl.ok = False
                    continue
            ref = PortRef(target_id, port)
            if ref in consumers:
                other, other_line = consumers[ref]
                error(decl.line, col, f"output {ref.render(target.n_out == 1)} already feeds "
                      f"'{other}' (line {other_line})")
                decl.ok = False
                continue
            consumers[ref] = (cid, decl.line)
            refs.append(ref)
        resolved[cid] = refs

    if errors:
        return _fail(errors, filename)

    cycle = _find_cycle(order, resolved)
    if cycle:
        first = min(cycle, key=lambda c: decls[c].line)
        i = cycle.index(first)
        loop = cycle[i:] + cycle[:i] + [first]
        d = decls[first]
        error(d.line, d.id_col, "cycle through components " + " -> ".join(loop))
        return _fail(errors, filename)

    for cid in order:
        d = decls[cid]
        for k in range(d.n_out):
            if PortRef(cid, k) not in consumers:
                ref = PortRef(cid, k).render(d.n_out == 1)
                warnings.append(ParseDiagnostic(d.line, d.id_col, f"output {ref} is not connected",
                                                Severity.WARNING))
    comps = tuple(
        Component(cid, decls[cid].kind, tuple(sorted(decls[cid].params.items())), tuple(resolved[cid]))
        for cid in order
    )
    if not any(c.kind is Kind.SINK for c in comps):
        warnings.append(ParseDiagnostic(1, 1, "network has no sink", Severity.WARNING))
    return Network(comps, tuple(warnings), {cid: decls[cid].line for cid in order})


def _fail(errors, filename):
    raise NetlistError(errors, filename)


def _find_cycle(order: list[str], inputs: dict[str, list[PortRef]]) -> list[str] | None:
    """Return the components of one directed cycle, or None."""
    succ: dict[str, list[str]] = {cid: [] for cid in order}
    for cid in order:
        for ref in inputs[cid]:
            succ[ref.component].append(cid)
    state = dict.fromkeys(order, 0)  # 0 new, 1 on stack, 2 done
    for root in order:
        if state[root]:
            continue
        stack = [(root, iter(succ[root]))]
        path = [root]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
            elif state[nxt] == 1:
                return path[path.index(nxt):]
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
                path.append(nxt)
    return None


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def pretty_print(net: Network) -> str:
    """Canonical text form: header, declaration order, sorted parameters."""
    n_out = {c.id: c.arity[1] for c in net.components}
    out = [HEADER]
    for c in net.components:
        parts = [c.kind.value, c.id]
        parts += [f"{k}={_format_value(v)}" for k, v in c.params]
        parts += [f"in={ref.render(n_out[ref.component] == 1)}" for ref in c.inputs]
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def topological_order(net: Network) -> list[str]:
    """Kahn order, ties broken by declaration order."""
    index = {c.id: i for i, c in enumerate(net.components)}
    indeg = {c.id: len({r.component for r in c.inputs}) for c in net.components}
    succ: dict[str, set[str]] = {c.id: set() for c in net.components}
    for c in net.components:
        for r in c.inputs:
            succ[r.component].add(c.id)
    ready = [index[c] for c, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    result = []
    while ready:
        cid = net.components[heapq.heappop(ready)].id
        result.append(cid)
        for nxt in sorted(succ[cid], key=index.get):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, index[nxt])
    if len(result) != len(net.components):
        raise NetworkError("network contains a cycle")
    return result


def _apply(c: Component, ins: list[OpticalField], L: int, family: Sequence[PhaseSequence]) -> list[OpticalField]:
    kind = c.kind
    if kind is Kind.SOURCE:
        return [make_source(c.param("amp_up"), c.param("amp_right"), L, c.id)]
    if kind is Kind.PHASE_MOD:
        seq_id = c.param("seq")
        if seq_id >= len(family):
            raise NetworkError(f"phase_mod '{c.id}' uses sequence {seq_id} but the family has {len(family)}")
        return [modulate(ins[0], family[seq_id])]
    if kind is Kind.COUPLER2:
        return list(comp.coupler2(*ins))
    if kind is Kind.PBS:
        return list(comp.pbs(*ins))
    if kind is Kind.ROTATOR:
        return [comp.rotator(ins[0], c.param("angle"))]
    if kind is Kind.MODE_FILTER:
        return [comp.mode_filter(ins[0], c.param("pass"))]
    if kind is Kind.SPLITTER:
        return comp.splitter(ins[0], c.param("n"))
    if kind is Kind.COMBINER:
        return [comp.combiner(ins, c.id)]
    if kind is Kind.SINK:
        return [ins[0].relabel(c.id)]
    raise NetworkError(f"unsupported component kind {kind}")  # pragma: no cover


def evaluate_network(
    net: Network,
    family: Sequence[PhaseSequence] | None = None,
    order: Iterable[str] | None = None,
    overrides: Mapping[str, OpticalField] | None = None,
) -> dict[str, OpticalField]:
    """Evaluate every sink of ``net``.

    ``order`` may supply any valid topological order (the result does not
    depend on it). ``overrides`` replaces the field emitted by named sources.
    Sinks are returned in declaration order.
    """
    family = builtin_table() if family is None else list(family)
    L = len(family[0])
    overrides = dict(overrides or {})
    if order is None:
        order = topological_order(net)
    else:
        order = list(order)
        _check_order(net, order)

    by_id = {c.id: c for c in net.components}
    ports: dict[PortRef, OpticalField] = {}
    results: dict[str, OpticalField] = {}
    for cid in order:
        c = by_id[cid]
        ins = [ports[r] for r in c.inputs]
        if c.kind is Kind.SOURCE and cid in overrides:
            outs = [overrides[cid].relabel(cid)]
            if outs[0].slots != L:
                raise NetworkError(f"override for '{cid}' has {outs[0].slots} slots, expected {L}")
        else:
            outs = _apply(c, ins, L, family)
        if c.kind is Kind.SINK:
            results[cid] = outs[0]
        for k, f in enumerate(outs):
            ports[PortRef(cid, k)] = f
    return {sid: results[sid] for sid in net.sinks}


def _check_order(net: Network, order: list[str]) -> None:
    ids = [c.id for c in net.components]
    if sorted(order) != sorted(ids):
        raise ValueError("order must list every component exactly once")
    pos = {cid: i for i, cid in enumerate(order)}
    for c in net.components:
        for r in c.inputs:
            if pos[r.component] >= pos[c.id]:
                raise ValueError(f"order is not topological: '{r.component}' must precede '{c.id}'")
