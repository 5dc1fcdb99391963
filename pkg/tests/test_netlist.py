from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudophase.fields import make_source, modulate, scale, superpose
from pseudophase.netlist import (
    Kind,
    NetlistError,
    Severity,
    evaluate_network,
    parse_netlist,
    pretty_print,
    topological_order,
)
from pseudophase.scenarios import build_ghz, build_product, build_shor15, build_w, global_phase_equal

from conftest import random_field

SHIPPED = ["product.net", "ghz.net", "w.net", "shor15.net"]


def shipped(name: str) -> str:
    return resources.files("pseudophase").joinpath("data", name).read_text()


def test_minimal_source():
    net = parse_netlist("pseudophase-net v1\nsource s1 amp_up=1\nsink out in=s1\n")
    assert [c.kind for c in net.components] == [Kind.SOURCE, Kind.SINK]
    out = evaluate_network(net)["out"]
    assert out.allclose(make_source(1, 0, 8))
    assert net.warnings == ()


def test_undeclared_reference_diagnostic():
    with pytest.raises(NetlistError) as exc:
        parse_netlist("pseudophase-net v1\nsource s1 amp_up=1\nsink out in=s9\n", "x.net")
    (d,) = exc.value.diagnostics
    assert (d.line, d.column) == (3, 13)
    assert "undeclared component 's9'" in d.message
    assert str(exc.value).startswith("x.net:3:13: error:")


def test_declaration_order_is_free(family):
    text = "pseudophase-net v1\nsink out in=m\nphase_mod m seq=2 in=s\nsource s amp_right=1\n"
    net = parse_netlist(text)
    assert topological_order(net) == ["s", "m", "out"]
    assert evaluate_network(net)["out"].allclose(modulate(make_source(0, 1, 8), family[2]))


def test_unconsumed_output_is_a_warning():
    net = parse_netlist("pseudophase-net v1\nsource s amp_up=1\nsplitter sp n=2 in=s\nsink o in=sp.out_1\n")
    (w,) = net.warnings
    assert w.severity is Severity.WARNING
    assert "sp.out_2" in w.message and w.line == 3


def test_missing_sink_is_a_warning():
    net = parse_netlist("pseudophase-net v1\nsource s amp_up=1\n")
    assert any("no sink" in w.message for w in net.warnings)


def test_several_errors_are_reported_together():
    text = "pseudophase-net v1\nsource s amp_up=-1\nrotator r in=s\nwidget w\n"
    with pytest.raises(NetlistError) as exc:
        parse_netlist(text)
    assert [d.line for d in exc.value.diagnostics] == [2, 3, 4]


def test_cycle_is_reported():
    text = "pseudophase-net v1\ncoupler2 c in=r in=s\nsource s amp_up=1\nrotator r angle=1 in=c.out_1\nsink o in=c.out_2\n"
    with pytest.raises(NetlistError) as exc:
        parse_netlist(text)
    (d,) = exc.value.diagnostics
    assert d.line == 2 and "cycle" in d.message


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_netlists_round_trip(name):
    net = parse_netlist(shipped(name), name)
    assert net.warnings == ()
    text = pretty_print(net)
    again = parse_netlist(text)
    assert again == net
    assert pretty_print(again) == text


@pytest.mark.parametrize(
    "name, builder",
    [("product.net", build_product), ("ghz.net", build_ghz), ("w.net", build_w), ("shor15.net", build_shor15)],
)
def test_shipped_netlists_match_builders(name, builder):
    outs = evaluate_network(parse_netlist(shipped(name)))
    scenario = builder()
    assert len(outs) == len(scenario.fields)
    for got, want in zip(outs.values(), scenario.fields):
        assert global_phase_equal(got, want)


def test_product_net_fields(family):
    outs = evaluate_network(parse_netlist(shipped("product.net")))
    h = 1 / np.sqrt(2)
    for k, f in enumerate(outs.values(), start=1):
        want = modulate(make_source(h, h, 8), family[k])
        assert f.allclose(want, atol=1e-15)


# random DAGs ----------------------------------------------------------------

_KINDS = ["phase_mod", "coupler2", "pbs", "rotator", "mode_filter", "splitter", "combiner"]


def random_netlist(rng: np.random.Generator, n: int) -> str:
    """A random valid netlist: every output either consumed once or sunk."""
    lines = ["pseudophase-net v1"]
    free: list[str] = []
    for i in range(int(rng.integers(1, 4))):
        lines.append(f"source s{i} amp_up={rng.uniform(0, 2):.3f} amp_right={rng.uniform(0, 2):.3f}")
        free.append(f"s{i}")
    for i in range(n):
        kind = _KINDS[int(rng.integers(len(_KINDS)))]
        need = {"coupler2": 2, "pbs": 2, "combiner": int(rng.integers(2, 4))}.get(kind, 1)
        if len(free) < need:
            kind, need = "rotator", 1
        picks = [free.pop(int(rng.integers(len(free)))) for _ in range(need)]
        cid = f"c{i}"
        params = {
            "phase_mod": f"seq={rng.integers(8)}",
            "rotator": f"angle={rng.uniform(-180, 180):.4f}",
            "mode_filter": f"pass={rng.choice(['all', 'up', 'right'])}",
            "splitter": f"n={rng.integers(2, 4)}",
            "combiner": f"n={need}",
        }.get(kind, "")
        lines.append(" ".join(filter(None, [kind, cid, params] + [f"in={p}" for p in picks])))
        n_out = {"coupler2": 2, "pbs": 2}.get(kind, int(params[2:]) if kind == "splitter" else 1)
        free += [cid] if n_out == 1 else [f"{cid}.out_{k + 1}" for k in range(n_out)]
    for k, p in enumerate(free):
        lines.append(f"sink o{k} in={p}")
    body = lines[1:]
    rng.shuffle(body)
    return "\n".join([lines[0]] + body) + "\n"


def random_topological_order(net, rng) -> list[str]:
    pending = {c.id: {r.component for r in c.inputs} for c in net.components}
    order = []
    while pending:
        ready = sorted(cid for cid, deps in pending.items() if not deps)
        pick = ready[int(rng.integers(len(ready)))]
        order.append(pick)
        del pending[pick]
        for deps in pending.values():
            deps.discard(pick)
    return order


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 12))
def test_random_netlists_round_trip(seed, n):
    text = random_netlist(np.random.default_rng(seed), n)
    net = parse_netlist(text)
    assert net.warnings == ()
    assert parse_netlist(pretty_print(net)) == net


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 12))
def test_evaluation_ignores_topological_order(seed, n):
    rng = np.random.default_rng(seed)
    net = parse_netlist(random_netlist(rng, n))
    ref = evaluate_network(net)
    for _ in range(3):
        got = evaluate_network(net, order=random_topological_order(net, rng))
        assert list(got) == list(ref)
        for sid in ref:
            assert got[sid].allclose(ref[sid], atol=0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 10))
def test_networks_are_linear_in_their_sources(seed, n):
    rng = np.random.default_rng(seed)
    net = parse_netlist(random_netlist(rng, n))
    xs = {s: random_field(rng) for s in net.sources}
    ys = {s: random_field(rng) for s in net.sources}
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))

    mixed = {s: superpose(scale(xs[s], a), scale(ys[s], b)) for s in net.sources}
    ex, ey, em = (evaluate_network(net, overrides=o) for o in (xs, ys, mixed))
    for sid in em:
        want = superpose(scale(ex[sid], a), scale(ey[sid], b))
        assert em[sid].allclose(want, atol=1e-10)


def test_bad_order_rejected():
    net = parse_netlist(shipped("product.net"))
    with pytest.raises(ValueError, match="not topological"):
        evaluate_network(net, order=list(reversed(topological_order(net))))
