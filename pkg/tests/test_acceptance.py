"""Exit criteria. Each test prints one ``PASS``/``FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import time

import numpy as np
import pytest

from chtw import cli
from chtw.generate import conserving_net, figure2_net, random_net
from chtw.kernel import initial_state, run, step
from chtw.model import Axis, CBrane, Field, HCarrier, Net, Space, TBrane, connectivity, control_patterns
from chtw.oracle import first_divergence, oracle_run
from chtw.parser import loads, save, serialize

from conftest import MODELS

N_ORACLE_NETS = 100
N_STEPS = 20


@pytest.fixture
def report(capsys):
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return _report


@pytest.fixture(scope="module")
def oracle_runs():
    start = time.perf_counter()
    runs = []
    for seed in range(N_ORACLE_NETS):
        net = random_net(seed)
        runs.append((seed, net, run(net, N_STEPS), oracle_run(net, N_STEPS)))
    return runs, time.perf_counter() - start


def _bits_equal(a, b):
    return all(v.tobytes() == b.fields()[k].tobytes() for k, v in a.fields().items())


def test_c1_oracle_equivalence(oracle_runs, report):
    runs, elapsed = oracle_runs
    bad = [(seed, d) for seed, _, trace, states in runs if (d := first_divergence(trace, states))]
    sizes = [(len(n.cbranes), len(n.tbranes)) for _, n, _, _ in runs]
    assert all(2 <= c <= 4 and 1 <= t <= 3 for c, t in sizes)
    report(
        1, not bad and elapsed < 60,
        f"{N_ORACLE_NETS} random nets x {N_STEPS} steps, {len(bad)} divergent, {elapsed:.1f}s"
        + (f", first: {bad[0]}" if bad else ""),
    )


def test_c2_figure2_golden(report):
    net = figure2_net()
    s_h, s_w = connectivity(net)
    structure_ok = (
        s_h.tolist() == [[1, 0], [0, 1], [0, 1], [0, 0]]
        and s_w.tolist() == [[0, 1, 0, 0], [0, 0, 0, 1]]
    )
    # same formula on a 2x3 grid of constant prime fields, several steps
    grid = Space("G", (Axis(0, 1, 2), Axis(0, 1, 3)))
    trace = run(figure2_net(space=grid), 5)
    g = 0.1
    ulps = 0
    for prev, cur in zip(trace.states, trace.states[1:]):
        m = prev.marks
        r_p = prev.rates["p"] + g * m["j"]
        r_l = prev.rates["l"] + g * m["i"] + g * m["q"]
        ulps += int(np.count_nonzero(cur.rates["p"] != r_p))
        ulps += int(np.count_nonzero(cur.rates["l"] != r_l))
    first = trace.states[1].rates
    report(
        2, structure_ok and ulps == 0 and first["p"][0] == 3.3 and first["l"][0] == 5.8,
        f"S_H/S_W exact={structure_ok}, rate cells off by >0 ulp: {ulps}, "
        f"r(1)=({float(first['p'][0])!r}, {float(first['l'][0])!r})",
    )


def test_c3_stationary_reduction(report):
    mismatched = []
    for seed in range(25):
        net = random_net(seed, controlled=False)
        a, b = run(net, N_STEPS, mode="chtwr"), run(net, N_STEPS, mode="chtw")
        if not all(_bits_equal(x, y) for x, y in zip(a.states, b.states)):
            mismatched.append(seed)
    report(3, not mismatched, f"25 nets, chtwr with empty controls vs chtw, mismatched: {mismatched}")


def test_c4_nonnegative_marks(oracle_runs, report):
    runs, _ = oracle_runs
    worst = min(
        float(v.min()) for _, _, trace, _ in runs for s in trace.states for v in s.marks.values()
    )
    report(4, worst >= 0.0, f"minimum mark over {N_ORACLE_NETS} nets x {N_STEPS} steps = {worst!r}")


def test_c5_conservation(report):
    worst, fired = 0.0, 0
    for seed in range(30):
        trace = run(conserving_net(seed), N_STEPS)
        totals = [sum(float(np.sum(v)) for v in s.marks.values()) for s in trace.states]
        worst = max(worst, max(abs(b - a) for a, b in zip(totals, totals[1:])))
        fired += sum(int(v.sum()) for s in trace.states for v in s.firing.values())
    report(5, worst <= 1e-9 and fired > 0, f"30 nets, max per-step drift {worst:.2e}, {fired} firings")


def _tie_net(rng):
    sp = Space("G", (Axis(0, 1, 4), Axis(0, 1, 4)))
    m = rng.integers(4, 20, size=16).astype(float)
    h = m - rng.uniform(0.5, 2.0, 16)
    r = m - rng.uniform(0.5, 2.0, 16)
    h_ties = rng.choice(16, 3, replace=False)
    r_ties = rng.choice(np.setdiff1d(np.arange(16), h_ties), 3, replace=False)
    h[h_ties] = m[h_ties]
    r[r_ties] = m[r_ties]
    # a second, always-willing input joins the transition
    net = Net(spaces={"G": sp}, mode="chtw")
    net.cbranes["a"] = CBrane("a", sp, Field(sp, m))
    net.cbranes["b"] = CBrane("b", sp, sp.constant(100.0))
    net.tbranes["t"] = TBrane("t", sp, Field(sp, r))
    net.hcarriers.append(HCarrier("a", "t", Field(sp, h)))
    net.hcarriers.append(HCarrier("b", "t", sp.zeros()))
    expected = np.ones(16)
    expected[h_ties] = 0.0
    expected[r_ties] = 0.0
    return net, expected


def test_c6_boundary_strictness(report):
    rng = np.random.default_rng(2024)
    wrong = 0
    for _ in range(20):
        net, expected = _tie_net(rng)
        d = step(initial_state(net), net).firing["t"]
        d_oracle = np.array(oracle_run(net, 1)[1]["d"]["t"])
        wrong += int(np.count_nonzero(d != expected)) + int(np.count_nonzero(d_oracle != expected))
    report(6, wrong == 0, f"20 nets with m == h / m == r at chosen cells, wrong cells: {wrong}")


def test_c7_parser_roundtrip(tmp_path, figure2_text, report):
    drift = []
    texts = [("figure2", figure2_text, MODELS)]
    for seed in range(49):
        d = tmp_path / f"net{seed}"
        d.mkdir()
        save(random_net(seed), d / "model.chtw")
        texts.append((f"seed{seed}", (d / "model.chtw").read_text(), d))
    for name, text, base in texts:
        first, diags1 = loads(text, base)
        again_dir = tmp_path / f"again-{name}"
        again_dir.mkdir()
        second, diags2 = loads(serialize(first, again_dir), again_dir)
        same = (
            first == second
            and [(d.level, d.message) for d in diags1] == [(d.level, d.message) for d in diags2]
            and not any(d.is_error for d in diags1)
            and all(
                np.array_equal(a, b)
                for a, b in zip(connectivity(first) + control_patterns(first),
                                connectivity(second) + control_patterns(second))
            )
        )
        if not same:
            drift.append(name)
    report(7, not drift and len(texts) == 50, f"{len(texts)} models round-tripped, drift: {drift}")


def test_c8_determinism(tmp_path, report):
    save(random_net(42), tmp_path / "rand.chtw")
    models = [MODELS / "figure2.chtw", tmp_path / "rand.chtw"]
    differing = []
    for model in models:
        for fmt in ("csv", "bin"):
            outs = []
            for n in range(2):
                out = tmp_path / f"{model.stem}-{fmt}-{n}"
                assert cli.main(["run", str(model), "--steps", "10", "--out", str(out), "--format", fmt]) == 0
                outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            if outs[0] != outs[1]:
                differing.append(f"{model.name}/{fmt}")
    report(8, not differing, f"repeated cmd_run on {len(models)} models x 2 formats, differing: {differing}")
