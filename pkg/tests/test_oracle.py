import ast
from pathlib import Path

import numpy as np
import pytest

import chtw.oracle as oracle_mod
from chtw.generate import figure2_net, random_net
from chtw.kernel import run
from chtw.model import Axis, CBrane, ControlMatrices, Net, Space, TBrane, connectivity, scalar_space
from chtw.oracle import OracleLimitError, first_divergence, oracle_run, oracle_step

from test_kernel import self_loop


def test_self_loop_single_step():
    net = self_loop()
    s = oracle_step(oracle_mod.initial_state(net), net)
    assert s["m"]["c1"] == [6.0]
    assert s["d"]["t1"] == [1.0]


@pytest.mark.parametrize("marks", [(11.0, 13.0, 17.0, 19.0), (3.0, 9.0, 2.0, 0.0), (6.0, 6.0, 6.0, 6.0)])
def test_stationary_matrix_equation(marks):
    # m(k+1) = m(k) - S_H diag(r) d(k) + W^T d(k) on the four-container net, A = Gamma = 0
    net = figure2_net(marks=marks, w_gain=1.5)
    net.controls = ControlMatrices()
    s_h, _ = connectivity(net)
    w = np.array([[0, 1.5, 0, 0], [0, 0, 0, 1.5]])
    r = np.array([2.0, 3.0])
    states = oracle_run(net, 6)
    for before, after in zip(states, states[1:]):
        m = np.array([before["m"][c][0] for c in "ijqg"])
        d = np.array([after["d"][t][0] for t in "pl"])
        expected = m - s_h @ np.diag(r) @ d + w.T @ d
        got = [after["m"][c][0] for c in "ijqg"]
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_limits():
    big = Space("B", (Axis(0, 1, 65), Axis(0, 1, 64)))
    net = Net(spaces={"B": big})
    net.cbranes["c"] = CBrane("c", big, big.zeros())
    with pytest.raises(OracleLimitError):
        oracle_step(oracle_mod.initial_state(net), net)
    sp = scalar_space()
    many = Net(spaces={"S": sp})
    for n in range(9):
        many.tbranes[f"t{n}"] = TBrane(f"t{n}", sp, sp.zeros())
    with pytest.raises(OracleLimitError):
        oracle_mod.check_limits(many)


def test_oracle_shares_no_code_with_kernel():
    tree = ast.parse(Path(oracle_mod.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module)
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert imported <= {"math", "numpy", "model"}


def test_first_divergence_reports_location():
    net = random_net(1)
    trace = run(net, 3)
    states = oracle_run(net, 3)
    assert first_divergence(trace, states) is None
    c = next(iter(net.cbranes))
    states[2]["m"][c][0] += 1.0
    step_, name, cell, kval, oval = first_divergence(trace, states)
    assert (step_, name, cell) == (2, f"m/{c}", 0)
    assert oval == kval + 1.0


@pytest.mark.parametrize("seed", range(100, 110))
def test_matches_kernel(seed):
    net = random_net(seed)
    assert first_divergence(run(net, 20), oracle_run(net, 20)) is None
