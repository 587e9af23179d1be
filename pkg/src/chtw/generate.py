"""Seeded random nets and the four-container reference net.

Random nets are conflict-free: every C-brane feeds at most one T-brane, so
uptake can never exceed the available mark at a firing cell. T-branes can
still join several inputs, and W-carriers and control entries connect
anything to anything.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import (
    Axis,
    CBrane,
    ControlEntry,
    ControlMatrices,
    Field,
    HCarrier,
    Net,
    OperatorSpec,
    Space,
    TBrane,
    WCarrier,
    scalar_space,
)


def _random_space(rng: np.random.Generator, name: str, max_cells: int = 16) -> Space:
    dims = int(rng.integers(1, 3))
    axes = tuple(Axis(0.0, 1.0, int(rng.integers(1, max_cells + 1))) for _ in range(dims))
    return Space(name, axes)


def _random_field(rng, space: Space, lo: float, hi: float) -> Field:
    # a mix of half-integers and arbitrary floats, so exact ties (m == h, m == r) occur
    n = space.size
    coarse = rng.integers(int(2 * lo), int(2 * hi) + 1, size=n) / 2.0
    fine = rng.uniform(lo, hi, size=n)
    return Field(space, np.where(rng.random(n) < 0.5, coarse, fine))


def _random_deposit(rng, inp: Space, out: Space, lo: float, hi: float) -> OperatorSpec:
    if inp == out and rng.random() < 0.6:
        return OperatorSpec.make_gain(float(rng.uniform(lo, hi)))
    mode = "any" if rng.random() < 0.5 else "mean"
    return OperatorSpec.make_const_deposit(_random_field(rng, out, lo, hi), mode)


def random_net(
    seed: int,
    n_c: Optional[int] = None,
    n_t: Optional[int] = None,
    control_density: float = 0.3,
    controlled: bool = True,
) -> Net:
    """Random CHTW(R) net: 2-4 C-branes, 1-3 T-branes, 1-2 dim spaces, <= 16 cells/axis."""
    rng = np.random.default_rng(seed)
    n_c = n_c or int(rng.integers(2, 5))
    n_t = n_t or int(rng.integers(1, min(3, n_c) + 1))
    spaces = [_random_space(rng, f"S{i}") for i in range(int(rng.integers(1, 3)))]
    net = Net(spaces={s.id: s for s in spaces})

    t_space = [spaces[int(rng.integers(len(spaces)))] for _ in range(n_t)]
    c_space = list(t_space) + [spaces[int(rng.integers(len(spaces)))] for _ in range(n_c - n_t)]
    c_ids = [f"c{i}" for i in range(n_c)]
    t_ids = [f"t{j}" for j in range(n_t)]
    for cid, sp in zip(c_ids, c_space):
        net.cbranes[cid] = CBrane(cid, sp, _random_field(rng, sp, 0.0, 10.0))
    for tid, sp in zip(t_ids, t_space):
        net.tbranes[tid] = TBrane(tid, sp, _random_field(rng, sp, 0.0, 3.0))

    # C-brane j < n_t guarantees T-brane j has an input; the rest join at random
    feeds = {c_ids[j]: t_ids[j] for j in range(n_t)}
    for cid, sp in zip(c_ids[n_t:], c_space[n_t:]):
        same = [t for t in t_ids if net.tbranes[t].space == sp]
        if same and rng.random() < 0.6:
            feeds[cid] = same[int(rng.integers(len(same)))]
    for cid in c_ids:
        if cid in feeds:
            sp = net.cbranes[cid].space
            net.hcarriers.append(HCarrier(cid, feeds[cid], _random_field(rng, sp, 0.0, 8.0)))

    for tid in t_ids:
        for cid in c_ids:
            if rng.random() < 0.5:
                op = _random_deposit(rng, net.tbranes[tid].space, net.cbranes[cid].space, 0.0, 3.0)
                net.wcarriers.append(WCarrier(tid, cid, op))

    if controlled:
        targets = [c for c in c_ids if c in feeds]
        for src in c_ids:
            for dst in targets:
                if rng.random() < control_density:
                    op = _random_deposit(rng, net.cbranes[src].space, net.cbranes[dst].space, -0.2, 0.2)
                    net.controls.alpha.append(ControlEntry(src, dst, op))
            for dst in t_ids:
                if rng.random() < control_density:
                    op = _random_deposit(rng, net.cbranes[src].space, net.tbranes[dst].space, -0.2, 0.2)
                    net.controls.gamma.append(ControlEntry(src, dst, op))
    return net


def conserving_net(seed: int) -> Net:
    """Random net whose W-carriers return exactly what each transition takes.

    Each T-brane has one input and one output, both on its own space, a
    constant rate ``r`` and a ``gain(r)`` W-carrier. No rate control.
    """
    rng = np.random.default_rng(seed)
    n_t = int(rng.integers(1, 4))
    n_c = n_t + int(rng.integers(1, 3))
    spaces = [_random_space(rng, f"S{i}") for i in range(int(rng.integers(1, 3)))]
    net = Net(spaces={s.id: s for s in spaces})
    c_ids = [f"c{i}" for i in range(n_c)]
    for cid in c_ids:
        sp = spaces[int(rng.integers(len(spaces)))]
        net.cbranes[cid] = CBrane(cid, sp, _random_field(rng, sp, 0.0, 10.0))
    for j in range(n_t):
        tid = f"t{j}"
        src = c_ids[j]
        sp = net.cbranes[src].space
        same = [c for c in c_ids if net.cbranes[c].space == sp]
        dst = same[int(rng.integers(len(same)))]
        rate = float(rng.uniform(0.1, 3.0))
        net.tbranes[tid] = TBrane(tid, sp, sp.constant(rate))
        net.hcarriers.append(HCarrier(src, tid, _random_field(rng, sp, 0.0, 8.0)))
        net.wcarriers.append(WCarrier(tid, dst, OperatorSpec.make_gain(rate)))
    for src in c_ids:
        for dst in c_ids[:n_t]:
            if rng.random() < 0.3 and net.cbranes[src].space == net.cbranes[dst].space:
                g = float(rng.uniform(-0.2, 0.2))
                net.controls.alpha.append(ControlEntry(src, dst, OperatorSpec.make_gain(g)))
    return net


def figure2_net(
    marks=(11.0, 13.0, 17.0, 19.0),
    rates=(2.0, 3.0),
    threshold: float = 5.0,
    alpha_gain: float = 0.1,
    gamma_gain: float = 0.1,
    w_gain: float = 1.0,
    space: Optional[Space] = None,
) -> Net:
    """Four containers i, j, q, g and transitions p, l.

    H-carriers i->p, j->l, q->l; W-carriers p->j, l->g; threshold control
    i->i, q->j, g->j, g->q; rate control j->p, i->l, q->l. All operators are
    linear gains on one shared space (one cell by default).
    """
    sp = space or scalar_space("X")
    net = Net(spaces={sp.id: sp})
    for cid, m in zip("ijqg", marks):
        net.cbranes[cid] = CBrane(cid, sp, sp.constant(m))
    for tid, r in zip("pl", rates):
        net.tbranes[tid] = TBrane(tid, sp, sp.constant(r))
    for c, t in (("i", "p"), ("j", "l"), ("q", "l")):
        net.hcarriers.append(HCarrier(c, t, sp.constant(threshold)))
    for t, c in (("p", "j"), ("l", "g")):
        net.wcarriers.append(WCarrier(t, c, OperatorSpec.make_gain(w_gain)))
    a = OperatorSpec.make_gain(alpha_gain)
    g = OperatorSpec.make_gain(gamma_gain)
    net.controls = ControlMatrices(
        alpha=[ControlEntry(s, d, a) for s, d in (("i", "i"), ("q", "j"), ("g", "j"), ("g", "q"))],
        gamma=[ControlEntry(s, d, g) for s, d in (("j", "p"), ("i", "l"), ("q", "l"))],
    )
    return net
