"""Brute-force reference semantics, one cell at a time.

Nothing here touches :mod:`chtw.kernel` or :mod:`chtw.operators`: firing
conditions, operator evaluation and bookkeeping are re-derived with plain
Python floats and loops. Agreement with the kernel is therefore evidence,
not a tautology. Evaluation and summation order mirror the kernel exactly
(declaration order everywhere), so the two must agree bit for bit.
"""

import math

import numpy as np

from .model import OpKind

MAX_CBRANES = 8
MAX_TBRANES = 8
MAX_CELLS = 4096


class OracleLimitError(ValueError):
    pass


def check_limits(net):
    if len(net.cbranes) > MAX_CBRANES or len(net.tbranes) > MAX_TBRANES:
        raise OracleLimitError(
            f"oracle handles at most {MAX_CBRANES} C-branes and {MAX_TBRANES} T-branes"
        )
    for space in net.spaces.values():
        if space.size > MAX_CELLS:
            raise OracleLimitError(f"space {space.id} has more than {MAX_CELLS} cells")


def initial_state(net):
    """State as a dict of plain lists: k, m, r, h, d."""
    order = {t: n for n, t in enumerate(net.tbranes)}
    corder = {c: n for n, c in enumerate(net.cbranes)}
    hs = sorted(net.hcarriers, key=lambda h: (order[h.target], corder[h.source]))
    return {
        "k": 0,
        "m": {c: b.mark.values.tolist() for c, b in net.cbranes.items()},
        "r": {t: b.rate.values.tolist() for t, b in net.tbranes.items()},
        "h": {(h.source, h.target): h.threshold.values.tolist() for h in hs},
        "d": {t: [0.0] * b.space.size for t, b in net.tbranes.items()},
    }


def evaluate(op, x, out_size):
    """Evaluate an operator spec on a list of floats."""
    if op.kind is OpKind.GAIN:
        return [op.gain * v for v in x]
    if op.kind is OpKind.CONST_DEPOSIT:
        c = op.deposit.values.tolist()
        if op.mode == "any":
            active = False
            for v in x:
                if v > 0.0:
                    active = True
                    break
            return list(c) if active else [0.0] * len(c)
        scale = math.fsum(x) / len(x)
        return [cv * scale for cv in c]
    rows = [[] for _ in range(out_size)]
    for r, col, v in sorted(op.triplets):
        rows[r].append((col, v))
    out = []
    for entries in rows:
        total = 0.0
        for col, v in entries:
            total += v * x[col]
        out.append(total)
    return out


def oracle_step(state, net):
    check_limits(net)
    m = state["m"]
    r = {t: list(v) for t, v in state["r"].items()}
    h = {key: list(v) for key, v in state["h"].items()}

    if net.mode == "chtwr":
        # rates: previous value plus every gamma targeting the T-brane, then clamp
        for t in net.tbranes:
            touched = False
            for e in net.controls.gamma:
                if e.target != t:
                    continue
                touched = True
                out = evaluate(e.op, m[e.source], len(r[t]))
                for x in range(len(r[t])):
                    r[t][x] += out[x]
            if touched:
                for x in range(len(r[t])):
                    if r[t][x] < 0.0:
                        r[t][x] = 0.0
        # thresholds: every alpha targeting C-brane j raises all thresholds of j
        for e in net.controls.alpha:
            out = evaluate(e.op, m[e.source], len(m[e.target]))
            for (c, t), hv in h.items():
                if c != e.target:
                    continue
                for x in range(len(hv)):
                    hv[x] += out[x]

    d = {}
    for t, tb in net.tbranes.items():
        inputs = [c for c in net.cbranes if (c, t) in h]
        fire = []
        for x in range(tb.space.size):
            if not inputs:
                fire.append(0.0)
                continue
            ok = True
            for c in inputs:
                if not (m[c][x] > h[c, t][x] and m[c][x] > r[t][x]):
                    ok = False
            fire.append(1.0 if ok else 0.0)
        d[t] = fire

    new_m = {}
    for c, cb in net.cbranes.items():
        n = cb.space.size
        taken = [0.0] * n
        given = [0.0] * n
        for t in net.tbranes:
            if (c, t) in h:
                for x in range(n):
                    taken[x] += r[t][x] * d[t][x]
        for t in net.tbranes:
            for w in net.wcarriers:
                if w.source == t and w.target == c:
                    out = evaluate(w.op, d[t], n)
                    for x in range(n):
                        given[x] += out[x]
        new_m[c] = [m[c][x] - taken[x] + given[x] for x in range(n)]

    for group in (r, h, new_m):
        for key, vals in group.items():
            for v in vals:
                if not math.isfinite(v):
                    raise ArithmeticError(f"non-finite value in {key} at step {state['k']}")
    return {"k": state["k"] + 1, "m": new_m, "r": r, "h": h, "d": d}


def oracle_run(net, steps):
    state = initial_state(net)
    states = [state]
    for _ in range(steps):
        state = oracle_step(state, net)
        states.append(state)
    return states


def _bits(values):
    return np.asarray(values, dtype=np.float64).view(np.uint64)


def first_divergence(trace, states):
    """Compare a kernel trace with oracle states bit for bit.

    Returns ``None`` when identical, else ``(step, field, cell, kernel, oracle)``.
    """
    if len(trace.states) != len(states):
        return (min(len(trace.states), len(states)), "<length>", -1, None, None)
    groups = (("m", "marks"), ("r", "rates"), ("h", "thresholds"), ("d", "firing"))
    for ks, os_ in zip(trace.states, states):
        for short, attr in groups:
            kernel_group = getattr(ks, attr)
            for key, ovals in os_[short].items():
                kvals = kernel_group[key]
                kb, ob = _bits(kvals), _bits(ovals)
                if kb.shape != ob.shape or (kb != ob).any():
                    cell = int((kb != ob).argmax()) if kb.shape == ob.shape else -1
                    name = "/".join((short,) + (key if isinstance(key, tuple) else (key,)))
                    return (os_["k"], name, cell, float(kvals[cell]), ovals[cell])
    return None
