"""Synchronous stepping engine in matrix form.

One step of a CHTW(R) net, in this fixed order:

1. rates      r_t(k) = max(0, r_t(k-1) + gamma_1(m) + gamma_2(m) + ...)
2. thresholds h_ct(k) = h_ct(k-1) + alpha_1(m) + alpha_2(m) + ...  (per target C-brane,
   broadcast to all of its H-carriers)
3. firing     d_t = ColProd over connected inputs c of Theta(m_c - r_t) * Theta(m_c - h_ct)
4. uptake     m_c -= sum_t S_H[c, t] * r_t * d_t
5. deposit    m_c += sum_t S_W[t, c] * w_tc(d_t)

Steps 1 and 2 only run in ``chtwr`` mode. All sums run in declaration order.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import BinaryField, Field, ModelError, Net, Space, connectivity, errors, validate
from .operators import OperatorInstance, bind

log = logging.getLogger(__name__)

Key = Tuple[str, str]


class NumericalFault(ArithmeticError):
    """A NaN or infinity showed up while stepping."""

    def __init__(self, step: int, field: str):
        self.step = step
        self.field = field
        super().__init__(f"non-finite value in {field} at step {step}")


@dataclass
class SimState:
    k: int
    marks: Dict[str, np.ndarray]
    rates: Dict[str, np.ndarray]
    thresholds: Dict[Key, np.ndarray]
    firing: Dict[str, np.ndarray]
    clamped: int = 0

    def copy(self) -> SimState:
        return SimState(
            self.k,
            {k: v.copy() for k, v in self.marks.items()},
            {k: v.copy() for k, v in self.rates.items()},
            {k: v.copy() for k, v in self.thresholds.items()},
            {k: v.copy() for k, v in self.firing.items()},
            self.clamped,
        )

    def fields(self) -> Dict[str, np.ndarray]:
        """Flat ``name -> values`` view with stable ordering: m, r, h, d."""
        out = {f"m/{c}": v for c, v in self.marks.items()}
        out.update({f"r/{t}": v for t, v in self.rates.items()})
        out.update({f"h/{c}/{t}": v for (c, t), v in self.thresholds.items()})
        out.update({f"d/{t}": v for t, v in self.firing.items()})
        return out


def initial_state(net: Net) -> SimState:
    return SimState(
        0,
        {c: b.mark.values.copy() for c, b in net.cbranes.items()},
        {t: b.rate.values.copy() for t, b in net.tbranes.items()},
        {(h.source, h.target): h.threshold.values.copy() for h in _ordered_h(net)},
        {t: np.zeros(b.space.size) for t, b in net.tbranes.items()},
    )


def _ordered_h(net: Net):
    """H-carriers ordered by (T index, C index)."""
    ci = {c: n for n, c in enumerate(net.cbranes)}
    ti = {t: n for n, t in enumerate(net.tbranes)}
    return sorted(net.hcarriers, key=lambda h: (ti[h.target], ci[h.source]))


@dataclass
class Plan:
    """A validated net with operators bound and index structures precomputed."""

    net: Net
    s_h: np.ndarray
    s_w: np.ndarray
    c_ids: List[str]
    t_ids: List[str]
    spaces_c: Dict[str, Space]
    spaces_t: Dict[str, Space]
    deposits: Dict[str, List[Tuple[str, OperatorInstance]]] = field(default_factory=dict)
    alpha: List[Tuple[str, str, OperatorInstance]] = field(default_factory=list)
    gamma: List[Tuple[str, str, OperatorInstance]] = field(default_factory=list)

    @property
    def controlled(self) -> bool:
        return self.net.mode == "chtwr"

    def inputs(self, t: str) -> List[str]:
        j = self.t_ids.index(t)
        return [c for i, c in enumerate(self.c_ids) if self.s_h[i, j]]


def compile_net(net: Net) -> Plan:
    errs = errors(validate(net))
    if errs:
        raise ModelError(errs)
    s_h, s_w = connectivity(net)
    c_ids, t_ids = net.c_ids, net.t_ids
    plan = Plan(
        net, s_h, s_w, c_ids, t_ids,
        {c: b.space for c, b in net.cbranes.items()},
        {t: b.space for t, b in net.tbranes.items()},
    )
    wmap = {(w.source, w.target): w for w in net.wcarriers}
    for c in c_ids:
        plan.deposits[c] = [
            (t, bind(wmap[t, c].op, plan.spaces_t[t], plan.spaces_c[c]))
            for t in t_ids if (t, c) in wmap
        ]
    for e in net.controls.alpha:
        op = bind(e.op, plan.spaces_c[e.source], plan.spaces_c[e.target])
        plan.alpha.append((e.source, e.target, op))
    for e in net.controls.gamma:
        op = bind(e.op, plan.spaces_c[e.source], plan.spaces_t[e.target])
        plan.gamma.append((e.source, e.target, op))
    return plan


# --- pointwise building blocks ----------------------------------------------


def heaviside(f: Field) -> BinaryField:
    """Theta(x) = 1 for x > 0, else 0 (so Theta(0) = 0)."""
    return BinaryField(f.space, (f.values > 0.0).astype(np.float64))


def partial_firing(m: Field, h: Field, r: Field) -> BinaryField:
    if not (m.space == h.space == r.space):
        raise ValueError("partial firing needs m, h and r on one space")
    return BinaryField(m.space, _partial(m.values, h.values, r.values))


def _partial(m: np.ndarray, h: np.ndarray, r: np.ndarray) -> np.ndarray:
    return (m - h > 0.0) & (m - r > 0.0)


def integral_firing(
    partials: Dict[Key, np.ndarray], s_h: np.ndarray, t: int,
    c_ids: Sequence[str], t_ids: Sequence[str], space: Space,
) -> np.ndarray:
    """Column product of the partial firings over *connected* rows only.

    A T-brane without inputs is dead: all zeros, not the empty product.
    """
    rows = np.flatnonzero(s_h[:, t])
    if rows.size == 0:
        return np.zeros(space.size)
    d = np.ones(space.size, dtype=bool)
    for i in rows:
        d &= partials[c_ids[i], t_ids[t]].astype(bool)
    return d.astype(np.float64)


def rate_excess(plan: Plan, marks, rates) -> Dict[Key, np.ndarray]:
    """delta(k): m_c - r_t at connected (c, t); absent elsewhere."""
    return {
        (c, t): marks[c] - rates[t]
        for j, t in enumerate(plan.t_ids)
        for i, c in enumerate(plan.c_ids) if plan.s_h[i, j]
    }


def threshold_excess(
    plan: Plan, marks, thresholds, increments: Dict[str, List[np.ndarray]],
) -> Tuple[Dict[Key, np.ndarray], Dict[Key, np.ndarray]]:
    """Delta(k) and the committed thresholds H(k).

    ``increments[c]`` are the alpha outputs targeting C-brane ``c``, added
    to each of its H-carrier thresholds left to right.
    """
    new_h = {}
    for (c, t), h in thresholds.items():
        for inc in increments.get(c, ()):
            h = h + inc
        new_h[c, t] = h
    excess = {key: marks[key[0]] - h for key, h in new_h.items()}
    return excess, new_h


def rate_contributions(plan: Plan, marks) -> Dict[str, List[np.ndarray]]:
    out: Dict[str, List[np.ndarray]] = {}
    for src, dst, op in plan.gamma:
        out.setdefault(dst, []).append(op(marks[src]))
    return out


def threshold_increments(plan: Plan, marks) -> Dict[str, List[np.ndarray]]:
    out: Dict[str, List[np.ndarray]] = {}
    for src, dst, op in plan.alpha:
        out.setdefault(dst, []).append(op(marks[src]))
    return out


def update_rates(rates, contributions: Dict[str, List[np.ndarray]]):
    """Return ``(new_rates, clamp_count)``; rates are clamped at zero."""
    new = {}
    clamped = 0
    for t, r in rates.items():
        terms = contributions.get(t)
        if terms:
            for term in terms:
                r = r + term
            neg = r < 0.0
            n = int(np.count_nonzero(neg))
            if n:
                clamped += n
                r = np.where(neg, 0.0, r)
        new[t] = r
    return new, clamped


def _check(step: int, prefix: str, values: Dict) -> None:
    for key, v in values.items():
        if not np.all(np.isfinite(v)):
            name = "/".join(key) if isinstance(key, tuple) else key
            raise NumericalFault(step, f"{prefix}/{name}")


def step(state: SimState, net: Net, plan: Optional[Plan] = None) -> SimState:
    """Advance ``state`` by one step and return the new state."""
    plan = plan or compile_net(net)
    # overflow is reported as NumericalFault, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        return _step(state, plan)


def _step(state: SimState, plan: Plan) -> SimState:
    k = state.k
    marks = state.marks
    rates, thresholds, clamped = state.rates, state.thresholds, 0

    increments: Dict[str, List[np.ndarray]] = {}
    if plan.controlled:
        rates, clamped = update_rates(rates, rate_contributions(plan, marks))
        _check(k, "r", rates)
        increments = threshold_increments(plan, marks)
    over_threshold, thresholds = threshold_excess(plan, marks, thresholds, increments)
    _check(k, "h", thresholds)
    over_rate = rate_excess(plan, marks, rates)

    # Hadamard product of the two Heaviside matrices
    partials = {
        key: (over_rate[key] > 0.0) & (over_threshold[key] > 0.0) for key in over_rate
    }
    firing = {
        t: integral_firing(partials, plan.s_h, j, plan.c_ids, plan.t_ids, plan.spaces_t[t])
        for j, t in enumerate(plan.t_ids)
    }

    new_marks = {}
    for i, c in enumerate(plan.c_ids):
        uptake = np.zeros_like(marks[c])
        for j, t in enumerate(plan.t_ids):
            if plan.s_h[i, j]:
                uptake = uptake + rates[t] * firing[t]
        deposit = np.zeros_like(marks[c])
        for t, op in plan.deposits[c]:
            deposit = deposit + op(firing[t])
        m = marks[c] - uptake + deposit
        new_marks[c] = m
    _check(k, "m", new_marks)
    return SimState(k + 1, new_marks, dict(rates), dict(thresholds), firing, clamped)


@dataclass
class Trace:
    c_ids: List[str]
    t_ids: List[str]
    h_keys: List[Key]
    states: List[SimState]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def clamped(self) -> int:
        """Total number of rate cells clamped at zero over the run."""
        return sum(s.clamped for s in self.states)

    def marks(self, c: str) -> np.ndarray:
        """Array of shape (steps + 1, cells) for C-brane ``c``."""
        return np.stack([s.marks[c] for s in self.states])


def with_mode(net: Net, mode: Optional[str]) -> Net:
    return net if mode is None or mode == net.mode else dataclasses.replace(net, mode=mode)


def run(net: Net, steps: int, mode: Optional[str] = None) -> Trace:
    """Run ``steps`` synchronous steps from the net's initial state.

    The returned trace holds ``steps + 1`` snapshots (index 0 is the
    initial state). Raises :class:`NumericalFault` naming the failing step.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    net = with_mode(net, mode)
    plan = compile_net(net)
    state = initial_state(net)
    states = [state]
    for _ in range(steps):
        state = step(state, net, plan)
        if state.clamped:
            log.debug("step %d: %d rate cells clamped at 0", state.k - 1, state.clamped)
        states.append(state)
    clamped = sum(s.clamped for s in states)
    if clamped:
        log.info("%d rate cells clamped at 0 over %d steps", clamped, steps)
    return Trace(plan.c_ids, plan.t_ids, list(state.thresholds), states)
