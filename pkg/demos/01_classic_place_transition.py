"""
One-cell branes behave like an ordinary place/transition net.

A container c1 holding 5 tokens feeds transition t1 (threshold 2, uptake 1),
which puts 2 tokens back. Each step nets +1 while the transition stays
enabled. A threshold equal to the mark stops everything.
"""

#
from pathlib import Path

from chtw import HCarrier, load, run

here = Path(__file__).resolve().parent
net = load(here / "models" / "selfloop.chtw")

#
trace = run(net, 5)
print("marks of c1:", trace.marks("c1")[:, 0].tolist())
print("firing of t1:", [float(s.firing["t1"][0]) for s in trace.states[1:]])

#
# Same net with the threshold equal to the mark: the firing condition is
# strict (m > h), so the transition never fires.
blocked = load(here / "models" / "selfloop.chtw")
sp = blocked.spaces["X"]
blocked.hcarriers[0] = HCarrier("c1", "t1", sp.constant(5.0))
print("m == h, marks:", run(blocked, 3).marks("c1")[:, 0].tolist())
