"""
Resource control on the four-container net.

Containers i, j, q, g and transitions p, l. Thresholds of i, j, q and rates
of p, l are pushed around by the marks of other containers through linear
gains. We print the connectivity and control patterns, take one step by
hand-checkable numbers, and then compare a long run with and without
control (mode chtwr vs chtw).
"""

#
from pathlib import Path

import numpy as np

from chtw import connectivity, load, run
from chtw.model import control_patterns

here = Path(__file__).resolve().parent
net = load(here / "models" / "figure2.chtw")

#
s_h, s_w = connectivity(net)
a, g = control_patterns(net)
print("C -> T connectivity (rows i j q g, cols p l)\n", s_h)
print("T -> C connectivity\n", s_w)
print("threshold control pattern (source row, target col)\n", a)
print("rate control pattern\n", g)

#
trace = run(net, 1)
s1 = trace.states[1]
print("r(1):", {t: float(v[0]) for t, v in s1.rates.items()})
print("H(1):", {f"{c}->{t}": float(v[0]) for (c, t), v in s1.thresholds.items()})
print("m(1):", {c: float(v[0]) for c, v in s1.marks.items()})

#
steps = 30
controlled = run(net, steps)
fixed = run(net, steps, mode="chtw")
for c in net.cbranes:
    print(f"{c}: controlled {controlled.marks(c)[-1, 0]:8.3f}   fixed {fixed.marks(c)[-1, 0]:8.3f}")

#
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    k = np.arange(steps + 1)
    for ax, tr, title in ((axes[0], controlled, "chtwr"), (axes[1], fixed, "chtw")):
        for c in net.cbranes:
            ax.plot(k, tr.marks(c)[:, 0], label=c)
        ax.set_title(title)
        ax.set_xlabel("step")
    axes[0].set_ylabel("mark")
    axes[0].legend()
    out = here / "out"
    out.mkdir(exist_ok=True)
    fig.tight_layout()
    fig.savefig(out / "resource_control.png", dpi=120)
    print("wrote", out / "resource_control.png")
