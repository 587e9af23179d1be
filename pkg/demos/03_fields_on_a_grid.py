"""
Distributed resource on a 2-D grid.

A Gaussian blob of resource sits on a 24 x 24 grid. A transition eats
wherever the blob exceeds both the threshold and the uptake rate, and a
linear-kernel W-carrier deposits the firing pattern, shifted one cell to the
right, into a second container on the same grid. Meanwhile the rate rises
with the mean of what has been collected (const-deposit rate control).
The model is built in the DSL, with the kernel written to a triplet file.
"""

#
import tempfile
from pathlib import Path

import numpy as np

from chtw import load, run

n = 24
work = Path(tempfile.mkdtemp())
with open(work / "shift.kernel", "w") as fh:
    for row in range(n):
        for col in range(n - 1):
            fh.write(f"{row * n + col + 1} {row * n + col} 1.0\n")

(work / "grid.chtw").write_text(f"""
space G dims=2 axis=0:1:{n} axis=0:1:{n}
cbrane food space=G m=gauss(center=0.5,0.4,sigma=0.15,amp=10)
cbrane store space=G m=const(0)
tbrane eat space=G r=const(0.5)
hcarrier food -> eat h=const(1)
wcarrier eat -> store op=kernel(shift.kernel)
gamma store -> eat op=constdep(const(0.05),mean)
""")
net = load(work / "grid.chtw")

#
trace = run(net, 40)
food = trace.marks("food").reshape(-1, n, n)
store = trace.marks("store").reshape(-1, n, n)
active = [int(s.firing["eat"].sum()) for s in trace.states[1:]]
print("active cells per step:", active)
print("food left: %.3f of %.3f" % (food[-1].sum(), food[0].sum()))
print("collected: %.3f" % store[-1].sum())
print("final uptake rate: %.4f" % trace.states[-1].rates["eat"][0])

#
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.3))
    for ax, img, title in zip(axes, (food[0], food[-1], store[-1]), ("food k=0", "food k=40", "store k=40")):
        im = ax.imshow(img, origin="lower")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8)
    out = Path(__file__).resolve().parent / "out"
    out.mkdir(exist_ok=True)
    fig.tight_layout()
    fig.savefig(out / "grid_fields.png", dpi=120)
    print("wrote", out / "grid_fields.png")
