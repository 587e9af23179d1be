"""
Differential check of the matrix kernel against the per-cell oracle.

The oracle is a loop-by-loop transcription of the firing rule and the
update equations. Both run in 64-bit floats in the same order, so every
snapshot must agree bit for bit.
"""

#
import time

from chtw import oracle_run, random_net, run
from chtw.oracle import first_divergence

start = time.perf_counter()
for seed in range(50):
    net = random_net(seed)
    div = first_divergence(run(net, 20), oracle_run(net, 20))
    if div:
        print("seed", seed, "diverges:", div)
        break
else:
    print("50 random nets x 20 steps agree exactly (%.2fs)" % (time.perf_counter() - start))

#
# A corrupted copy of the kernel is caught at the exact step and cell.
net = random_net(7)
trace = run(net, 10)
c = next(iter(net.cbranes))
trace.states[6].marks[c] = trace.states[6].marks[c].copy()
trace.states[6].marks[c][0] += 1e-12
print("after corruption:", first_divergence(trace, oracle_run(net, 10)))
