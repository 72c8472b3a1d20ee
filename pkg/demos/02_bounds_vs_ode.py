"""
Certified bounds against the forward Kolmogorov solution
========================================================

The truncated forward equation is integrated numerically and compared with
the certified bounds in both regimes.
"""

import numpy as np

from retrialq import (SystemParams, erg_bound, l1_distance, null_bound, optimize_rate,
                      point_mass, stationary, transient)

###############################################################################
# Stable queue, started empty. The bound on ``||p(t) - pi||_1`` decays at the
# certified rate; the observed distance decays somewhat faster.

p = SystemParams(1.0, 3.0, 2.0)
cert = optimize_rate(p)
pi = stationary(p)
M = pi.size
times = np.arange(0, 51, 5.0)
p0 = point_mass(M, 1)
snaps = transient(p, p0, times, M=M)
bound = erg_bound(p, cert, p0, pi, times).value
print("    t   observed      bound")
for s, b in zip(snaps, bound):
    print(f"{s.t:5.0f}  {l1_distance(s, pi):.3e}  {b:.3e}")

dist = np.array([l1_distance(s, pi) for s in snaps])
late = times >= 10
slope = np.polyfit(times[late], np.log(dist[late]), 1)[0]
print(f"fitted decay rate {-slope:.4f}, certified {cert.rate:.4f}")

###############################################################################
# Overloaded queue, started with ten customers in orbit (state 21). The
# probability of the lowest ``N`` states is bounded by a decaying exponential.

p = SystemParams(2.0, 1.0, 1.0)
cert = optimize_rate(p)
snaps = transient(p, point_mass(400, 21), np.arange(0, 41, 10.0), M=400)
for N in (5, 10, 15):
    worst = min(null_bound(p, cert, 21, N, s.t) - s.probs[:N].sum() for s in snaps)
    print(f"N = {N:2d}: smallest slack {worst:.3e}")
