"""
Classifying a retrial queue and certifying its convergence rate
===============================================================

A single server takes Poisson arrivals at rate ``lam``. Customers who find the
server busy join an orbit, and the orbit releases one customer at a time at
the constant rate ``mu0``. The chain is positive recurrent exactly when
``mu * mu0 > lam * (lam + mu0)``.
"""

import numpy as np

from retrialq import Regime, SystemParams, classify, erg_alphas, optimize_rate

###############################################################################
# Three parameter sets, one per regime.

cases = {
    "stable": SystemParams(lam=1.0, mu=3.0, mu0=2.0),
    "critical": SystemParams(lam=1.0, mu=2.0, mu0=1.0),
    "overloaded": SystemParams(lam=2.0, mu=1.0, mu0=1.0),
}
for name, p in cases.items():
    print(f"{name:>10}: mu*mu0 = {p.mu * p.mu0:g}, lam*(lam+mu0) = {p.lam * (p.lam + p.mu0):g} -> {classify(p)}")

###############################################################################
# Stable case: the optimizer searches the weight parameters ``(a, b)`` for the
# fastest certified exponential rate. The three column rates coincide at the
# optimum except the one that never binds.

cert = optimize_rate(cases["stable"])
print(cert.to_json())
print("column rates:", np.round(erg_alphas(cases["stable"], cert.a, cert.b), 6))

###############################################################################
# Overloaded case: the certificate now describes how fast probability drains
# out of any finite set of states.

cert = optimize_rate(cases["overloaded"])
assert cert.regime is Regime.NULL_ERGODIC
print(f"zeta* = {cert.rate:.6f} at a = {cert.a:.5f}, b = {cert.b:.5f}")

###############################################################################
# At the critical boundary neither certificate exists.

try:
    optimize_rate(cases["critical"])
except ValueError as exc:
    print("refused:", exc)
