"""
Fisher information from divergences
====================================

The Fisher information is the curvature of any f-divergence between nearby
outcome distributions.  Shrinking the step recovers it with first-order
error, and Richardson extrapolation removes that error.
"""

import numpy as np

from qfiwit import depolarizing_channel, optimal_povm, povm_fisher, qfi
from qfiwit.fisher import divergence_curvature, f_divergence, fisher_from_divergence

dpc = depolarizing_channel()
th = 0.6
rho0 = np.diag([1.0, 0.0])
out, dout = dpc.apply(th, rho0), dpc.derivative(th, rho0)
povm = optimal_povm(out, dout)
p0 = povm.probabilities(out)
print("qfi:", qfi(out, dout), " classical Fisher of the SLD measurement:", povm_fisher(out, dout, povm))

for kind, alpha in (("relative-entropy", None), ("hellinger", None), ("renyi", 1.5)):
    def curve(t):
        return f_divergence(p0, povm.probabilities(dpc.apply(t, rho0)), kind, alpha)

    ladder = fisher_from_divergence(curve, th, 0.05, curvature=divergence_curvature(kind, alpha),
                                    levels=5)
    print(f"{kind:17s} forward {np.round(ladder.forward, 6)}  Richardson {ladder.richardson():.6f}")
