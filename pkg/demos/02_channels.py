"""
Parametrized qubit channels and their two-copy extensions
==========================================================

The four example channels of the library act on one qubit.  Applying each
one to both halves of a two-qubit state gives a family whose Fisher
information has a closed form.
"""

import numpy as np

from qfiwit import depolarizing_channel, iid_extend, ptm, qfi, rotation_channel, transpose_channel
from qfiwit.witness import rho_plus

ux = rotation_channel([1, 0, 0])
dpc = depolarizing_channel()
tpc = transpose_channel()

# Pauli transfer matrices: rotation mixes y and z, depolarizing shrinks the Bloch ball
np.set_printoptions(precision=4, suppress=True)
print("PTM of U_x at 0.3:\n", ptm(ux, 0.3))
print("PTM of DPC at 0.6:\n", ptm(dpc, 0.6))

# transposition is positive but not completely positive
print("TPC completely positive:", tpc.completely_positive)

# two copies acting on the Werner-like family rho_lambda
for lam in (0.3, 0.7, 1.0):
    rho = rho_plus(lam).matrix
    two_ux = iid_extend(ux, 2)
    two_dpc = iid_extend(dpc, 2)
    th = 0.8
    q_ux = qfi(two_ux.apply(th, rho), two_ux.derivative(th, rho))
    q_dpc = qfi(two_dpc.apply(th, rho), two_dpc.derivative(th, rho))
    t2 = th * th
    print(f"lambda={lam}: U_x {q_ux:.10f} (8l^2/(1+l) = {8 * lam**2 / (1 + lam):.10f}), "
          f"DPC {q_dpc:.10f} "
          f"(closed form {12 * t2 * lam**2 / ((1 - t2 * lam) * (1 + 3 * t2 * lam)):.10f})")
