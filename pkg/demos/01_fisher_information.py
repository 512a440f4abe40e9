"""
Quantum Fisher information of a qubit family
=============================================

Build a one-parameter qubit family, compute its SLD and Fisher information,
and check that measuring in the SLD eigenbasis extracts all of it.
"""

import numpy as np

from qfiwit import optimal_povm, povm_fisher, qfi, sld_operator
from qfiwit.fisher import Povm
from qfiwit.qmat import SX, SY, SZ

# a qubit with Bloch vector r(theta) = 0.8 (cos theta, sin theta, 0)
theta = 0.4
r = 0.8 * np.array([np.cos(theta), np.sin(theta), 0.0])
dr = 0.8 * np.array([-np.sin(theta), np.cos(theta), 0.0])
rho = 0.5 * (np.eye(2) + r[0] * SX + r[1] * SY + r[2] * SZ)
drho = 0.5 * (dr[0] * SX + dr[1] * SY + dr[2] * SZ)

# for a tangential motion the Fisher information is |dr|^2 = 0.64
res = sld_operator(rho, drho)
print("SLD:\n", np.round(res.sld, 6))
print("qfi            =", res.qfi)

# the SLD eigenbasis is an optimal measurement
povm = optimal_povm(rho, drho)
print("F(optimal)     =", povm_fisher(rho, drho, povm))

# measuring sigma_z sees nothing: its statistics do not depend on theta
z = Povm(((np.eye(2) + SZ) / 2, (np.eye(2) - SZ) / 2))
print("F(sigma_z)     =", povm_fisher(rho, drho, z))

# a pure state: qfi = 4 Var(generator) for rotations exp(-i theta sigma_z / 2)
psi = np.array([1, 1]) / np.sqrt(2)
pure = np.outer(psi, psi.conj())
dpure = -0.5j * (SZ @ pure - pure @ SZ)
print("pure, about z  =", qfi(pure, dpure))
