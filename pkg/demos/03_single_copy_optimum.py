"""
Best single-qubit input and the shift-parameter bound
======================================================

The threshold of the entanglement test is the largest output Fisher
information a single qubit can reach.  It is found by ascent over pure
states and compared with closed forms.
"""

import numpy as np

from qfiwit.optimize import gstar, gstar_unitary, lemma1_equality_check, shift_model_qfi, variance
from qfiwit import depolarizing_channel, transpose_channel
from qfiwit.qmat import SY, SZ, random_density, random_hermitian

for th in (0.2, 0.5, 0.8):
    d = gstar(depolarizing_channel(), th)
    t = gstar(transpose_channel(), th)
    print(f"theta={th}: DPC g* {d.value:.9f} vs 1/(1-t^2) {1 / (1 - th * th):.9f}; "
          f"TPC g* {t.value:.9f} vs 1/(t(1-t)) {1 / (th * (1 - th)):.9f}")

# the TPC optimum sits on the sigma_y axis
res = gstar(transpose_channel(), 0.3)
print("<sigma_y> of TPC optimum:", np.real(np.trace(res.argmax_state.matrix @ SY)))

# unitary families: g* is the squared spread of the generator spectrum
value, state = gstar_unitary(SZ / 2)
print("g* for exp(i theta sigma_z/2):", value)

# QFI <= 4 Var(A) for shift models; mixed states fall short, pure states saturate
rng = np.random.default_rng(1)
a = random_hermitian(3, rng)
rho = random_density(3, rng)
print("mixed: qfi", shift_model_qfi(rho, a), "4 Var", 4 * variance(rho, a))
print("equality condition holds:", lemma1_equality_check(rho, a).holds)
