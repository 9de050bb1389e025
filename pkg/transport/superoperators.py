"""
Current and activity superoperators of a bath-coupled qubit.

  I_j rho = gamma_j^+ sigma_j^+ rho sigma_j^- - gamma_j^- sigma_j^- rho sigma_j^+
  A_j rho = gamma_j^+ sigma_j^+ rho sigma_j^- + gamma_j^- sigma_j^- rho sigma_j^+

A positive current means particles entering the qubit from its bath.
"""

from lindblad.superoperators import Superoperator, SuperoperatorTag, jump_superoperator


def _jump_pair(qubit, config):
    plus, minus = config.rates()
    gain = plus[qubit] * jump_superoperator(qubit, +1, config).matrix
    loss = minus[qubit] * jump_superoperator(qubit, -1, config).matrix
    return gain, loss


def current_superoperator(qubit, config):
    gain, loss = _jump_pair(qubit, config)
    return Superoperator(gain - loss, SuperoperatorTag.CURRENT, qubit)


def activity_superoperator(qubit, config):
    gain, loss = _jump_pair(qubit, config)
    return Superoperator(gain + loss, SuperoperatorTag.ACTIVITY, qubit)
