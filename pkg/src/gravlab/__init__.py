"""gravlab: a numerical laboratory for gravitationally induced collapse estimates.

Subpackages cover gravitational self-energy of superposed mass configurations,
the collapse-time criterion T = hbar/E_delta, stationary states and time
evolution of the self-gravitating (and electrostatically self-interacting)
wave equation, and a stochastic collapse toy model with an energy ledger.
"""

__version__ = "0.1.0"
