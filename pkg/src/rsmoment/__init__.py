"""Numerical toolkit for second moments of Rankin-Selberg L-functions.

The package is organised around independently testable layers:

* :mod:`rsmoment.numerics` -- precision contract, deterministic quadrature,
  smooth windows and elementary integral transforms;
* :mod:`rsmoment.special_functions` -- Gamma/zeta/Dirichlet-L evaluators,
  Bessel functions (including purely imaginary order), the dual-cusp kernels
  of the twisted summation formula, and the averaged Bessel identity;
* :mod:`rsmoment.arithmetic` -- Dirichlet characters, twisted Kloosterman
  sums, divisor-type eigenvalues and the quadruple character-sum identity
  with its brute-force oracle;
* :mod:`rsmoment.modular_forms` -- level-one holomorphic Hecke eigenforms,
  harmonic weights and a numerical check of the trace formula;
* :mod:`rsmoment.afe` -- the uniform approximate functional equation with
  corrected weight function, for degree-2 and degree-8 instances;
* :mod:`rsmoment.voronoi` -- twisted summation formula, Estermann-type
  series and Hankel transforms;
* :mod:`rsmoment.moments` -- the desk-scale second-moment harness and the
  asymptotic main-term predictions;
* :mod:`rsmoment.cli` -- command-line front end.
"""

from rsmoment.numerics import PrecisionCtx, SmoothWindow, bump_window

__all__ = ["PrecisionCtx", "SmoothWindow", "bump_window"]
__version__ = "0.1.0"
