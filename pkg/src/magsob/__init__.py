"""Symmetry-sector infima of magnetic Rayleigh quotients at the critical exponent.

Modules
-------
fields      biradial and radial grids, discrete fields, integration
potentials  magnetic and electric potentials, flux, curl, gauges
quadform    discrete quadratic form, Rayleigh quotient, Hardy constants
bubbles     bubbles, multi-bump test functions, interaction integrals
minimize    sector minimization and the symmetry breaking chain
cli         configuration driven runs
"""

__version__ = "0.1.0"
