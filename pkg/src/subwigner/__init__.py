"""Joint linear eigenvalue statistics of overlapping Wigner submatrices.

Modules
-------
ensemble     entry laws, seeded Wigner sampling, index-set families, overlap geometry
spectra      symmetric eigensolvers and linear statistics of submatrices
chebfn       rescaled Chebyshev bases, coefficients and semicircle quadrature
theory       limiting covariance by series, contour and kernel routes
freeprob     exact non-crossing-partition oracle for the overlap bilinear form
montecarlo   replicated experiments, z-scores, normality and decoupling checks
config, cli  TOML configuration and the ``subwigner`` command
"""

__version__ = "0.1.0"
