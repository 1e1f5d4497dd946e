"""Edge statistics of spiked Gaussian beta ensembles.

Two independent numerical routes to the same limiting objects:

* high powers of random tridiagonal matrices (``tridiag``, ``semigroup``),
* Feynman-Kac Monte Carlo over reflected Brownian paths (``continuum``, ``fk``),

cross-validated against exact discrete path transforms (``lattice``) and
closed-form expectations (``closedform``).
"""

__version__ = "0.1.0"
