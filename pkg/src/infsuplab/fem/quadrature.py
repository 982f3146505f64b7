"""Quadrature on the reference triangle with vertices (0,0), (1,0), (0,1)."""

import numpy as np

# Degree-6 exactness covers every matrix integrand (P2 gradients, cubic
# bubble products); analytic-field loads and error norms use a higher rule.
ASSEMBLY_DEGREE = 6
FIELD_DEGREE = 10


def triangle_rule(degree):
    """Collapsed (Duffy) Gauss-Legendre rule, exact for total degree <= degree.

    Returns (points, weights) with points of shape (nq, 2); the weights sum
    to the reference-triangle area 1/2.
    """
    m = (degree + 3) // 2
    x, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    uu, vv = np.meshgrid(u, u, indexing="ij")
    wts = np.outer(wu, wu) * (1.0 - uu)
    pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    return pts, wts.ravel()
