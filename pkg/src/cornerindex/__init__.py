"""Discrete Hodge theory on planar polygonal domains with corners.

Modules: ``polygeom`` (domains, angles, corner rounding), ``meshgen``
(triangulations), ``deccomplex`` (Whitney forms and Hodge Laplacians),
``spectral`` (kernel counting, index and gap studies), ``oracles`` (closed
forms and quadrature), ``cornermap`` (piecewise-affine corner maps) and
``cli``.
"""

from .polygeom import PolygonalDomain, annulus_A, euler_characteristic, named_domain

__all__ = ["PolygonalDomain", "annulus_A", "euler_characteristic", "named_domain"]
__version__ = "0.1.0"
