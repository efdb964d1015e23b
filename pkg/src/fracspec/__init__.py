"""Directional fractional operators on convex domains and spectral checks for
elliptic operators with a fractional lower-order term."""

from .errors import EllipticityError, OrderingError, ValidationError
from .geometry import (
    ConvexDomain,
    GridFunction,
    RadialGrid,
    Ray,
    RayFan,
    build_domain,
    build_ray_fan,
    holder_estimate,
    weighted_inner_product,
)
from .quadrature import SingularRule, gamma_fn, product_weights

__version__ = "0.1.0"

__all__ = [
    "ConvexDomain",
    "EllipticityError",
    "GridFunction",
    "OrderingError",
    "RadialGrid",
    "Ray",
    "RayFan",
    "SingularRule",
    "ValidationError",
    "build_domain",
    "build_ray_fan",
    "gamma_fn",
    "holder_estimate",
    "product_weights",
    "weighted_inner_product",
]
