"""Poisson trees, coalescing walk systems and Brownian-web path-space tools.

Subpackages map one-to-one onto the simulation layers:

- :mod:`poisson_web.point_field`: planar Poisson samples with a bucket index
- :mod:`poisson_web.poisson_tree`: mother operator, ancestry trees, X/Y families
- :mod:`poisson_web.path_space`: compactified path metrics and eta counts
- :mod:`poisson_web.coalescing_walks`: event-driven walk systems and gap processes
- :mod:`poisson_web.brownian_ref`: discretised Brownian references
- :mod:`poisson_web.harness`: experiment runner and the ``pw`` CLI
"""

from poisson_web.errors import (
    BoundaryEscape,
    DomainError,
    HorizonExhausted,
    ParameterError,
)

__all__ = [
    "BoundaryEscape",
    "DomainError",
    "HorizonExhausted",
    "ParameterError",
]

__version__ = "0.1.0"
