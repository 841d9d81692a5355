"""Trajectory prediction with discrete-Frechet kernel projections.

Thin package wrapper around the compiled extension; see the project README
for the full API.
"""

try:
    from ._ktm import *  # noqa: F401,F403  (installed layout)
except ImportError:  # build-tree layout: extension sits next to the package dir
    from _ktm import *  # noqa: F401,F403
