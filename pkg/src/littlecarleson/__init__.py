"""Numerical harness for a vector-valued Carleson-type inequality on the torus.

Subpackages are plain modules: ``values`` (normed value spaces), ``dyadic``
(exact intervals), ``fourier`` (sampled functions and coefficients), ``operators``,
``decomposition``, ``hausdorff_young``, ``exceptional``, ``growth`` and ``cli``.
"""

__version__ = "0.1.0"
