"""Small builders shared by the test modules."""

import numpy as np

from littlecarleson.fourier import SampledFunction
from littlecarleson.values import LP, SCHATTEN, Space


def random_function(seed, n_cells=256, space=Space(), support=None, scale=5.0):
    """Random cellwise values, zero outside the torus cells (or ``support`` index range)."""
    r = np.random.default_rng(seed)
    vals = np.zeros((n_cells,) + space.shape, dtype=complex)
    i0, i1 = support or (3 * n_cells // 8, 5 * n_cells // 8)
    shape = (i1 - i0,) + space.shape
    vals[i0:i1] = scale * (r.standard_normal(shape) + 1j * r.standard_normal(shape))
    return SampledFunction(space, vals, f"random{seed}")


SPACES = [Space(), Space(LP, 3, 1.5), Space(SCHATTEN, 2, 3.0)]
