"""Pure-numpy fallback for the assembly scatter kernel.

Mirrors the compiled extension operation-for-operation (same floating
point evaluation order, same element-major accumulation via bincount)
so the two backends agree bitwise.
"""

import numpy as np


def scatter_coefficient_mass(data, coeff, areas, pos, quad_outer):
    """Accumulate ``data[pos[e,k]] += areas[e] * sum_q coeff[e,q]*quad_outer[q,k]``."""
    if pos.shape[0] != coeff.shape[0] or areas.shape[0] != coeff.shape[0]:
        raise ValueError("inconsistent element counts")
    if coeff.shape[1] != 3 or pos.shape[1] != 9 or quad_outer.shape != (3, 9):
        raise ValueError("expected a 3-point rule with 3x3 local matrices")
    w = coeff[:, 0, None] * quad_outer[0] + coeff[:, 1, None] * quad_outer[1]
    w += coeff[:, 2, None] * quad_outer[2]
    w *= areas[:, None]
    data += np.bincount(pos.ravel(), weights=w.ravel(), minlength=data.size)
