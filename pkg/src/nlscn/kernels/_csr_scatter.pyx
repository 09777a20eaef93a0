# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR scatter-accumulation for coefficient-weighted P1 mass matrices.

This element loop runs once per fixed-point iteration of every implicit
time step and dominates the stepper's runtime; everything around it is
vectorized numpy.  The accumulation order (element-major, then local
row-major) matches the numpy fallback exactly so both backends produce
bit-identical matrices.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scatter_coefficient_mass(double[::1] data,
                             const double[:, ::1] coeff,
                             const double[::1] areas,
                             const cnp.int64_t[:, ::1] pos,
                             const double[:, ::1] quad_outer):
    """Accumulate ``data[pos[e,k]] += areas[e] * sum_q coeff[e,q]*quad_outer[q,k]``.

    ``data`` has one trailing padding slot that absorbs contributions of
    eliminated (boundary) degrees of freedom.
    """
    cdef Py_ssize_t ne = coeff.shape[0]
    cdef Py_ssize_t e, k
    cdef double a, c0, c1, c2
    if pos.shape[0] != ne or areas.shape[0] != ne:
        raise ValueError("inconsistent element counts")
    if coeff.shape[1] != 3 or pos.shape[1] != 9 or quad_outer.shape[0] != 3 or quad_outer.shape[1] != 9:
        raise ValueError("expected a 3-point rule with 3x3 local matrices")
    with nogil:
        for e in range(ne):
            a = areas[e]
            c0 = coeff[e, 0]
            c1 = coeff[e, 1]
            c2 = coeff[e, 2]
            for k in range(9):
                data[pos[e, k]] += a * ((c0 * quad_outer[0, k]
                                         + c1 * quad_outer[1, k])
                                        + c2 * quad_outer[2, k])
