# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: point-to-plane distances and RANSAC candidate scoring."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def plane_distances(double[:, ::1] pts, double nx, double ny, double nz, double d):
    cdef Py_ssize_t n = pts.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = fabs(((pts[i, 0] * nx + pts[i, 1] * ny) + pts[i, 2] * nz) + d)
    return out


def score_plane(double[:, ::1] pts, double nx, double ny, double nz, double d, double tau):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t i, count = 0
    cdef double dist, ssq = 0.0
    cdef int flag
    for i in range(n):
        dist = fabs(((pts[i, 0] * nx + pts[i, 1] * ny) + pts[i, 2] * nz) + d)
        flag = dist <= tau
        count += flag
        ssq += flag * (dist * dist)
    return count, ssq


def inlier_mask(double[:, ::1] pts, double nx, double ny, double nz, double d, double tau):
    cdef Py_ssize_t n = pts.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = fabs(((pts[i, 0] * nx + pts[i, 1] * ny) + pts[i, 2] * nz) + d) <= tau
    return out.view(np.bool_)
