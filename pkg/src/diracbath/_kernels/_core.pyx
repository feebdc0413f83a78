# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: fused RK4 evolution and dipole lattice sums.

Serial inner loops with a fixed accumulation order: results are
deterministic and independent of any thread-count setting.
"""

from libc.math cimport cos, sin, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "compiled"


cdef inline void _deriv(int ne, Py_ssize_t m,
                        const double* omega,
                        const double complex* coup,
                        const double* delta,
                        const double complex* ce,
                        const double complex* bath,
                        double complex* dce,
                        double complex* dbath) noexcept nogil:
    cdef Py_ssize_t i
    cdef int j
    cdef double complex acc, b
    for j in range(ne):
        acc = delta[j] * ce[j]
        for i in range(m):
            acc = acc + coup[j * m + i] * bath[i]
        dce[j] = -1j * acc
    for i in range(m):
        b = omega[i] * bath[i]
        for j in range(ne):
            b = b + coup[j * m + i].conjugate() * ce[j]
        dbath[i] = -1j * b


def rk4_evolve(double[::1] omega, double complex[:, ::1] coup,
               double[::1] delta, double complex[::1] ce0,
               double complex[::1] bath0, double dt, long n_steps,
               long record_every, long[::1] snapshot_steps):
    """Same contract as ``_fallback.rk4_evolve``."""
    cdef Py_ssize_t m = omega.shape[0]
    cdef int ne = <int>ce0.shape[0]
    cdef Py_ssize_t n_snap = snapshot_steps.shape[0]

    rec_list = [0]
    cdef Py_ssize_t n_rec_max = n_steps // record_every + 3
    ce_traj = np.zeros((n_rec_max, ne), dtype=np.complex128)
    snaps = np.zeros((n_snap, m), dtype=np.complex128)
    cdef double complex[:, ::1] ce_traj_v = ce_traj
    cdef double complex[:, ::1] snaps_v = snaps

    cdef double complex* ce = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* bath = <double complex*>malloc(m * sizeof(double complex))
    # stage buffers: y-temporaries and four slopes for emitter + bath
    cdef double complex* ye = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* yb = <double complex*>malloc(m * sizeof(double complex))
    cdef double complex* k1e = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* k2e = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* k3e = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* k4e = <double complex*>malloc(ne * sizeof(double complex))
    cdef double complex* k1b = <double complex*>malloc(m * sizeof(double complex))
    cdef double complex* k2b = <double complex*>malloc(m * sizeof(double complex))
    cdef double complex* k3b = <double complex*>malloc(m * sizeof(double complex))
    cdef double complex* k4b = <double complex*>malloc(m * sizeof(double complex))

    cdef Py_ssize_t i, snap_i = 0, rec_i = 1
    cdef int j
    cdef long s
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double norm0 = 0.0, norm, drift = 0.0

    for j in range(ne):
        ce[j] = ce0[j]
        ce_traj_v[0, j] = ce0[j]
        norm0 += ce0[j].real * ce0[j].real + ce0[j].imag * ce0[j].imag
    for i in range(m):
        bath[i] = bath0[i]
        norm0 += bath0[i].real * bath0[i].real + bath0[i].imag * bath0[i].imag
    while snap_i < n_snap and snapshot_steps[snap_i] == 0:
        for i in range(m):
            snaps_v[snap_i, i] = bath[i]
        snap_i += 1

    with nogil:
        for s in range(1, n_steps + 1):
            _deriv(ne, m, &omega[0], &coup[0, 0], &delta[0], ce, bath, k1e, k1b)
            for j in range(ne):
                ye[j] = ce[j] + half * k1e[j]
            for i in range(m):
                yb[i] = bath[i] + half * k1b[i]
            _deriv(ne, m, &omega[0], &coup[0, 0], &delta[0], ye, yb, k2e, k2b)
            for j in range(ne):
                ye[j] = ce[j] + half * k2e[j]
            for i in range(m):
                yb[i] = bath[i] + half * k2b[i]
            _deriv(ne, m, &omega[0], &coup[0, 0], &delta[0], ye, yb, k3e, k3b)
            for j in range(ne):
                ye[j] = ce[j] + dt * k3e[j]
            for i in range(m):
                yb[i] = bath[i] + dt * k3b[i]
            _deriv(ne, m, &omega[0], &coup[0, 0], &delta[0], ye, yb, k4e, k4b)
            for j in range(ne):
                ce[j] = ce[j] + sixth * (k1e[j] + 2 * k2e[j] + 2 * k3e[j] + k4e[j])
            for i in range(m):
                bath[i] = bath[i] + sixth * (k1b[i] + 2 * k2b[i] + 2 * k3b[i] + k4b[i])

            if s % record_every == 0 or s == n_steps:
                with gil:
                    rec_list.append(s)
                    for j in range(ne):
                        ce_traj_v[rec_i, j] = ce[j]
                    rec_i += 1
                norm = 0.0
                for j in range(ne):
                    norm += ce[j].real * ce[j].real + ce[j].imag * ce[j].imag
                for i in range(m):
                    norm += bath[i].real * bath[i].real + bath[i].imag * bath[i].imag
                if norm - norm0 > drift:
                    drift = norm - norm0
                if norm0 - norm > drift:
                    drift = norm0 - norm
            while snap_i < n_snap and snapshot_steps[snap_i] == s:
                for i in range(m):
                    snaps_v[snap_i, i] = bath[i]
                snap_i += 1

    bath_final = np.zeros(m, dtype=np.complex128)
    cdef double complex[::1] bf = bath_final
    for i in range(m):
        bf[i] = bath[i]
    free(ce); free(bath); free(ye); free(yb)
    free(k1e); free(k2e); free(k3e); free(k4e)
    free(k1b); free(k2b); free(k3b); free(k4b)

    rec_steps = np.asarray(rec_list, dtype=np.int64)
    return rec_steps, ce_traj[:rec_i].copy(), snaps, bath_final, drift


def dipole_phase_sum(double[:, ::1] rxy, double complex[:, ::1] g9,
                     double kx, double ky):
    """Same contract as ``_fallback.dipole_phase_sum``."""
    cdef Py_ssize_t p = rxy.shape[0]
    cdef Py_ssize_t i, q
    cdef double ph
    cdef double complex e
    out = np.zeros(9, dtype=np.complex128)
    cdef double complex[::1] acc = out
    with nogil:
        for i in range(p):
            ph = -(rxy[i, 0] * kx + rxy[i, 1] * ky)
            e = cos(ph) + 1j * sin(ph)
            for q in range(9):
                acc[q] = acc[q] + e * g9[i, q]
    return out
