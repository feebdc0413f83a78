"""Pure-NumPy reference implementations of the hot kernels.

Semantics must match ``_core`` exactly (same record/snapshot schedule, same
derivative).  Reductions use ``np.sum`` (pairwise, single-threaded) so the
results do not depend on BLAS thread count.
"""

import numpy as np

BACKEND = "python"


def _deriv(omega, coup, delta, ce, bath):
    n_e = ce.shape[0]
    dce = np.empty_like(ce)
    for j in range(n_e):
        dce[j] = -1j * (delta[j] * ce[j] + np.sum(coup[j] * bath))
    dbath = omega * bath
    for j in range(n_e):
        dbath = dbath + np.conj(coup[j]) * ce[j]
    return dce, -1j * dbath


def rk4_evolve(omega, coup, delta, ce0, bath0, dt, n_steps, record_every,
               snapshot_steps):
    """Fixed-step RK4 for one emitter-bath single-excitation system.

    Parameters
    ----------
    omega : (M,) float64 bath mode frequencies
    coup : (Ne, M) complex128 couplings gamma[j, m]
    delta : (Ne,) float64 emitter detunings
    ce0 : (Ne,) complex128, bath0 : (M,) complex128 initial amplitudes
    dt, n_steps : step size and count
    record_every : emitter amplitudes stored every this many steps
    snapshot_steps : sorted int64 array of steps at which the full bath
        vector is copied out

    Returns
    -------
    rec_steps (R,) int64, ce_traj (R, Ne) complex128,
    snaps (S, M) complex128, bath_final (M,) complex128, norm_drift float
    """
    omega = np.asarray(omega, dtype=np.float64)
    coup = np.atleast_2d(np.asarray(coup, dtype=np.complex128))
    delta = np.asarray(delta, dtype=np.float64)
    ce = np.array(ce0, dtype=np.complex128, copy=True)
    bath = np.array(bath0, dtype=np.complex128, copy=True)
    snapshot_steps = np.asarray(snapshot_steps, dtype=np.int64)

    norm0 = float(np.sum(np.abs(ce) ** 2) + np.sum(np.abs(bath) ** 2))
    rec_steps, ce_traj = [], []
    snaps = np.zeros((len(snapshot_steps), omega.shape[0]), dtype=np.complex128)
    drift = 0.0
    snap_i = 0

    def record(step):
        rec_steps.append(step)
        ce_traj.append(ce.copy())

    def norm_check():
        nonlocal drift
        n = float(np.sum(np.abs(ce) ** 2) + np.sum(np.abs(bath) ** 2))
        drift = max(drift, abs(n - norm0))

    record(0)
    while snap_i < len(snapshot_steps) and snapshot_steps[snap_i] == 0:
        snaps[snap_i] = bath
        snap_i += 1

    half = 0.5 * dt
    sixth = dt / 6.0
    for s in range(1, n_steps + 1):
        k1c, k1b = _deriv(omega, coup, delta, ce, bath)
        k2c, k2b = _deriv(omega, coup, delta, ce + half * k1c, bath + half * k1b)
        k3c, k3b = _deriv(omega, coup, delta, ce + half * k2c, bath + half * k2b)
        k4c, k4b = _deriv(omega, coup, delta, ce + dt * k3c, bath + dt * k3b)
        ce = ce + sixth * (k1c + 2 * k2c + 2 * k3c + k4c)
        bath = bath + sixth * (k1b + 2 * k2b + 2 * k3b + k4b)
        if s % record_every == 0 or s == n_steps:
            record(s)
            norm_check()
        while snap_i < len(snapshot_steps) and snapshot_steps[snap_i] == s:
            snaps[snap_i] = bath
            snap_i += 1

    return (np.asarray(rec_steps, dtype=np.int64),
            np.asarray(ce_traj, dtype=np.complex128),
            snaps, bath, drift)


def dipole_phase_sum(rxy, g9, kx, ky):
    """Phase-weighted dyadic lattice sum: sum_p e^{-i k.R_p} G9[p].

    rxy : (P, 2) float64 in-plane lattice vectors
    g9 : (P, 9) complex128 flattened 3x3 dyadics
    Returns a (9,) complex128 vector.
    """
    rxy = np.asarray(rxy, dtype=np.float64)
    g9 = np.asarray(g9, dtype=np.complex128)
    phases = np.exp(-1j * (rxy[:, 0] * kx + rxy[:, 1] * ky))
    return np.sum(phases[:, None] * g9, axis=0)
