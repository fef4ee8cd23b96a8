"""Hot inner loop: user-to-UAV association under co-channel interference.

Evaluated once per simulation step over every (user, UAV) pair, so it carries
a numba-compiled loop kernel with a vectorised numpy fallback (see _accel for
the selection flag). Both implementations sum interference directly over the
other transmitters instead of subtracting from a grand total, which keeps the
two paths in agreement to rounding error.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit


def _associate_loops(ux, uy, px, py, ph, alive, power, alpha, noise, gamma_th):
    n_users = ux.shape[0]
    n_uavs = px.shape[0]
    serving = np.full(n_users, -1, dtype=np.int64)
    best_sinr = np.zeros(n_users, dtype=np.float64)
    recv = np.zeros(n_uavs, dtype=np.float64)
    exponent = -0.5 * alpha
    inverse_square = alpha == 2.0  # free-space default: skip the pow call
    for i in range(n_users):
        for j in range(n_uavs):
            if alive[j]:
                dsq = (ux[i] - px[j]) ** 2 + (uy[i] - py[j]) ** 2 + ph[j] ** 2
                recv[j] = power / dsq if inverse_square else power * dsq**exponent
            else:
                recv[j] = 0.0
        best = -1
        best_val = 0.0
        for j in range(n_uavs):
            if not alive[j]:
                continue
            interference = 0.0
            for z in range(n_uavs):
                if z != j:
                    interference += recv[z]
            ratio = recv[j] / (interference + noise)
            if ratio > best_val:  # strict: ties keep the lowest id
                best_val = ratio
                best = j
        best_sinr[i] = best_val
        if best >= 0 and best_val > gamma_th:
            serving[i] = best
    return serving, best_sinr


def _associate_numpy(ux, uy, px, py, ph, alive, power, alpha, noise, gamma_th):
    n_users = ux.shape[0]
    n_uavs = px.shape[0]
    if n_users == 0 or n_uavs == 0 or not alive.any():
        return np.full(n_users, -1, dtype=np.int64), np.zeros(n_users)
    dsq = (ux[:, None] - px[None, :]) ** 2 + (uy[:, None] - py[None, :]) ** 2 + ph[None, :] ** 2
    attenuated = power / dsq if alpha == 2.0 else power * dsq ** (-0.5 * alpha)
    recv = np.where(alive[None, :], attenuated, 0.0)
    # matmul with (1 - I) sums the other transmitters directly
    interference = recv @ (1.0 - np.eye(n_uavs))
    sinr = np.where(alive[None, :], recv / (interference + noise), 0.0)
    best = np.argmax(sinr, axis=1)  # first max -> lowest id on ties
    best_sinr = sinr[np.arange(n_users), best]
    serving = np.where(best_sinr > gamma_th, best, -1).astype(np.int64)
    return serving, best_sinr


if HAVE_NUMBA:
    _associate_jit = njit(cache=True)(_associate_loops)
else:  # pragma: no cover
    _associate_jit = None

_associate_impl = _associate_jit if USE_NUMBA else _associate_numpy


def associate(ux, uy, px, py, ph, alive, power, alpha, noise, gamma_th):
    """Best-SINR association for every user.

    Returns (serving, best_sinr): serving UAV index per user (-1 when the best
    SINR does not clear gamma_th or no UAV is alive) and the best SINR found.
    """
    ux = np.ascontiguousarray(ux, dtype=np.float64)
    uy = np.ascontiguousarray(uy, dtype=np.float64)
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    ph = np.ascontiguousarray(ph, dtype=np.float64)
    alive = np.ascontiguousarray(alive, dtype=np.bool_)
    if ux.shape[0] == 0 or px.shape[0] == 0:
        return np.full(ux.shape[0], -1, dtype=np.int64), np.zeros(ux.shape[0])
    return _associate_impl(
        ux, uy, px, py, ph, alive, float(power), float(alpha), float(noise), float(gamma_th)
    )
