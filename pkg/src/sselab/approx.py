"""Moment-closure ODE approximations of the mean fidelity (OU noise).

Closing the observable hierarchy with E[X^2 V] ~ E[X^2] E[V] at first
order (3 components) or one level deeper at second order (6 components)
gives linear ODE systems with time-dependent coefficients.  They are
integrated verbatim in complex arithmetic; the fidelity is the real
part of the first component and the leftover imaginary magnitude is
reported as a diagnostic.  Both orders eventually turn nonphysical,
which is part of what this module demonstrates.
"""

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class ClosureSystem:
    order: int
    matrix_fn: object
    v0: np.ndarray


@dataclass(frozen=True)
class ClosureSeries:
    times: np.ndarray
    fidelity: np.ndarray
    imag_residue: float


def noise_second_moment(t, gamma, k):
    """E[X_t^2] for an OU path started at 0; k = 0 limit is gamma^2 t."""
    if k == 0.0:
        return gamma**2 * t
    return -math.expm1(-2 * k * t) * gamma**2 / (2 * k)


def first_order_matrix(t, gamma, k):
    """3x3 closure matrix with p(t) = k E[X_t^2] - gamma^2."""
    g2 = gamma**2
    p = k * noise_second_moment(t, gamma, k) - g2
    return np.array(
        [
            [-g2, g2, 1j * k],
            [g2, -g2, -1j * k],
            [2j * p, -2j * p, -(k + 2 * g2)],
        ],
        dtype=complex,
    )


def second_order_matrix(t, gamma, k):
    """6x6 closure matrix with q(t) = k E[X_t^2] - 2 gamma^2."""
    g2 = gamma**2
    q = k * noise_second_moment(t, gamma, k) - 2 * g2
    return np.array(
        [
            [-g2, g2, 1j * k, 0, 0, 0],
            [g2, -g2, -1j * k, 0, 0, 0],
            [-2j * g2, 2j * g2, -(k + 2 * g2), 2j * k, -2j * k, 0],
            [g2, 0, -2j * g2, -(2 * k + g2), g2, 1j * k],
            [0, g2, 2j * g2, g2, -(2 * k + g2), -1j * k],
            [0, 0, 2 * g2, 2j * q, -2j * q, -(3 * k + 2 * g2)],
        ],
        dtype=complex,
    )


def first_order_system(gamma, k, s0):
    v0 = np.array([1.0, s0**2, 0.0], dtype=complex)
    return ClosureSystem(
        order=1, matrix_fn=lambda t: first_order_matrix(t, gamma, k), v0=v0
    )


def second_order_system(gamma, k, s0):
    v0 = np.array([1.0, s0**2, 0.0, 0.0, 0.0, 0.0], dtype=complex)
    return ClosureSystem(
        order=2, matrix_fn=lambda t: second_order_matrix(t, gamma, k), v0=v0
    )


def build_closure(order, gamma, k, s0):
    if order == 1:
        return first_order_system(gamma, k, s0)
    if order == 2:
        return second_order_system(gamma, k, s0)
    raise ValueError("order must be 1 or 2")


def integrate_closure(system, T, dt=DEFAULT_DT):
    """Classical RK4 on x' = M(t) x; returns the mean-fidelity series.

    fidelity[i] = Re x_1(t_i); imag_residue = max_t |Im x_1(t)|.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(T / dt))
    if abs(T / dt - n_steps) > 1e-9 * max(1.0, T / dt):
        raise ValueError("T/dt must be an integer")
    m = system.matrix_fn
    x = system.v0.astype(complex).copy()
    times = np.arange(n_steps + 1) * dt
    fid = np.empty(n_steps + 1)
    residue = 0.0
    fid[0] = x[0].real
    for i in range(n_steps):
        t = i * dt
        m0 = m(t)
        mh = m(t + 0.5 * dt)
        m1 = m(t + dt)
        k1 = m0 @ x
        k2 = mh @ (x + 0.5 * dt * k1)
        k3 = mh @ (x + 0.5 * dt * k2)
        k4 = m1 @ (x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        fid[i + 1] = x[0].real
        residue = max(residue, abs(x[0].imag))
    return ClosureSeries(times=times, fidelity=fid, imag_residue=residue)
