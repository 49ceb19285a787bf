"""Noise processes driving the stochastic Schrodinger equation.

Two models: white noise (the k -> 0 limit) and the Ornstein-Uhlenbeck
process dX = -k X dt + gamma dW, started either at X0 = 0 ("calibrated")
or from the stationary law X0 ~ gamma N / sqrt(2k).

The increment Delta X = X_t - X_0 is Gaussian for both models, which is
what makes every fidelity law in `laws` exactly integrable: its even
moments follow the (2n-1)!! v(t)^n pattern and its characteristic
function gives E[cos(alpha Delta X)] = exp(-alpha^2 v(t) / 2).
"""

import math
from dataclasses import dataclass, field

import numpy as np

WHITE = "white"
OU = "ou"
CALIBRATED = "calibrated"
STATIONARY = "stationary"

MAX_MOMENT = 12


@dataclass(frozen=True)
class NoiseModel:
    """Noise process parameters.

    kind : "white" or "ou"
    gamma : noise intensity (1/sqrt(time))
    k : damping rate (1/time); must be 0 for white noise
    init : "calibrated" (X0 = 0) or "stationary" (X0 ~ gamma N / sqrt(2k))
    """

    kind: str
    gamma: float
    k: float = 0.0
    init: str = CALIBRATED

    def __post_init__(self):
        if self.kind not in (WHITE, OU):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.gamma < 0 or self.k < 0:
            raise ValueError("gamma and k must be non-negative")
        if self.kind == WHITE and (self.k != 0 or self.init != CALIBRATED):
            raise ValueError("white noise requires k=0 and calibrated start")
        if self.init not in (CALIBRATED, STATIONARY):
            raise ValueError(f"unknown init {self.init!r}")


def white_noise(gamma):
    return NoiseModel(WHITE, gamma)


def ou_noise(gamma, k, init=CALIBRATED):
    return NoiseModel(OU, gamma, k, init)


@dataclass
class NoisePath:
    """One sampled realization of the noise process."""

    times: np.ndarray
    values: np.ndarray
    seed_record: tuple = field(default_factory=tuple)


def _phi1(z):
    """(1 - exp(-z)) / z, stable near z = 0 (value 1)."""
    if z == 0.0:
        return 1.0
    return -math.expm1(-z) / z


def draw_initial(model, stream):
    """Draw X0 per the model's init convention from the given stream."""
    if model.init == STATIONARY:
        if model.k == 0.0:
            raise ValueError("stationary start needs k > 0")
        return model.gamma * stream.standard_normal() / math.sqrt(2.0 * model.k)
    return 0.0


def sample_path(model, T, dt, stream):
    """Sample X on the grid 0, dt, ..., T by the exact one-step transition.

    OU: X_{t+dt} = X_t e^{-k dt} + gamma sqrt((1 - e^{-2 k dt}) / 2k) N,
    white noise: X_{t+dt} = X_t + gamma sqrt(dt) N.  The stationary X0,
    when requested, is the first draw from the same stream.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must be at least dt")
    n_steps = int(round(T / dt))
    times = np.arange(n_steps + 1) * dt
    x0 = draw_initial(model, stream)
    normals = stream.standard_normal(n_steps)
    values = np.empty(n_steps + 1)
    values[0] = x0
    if model.kind == WHITE or model.k == 0.0:
        np.cumsum(model.gamma * math.sqrt(dt) * normals, out=values[1:])
        values[1:] += x0
    else:
        decay = math.exp(-model.k * dt)
        scale = model.gamma * math.sqrt(dt * _phi1(2.0 * model.k * dt))
        x = x0
        for i in range(n_steps):
            x = x * decay + scale * normals[i]
            values[i + 1] = x
    return NoisePath(times=times, values=values)


def terminal_increment_law(model, t):
    """Gaussian law (mean, variance) of Delta X = X_t - X_0.

    Variance: gamma^2 t for white noise; calibrated OU
    (gamma^2/2k)(1 - e^{-2kt}); stationary OU (gamma^2/k)(1 - e^{-kt}).
    All three are computed through the same stable kernel so the k -> 0
    limit reproduces the white-noise value to machine precision.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    g2 = model.gamma**2
    if model.kind == WHITE:
        return 0.0, g2 * t
    if model.init == CALIBRATED:
        return 0.0, g2 * t * _phi1(2.0 * model.k * t)
    return 0.0, g2 * t * _phi1(model.k * t)


def expected_cos(alpha, model, t):
    """E[cos(alpha Delta X)] = exp(-alpha^2 v(t) / 2)."""
    _, v = terminal_increment_law(model, t)
    return math.exp(-0.5 * alpha * alpha * v)


def _double_factorial_odd(n):
    """(2n - 1)!! as a float; 1 for n = 0."""
    out = 1.0
    for j in range(1, n + 1):
        out *= 2 * j - 1
    return out


def raw_even_moment(n, model, t):
    """E[(Delta X)^{2n}] = (2n - 1)!! v(t)^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if 2 * n > MAX_MOMENT:
        raise ValueError(f"moment order {2 * n} exceeds guard {MAX_MOMENT}")
    _, v = terminal_increment_law(model, t)
    return _double_factorial_odd(n) * v**n


def _coeff_a(l, w):
    """2^l prod_{q=l+1}^{w} q (2q - 1) / (q - l); empty product = 1."""
    out = 2.0**l
    for q in range(l + 1, w + 1):
        out *= q * (2 * q - 1) / (q - l)
    return out


def _coeff_b(l, w):
    """2^l prod_{q=l}^{w-1} (1 + q)(3 + 2q) / (q - l + 1); empty product = 1."""
    out = 2.0**l
    for q in range(l, w):
        out *= (1 + q) * (3 + 2 * q) / (q - l + 1)
    return out


def conditional_moment(m, X0, model, t):
    """E[X_t^m | X_0] for the OU process by the closed coefficient sums.

    Even m (w = m/2):
        e^{-2wkt} 2^{-w} sum_l a[l,w] E2^{w-l} gamma^{2(w-l)} X0^{2l}
    odd m (w = (m-1)/2):
        e^{-(2w+1)kt} 2^{-w} sum_l b[l,w] E2^{w-l} gamma^{2(w-l)} X0^{2l+1}
    with E2 = (e^{2kt} - 1)/k, the grouping that keeps every term finite
    as k -> 0 (where E2 -> 2t and the Gaussian transition moments of
    white noise are recovered).
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if m > MAX_MOMENT:
        raise ValueError(f"moment order {m} exceeds guard {MAX_MOMENT}")
    if model.kind != OU:
        raise ValueError("conditional moments are defined for the OU model")
    if m == 0:
        return 1.0
    k, g2 = model.k, model.gamma**2
    if k == 0.0:
        e2 = 2.0 * t
    else:
        e2 = math.expm1(2.0 * k * t) / k
    if m % 2 == 0:
        w = m // 2
        total = 0.0
        for l in range(w + 1):
            total += _coeff_a(l, w) * (e2 * g2) ** (w - l) * X0 ** (2 * l)
        return math.exp(-2 * w * k * t) * 0.5**w * total
    w = (m - 1) // 2
    total = 0.0
    for l in range(w + 1):
        total += _coeff_b(l, w) * (e2 * g2) ** (w - l) * X0 ** (2 * l + 1)
    return math.exp(-(2 * w + 1) * k * t) * 0.5**w * total
