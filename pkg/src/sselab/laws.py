"""Closed-form pathwise fidelity laws as finite cosine series.

For every commuting noise scenario the fidelity is an exact finite
cosine polynomial in the noise increment Delta X = X_t - X_0:

    F(Delta X) = sum_m c_m cos(m Delta X).

Because Delta X is Gaussian, means are exact via the characteristic
function and second moments via series self-convolution; nothing here
involves quadrature or truncation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import noise as noise_mod


class LawRangeError(ValueError):
    """Raised when a candidate law leaves [0,1] on the validation grid."""


class DiagonalizationError(ValueError):
    """Raised when the ODE matrices cannot be jointly diagonalized.

    Non-commuting systems land here; they are handled by the Magnus
    route in `magnus` instead.
    """


@dataclass(frozen=True)
class CosineSeries:
    """Finite cosine polynomial sum_m c_m cos(m x).

    terms: tuple of (harmonic m >= 0, coefficient c_m), sorted by m.
    """

    terms: tuple

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for m, c in self.terms:
            if m == 0:
                out += c
            else:
                out += c * np.cos(m * x)
        return out if out.ndim else float(out)

    def coefficient(self, m):
        for mm, c in self.terms:
            if mm == m:
                return c
        return 0.0


def _make_series(coeffs):
    """Canonicalize a {harmonic: coefficient} dict into a CosineSeries."""
    merged = {}
    for m, c in coeffs.items():
        if m < 0:
            raise ValueError("harmonics must be non-negative")
        merged[m] = merged.get(m, 0.0) + c
    terms = tuple(sorted((m, c) for m, c in merged.items() if c != 0.0))
    return CosineSeries(terms=terms)


@dataclass(frozen=True)
class ScenarioLaw:
    """A fidelity law bound to its scenario parameters."""

    series: CosineSeries
    s0: float
    model: noise_mod.NoiseModel
    r0: Optional[float] = None

    def to_json(self):
        return {
            "harmonics": [[m, c] for m, c in self.series.terms],
            "s0": self.s0,
            "r0": self.r0,
            "model": {
                "kind": self.model.kind,
                "gamma": self.model.gamma,
                "k": self.model.k,
                "init": self.model.init,
            },
        }


def pauli_law(s0):
    """Single-qubit law for S with S^2 = I and [H,S] = 0.

    F = cos^2(Delta X) + s0^2 sin^2(Delta X), s0 = <phi0|S|phi0>.
    """
    if abs(s0) > 1:
        raise ValueError("pauli law needs |s0| <= 1")
    return _make_series({0: (1 + s0**2) / 2, 2: (1 - s0**2) / 2})


def projection_law(s0):
    """Single-qubit law for S with S^2 = S and [H,S] = 0.

    F = 1 - 2 (1 - s0^2) s0^2 (1 - cos Delta X), with s0^2 = <phi0|S|phi0>
    (s0 is the amplitude on the S = 1 eigenspace).
    """
    if abs(s0) > 1:
        raise ValueError("projection law needs |s0| <= 1")
    w = 2 * (1 - s0**2) * s0**2
    return _make_series({0: 1 - w, 1: w})


def _validate_range(series, where):
    grid = np.linspace(0.0, 2 * np.pi, 10_001)
    vals = series.evaluate(grid)
    if vals.min() < -1e-12 or vals.max() > 1 + 1e-12:
        raise LawRangeError(
            f"{where}: series leaves [0,1] "
            f"(range [{vals.min():.3e}, {vals.max():.3e}])"
        )


def two_qubit_law(s0, r0, klass):
    """Two-qubit law for S = Q (x) I + I (x) Q, R = Q (x) Q.

    s0 = <S>, r0 = <R>.  klass "pauli" (Q^2 = I) gives harmonics
    {0, 2, 4}; klass "projection" (Q^2 = Q) gives harmonics {0, 1, 2}.
    A (s0, r0) pair whose series leaves [0,1] on a 10^4-point grid is
    rejected as inconsistent.
    """
    if abs(s0) > 2 or abs(r0) > 1:
        raise ValueError("need |s0| <= 2 and |r0| <= 1")
    if klass == "pauli":
        c4 = ((1 + r0) ** 2 - s0**2) / 8
        series = _make_series(
            {
                0: (s0**2 + (r0 - 1) ** 2) / 4 + c4,
                2: (1 - r0**2) / 2,
                4: c4,
            }
        )
    elif klass == "projection":
        alpha = s0**2 - s0 - 2 * r0
        beta = 2 * r0 * (s0 - r0 - 1)
        series = _make_series(
            {
                0: 1 + 2 * alpha - 3 * beta,
                1: 4 * beta - 2 * alpha,
                2: -beta,
            }
        )
    else:
        raise ValueError(f"unknown class {klass!r}")
    _validate_range(series, f"two_qubit_law({s0}, {r0}, {klass})")
    return series


def product_two(a, b):
    """Pointwise product of two cosine series, re-expanded.

    cos(m x) cos(n x) = (cos((m+n) x) + cos(|m-n| x)) / 2.
    """
    coeffs = {}
    for m, cm in a.terms:
        for n, cn in b.terms:
            if m == 0 or n == 0:
                coeffs[m + n] = coeffs.get(m + n, 0.0) + cm * cn
            else:
                half = 0.5 * cm * cn
                coeffs[m + n] = coeffs.get(m + n, 0.0) + half
                coeffs[abs(m - n)] = coeffs.get(abs(m - n), 0.0) + half
    return _make_series(coeffs)


def product_law(single_laws):
    """Product of per-qubit laws: the joint law of a product state.

    Qubits driven by the same noise path evolve independently but see
    the same Delta X, so their fidelities multiply pathwise.
    """
    laws = list(single_laws)
    if not laws:
        raise ValueError("need at least one factor")
    out = laws[0]
    for law in laws[1:]:
        out = product_two(out, law)
    return out


def series_mean_variance(law, model, t):
    """Exact (mean, variance) of the law at time t under the model.

    mean = sum_m c_m E[cos(m Delta X)]; E[F^2] from the self-convolved
    series; both reduce to Gaussian characteristic-function values.
    """
    mean = sum(c * noise_mod.expected_cos(m, model, t) for m, c in law.terms)
    squared = product_two(law, law)
    second = sum(c * noise_mod.expected_cos(m, model, t) for m, c in squared.terms)
    return mean, second - mean * mean


def sample_distribution(law, model, t, n, stream):
    """Draw n exact fidelity samples: Delta X ~ N(0, v(t)), F = law(Delta X).

    No path integration; cost O(n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _, v = noise_mod.terminal_increment_law(model, t)
    dx = np.sqrt(v) * stream.standard_normal(n)
    return law.evaluate(dx)


def diagonalized_solve(A, B, a, b, V0):
    """Solve dV = (A V + a) dt + (B V + b) dX pathwise in Delta X.

    Requires A and B simultaneously diagonalizable with B's spectrum on
    the imaginary axis and A = (gamma^2/2) B^2 for some gamma >= 0 (the
    structure under which the dt drift is exactly the Ito correction of
    exp(Lambda Delta X)).  Returns a callable V(delta_x) -> real vector
    (vectorized over a grid); its first component is the fidelity law.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    V0 = np.asarray(V0, dtype=complex).reshape(-1)
    m = B.shape[0]

    lam, P = np.linalg.eig(B)
    if np.linalg.cond(P) > 1e8:
        raise DiagonalizationError("B is not (stably) diagonalizable")
    Pinv = np.linalg.inv(P)
    A_diag = Pinv @ A @ P
    off = A_diag - np.diag(np.diag(A_diag))
    scale = max(np.abs(A).max(), 1.0)
    if np.abs(off).max() > 1e-9 * scale:
        raise DiagonalizationError(
            "A and B are not simultaneously diagonalizable; "
            "non-commuting systems take the Magnus route"
        )
    alpha = np.diag(A_diag)
    # drift must equal the Ito correction: alpha_j = (gamma^2/2) lam_j^2
    # with lam_j imaginary, so alpha_j real <= 0 on the lam != 0 modes
    nz = np.abs(lam) > 1e-12 * max(np.abs(lam).max(), 1.0)
    if np.any(np.abs(lam[nz].real) > 1e-9):
        raise DiagonalizationError("B spectrum is not imaginary")
    if np.any(nz):
        g2 = 2 * alpha[nz] / lam[nz] ** 2
        if np.abs(g2 - g2[0]).max() > 1e-9 * max(1.0, abs(g2[0])) or g2[0].real < -1e-12:
            raise DiagonalizationError("A is not (gamma^2/2) B^2")
    if np.any(np.abs(alpha[~nz]) > 1e-9 * scale):
        raise DiagonalizationError("A acts on the kernel of B")

    # affine shift: v* with A v* = -a and B v* = -b, stacked least squares
    stacked = np.vstack([A, B])
    rhs = np.concatenate([-a, -b])
    vstar, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    if np.linalg.norm(stacked @ vstar - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        raise DiagonalizationError("affine part has no common stationary shift")
    c = Pinv @ vstar
    z0 = Pinv @ V0

    def solution(delta_x):
        dx = np.atleast_1d(np.asarray(delta_x, dtype=float))
        phases = np.exp(np.outer(lam, dx))  # (m, len(dx))
        z = phases * (z0 - c)[:, None] + c[:, None]
        v = (P @ z).real
        return v if np.asarray(delta_x).ndim else v[:, 0]

    return solution
