"""Monte-Carlo integrator for the joint state-noise SDE.

The joint variable Y = (psi, X) follows

    d psi = (-i H + i k X S - (gamma^2/2) S'S) psi dt - i gamma S psi dW
    d X   = -k X dt + gamma dW

with a single Brownian driver W shared by both blocks.  White noise is
k = 0.  Schemes: Euler-Maruyama and the explicit weak second-order
Platen scheme.  This module is the independent check on every
closed-form law in the package: it never consults them.

Reproducibility: path i draws from its own Philox(master_seed, i)
stream, in a fixed order (initial noise value first, then one normal
per step), so results are bit-identical for any worker count.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import noise as noise_mod
from . import qstate

EULER_MARUYAMA = "euler-maruyama"
PLATEN_WEAK2 = "platen-weak2"
SCHEMES = (EULER_MARUYAMA, PLATEN_WEAK2)

ABORT_NORM = 1.5
CLAMP_TOL = 1e-9
PRECLAMP_LIMIT = 1e-6
MAX_ABORT_FRACTION = 0.01
TIME_BLOCK = 2048


class PathAbortError(RuntimeError):
    """Raised when the aborted-path fraction exceeds the 1% budget."""


class FidelityRangeError(RuntimeError):
    """Raised when pre-clamp fidelities leave [0,1] by more than 1e-6."""


@dataclass
class JointState:
    psi: np.ndarray
    x: float


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    scheme: str = PLATEN_WEAK2
    renormalize: bool = True
    n_paths: int = 1
    master_seed: int = 0
    record_every: int = 1
    keep_states: bool = False
    workers: Optional[int] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("T/dt must be an integer")
        if self.record_every < 1 or round(ratio) % self.record_every != 0:
            raise ValueError("record_every must divide the step count")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: tuple
    fidelities: np.ndarray


@dataclass
class SummaryTable:
    times: np.ndarray
    mean_f: np.ndarray
    var_f: np.ndarray
    stderr_f: np.ndarray
    n_effective: int


@dataclass
class SimulationResult:
    times: np.ndarray
    fidelities: np.ndarray        # (n_completed, n_rec), clamped to [0,1]
    path_indices: np.ndarray      # original path ids of the rows above
    initial_x: np.ndarray
    terminal_x: np.ndarray
    trajectories: tuple
    summary: SummaryTable
    aborted: tuple                # ((path index, step index), ...)
    max_norm_drift: float
    max_range_violation: float


def _check_problem(H, S, phi0):
    H = np.asarray(H, dtype=complex)
    S = np.asarray(S, dtype=complex)
    phi0 = qstate.as_state(phi0)
    d = phi0.shape[0]
    if H.shape != (d, d) or S.shape != (d, d):
        raise ValueError("H, S and the state have inconsistent dimensions")
    return H, S, phi0


def drift_diffusion(Y, H, S, model):
    """Drift and diffusion of the joint SDE at Y, per unit dt and dW.

    Returns ((a_psi, a_x), (b_psi, b_x)) with
    a_psi = (-iH + ikXS - (gamma^2/2) S'S) psi, b_psi = -i gamma S psi,
    a_x = -kX, b_x = gamma.
    """
    psi = np.asarray(Y.psi, dtype=complex)
    d = psi.shape[0]
    if H.shape != (d, d) or S.shape != (d, d):
        raise ValueError("H, S and the state have inconsistent dimensions")
    g, k = model.gamma, model.k
    a_psi = (-1j) * (H @ psi) + (1j * k * Y.x) * (S @ psi) \
        - 0.5 * g * g * (S.conj().T @ (S @ psi))
    b_psi = (-1j * g) * (S @ psi)
    return (a_psi, -k * Y.x), (b_psi, g)


def _chunk_step(psi, x, N, scheme, dt, D0, ST, BT, k, g, renormalize):
    """Advance a (B, d) state block and (B,) noise block by one step.

    D0 = (-iH - (gamma^2/2) S'S)^T, ST = S^T, BT = (-i gamma S)^T, so
    drift(psi, x) = psi @ D0 + (ik x) (psi @ ST) row-wise.
    """
    sqdt = math.sqrt(dt)
    a0 = psi @ D0 + (1j * k) * x[:, None] * (psi @ ST)
    b0 = psi @ BT
    ax0 = -k * x
    Nc = N[:, None]
    if scheme == EULER_MARUYAMA:
        psi1 = psi + a0 * dt + b0 * (Nc * sqdt)
        x1 = x + ax0 * dt + (g * sqdt) * N
    else:
        bar_psi = psi + a0 * dt + b0 * (Nc * sqdt)
        bar_x = x + ax0 * dt + (g * sqdt) * N
        up_psi = psi + a0 * dt + b0 * sqdt
        dn_psi = psi + a0 * dt - b0 * sqdt
        a1 = bar_psi @ D0 + (1j * k) * bar_x[:, None] * (bar_psi @ ST)
        ax1 = -k * bar_x
        bp = up_psi @ BT
        bm = dn_psi @ BT
        psi1 = psi + 0.5 * (a1 + a0) * dt \
            + 0.25 * (bp + bm + 2.0 * b0) * (Nc * sqdt) \
            + 0.25 * (bp - bm) * ((N * N - 1.0)[:, None] * sqdt)
        # noise diffusion is constant, so its second-order terms collapse
        x1 = x + 0.5 * (ax1 + ax0) * dt + (g * sqdt) * N
    norms = np.linalg.norm(psi1, axis=1)
    if renormalize:
        safe = np.where(norms > 0, norms, 1.0)
        psi1 = psi1 / safe[:, None]
    return psi1, x1, norms


def step(Y, H, S, model, config, stream, normal=None):
    """One scheme step of the joint SDE; a single shared normal draw.

    `normal` overrides the draw (used by deterministic tests).  Raises
    PathAbortError on NaN or norm blow-up past 1.5.
    """
    H = np.asarray(H, dtype=complex)
    S = np.asarray(S, dtype=complex)
    d = np.asarray(Y.psi).shape[0]
    if H.shape != (d, d) or S.shape != (d, d):
        raise ValueError("H, S and the state have inconsistent dimensions")
    N = float(stream.standard_normal()) if normal is None else float(normal)
    g, k = model.gamma, model.k
    D0 = ((-1j) * H - 0.5 * g * g * (S.conj().T @ S)).T
    psi = np.asarray(Y.psi, dtype=complex)[None, :]
    x = np.array([float(Y.x)])
    psi1, x1, norms = _chunk_step(
        psi, x, np.array([N]), config.scheme, config.dt,
        D0, S.T, ((-1j * g) * S).T, k, g, config.renormalize,
    )
    if not np.all(np.isfinite(psi1)) or norms[0] > ABORT_NORM:
        raise PathAbortError(f"path aborted: norm {norms[0]:.4g}")
    return JointState(psi=psi1[0], x=float(x1[0]))


def target_evolution(H, phi0, t):
    """Noiseless target phi_t = exp(-iHt) phi0."""
    H = np.asarray(H, dtype=complex)
    phi0 = qstate.as_state(phi0)
    return qstate.mat_exp(-1j * t * H) @ phi0


def _resolve_workers(config):
    if config.workers is not None:
        return max(1, int(config.workers))
    env = os.environ.get("SSELAB_THREADS", "")
    return max(1, int(env)) if env.strip() else 1


def simulate_paths(H, S, model, phi0, config):
    """Integrate n_paths of the joint SDE; deterministic in master_seed.

    Returns a SimulationResult with per-path fidelity series against the
    noiseless target, summary statistics per recorded time, and abort
    diagnostics.  More than 1% aborted paths raises PathAbortError; a
    pre-clamp fidelity excursion beyond 1e-6 raises FidelityRangeError.
    """
    H, S, phi0 = _check_problem(H, S, phi0)
    d = phi0.shape[0]
    g, k = model.gamma, model.k
    n_steps = config.n_steps
    rec_every = config.record_every
    n_rec = n_steps // rec_every + 1
    times = np.arange(n_rec) * (config.dt * rec_every)

    targets = np.empty((n_rec, d), dtype=complex)
    for i, t in enumerate(times):
        targets[i] = target_evolution(H, phi0, t)
    targets_conj = targets.conj()

    D0 = ((-1j) * H - 0.5 * g * g * (S.conj().T @ S)).T
    ST = S.T
    BT = ((-1j * g) * S).T

    n_paths = config.n_paths
    fids = np.full((n_paths, n_rec), np.nan)
    x0s = np.zeros(n_paths)
    xTs = np.full(n_paths, np.nan)
    states_store = (
        np.empty((n_paths, n_rec, d), dtype=complex) if config.keep_states else None
    )
    xs_store = np.empty((n_paths, n_rec)) if config.keep_states else None
    abort_step = np.full(n_paths, -1, dtype=np.int64)
    norm_drift = np.zeros(n_paths)

    def run_chunk(idx):
        B = len(idx)
        gens = [
            np.random.Generator(
                np.random.Philox(key=[config.master_seed & (2**64 - 1), int(i)])
            )
            for i in idx
        ]
        x = np.array([noise_mod.draw_initial(model, gen) for gen in gens])
        x0s[idx] = x
        psi = np.tile(phi0, (B, 1))
        alive = np.ones(B, dtype=bool)
        drift = np.zeros(B)

        def record(slot):
            f = np.abs(psi @ targets_conj[slot]) ** 2
            rows = idx[alive]
            fids[rows, slot] = f[alive]
            if states_store is not None:
                states_store[idx, slot, :] = psi
                states_store[idx[~alive], slot, :] = np.nan
                xs_store[idx, slot] = np.where(alive, x, np.nan)

        record(0)
        step_no = 0
        while step_no < n_steps:
            tb = min(TIME_BLOCK, n_steps - step_no)
            normals = np.empty((B, tb))
            for j, gen in enumerate(gens):
                normals[j] = gen.standard_normal(tb)
            for s in range(tb):
                psi, x, norms = _chunk_step(
                    psi, x, normals[:, s], config.scheme, config.dt,
                    D0, ST, BT, k, g, config.renormalize,
                )
                step_no += 1
                bad = alive & (
                    ~np.isfinite(norms) | (norms > ABORT_NORM) | ~np.isfinite(x)
                )
                if bad.any():
                    abort_step[idx[bad]] = step_no
                    alive &= ~bad
                    psi[bad] = 0.0
                    x[bad] = 0.0
                np.maximum(drift, np.where(alive, np.abs(norms - 1.0), 0.0), out=drift)
                if step_no % rec_every == 0:
                    record(step_no // rec_every)
        xTs[idx[alive]] = x[alive]
        norm_drift[idx] = drift

    workers = _resolve_workers(config)
    chunks = [c for c in np.array_split(np.arange(n_paths), workers) if len(c)]
    if len(chunks) == 1:
        run_chunk(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            for fut in [pool.submit(run_chunk, c) for c in chunks]:
                fut.result()

    aborted = tuple(
        (int(i), int(abort_step[i])) for i in range(n_paths) if abort_step[i] >= 0
    )
    if len(aborted) > MAX_ABORT_FRACTION * n_paths:
        raise PathAbortError(
            f"{len(aborted)} of {n_paths} paths aborted "
            f"(> {MAX_ABORT_FRACTION:.0%}); first at step {aborted[0][1]}"
        )
    keep = abort_step < 0
    rows = np.flatnonzero(keep)
    fid_rows = fids[rows]

    violation = 0.0
    if fid_rows.size:
        violation = max(0.0, float(fid_rows.max()) - 1.0, -float(fid_rows.min()))
    if violation > PRECLAMP_LIMIT:
        raise FidelityRangeError(
            f"fidelity left [0,1] by {violation:.3e} before clamping"
        )
    fid_rows = np.clip(fid_rows, 0.0, 1.0)

    n_eff = len(rows)
    mean = np.full(n_rec, np.nan)
    var = np.full(n_rec, np.nan)
    stderr = np.full(n_rec, np.nan)
    if n_eff >= 1:
        for j in range(n_rec):
            col = fid_rows[:, j]
            m = math.fsum(col) / n_eff
            mean[j] = m
            if n_eff >= 2:
                var[j] = math.fsum((c - m) ** 2 for c in col) / (n_eff - 1)
                stderr[j] = math.sqrt(var[j] / n_eff)
    summary = SummaryTable(
        times=times, mean_f=mean, var_f=var, stderr_f=stderr, n_effective=n_eff
    )

    trajectories = []
    for r, row in zip(rows, fid_rows):
        if states_store is not None:
            sts = tuple(
                JointState(psi=states_store[r, j].copy(), x=float(xs_store[r, j]))
                for j in range(n_rec)
            )
        else:
            sts = ()
        trajectories.append(Trajectory(times=times, states=sts, fidelities=row))

    return SimulationResult(
        times=times,
        fidelities=fid_rows,
        path_indices=rows,
        initial_x=x0s[rows],
        terminal_x=xTs[rows],
        trajectories=tuple(trajectories),
        summary=summary,
        aborted=aborted,
        max_norm_drift=float(norm_drift.max(initial=0.0)),
        max_range_violation=violation,
    )


def write_summary_csv(summary, path):
    """Write the per-time summary: t, mean_F, var_F, stderr_F, n_effective."""
    with open(path, "w") as fh:
        fh.write("t,mean_F,var_F,stderr_F,n_effective\n")
        for i in range(len(summary.times)):
            row = [
                repr(float(summary.times[i])),
                repr(float(summary.mean_f[i])),
                repr(float(summary.var_f[i])),
                repr(float(summary.stderr_f[i])),
                str(summary.n_effective),
            ]
            fh.write(",".join(row) + "\n")


def write_trajectory_csv(traj, path):
    """Write one trajectory: t, re/im of each component, X, F."""
    if not traj.states:
        raise ValueError("trajectory was recorded without states")
    d = traj.states[0].psi.shape[0]
    cols = [f"re_psi{i}" for i in range(d)] + [f"im_psi{i}" for i in range(d)]
    with open(path, "w") as fh:
        fh.write("t," + ",".join(cols) + ",X,F\n")
        for t, st, f in zip(traj.times, traj.states, traj.fidelities):
            parts = [repr(float(t))]
            parts += [repr(float(v)) for v in st.psi.real]
            parts += [repr(float(v)) for v in st.psi.imag]
            parts += [repr(float(st.x)), repr(float(f))]
            fh.write(",".join(parts) + "\n")
