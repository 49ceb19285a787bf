"""Scenario resolution and the figure-style run pipeline.

A scenario bundles a noise model, operators, an initial state, and a
simulation config, and names one of six kinds:

  pauli, projection, twoqubit  commuting cases with exact series laws
  noncommuting                 Magnus mean fidelity, no closed variance
  approx-order                 pauli case plus the closure-ODE curves
  distribution                 commuting case that also dumps terminal
                               fidelity samples at chosen time slices

Configs are flat string sections (the CLI reads them from INI files);
presets are the same shape, one per reference figure.  Running a
scenario writes summary.csv, optional distribution/closure CSVs, and
run.json with everything needed to reproduce the run.
"""

import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import approx as approx_mod
from . import laws as laws_mod
from . import magnus as magnus_mod
from . import noise as noise_mod
from . import sde as sde_mod
from . import stats as stats_mod
from . import qstate

KINDS = (
    "pauli", "projection", "twoqubit", "noncommuting",
    "approx-order", "distribution",
)

_SQ2 = 1.0 / math.sqrt(2.0)
NAMED_STATES = {
    "0": (1.0, 0.0),
    "1": (0.0, 1.0),
    "+": (_SQ2, _SQ2),
    "-": (_SQ2, -_SQ2),
    "00": (1.0, 0.0, 0.0, 0.0),
    "ghz": (_SQ2, 0.0, 0.0, _SQ2),
}

_ALLOWED_KEYS = {
    "scenario": {"kind", "state", "noise_op", "base_op", "hamiltonian", "alpha"},
    "noise": {"kind", "gamma", "k", "init"},
    "sim": {
        "dt", "t", "scheme", "renormalize", "n_paths", "master_seed",
        "record_every",
    },
    "output": {"dir", "t_slices", "scan_t"},
}


class ConfigError(ValueError):
    """Anything wrong with a scenario config (unknown key, bad value)."""


@dataclass(frozen=True)
class Scenario:
    name: str
    label: str
    model: noise_mod.NoiseModel
    state: np.ndarray
    sim: sde_mod.SimConfig
    out_dir: str
    noise_spec: str = "X"
    h_spec: str = "none"
    alpha: float = 1.0
    t_slices: tuple = ()
    scan_T: float = 0.0
    raw: dict = None

    def hamiltonian(self):
        d = self.state.shape[0]
        if self.h_spec == "none":
            return np.zeros((d, d), dtype=complex)
        h = qstate.build_operator(_parse_op_spec(self.h_spec))
        return self.alpha * h

    def noise_operator(self):
        if self.name == "twoqubit":
            base = qstate.build_operator(self.noise_spec)
            return qstate.build_operator(
                ("sum", ("tensor", self.noise_spec, "I"),
                 ("tensor", "I", self.noise_spec))
            ), np.kron(base, base)
        return qstate.build_operator(self.noise_spec), None


def _parse_op_spec(text):
    if text.startswith("control:"):
        parts = text[len("control:"):].split(",")
        if len(parts) != 3:
            raise ConfigError("control spec needs omega,phase,delta")
        return ("control",) + tuple(float(p) for p in parts)
    return text


def parse_state(text):
    text = text.strip().lower()
    if text in NAMED_STATES:
        return qstate.as_state(NAMED_STATES[text])
    try:
        amps = [complex(p.strip().replace(" ", "")) for p in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse state {text!r}") from exc
    return qstate.as_state(amps)


def _get(cfg, section, key, default=None):
    val = cfg.get(section, {}).get(key)
    return default if val is None else val


def resolve(cfg, label="custom"):
    """Turn a {section: {key: value-string}} mapping into a Scenario."""
    for section, entries in cfg.items():
        if section not in _ALLOWED_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        bad = set(entries) - _ALLOWED_KEYS[section]
        if bad:
            raise ConfigError(
                f"unknown keys in [{section}]: {', '.join(sorted(bad))}"
            )
    kind = _get(cfg, "scenario", "kind")
    if kind not in KINDS:
        raise ConfigError(f"scenario kind must be one of {KINDS}, got {kind!r}")

    try:
        model = noise_mod.NoiseModel(
            kind=_get(cfg, "noise", "kind", "ou"),
            gamma=float(_get(cfg, "noise", "gamma", "0.1")),
            k=float(_get(cfg, "noise", "k", "0.0")),
            init=_get(cfg, "noise", "init", noise_mod.CALIBRATED),
        )
        renorm = _get(cfg, "sim", "renormalize", "true").strip().lower()
        if renorm not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"bad boolean {renorm!r} for renormalize")
        sim = sde_mod.SimConfig(
            dt=float(_get(cfg, "sim", "dt", "0.001")),
            T=float(_get(cfg, "sim", "t", "1.0")),
            scheme=_get(cfg, "sim", "scheme", sde_mod.PLATEN_WEAK2),
            renormalize=renorm in ("true", "1", "yes"),
            n_paths=int(_get(cfg, "sim", "n_paths", "100")),
            master_seed=int(_get(cfg, "sim", "master_seed", "0")),
            record_every=int(_get(cfg, "sim", "record_every", "1")),
        )
        state = parse_state(_get(cfg, "scenario", "state", "0"))
        alpha = float(_get(cfg, "scenario", "alpha", "1.0"))
        slices = tuple(
            float(p)
            for p in _get(cfg, "output", "t_slices", "").split(",")
            if p.strip()
        )
        scan_T = float(_get(cfg, "output", "scan_t", "0"))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if kind == "twoqubit":
        op_spec = _get(cfg, "scenario", "base_op", "X")
        if state.shape[0] != 4:
            raise ConfigError("twoqubit scenarios need a two-qubit state")
    else:
        op_spec = _get(cfg, "scenario", "noise_op", "X")
    h_spec = _get(cfg, "scenario", "hamiltonian", "none")

    scn = Scenario(
        name=kind,
        label=label,
        model=model,
        state=state,
        sim=sim,
        out_dir=_get(cfg, "output", "dir", f"runs/{label}"),
        noise_spec=op_spec,
        h_spec=h_spec,
        alpha=alpha,
        t_slices=slices,
        scan_T=scan_T,
        raw=cfg,
    )
    _validate(scn)
    return scn


def _op_class(op):
    """'pauli' if op^2 = I, 'projection' if op^2 = op, else None."""
    sq = op @ op
    eye = np.eye(op.shape[0])
    if np.allclose(sq, eye, atol=1e-12):
        return "pauli"
    if np.allclose(sq, op, atol=1e-12):
        return "projection"
    return None


def _validate(scn):
    if scn.name == "noncommuting":
        if scn.h_spec not in ("X", "Y", "Z") or scn.noise_spec not in ("X", "Y", "Z"):
            raise ConfigError("noncommuting scenarios need single Pauli axes")
        if scn.h_spec == scn.noise_spec:
            raise ConfigError("drive and noise axes must differ")
        if scn.state.shape[0] != 2:
            raise ConfigError("noncommuting scenarios are single-qubit")
        return
    s_op, _ = scn.noise_operator()
    if scn.name == "twoqubit":
        base = qstate.build_operator(scn.noise_spec)
        if _op_class(base) is None:
            raise ConfigError("base_op must square to I or to itself")
    else:
        klass = _op_class(s_op)
        expected = {
            "pauli": "pauli",
            "projection": "projection",
            "approx-order": "pauli",
        }.get(scn.name, klass)
        if klass is None or klass != expected:
            raise ConfigError(
                f"noise_op {scn.noise_spec!r} does not match kind {scn.name!r}"
            )
    h = scn.hamiltonian()
    if np.abs(qstate.commutator(h, s_op)).max() > 1e-12:
        raise ConfigError("hamiltonian must commute with the noise operator")
    if scn.name == "distribution" and not scn.t_slices:
        raise ConfigError("distribution scenarios need t_slices")


def scenario_law(scn):
    """The exact fidelity law of a commuting scenario, as a ScenarioLaw."""
    s_op, r_op = scn.noise_operator()
    if scn.name == "twoqubit":
        base = qstate.build_operator(scn.noise_spec)
        klass = _op_class(base)
        s0 = qstate.expect_value(s_op, scn.state).real
        r0 = qstate.expect_value(r_op, scn.state).real
        series = laws_mod.two_qubit_law(s0, r0, klass)
        return laws_mod.ScenarioLaw(series=series, s0=s0, model=scn.model, r0=r0)
    klass = _op_class(s_op)
    ev = qstate.expect_value(s_op, scn.state).real
    if klass == "pauli":
        s0 = ev
        series = laws_mod.pauli_law(s0)
    else:
        s0 = math.sqrt(max(ev, 0.0))
        series = laws_mod.projection_law(s0)
    return laws_mod.ScenarioLaw(series=series, s0=s0, model=scn.model)


def magnus_system(scn):
    axes = {"X", "Y", "Z"} - {scn.h_spec, scn.noise_spec}
    triple = (scn.h_spec, scn.noise_spec, axes.pop())
    return magnus_mod.system_for_state(scn.alpha, scn.model.gamma, triple, scn.state)


def analytic_series(scn, times):
    """(mean, variance) arrays at the given times; variance nan when
    no closed form exists (noncommuting)."""
    times = np.asarray(times, dtype=float)
    if scn.name == "noncommuting":
        sys_ = magnus_system(scn)
        if scn.model.kind == noise_mod.WHITE:
            mean = magnus_mod.wn_mean_fidelity(sys_, scn.state, times)
        else:
            mean = np.array(
                [
                    magnus_mod.ou_second_order_mean(sys_, scn.state, scn.model, t).value
                    for t in times
                ]
            )
        return mean, np.full(times.shape, np.nan)
    law = scenario_law(scn)
    mean = np.empty(times.shape)
    var = np.empty(times.shape)
    for i, t in enumerate(times):
        mean[i], var[i] = laws_mod.series_mean_variance(law.series, scn.model, t)
    return mean, var


@dataclass
class RunResult:
    scenario: Scenario
    sim: sde_mod.SimulationResult
    analytic_mean: np.ndarray
    analytic_var: np.ndarray
    slice_samples: dict       # t -> (mc samples, law samples)
    closure: dict             # {} or {"times", "first", "second", "exact"}
    files: tuple


def _law_sample_stream(seed, idx):
    key = [(seed & (2**64 - 1)), 2**63 + idx]
    return np.random.Generator(np.random.Philox(key=key))


def run_scenario(scn):
    """Simulate, attach analytics, and write all artifacts (one writer)."""
    H = scn.hamiltonian()
    s_op, _ = scn.noise_operator()
    sim_result = sde_mod.simulate_paths(H, s_op, scn.model, scn.state, scn.sim)
    times = sim_result.times
    mean, var = analytic_series(scn, times)

    slice_samples = {}
    if scn.name == "distribution":
        law = scenario_law(scn)
        for i, t in enumerate(scn.t_slices):
            slot = _slot_for(scn, t)
            stream = _law_sample_stream(scn.sim.master_seed, i)
            law_samples = laws_mod.sample_distribution(
                law.series, scn.model, t, scn.sim.n_paths, stream
            )
            slice_samples[t] = (sim_result.fidelities[:, slot], law_samples)

    closure = {}
    if scn.name == "approx-order":
        law = scenario_law(scn)
        scan_T = scn.scan_T or scn.sim.T
        first = approx_mod.integrate_closure(
            approx_mod.first_order_system(scn.model.gamma, scn.model.k, abs(law.s0)),
            scan_T,
        )
        second = approx_mod.integrate_closure(
            approx_mod.second_order_system(scn.model.gamma, scn.model.k, abs(law.s0)),
            scan_T,
        )
        stride = max(1, int(round(0.05 / (first.times[1] - first.times[0]))))
        ctimes = first.times[::stride]
        exact = np.array(
            [
                laws_mod.series_mean_variance(law.series, scn.model, t)[0]
                for t in ctimes
            ]
        )
        closure = {
            "times": ctimes,
            "first": first.fidelity[::stride],
            "second": second.fidelity[::stride],
            "exact": exact,
        }

    files = _write_artifacts(scn, sim_result, mean, var, slice_samples, closure)
    return RunResult(
        scenario=scn,
        sim=sim_result,
        analytic_mean=mean,
        analytic_var=var,
        slice_samples=slice_samples,
        closure=closure,
        files=files,
    )


def _slot_for(scn, t):
    grid_dt = scn.sim.dt * scn.sim.record_every
    slot = int(round(t / grid_dt))
    if abs(slot * grid_dt - t) > 1e-9 or not (0 <= slot <= scn.sim.n_steps // scn.sim.record_every):
        raise ConfigError(f"t_slice {t} is not on the recording grid")
    return slot


def _fmt(x):
    return repr(float(x))


def _write_artifacts(scn, sim_result, mean, var, slice_samples, closure):
    os.makedirs(scn.out_dir, exist_ok=True)
    files = []

    path = os.path.join(scn.out_dir, "summary.csv")
    with open(path, "w") as fh:
        fh.write("t,analytic_mean,analytic_var,mc_mean,mc_stderr,mc_var\n")
        s = sim_result.summary
        for i in range(len(s.times)):
            fh.write(
                ",".join(
                    [
                        _fmt(s.times[i]), _fmt(mean[i]), _fmt(var[i]),
                        _fmt(s.mean_f[i]), _fmt(s.stderr_f[i]), _fmt(s.var_f[i]),
                    ]
                )
                + "\n"
            )
    files.append(path)

    for t, (mc, law) in sorted(slice_samples.items()):
        path = os.path.join(scn.out_dir, f"distribution_t{t:g}.csv")
        with open(path, "w") as fh:
            fh.write("mc_F,law_F\n")
            for a, b in zip(mc, law):
                fh.write(f"{_fmt(a)},{_fmt(b)}\n")
        files.append(path)

    if closure:
        path = os.path.join(scn.out_dir, "closure.csv")
        with open(path, "w") as fh:
            fh.write("t,first_order,second_order,exact\n")
            for i in range(len(closure["times"])):
                fh.write(
                    ",".join(
                        [
                            _fmt(closure["times"][i]),
                            _fmt(closure["first"][i]),
                            _fmt(closure["second"][i]),
                            _fmt(closure["exact"][i]),
                        ]
                    )
                    + "\n"
                )
        files.append(path)

    path = os.path.join(scn.out_dir, "run.json")
    doc = {
        "label": scn.label,
        "config": scn.raw,
        "seed": scn.sim.master_seed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "sselab": __import__("sselab").__version__,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(path)
    return tuple(files)


def check_run(result):
    """Figure-level sanity thresholds; list of failure strings (empty = ok)."""
    failures = []
    scn = result.scenario
    s = result.sim.summary
    ok = np.isfinite(result.analytic_mean) & np.isfinite(s.stderr_f) & (s.stderr_f > 0)
    if scn.name == "noncommuting":
        window = ok & (s.times <= 5.0 / scn.alpha)
        gap = np.abs(s.mean_f[window] - result.analytic_mean[window])
        if gap.size and gap.max() > 0.02:
            failures.append(
                f"MC mean deviates from the Magnus mean by {gap.max():.3g} "
                "(> 0.02) within the trusted window"
            )
    elif ok.any():
        dev = np.abs(s.mean_f[ok] - result.analytic_mean[ok]) / s.stderr_f[ok]
        frac = float((dev > 3.0).mean())
        if frac > 0.01:
            failures.append(
                f"{frac:.1%} of recorded times sit more than 3 stderr from "
                "the analytic mean (budget 1%)"
            )
    for t, (mc, law) in sorted(result.slice_samples.items()):
        ks = stats_mod.ks_distance(
            stats_mod.SampleSet(values=mc), stats_mod.SampleSet(values=law)
        )
        if ks > 0.05:
            failures.append(f"KS distance {ks:.3f} > 0.05 at t={t:g}")
    return failures


PRESETS = {
    "fig3": {
        "scenario": {"kind": "approx-order", "state": "0", "noise_op": "X"},
        "noise": {"kind": "ou", "gamma": "0.2", "k": "0.1", "init": "calibrated"},
        "sim": {
            "dt": "0.001", "t": "5.0", "n_paths": "200",
            "master_seed": "101", "record_every": "10",
        },
        "output": {"dir": "runs/fig3", "scan_t": "150"},
    },
    "fig4": {
        "scenario": {"kind": "distribution", "state": "0", "noise_op": "X"},
        "noise": {"kind": "ou", "gamma": "0.2", "k": "0.1", "init": "calibrated"},
        "sim": {
            "dt": "0.001", "t": "6.0", "n_paths": "2000",
            "master_seed": "102", "record_every": "60",
        },
        "output": {"dir": "runs/fig4", "t_slices": "0.06,0.3,1.5,6.0"},
    },
    "fig5": {
        "scenario": {
            "kind": "noncommuting", "state": "0",
            "hamiltonian": "X", "noise_op": "Z", "alpha": "1.0",
        },
        "noise": {"kind": "white", "gamma": "0.4"},
        "sim": {
            "dt": "0.001", "t": "12.0", "n_paths": "1000",
            "master_seed": "103", "record_every": "10",
        },
        "output": {"dir": "runs/fig5"},
    },
    "fig6": {
        "scenario": {"kind": "projection", "state": "+", "noise_op": "P1"},
        "noise": {"kind": "ou", "gamma": "0.1", "k": "0.1", "init": "stationary"},
        "sim": {
            "dt": "0.001", "t": "60.0", "n_paths": "500",
            "master_seed": "900", "record_every": "100",
        },
        "output": {"dir": "runs/fig6"},
    },
    "fig7a": {
        "scenario": {"kind": "twoqubit", "state": "00", "base_op": "X"},
        "noise": {"kind": "ou", "gamma": "0.2", "k": "0.3", "init": "stationary"},
        "sim": {
            "dt": "0.001", "t": "30.0", "n_paths": "500",
            "master_seed": "105", "record_every": "50",
        },
        "output": {"dir": "runs/fig7a"},
    },
    "fig7b": {
        "scenario": {"kind": "twoqubit", "state": "00", "base_op": "X"},
        "noise": {"kind": "ou", "gamma": "0.2", "k": "0.01", "init": "stationary"},
        "sim": {
            "dt": "0.002", "t": "400.0", "n_paths": "500",
            "master_seed": "106", "record_every": "500",
        },
        "output": {"dir": "runs/fig7b"},
    },
}


def preset_scenario(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    cfg = {section: dict(entries) for section, entries in PRESETS[name].items()}
    return resolve(cfg, label=name)
