"""Config-driven named experiments with CSV artifacts and a JSON run report.

Every experiment is deterministic given the config seed: walker streams are
counter-based per walker, CSV floats are written with shortest round-trip
formatting, and reports carry no timestamps, so identical configs produce
byte-identical artifacts.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import __version__, bohm, entropy_stats, nelson, qwalk
from .grid_wave import (
    Grid1D,
    Potential,
    Wavefunction,
    circular_difference,
    density,
    evolve,
    flux,
    make_potential,
    make_state,
    wrap,
)
from .qmap import QMap, build_qmap
from .qwalk import TransitionKernel

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "EXPERIMENTS",
    "OUTPUT_ROOT_ENV",
    "validate",
    "run",
    "load_config",
]

OUTPUT_ROOT_ENV = "QSPACELAB_OUTPUT_ROOT"

EXPERIMENTS = (
    "qe-stationarity",
    "qe-relaxation",
    "zero-noise-bohm",
    "nodal-crossing",
    "conditional-density",
    "typicality-histograms",
    "maxent-suite",
)


class ConfigError(ValueError):
    """Raised by run() when the config does not validate."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(self.findings))


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int | None
    output_dir: str
    grid: dict = field(default_factory=lambda: {"length": 1.0, "points": 512})
    state: dict = field(default_factory=lambda: {"kind": "uniform"})
    potential: dict = field(default_factory=lambda: {"kind": "zero"})
    kernel: dict = field(default_factory=lambda: {"kind": "wrapped-gaussian", "alpha": 0.5, "mass_exponent": 1.0})
    walkers: int = 1000
    time: dict = field(default_factory=lambda: {"total": 1.0, "dt": 0.01})
    histogram_bins: int = 64
    params: dict = field(default_factory=dict)
    schema_version: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError([f"unknown config fields: {sorted(unknown)}"])
        return cls(**{k: data[k] for k in data})

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class RunReport:
    experiment: str
    version: str
    passed: bool
    criteria: list
    metrics: dict
    artifacts: list
    config: dict
    failure: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# config -> objects

def _complex_list(values):
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    return out


def _build_grid(cfg: ExperimentConfig) -> Grid1D:
    return Grid1D(length=float(cfg.grid.get("length", 1.0)), points=int(cfg.grid.get("points", 512)))


def _build_state(cfg: ExperimentConfig, grid: Grid1D) -> Wavefunction:
    spec = dict(cfg.state)
    kind = spec.pop("kind")
    hbar = float(spec.pop("hbar", 1.0))
    mass = float(spec.pop("mass", 1.0))
    if "amplitudes" in spec:
        spec["amplitudes"] = _complex_list(spec["amplitudes"])
    return make_state(kind, grid, hbar=hbar, mass=mass, **spec)


def _build_potential(cfg: ExperimentConfig, grid: Grid1D) -> Potential:
    spec = dict(cfg.potential)
    kind = spec.pop("kind")
    return make_potential(kind, grid, **spec)


def _build_kernel(cfg: ExperimentConfig, psi: Wavefunction) -> TransitionKernel:
    spec = dict(cfg.kernel)
    kind = spec.pop("kind")
    if "d_q" in spec:
        return TransitionKernel(kind=kind, d_q=float(spec["d_q"]), speed=float(spec.get("speed", 1.0)))
    return TransitionKernel.for_state(
        kind,
        psi,
        alpha=float(spec.get("alpha", 0.5)),
        mass_exponent=float(spec.get("mass_exponent", 1.0)),
        speed=float(spec.get("speed", 1.0)),
    )


def _sample_times(cfg: ExperimentConfig) -> list[float]:
    total = float(cfg.time["total"])
    if "sample_times" in cfg.time:
        return [float(t) for t in cfg.time["sample_times"]]
    return [0.0, 0.5 * total, total]


def validate(config: ExperimentConfig) -> list[str]:
    """Field-level findings; the config is runnable iff the list is empty."""
    findings: list[str] = []
    if config.schema_version != 1:
        findings.append(f"schema_version: unsupported version {config.schema_version!r}")
    if config.experiment not in EXPERIMENTS:
        findings.append(f"experiment: unknown experiment {config.experiment!r}")
    if config.seed is None:
        findings.append("seed: seed required (runs never draw entropy from the environment)")
    elif not isinstance(config.seed, int):
        findings.append("seed: must be an integer")
    if not config.output_dir:
        findings.append("output_dir: must be a non-empty path")
    grid = None
    try:
        grid = _build_grid(config)
    except Exception as exc:
        findings.append(f"grid: {exc}")
    psi = None
    if grid is not None:
        try:
            psi = _build_state(config, grid)
        except Exception as exc:
            findings.append(f"state: {exc}")
        try:
            _build_potential(config, grid)
        except Exception as exc:
            findings.append(f"potential: {exc}")
    kernel = None
    try:
        probe = psi if psi is not None else make_state("uniform", Grid1D(1.0, 8))
        kernel = _build_kernel(config, probe)
    except Exception as exc:
        findings.append(f"kernel: {exc}")
    if config.walkers < 1:
        findings.append("walkers: must be at least 1")
    if config.histogram_bins < 2:
        findings.append("histogram_bins: must be at least 2")
    total = config.time.get("total")
    dt = config.time.get("dt")
    if total is None or total < 0:
        findings.append("time.total: must be non-negative")
    if dt is None or dt <= 0:
        findings.append("time.dt: must be positive")
    elif total is not None and total >= 0:
        n = round(total / dt)
        if abs(n * dt - total) > 1e-9 * max(1.0, total):
            findings.append("time.total: must be an integer multiple of time.dt")
        for ts in config.time.get("sample_times", []):
            if ts < 0 or ts > total:
                findings.append(f"time.sample_times: {ts} outside [0, total]")
            elif abs(round(ts / dt) * dt - ts) > 1e-9 * max(1.0, total):
                findings.append(f"time.sample_times: {ts} is not on the dt grid")
    if kernel is not None and config.experiment == "conditional-density" and kernel.kind in ("zero", "uniform-velocity"):
        findings.append("kernel: degenerate kernel density for the conditional-density experiment")
    return findings


# ---------------------------------------------------------------------------
# CSV and report plumbing

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: str, header, rows) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _criterion(name: str, value: float, threshold: float, op: str) -> dict:
    value = float(value)
    threshold = float(threshold)
    if op == "<":
        ok = value < threshold
    elif op == "<=":
        ok = value <= threshold
    elif op == ">=":
        ok = value >= threshold
    elif op == ">":
        ok = value > threshold
    else:
        raise ValueError(f"unknown comparator {op!r}")
    return {"name": name, "value": value, "threshold": threshold, "op": op, "passed": bool(ok)}


def _master_rng(seed: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(10_000 + purpose,)))


def _evolved_with_offset(psi0: Wavefunction, pot: Potential, dt: float, steps: int):
    """Evolve and accumulate the anchor current integral for map alignment."""
    psi = psi0
    phi = 0.0
    prev = psi.grid.length * float(flux(psi)[0])
    for _ in range(steps):
        psi = evolve(psi, pot, dt, 1)
        cur = psi.grid.length * float(flux(psi)[0])
        phi += 0.5 * (prev + cur) * dt
        prev = cur
    return psi, phi


def _expected_bin_masses(psi: Wavefunction, edges: np.ndarray) -> np.ndarray:
    qmap = build_qmap(psi)
    cum = np.asarray(qmap.cumulative(edges))
    return np.diff(cum) / psi.grid.length


def _trace_rows(trace: qwalk.EnsembleTrace):
    for ti, t in enumerate(trace.times):
        for w in range(trace.positions.shape[1]):
            yield t, w, trace.positions[ti, w], trace.labels[ti, w]


# ---------------------------------------------------------------------------
# experiments

def _run_qe_stationarity(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi0 = _build_state(cfg, grid)
    pot = _build_potential(cfg, grid)
    kernel = _build_kernel(cfg, psi0)
    m = cfg.walkers
    bins = cfg.histogram_bins
    total = float(cfg.time["total"])
    dt = float(cfg.time["dt"])
    sample_times = _sample_times(cfg)

    qmap0 = build_qmap(psi0)
    q_init = _master_rng(cfg.seed, 1).uniform(0.0, grid.length, m)
    x0 = np.asarray(qmap0.position_of(q_init))
    trace = qwalk.evolve_ensemble(x0, kernel, psi0, pot, total, dt, sample_times, cfg.seed)

    edges = np.linspace(0.0, grid.length, bins + 1)
    floor = 3.0 * entropy_stats.kl_floor(bins, m)
    kls = []
    hist_rows = []
    for ti, t in enumerate(trace.times):
        steps = int(round(t / dt))
        psi_t, _ = _evolved_with_offset(psi0, pot, dt, steps)
        expected = _expected_bin_masses(psi_t, edges)
        counts = np.histogram(trace.positions[ti], bins=edges)[0]
        kls.append(entropy_stats.kl_from_counts(counts, expected))
        for b in range(bins):
            hist_rows.append((t, edges[b], edges[b + 1], int(counts[b]), expected[b]))

    artifacts = [
        _write_csv(os.path.join(rundir, "ensemble.csv"), ["t", "walker_id", "x", "q"], _trace_rows(trace)),
        _write_csv(os.path.join(rundir, "histograms.csv"),
                   ["t", "bin_left", "bin_right", "count", "expected_mass"], hist_rows),
    ]
    criteria = [_criterion("kl_below_statistical_floor", max(kls), floor, "<")]
    metrics = {"kl_per_sample": [float(v) for v in kls], "kl_floor": floor,
               "sample_times": [float(t) for t in trace.times]}
    return criteria, metrics, artifacts


def _run_qe_relaxation(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi0 = _build_state(cfg, grid)
    pot = _build_potential(cfg, grid)
    kernel = _build_kernel(cfg, psi0)
    m = cfg.walkers
    total = float(cfg.time["total"])
    dt = float(cfg.time["dt"])
    sample_times = _sample_times(cfg)
    cells = int(cfg.params.get("coarse_cells", 16))
    cell = grid.length / cells
    per_cell = grid.points // cells

    x0 = _master_rng(cfg.seed, 1).uniform(0.0, grid.length, m)
    trace = qwalk.evolve_ensemble(x0, kernel, psi0, pot, total, dt, sample_times, cfg.seed)

    edges = np.linspace(0.0, grid.length, cells + 1)
    h_series = []
    s_series = []
    rows = []
    for ti, t in enumerate(trace.times):
        steps = int(round(t / dt))
        psi_t, _ = _evolved_with_offset(psi0, pot, dt, steps)
        counts = np.histogram(trace.positions[ti], bins=edges)[0]
        rho_grid = np.repeat(counts / (m * cell), per_cell)
        h_val = entropy_stats.coarse_H(rho_grid, density(psi_t), cell, grid.dx)
        s_val = entropy_stats.relative_entropy(rho_grid, grid.length * density(psi_t), grid.dx)
        h_series.append(h_val)
        s_series.append(s_val)
        rows.append((t, h_val, s_val))

    tol = 3.0 * entropy_stats.kl_floor(cells, m)
    worst_increase = max(
        (h_series[i + 1] - h_series[i] for i in range(len(h_series) - 1)), default=0.0
    )
    artifacts = [
        _write_csv(os.path.join(rundir, "entropy_series.csv"), ["t", "H_coarse", "S_relative"], rows),
        _write_csv(os.path.join(rundir, "ensemble.csv"), ["t", "walker_id", "x", "q"], _trace_rows(trace)),
    ]
    criteria = [
        _criterion("final_coarse_H_below_fifth_of_initial", h_series[-1], 0.2 * h_series[0], "<"),
        _criterion("coarse_H_non_increasing_within_noise", worst_increase, tol, "<="),
    ]
    metrics = {"H_coarse": [float(v) for v in h_series], "S_relative": [float(v) for v in s_series],
               "noise_tolerance": tol}
    return criteria, metrics, artifacts


def _run_zero_noise_bohm(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi0 = _build_state(cfg, grid)
    pot = _build_potential(cfg, grid)
    m = cfg.walkers
    total = float(cfg.time["total"])
    dt = float(cfg.time["dt"])
    sample_times = _sample_times(cfg)
    tolerance = float(cfg.params.get("tolerance", 1e-3))

    x0 = (np.arange(m) + 0.5) * grid.length / m
    kernel = TransitionKernel(kind="zero", d_q=0.0)
    trace = qwalk.evolve_ensemble(x0, kernel, psi0, pot, total, dt, sample_times, cfg.seed)

    wanted = {int(round(t / dt)) for t in sample_times}
    bohm_rows = []
    bohm_positions = {}
    for t, xw, _xu, _psi in bohm.drive(psi0, pot, x0, total, dt):
        k = int(round(t / dt))
        if k in wanted:
            bohm_positions[k] = xw.copy()
            for w in range(m):
                bohm_rows.append((t, w, xw[w]))

    deviations = []
    for ti, t in enumerate(trace.times):
        k = int(round(t / dt))
        dev = np.abs(circular_difference(trace.positions[ti], bohm_positions[k], grid.length))
        deviations.append(float(dev.max()))

    artifacts = [
        _write_csv(os.path.join(rundir, "bohm_trajectories.csv"), ["t", "walker_id", "x"], bohm_rows),
        _write_csv(os.path.join(rundir, "qwalk_trajectories.csv"), ["t", "walker_id", "x", "q"], _trace_rows(trace)),
        _write_csv(os.path.join(rundir, "deviation.csv"), ["t", "max_deviation"],
                   list(zip([float(t) for t in trace.times], deviations))),
    ]
    criteria = [_criterion("max_traj_deviation", max(deviations), tolerance, "<")]
    metrics = {"max_deviation_per_sample": deviations}
    return criteria, metrics, artifacts


def _run_nodal_crossing(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi0 = _build_state(cfg, grid)
    pot = _build_potential(cfg, grid)
    kernel = _build_kernel(cfg, psi0)
    m = cfg.walkers
    total = float(cfg.time["total"])
    sample_dt = float(cfg.params.get("sample_dt", cfg.time["dt"]))
    ladder = [float(v) for v in cfg.params.get("dt_ladder", [sample_dt, sample_dt / 2, sample_dt / 4])]
    band = float(cfg.params.get("band_cells", 2)) * grid.dx
    nodes = [float(v) for v in cfg.params.get("nodes", [grid.length / 4, 3 * grid.length / 4])]
    assume_static = bool(cfg.params.get("assume_static", True))

    qmap0 = build_qmap(psi0)
    x0 = np.asarray(qmap0.position_of(_master_rng(cfg.seed, 1).uniform(0.0, grid.length, m)))

    sample_times = [k * sample_dt for k in range(int(round(total / sample_dt)) + 1)]
    rows = []
    rates = {"nelson": [], "qwalk": []}
    errors = {"nelson": [], "qwalk": []}
    for li, dt_i in enumerate(ladder):
        params = nelson.NelsonParams(nu=0.5 * psi0.hbar / psi0.mass, dt=dt_i)
        stride = int(round(sample_dt / dt_i))
        _times, ns = nelson.evolve_ensemble(x0, psi0, pot, params, total, seed=cfg.seed + 1 + li,
                                            sample_stride=stride, assume_static=assume_static)
        n_counts = sum(nelson.count_crossings(ns, node, band, grid.length) for node in nodes)
        n_rate, n_se = nelson.crossing_rate(n_counts, total)
        rates["nelson"].append(n_rate)
        errors["nelson"].append(n_se)
        rows.append(("nelson", dt_i, n_rate, m, n_rate - 1.96 * n_se, n_rate + 1.96 * n_se))

        trace = qwalk.evolve_ensemble(x0, kernel, psi0, pot, total, dt_i, sample_times,
                                      cfg.seed + 101 + li)
        q_counts = sum(nelson.count_crossings(trace.positions, node, band, grid.length) for node in nodes)
        q_rate, q_se = nelson.crossing_rate(q_counts, total)
        rates["qwalk"].append(q_rate)
        errors["qwalk"].append(q_se)
        rows.append(("qwalk", dt_i, q_rate, m, q_rate - 1.96 * q_se, q_rate + 1.96 * q_se))

    artifacts = [
        _write_csv(os.path.join(rundir, "crossing_rates.csv"),
                   ["dynamics", "dt", "crossings_per_unit_time", "walkers", "ci_low", "ci_high"], rows)
    ]
    nelson_increase = max(
        (rates["nelson"][i + 1] - rates["nelson"][i] for i in range(len(ladder) - 1)), default=0.0
    )
    qwalk_shift = max(
        (abs(rates["qwalk"][i] - rates["qwalk"][0]) - 3.0 * (errors["qwalk"][i] + errors["qwalk"][0])
         for i in range(1, len(ladder))),
        default=0.0,
    )
    criteria = [
        _criterion("qwalk_rate_at_least_10x_nelson", rates["qwalk"][0], 10.0 * rates["nelson"][0], ">="),
        _criterion("qwalk_crossings_strictly_positive", rates["qwalk"][0], 0.0, ">"),
        _criterion("nelson_rate_decreases_under_refinement", nelson_increase, 0.0, "<"),
        _criterion("qwalk_rate_stable_under_refinement", qwalk_shift, 0.0, "<="),
    ]
    metrics = {"nelson_rates": rates["nelson"], "qwalk_rates": rates["qwalk"],
               "nelson_se": errors["nelson"], "qwalk_se": errors["qwalk"], "dt_ladder": ladder}
    return criteria, metrics, artifacts


def _run_conditional_density(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    pot = _build_potential(cfg, grid)
    m = cfg.walkers
    bins = cfg.histogram_bins
    dt = float(cfg.time["dt"])
    p_threshold = float(cfg.params.get("p_threshold", 0.01))
    scenarios = cfg.params.get("scenarios") or [
        {"name": "identity-map", "state": {"kind": "uniform"}, "x1": 0.3, "delta_t": 0.01},
        {"name": "sine-squared-map",
         "state": {"kind": "two-mode", "modes": [0, 1],
                   "amplitudes": [[0.7071067811865476, 0.0], [-0.7071067811865476, 0.0]]},
         "x1": 0.5, "delta_t": 0.01},
    ]

    edges = np.linspace(0.0, grid.length, bins + 1)
    rng = _master_rng(cfg.seed, 2)
    rows = []
    p_values = {}
    norm_defects = {}
    artifacts = []
    for sc in scenarios:
        sub = replace(cfg, state=sc["state"])
        psi1 = _build_state(sub, grid)
        kernel = _build_kernel(cfg, psi1)
        delta_t = float(sc["delta_t"])
        steps = int(round(delta_t / dt))
        if abs(steps * dt - delta_t) > 1e-9:
            raise ValueError(f"scenario {sc['name']}: delta_t must sit on the dt grid")
        x1 = float(sc["x1"])
        map1 = build_qmap(psi1)
        psi2, phi = _evolved_with_offset(psi1, pot, dt, steps)
        map2 = replace(build_qmap(psi2), offset=phi)

        q1 = float(map1.label_of(x1))
        dq = kernel.sample(rng, m, delta_t, grid.length)
        x2 = np.asarray(map2.position_of(wrap(q1 + dq, grid.length)))
        counts = np.histogram(x2, bins=edges)[0]
        expected = qwalk.conditional_interval_probabilities(map1, map2, x1, kernel, delta_t, edges)
        _stat, _dof, p_val = entropy_stats.chi_square_gof(counts, expected)
        p_values[sc["name"]] = p_val

        predicted = qwalk.conditional_density_predicted(map1, map2, psi2, x1, kernel, delta_t)
        norm_defects[sc["name"]] = abs(float(np.sum(predicted) * grid.dx) - 1.0)
        rows.extend((sc["name"], edges[b], edges[b + 1], expected[b], int(counts[b])) for b in range(bins))
        artifacts.append(_write_csv(os.path.join(rundir, f"predicted_{sc['name']}.csv"),
                                    ["x", "rho_predicted"], zip(grid.x, predicted)))

    artifacts.insert(0, _write_csv(os.path.join(rundir, "conditional_histograms.csv"),
                                   ["scenario", "bin_left", "bin_right", "expected_probability", "count"], rows))
    criteria = [
        _criterion(f"chi_square_p_{name}", p, p_threshold, ">") for name, p in p_values.items()
    ] + [
        _criterion("predicted_density_normalized", max(norm_defects.values()), 1e-6, "<")
    ]
    metrics = {"p_values": p_values, "normalization_defects": norm_defects}
    return criteria, metrics, artifacts


def _run_typicality_histograms(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi = _build_state(cfg, grid)
    qmap = build_qmap(psi)
    interval_sets = cfg.params.get("interval_sets") or [
        {"name": "full-domain", "intervals": [[0.0, grid.length]]},
        {"name": "left-half", "intervals": [[0.0, 0.5 * grid.length]]},
        {"name": "two-pieces", "intervals": [[0.1 * grid.length, 0.2 * grid.length],
                                             [0.6 * grid.length, 0.9 * grid.length]]},
    ]
    ladder = [int(v) for v in cfg.params.get("volume_law_M", [4, 100, 10000])]

    rows = []
    identity_defect = 0.0
    values = {}
    for iset in interval_sets:
        t_val = entropy_stats.typicality(psi, iset["intervals"])
        q_frac = sum(qmap.interval_volume(a, b) for a, b in iset["intervals"]) / grid.length
        identity_defect = max(identity_defect, abs(t_val - q_frac))
        values[iset["name"]] = t_val
        rows.append((iset["name"], t_val, q_frac))

    vl_rows = []
    ratios = []
    for m_total in ladder:
        h = entropy_stats.Histogram.regular([m_total // 2, m_total - m_total // 2], grid.length)
        ratio = entropy_stats.volume_law_ratio(h)
        ratios.append(ratio)
        vl_rows.append((m_total, entropy_stats.log_sequence_count(h), entropy_stats.histogram_entropy(h), ratio))

    artifacts = [
        _write_csv(os.path.join(rundir, "typicality.csv"), ["set", "typicality", "q_volume_fraction"], rows),
        _write_csv(os.path.join(rundir, "volume_law.csv"), ["M", "ln_W", "S_h", "ratio"], vl_rows),
    ]
    full = values.get("full-domain", entropy_stats.typicality(psi, [[0.0, grid.length]]))
    monotone_defect = max((ratios[i] - ratios[i + 1] for i in range(len(ratios) - 1)), default=-1.0)
    criteria = [
        _criterion("full_domain_typicality_is_one", abs(full - 1.0), 1e-12, "<"),
        _criterion("typicality_equals_q_volume_fraction", identity_defect, 1e-9, "<"),
        _criterion("volume_law_ratio_strictly_increasing", monotone_defect, 0.0, "<"),
    ]
    metrics = {"typicality": values, "volume_law_ratios": ratios}
    return criteria, metrics, artifacts


def _run_maxent_suite(cfg: ExperimentConfig, rundir: str):
    grid = _build_grid(cfg)
    psi = _build_state(cfg, grid)
    mean_target = float(cfg.params.get("mean_target", 0.6))

    # complete-ignorance solve over the state-volume measure returns |psi|^2
    x_closed = np.append(grid.x, grid.length)
    omega = grid.length * np.append(density(psi), density(psi)[0])
    ignorance = entropy_stats.maxent_solve(
        entropy_stats.MaxEntProblem(x=x_closed, measure=omega, moments=np.array([]))
    )
    rho_closed = np.append(density(psi), density(psi)[0])
    qe_defect = float(np.max(np.abs(ignorance.density - rho_closed)))

    # mean-constrained solve over a uniform measure, against a scalar root-find
    xs = np.linspace(0.0, 1.0, 2001)
    uniform = np.ones_like(xs)
    symmetric = entropy_stats.maxent_solve(
        entropy_stats.MaxEntProblem(x=xs, measure=uniform, moments=np.array([0.5]))
    )
    shifted = entropy_stats.maxent_solve(
        entropy_stats.MaxEntProblem(x=xs, measure=uniform, moments=np.array([mean_target]))
    )

    def mean_for(lam: float) -> float:
        w = np.exp(-lam * xs)
        return float(np.trapezoid(xs * w, xs) / np.trapezoid(w, xs))

    lam_oracle = brentq(lambda lam: mean_for(lam) - mean_target, -200.0, 200.0, xtol=1e-13)
    oracle_defect = abs(float(shifted.multipliers[0]) - lam_oracle)

    residual = 0.0
    for prob in (symmetric, shifted):
        got = np.trapezoid(prob.x * prob.density, prob.x)
        residual = max(residual, abs(float(got) - float(prob.moments[0])))

    rows = [
        ("ignorance", 0, 0.0),
        ("symmetric-mean", 1, float(symmetric.multipliers[0])),
        ("shifted-mean", 1, float(shifted.multipliers[0])),
    ]
    artifacts = [
        _write_csv(os.path.join(rundir, "multipliers.csv"), ["problem", "k", "lambda_k"], rows),
        _write_csv(os.path.join(rundir, "densities.csv"), ["x", "ignorance_density"],
                   zip(x_closed, ignorance.density)),
    ]
    criteria = [
        _criterion("qe_as_zero_constraint_maxent", qe_defect, 1e-10, "<"),
        _criterion("symmetric_mean_multiplier_zero", abs(float(symmetric.multipliers[0])), 1e-8, "<"),
        _criterion("mean_multiplier_matches_root_find", oracle_defect, 1e-8, "<"),
        _criterion("moment_residuals", residual, 1e-8, "<"),
    ]
    metrics = {"lambda_oracle": float(lam_oracle), "lambda_newton": float(shifted.multipliers[0]),
               "qe_identity_defect": qe_defect}
    return criteria, metrics, artifacts


_RUNNERS = {
    "qe-stationarity": _run_qe_stationarity,
    "qe-relaxation": _run_qe_relaxation,
    "zero-noise-bohm": _run_zero_noise_bohm,
    "nodal-crossing": _run_nodal_crossing,
    "conditional-density": _run_conditional_density,
    "typicality-histograms": _run_typicality_histograms,
    "maxent-suite": _run_maxent_suite,
}


def resolve_run_dir(config: ExperimentConfig) -> str:
    root = os.environ.get(OUTPUT_ROOT_ENV, os.getcwd())
    return os.path.join(root, config.output_dir)


def run(config: ExperimentConfig) -> RunReport:
    """Execute one named experiment; always writes report.json into the run dir."""
    findings = validate(config)
    if findings:
        raise ConfigError(findings)
    rundir = resolve_run_dir(config)
    os.makedirs(rundir, exist_ok=True)
    try:
        criteria, metrics, artifacts = _RUNNERS[config.experiment](config, rundir)
        report = RunReport(
            experiment=config.experiment,
            version=__version__,
            passed=all(c["passed"] for c in criteria),
            criteria=criteria,
            metrics=metrics,
            artifacts=[os.path.relpath(a, rundir) for a in artifacts],
            config=config.to_dict(),
        )
    except Exception as exc:  # runtime failure: report it, never lose the run
        report = RunReport(
            experiment=config.experiment,
            version=__version__,
            passed=False,
            criteria=[],
            metrics={},
            artifacts=[],
            config=config.to_dict(),
            failure=f"{type(exc).__name__}: {exc}",
        )
    with open(os.path.join(rundir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
