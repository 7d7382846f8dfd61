"""Scenario orchestration: data sets, controller synthesis, paired simulations and metrics."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .ctrl import (
    ControllerSpec,
    RecentWindow,
    StepRecord,
    TubeExceedsConstraints,
    compose_input,
    timed,
    solve_deepc,
    solve_mpc,
    solve_rdeep,
    tighten_constraints,
)
from .datagen import (
    DataArchive,
    check_data_length,
    collect_archive,
    generate_excitation,
    minimum_data_length,
    partition_hankels,
)
from .gainsynth import GainResult, GainSynthesisError, synthesize_gain
from .platoon import (
    CollisionError,
    OvmParams,
    PlatoonState,
    build_model,
    deviation_state,
    equilibrium_spacing,
    ovm_acceleration,
    step_nonlinear,
)
from .qp import QPInfeasibleError, QPNotConvergedError
from .sysid import ReachTube, SystemSet, default_noise, error_reach_tube, estimate_system_set

__all__ = [
    "ConfigError",
    "CollectionError",
    "collect_with_retries",
    "dataset_streams",
    "ScenarioConfig",
    "DatasetArtifacts",
    "TrajectoryLog",
    "MetricsReport",
    "head_profile_sinusoid",
    "head_profile_cycle",
    "load_cycle",
    "prepare_dataset",
    "run_scenario",
    "metric_rm",
    "metric_rs",
    "compare_datasets",
    "write_trajectory_csv",
    "write_metrics_csv",
]

METHOD_ORDER = ("hdv", "mpc", "deepc", "rdeep")
LABELS = {"hdv": "all-HDV", "mpc": "MPC", "deepc": "DeeP-LCC", "rdeep": "RDeeP-LCC"}
KMH = 1 / 3.6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "sinusoid"  # sinusoid | drive_cycle | custom
    amplitude: float = 4.0
    period: float = 10.0
    T_s: float = 30.0
    v_star: float = 15.0
    equilibrium: str = "fixed"  # fixed | tracking
    profile_file: str | None = None
    seed: int = 0
    methods: tuple = METHOD_ORDER
    datasets: int = 20
    # platoon
    n: int = 3
    dt: float = 0.1
    alpha: float = 0.6
    beta: float = 0.9
    s_min: float = 5.0
    s_max_ovm: float = 35.0
    v_max_ovm: float = 30.0
    # offline data
    T: int = 1000
    u_bound: float = 0.2
    e_bound: float = 0.5
    noise_bound: float = 0.05
    cav_prior: bool = False
    collect_attempts: int = 20
    sim_noise: bool = True
    # sets and gain
    w_bound: float = 0.05
    eps_bound: float = 0.5
    reduction_budget: int | None = None
    epsilon: float = 0.01
    delta: float = 0.001
    margin: float = 1e-6
    # controllers
    T_ini: int = 20
    N: int = 5
    N_deepc: int = 20
    rho_s: float = 0.5
    rho_v: float = 1.0
    R: float = 0.1
    lambda_g: float = 10.0
    lambda_sigma: float = 10.0
    s_max: float = 7.0
    v_max: float = 7.0
    u_max: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        problems = []
        if self.scenario not in ("sinusoid", "drive_cycle", "custom"):
            problems.append(f"unknown scenario {self.scenario!r}")
        if self.scenario == "custom" and not self.profile_file:
            problems.append("custom scenario needs profile_file")
        if self.equilibrium not in ("fixed", "tracking"):
            problems.append(f"unknown equilibrium policy {self.equilibrium!r}")
        if not self.T_s > 0:
            problems.append("T_s must be positive")
        if self.amplitude < 0:
            problems.append("amplitude must be nonnegative")
        if not self.period > 0:
            problems.append("period must be positive")
        if not self.dt > 0:
            problems.append("dt must be positive")
        if self.datasets < 1 or self.n < 1:
            problems.append("datasets and n must be positive")
        bad = [m for m in self.methods if m not in METHOD_ORDER]
        if bad or not self.methods:
            problems.append(f"methods must be a nonempty subset of {METHOD_ORDER}, got {list(self.methods)}")
        if self.collect_attempts < 1:
            problems.append("collect_attempts must be positive")
        if not 0 < self.v_star < self.v_max_ovm:
            problems.append("v_star must lie strictly inside (0, v_max_ovm)")
        if min(self.alpha, self.beta) <= 0 or self.s_min >= self.s_max_ovm:
            problems.append("OVM needs alpha, beta > 0 and s_min < s_max_ovm")
        if self.T_ini < 2 * self.n:
            problems.append(f"T_ini={self.T_ini} below 2n={2 * self.n}")
        if self.N < 1 or self.N_deepc < 1:
            problems.append("horizons must be positive")
        elif not check_data_length(self.T, self.T_ini, max(self.N, self.N_deepc), self.n):
            need = minimum_data_length(self.T_ini, max(self.N, self.N_deepc), self.n)
            problems.append(f"T={self.T} below the minimum data length {need}")
        if min(self.R, self.lambda_g, self.lambda_sigma) <= 0 or min(self.rho_s, self.rho_v) < 0:
            problems.append("R, lambda_g, lambda_sigma must be positive and rho_s, rho_v nonnegative")
        if min(self.s_max, self.v_max, self.u_max) <= 0:
            problems.append("constraint limits must be positive")
        if min(self.u_bound, self.e_bound, self.noise_bound, self.w_bound, self.eps_bound) < 0:
            problems.append("excitation and noise bounds must be nonnegative")
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            problems.append("epsilon and delta must lie in (0, 1)")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @property
    def ovm(self) -> OvmParams:
        return OvmParams(self.alpha, self.beta, self.s_min, self.s_max_ovm, self.v_max_ovm)

    @property
    def steps(self) -> int:
        return int(round(self.T_s / self.dt))


def head_profile_sinusoid(t, v_star: float, amplitude: float, period: float):
    if period <= 0:
        raise ValueError("period must be positive")
    return v_star + amplitude * np.sin(2 * np.pi * np.asarray(t, dtype=float) / period)


def load_cycle(path=None) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints (t [s], v [m/s]); the bundled file is the ECE-15 cycle in km/h."""
    try:
        if path is None:
            text = resources.files("rdeeplcc").joinpath("data/ece15.csv").read_text()
        else:
            text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read cycle table: {exc}") from exc
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ConfigError("empty cycle table")
    header = [h.strip() for h in rows[0].split(",")]
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"invalid cycle table: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigError("cycle table needs two columns and at least two rows")
    t, v = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ConfigError("cycle times must be strictly increasing")
    if len(header) > 1 and header[1].endswith("kmh"):
        v = v * KMH
    return t, v


def head_profile_cycle(t, table) -> np.ndarray:
    """Piecewise-linear interpolation of the table, clamped at its ends."""
    tt, vv = table
    return np.interp(np.asarray(t, dtype=float), tt, vv)


def _head_profile(cfg: ScenarioConfig):
    if cfg.scenario == "sinusoid":
        return lambda t: head_profile_sinusoid(t, cfg.v_star, cfg.amplitude, cfg.period)
    table = load_cycle(None if cfg.scenario == "drive_cycle" else cfg.profile_file)
    return lambda t: head_profile_cycle(t, table)


# ---------------------------------------------------------------- data sets

@dataclass(frozen=True, eq=False)
class DatasetArtifacts:
    dataset: int
    seed: int
    archive: DataArchive
    system: SystemSet | None = None
    gain: GainResult | None = None
    tube: ReachTube | None = None
    specs: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)  # method -> reason synthesis failed


def dataset_streams(seed: int):
    """Independent (collection, gain sampling, simulation noise) generators for one seed."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def _base_spec(cfg: ScenarioConfig, method: str, **kw) -> ControllerSpec:
    return ControllerSpec(method=method, n=cfg.n, T_ini=cfg.T_ini, N=kw.pop("N", cfg.N),
                          rho_s=cfg.rho_s, rho_v=cfg.rho_v, R=cfg.R, lambda_g=cfg.lambda_g,
                          lambda_sigma=cfg.lambda_sigma, s_max=cfg.s_max, v_max=cfg.v_max,
                          u_max=cfg.u_max, **kw)


class CollectionError(RuntimeError):
    pass


def collect_with_retries(cfg: ScenarioConfig, model, rng, meta=None) -> DataArchive:
    """Collect one archive; a draw whose excitation drives a vehicle into collision
    is discarded and a fresh excitation drawn from the same stream."""
    for attempt in range(1, cfg.collect_attempts + 1):
        excitation = generate_excitation(cfg.T, cfg.u_bound, cfg.e_bound, rng)
        try:
            return collect_archive(model, excitation, cfg.noise_bound, rng, cav_prior=cfg.cav_prior,
                                   pe_order=cfg.T_ini + max(cfg.N, cfg.N_deepc) + 2 * cfg.n,
                                   meta={**(meta or {}), "attempts": attempt})
        except CollisionError:
            continue
    raise CollectionError(f"every one of {cfg.collect_attempts} collection attempts ended in a collision")


def prepare_dataset(cfg: ScenarioConfig, dataset: int, methods=None,
                    archive: DataArchive | None = None) -> DatasetArtifacts:
    """Collect one archive (unless given) and synthesize what the requested methods need."""
    methods = cfg.methods if methods is None else tuple(methods)
    seed = cfg.seed + dataset
    rng_data, rng_gain, _ = dataset_streams(seed)
    model = build_model(cfg.n, cfg.v_star, cfg.dt, cfg.ovm)
    if archive is None:
        archive = collect_with_retries(cfg, model, rng_data, {"dataset": dataset, "seed": seed})
    elif archive.n != cfg.n:
        raise ConfigError(f"archive holds a platoon of {archive.n}, config asks for {cfg.n}")
    specs, errors = {}, {}
    system = gain = tube = None
    if "mpc" in methods:
        specs["mpc"] = _base_spec(cfg, "mpc")
    if "deepc" in methods:
        specs["deepc"] = _base_spec(cfg, "deepc", N=cfg.N_deepc,
                                    hankels=partition_hankels(archive, cfg.T_ini, cfg.N_deepc))
    if "rdeep" in methods:
        noise = default_noise(cfg.n, cfg.w_bound, cfg.eps_bound)
        system = estimate_system_set(archive, noise)
        Q = np.diag(np.tile([cfg.rho_s, cfg.rho_v], cfg.n))
        try:
            gain = synthesize_gain(system.m_ab, (Q, [[cfg.R]]), cfg.epsilon, cfg.delta, cfg.margin,
                                   rng_gain, seed=seed)
        except GainSynthesisError as exc:
            errors["rdeep"] = f"gain synthesis: {exc}"
        if gain is not None:
            tube = error_reach_tube(system, gain.K, noise, None, cfg.N, cfg.reduction_budget)
            spec = _base_spec(cfg, "rdeep", hankels=partition_hankels(archive, cfg.T_ini, cfg.N),
                              tube=tube, K=gain.K)
            try:
                tighten_constraints(spec.x_box, spec.u_box, tube, gain.K)
                specs["rdeep"] = spec
            except TubeExceedsConstraints as exc:
                errors["rdeep"] = str(exc)
    return DatasetArtifacts(dataset, seed, archive, system, gain, tube, specs, errors)


# ---------------------------------------------------------------- simulation

@dataclass(eq=False)
class TrajectoryLog:
    method: str
    dataset: int
    t: np.ndarray
    positions: np.ndarray  # (K, n+1)
    velocities: np.ndarray  # (K, n+1)
    accelerations: np.ndarray  # (K, n+1) commanded at each sample (nan after the last step)
    v_reference: np.ndarray  # (K,) velocity the metrics are measured against
    status: str = "ok"  # ok | collision | solver_failure | infeasible | unavailable
    message: str = ""
    records: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.status == "ok"

    @property
    def spacings(self) -> np.ndarray:
        return -np.diff(self.positions, axis=1)


def _reference(cfg: ScenarioConfig, v_head: np.ndarray) -> np.ndarray:
    if cfg.equilibrium == "fixed":
        return np.full_like(v_head, cfg.v_star)
    vm = cfg.v_max_ovm
    return np.clip(v_head, 0.05 * vm, 0.95 * vm)


def _simulate(cfg, method, spec, noise, profile, dataset) -> TrajectoryLog:
    p = cfg.ovm
    params = (p,) * cfg.n
    steps = cfg.steps
    t = np.arange(steps + 1) * cfg.dt
    v_head = profile(t)
    v_ref = _reference(cfg, v_head)
    s_ref = np.array([equilibrium_spacing(p, v) for v in v_ref])
    metric_ref = v_head if cfg.equilibrium == "tracking" else np.full(steps + 1, cfg.v_star)
    pos0 = -np.concatenate([[0.0], np.cumsum(np.full(cfg.n, s_ref[0]))])
    vel0 = np.full(cfg.n + 1, v_ref[0] if cfg.equilibrium == "fixed" else v_head[0])
    vel0[0] = v_head[0]
    state = PlatoonState(pos0, vel0)
    P = np.full((steps + 1, cfg.n + 1), np.nan)
    V = np.full_like(P, np.nan)
    Acc = np.full_like(P, np.nan)
    raw_u = np.zeros(steps + 1)
    log = TrajectoryLog(method, dataset, t, P, V, Acc, metric_ref)
    models = {}

    def model_at(v):
        key = round(float(v), 12)
        if key not in models:
            models[key] = build_model(cfg.n, v, cfg.dt, params)
        return models[key]

    def window_at(k):
        sl = slice(k - cfg.T_ini, k)
        sp = -np.diff(P[sl], axis=1)
        xs = np.empty((cfg.T_ini, 2 * cfg.n))
        xs[:, 0::2] = sp - s_ref[k]
        xs[:, 1::2] = V[sl, 1:] - v_ref[k]
        return RecentWindow.from_arrays(xs, raw_u[sl], V[sl, 0] - v_ref[k])

    for k in range(steps + 1):
        P[k], V[k] = state.positions, state.velocities
        if k == steps:
            break
        s, v = state.spacings, state.velocities
        hdv_acc = np.array([ovm_acceleration(p, s[i], v[i] - v[i + 1], v[i + 1]) for i in range(cfg.n)])
        u = None
        rec = None
        if method != "hdv" and k >= cfg.T_ini:
            x, eps = deviation_state(state, s_ref[k], v_ref[k])
            try:
                if method == "mpc":
                    sol, dt_solve = timed(solve_mpc, model_at(v_ref[k]), spec, x, eps)
                    u_first, obj, kkt, sig = float(sol.u[0]), sol.objective, sol.kkt_residual, 0.0
                    u_raw = u_first
                else:
                    solver = solve_rdeep if method == "rdeep" else solve_deepc
                    sol, dt_solve = timed(solver, spec, window_at(k))
                    u_first, obj, kkt = float(sol.u_z[0]), sol.objective, sol.kkt_residual
                    sig = float(np.linalg.norm(sol.sigma))
                    u_raw = compose_input(u_first, spec.gain, x, sol.x_z_first) if method == "rdeep" else u_first
            except (QPInfeasibleError, QPNotConvergedError) as exc:
                log.status, log.message = "solver_failure", f"step {k}: {exc}"
                break
            u = float(np.clip(u_raw, -cfg.u_max, cfg.u_max))
            rec = StepRecord(k, method, u_first, u, obj, kkt, sig, dt_solve, u != u_raw)
            log.records.append(rec)
        acc = hdv_acc.copy()
        if u is not None:
            acc[0] = u
        raw_u[k] = acc[0]
        Acc[k, 1:] = acc
        Acc[k, 0] = (v_head[k + 1] - v_head[k]) / cfg.dt
        w = noise[k] if noise is not None else None
        try:
            state = step_nonlinear(state, u, v_head[k + 1], w, cfg.dt, params)
        except CollisionError as exc:
            log.status, log.message = "collision", f"step {k}: {exc}"
            break
    if not log.valid:
        last = k + (1 if log.status == "collision" else 0)
        keep = slice(0, last)
        log.t, log.positions, log.velocities = t[keep], P[keep], V[keep]
        log.accelerations, log.v_reference = Acc[keep], metric_ref[keep]
    return log


def run_scenario(cfg: ScenarioConfig, artifacts: DatasetArtifacts | None = None, methods=None,
                 dataset: int = 0) -> dict:
    """Run each method on the same head profile and noise realization."""
    methods = cfg.methods if methods is None else tuple(methods)
    needs_data = any(m != "hdv" for m in methods)
    if artifacts is None and needs_data:
        artifacts = prepare_dataset(cfg, dataset, methods)
    if artifacts is not None:
        dataset = artifacts.dataset
    _, _, rng_sim = dataset_streams(cfg.seed + dataset)
    noise = None
    if cfg.sim_noise and cfg.noise_bound > 0:
        noise = rng_sim.uniform(-cfg.noise_bound, cfg.noise_bound, size=(cfg.steps, 2 * cfg.n))
    profile = _head_profile(cfg)
    out = {}
    for m in methods:
        spec = None
        if m != "hdv":
            spec = artifacts.specs.get(m)
            if spec is None:
                reason = artifacts.errors.get(m, "controller not prepared")
                status = "infeasible"
                out[m] = TrajectoryLog(m, dataset, np.zeros(0), np.zeros((0, cfg.n + 1)),
                                       np.zeros((0, cfg.n + 1)), np.zeros((0, cfg.n + 1)),
                                       np.zeros(0), status, reason)
                continue
        out[m] = _simulate(cfg, m, spec, noise, profile, dataset)
    return out


# ---------------------------------------------------------------- metrics

def _deviations(log: TrajectoryLog, v_star_profile=None) -> np.ndarray:
    if log.velocities.shape[0] == 0:
        raise ValueError("empty trajectory log")
    ref = log.v_reference if v_star_profile is None else np.broadcast_to(
        np.asarray(v_star_profile, dtype=float), log.t.shape)
    return log.velocities[:, 1:] - ref[:, None]


def metric_rm(log: TrajectoryLog, v_star_profile=None) -> float:
    """Mean absolute velocity deviation over time and vehicles 1..n."""
    return float(np.mean(np.abs(_deviations(log, v_star_profile))))


def metric_rs(log: TrajectoryLog, v_star_profile=None) -> float:
    """Root-mean-square velocity deviation over time and vehicles 1..n."""
    return float(np.sqrt(np.mean(_deviations(log, v_star_profile) ** 2)))


@dataclass
class MetricsReport:
    rows: list  # dicts: method, dataset, R_m, R_s, pct_Rm, pct_Rs, status, message
    methods: tuple

    def valid_rows(self, method: str) -> list:
        return [r for r in self.rows if r["method"] == method and r["status"] == "ok"]

    def mean(self, method: str, key: str = "R_m") -> float:
        vals = [r[key] for r in self.valid_rows(method)]
        return float(np.mean(vals)) if vals else math.nan

    def pct(self, method: str, key: str = "R_m") -> float:
        base = self.mean("hdv", key)
        return 100.0 * (self.mean(method, key) - base) / base if base else math.nan

    @property
    def partial(self) -> bool:
        return any(r["status"] != "ok" for r in self.rows)

    def table(self) -> str:
        lines = [f"{'method':<10} {'valid':>5} {'R_m':>8} {'pct':>8} {'R_s':>8} {'pct':>8}"]
        for m in self.methods:
            count = len(self.valid_rows(m))
            total = len([r for r in self.rows if r["method"] == m])
            lines.append(f"{LABELS[m]:<10} {count:>2}/{total:<2} {self.mean(m):8.3f} {self.pct(m):+7.1f}% "
                         f"{self.mean(m, 'R_s'):8.3f} {self.pct(m, 'R_s'):+7.1f}%")
        if self.partial:
            lines.append("partial: some runs invalid (see status column)")
        lines.append("noise realizations are paired across methods within each data set")
        return "\n".join(lines)


def _trial(cfg: ScenarioConfig, d: int, methods: tuple, art: DatasetArtifacts | None):
    if art is None and any(m != "hdv" for m in methods):
        art = prepare_dataset(cfg, d, methods)
    runs = run_scenario(cfg, art, methods, dataset=d)
    base = runs.get("hdv")
    base_m = metric_rm(base) if base is not None and base.valid else math.nan
    base_s = metric_rs(base) if base is not None and base.valid else math.nan
    rows = []
    for m in methods:
        log = runs[m]
        rm = metric_rm(log) if log.valid else math.nan
        rs = metric_rs(log) if log.valid else math.nan
        rows.append({
            "method": m, "dataset": d, "R_m": rm, "R_s": rs,
            "pct_Rm": 100 * (rm - base_m) / base_m if base_m else math.nan,
            "pct_Rs": 100 * (rs - base_s) / base_s if base_s else math.nan,
            "status": log.status, "message": log.message,
        })
    return rows, runs, art


def compare_datasets(cfg: ScenarioConfig, dataset_count: int | None = None, progress=None,
                     artifacts: dict | None = None, workers: int = 1) -> tuple[MetricsReport, dict]:
    """Full campaign; returns the report and the logs keyed by (method, dataset).

    Data sets are independent trials; with ``workers > 1`` they run in a process
    pool and are folded back in data-set order, so the result does not depend on
    the worker count. ``artifacts`` (data set -> DatasetArtifacts) is read and
    filled as a cache.
    """
    count = cfg.datasets if dataset_count is None else dataset_count
    methods = tuple(m for m in METHOD_ORDER if m in cfg.methods)
    cache = {} if artifacts is None else artifacts
    jobs = [(cfg, d, methods, cache.get(d)) for d in range(count)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_trial, *zip(*jobs)))
    else:
        results = (_trial(*job) for job in jobs)
    rows, logs = [], {}
    for d, (r, runs, art) in enumerate(results):
        rows.extend(r)
        for m, log in runs.items():
            logs[(m, d)] = log
        if art is not None:
            cache[d] = art
        if progress is not None:
            progress(d, runs)
    return MetricsReport(rows, methods), logs


# ---------------------------------------------------------------- persistence

def write_trajectory_csv(logs, path) -> Path:
    """Columns t, vehicle, p, v, s, u, method, dataset (s and u are empty for the head)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "vehicle", "p", "v", "s", "u", "method", "dataset"])
        for log in logs:
            sp = log.spacings
            for k in range(log.t.size):
                for i in range(log.positions.shape[1]):
                    s = "" if i == 0 else repr(float(sp[k, i - 1]))
                    a = log.accelerations[k, i]
                    u = "" if (i == 0 or np.isnan(a)) else repr(float(a))
                    wr.writerow([repr(float(log.t[k])), i, repr(float(log.positions[k, i])),
                                 repr(float(log.velocities[k, i])), s, u, log.method, log.dataset])
    return path


def write_metrics_csv(report: MetricsReport, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["method", "dataset", "R_m", "R_s", "pct_Rm", "pct_Rs", "status"])
        for r in report.rows:
            wr.writerow([r["method"], r["dataset"], repr(r["R_m"]), repr(r["R_s"]),
                         repr(r["pct_Rm"]), repr(r["pct_Rs"]), r["status"]])
    return path
