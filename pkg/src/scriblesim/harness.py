"""Experiment configuration, execution, sweeps, and artifact emission.

A run executes `reps` independent episodes per configured algorithm against
shared loss sequences and writes three artifacts into its output directory:

    trajectory.csv   one row per (algorithm, rep, round)
    summary.json     aggregate statistics, resolved parameters, bound values
    regret_curve.svg mean regret over rounds per algorithm

A sweep repeats the run across a list of epsilon values (optionally with a
budget per value) and adds an aggregate table plus the regret-vs-epsilon
figure. Every artifact embeds the master seed and a hash of the resolved
configuration; rerunning the same configuration and seed reproduces every
byte.

Stream layout: the master seed owns a root stream; each rep forks a child,
and within a rep the roles (thetas, adversary draws, exploration, black
box) fork fixed sub-streams. Both algorithms of a rep therefore face the
identical theta sequence and identical per-round exploration directions.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .adversary import (LossOracle, NoPerturbation, PerturbationSchedule,
                        SinusoidalPerturbation, SpikePerturbation,
                        BlackBoxAdversary, gen_linear_sequence)
from .errors import ConfigurationError
from .geometry import Ball, Box, Domain
from .learner import LearnerConfig, best_iterate, run_episode
from .plotting import render_run_plot, render_sweep_plot
from .regret import (BoundInputs, compute_regret, delta_policy, expected_bound,
                     highprob_bound, highprob_interval_count, resolve_eta)
from .rng import RngStream, fork_stream, sample_unit_sphere

ENV_OUT_DIR = "SCRIBLESIM_OUT_DIR"

ALGORITHM_SHRUNK = "algorithm1"
ALGORITHM_BASELINE = "scrible_baseline"
KNOWN_ALGORITHMS = (ALGORITHM_SHRUNK, ALGORITHM_BASELINE)

_ROLE_THETA = 0
_ROLE_ADVERSARY = 1
_ROLE_EXPLORE = 2
_ROLE_BLACKBOX = 3

CSV_COLUMNS = ("run_id", "algorithm", "rep", "t", "loss", "cum_loss",
               "regret", "deviation_track", "sigma", "budget_used",
               "step_local_norm")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; serializes to flat JSON.

    delta applies to the shrunk algorithm; "auto" resolves via delta_policy.
    eta is shared by both algorithms (numeric, or one of the presets
    "theory" / "experiment" / "theory_logT"). Unknown keys in a config file
    are rejected rather than ignored.
    """

    T: int = 2000
    d: int = 5
    domain_kind: str = "ball"
    domain_size: float | list = 5.0
    G: float = 3.0
    C: float = 0.0
    epsilon: float = 0.0
    delta: float | str = "auto"
    eta: float | str = "theory"
    perturbation: str = "none"
    offset: float = 0.0
    boundary_threshold: float = 0.95
    spikes: dict[int, float] | None = None
    reps: int = 10
    master_seed: int = 0
    algorithms: tuple[str, ...] = KNOWN_ALGORITHMS
    gamma: float = 0.01
    allow_large_budget: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.T < 1 or self.d < 1 or self.reps < 1:
            raise ConfigurationError("T, d, and reps must all be >= 1")
        if self.domain_kind not in ("ball", "box"):
            raise ConfigurationError(f"unknown domain_kind {self.domain_kind!r}")
        if self.perturbation not in ("none", "sinusoidal", "spikes"):
            raise ConfigurationError(f"unknown perturbation {self.perturbation!r}")
        if not self.algorithms:
            raise ConfigurationError("algorithms must be non-empty")
        unknown = [a for a in self.algorithms if a not in KNOWN_ALGORITHMS]
        if unknown:
            raise ConfigurationError(
                f"unknown algorithm(s) {unknown}; choose from {list(KNOWN_ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigurationError("duplicate algorithm names")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be a non-negative integer")
        if self.C < 0 or self.epsilon < 0 or self.G < 0:
            raise ConfigurationError("G, C, and epsilon must be >= 0")
        if isinstance(self.delta, str) and self.delta != "auto":
            raise ConfigurationError(
                f"delta must be a number or 'auto', got {self.delta!r}")
        if isinstance(self.delta, (int, float)) and not 0.0 <= float(self.delta) <= 2.0 / 3.0:
            raise ConfigurationError(f"delta must lie in [0, 2/3], got {self.delta}")
        if self.spikes is not None:
            norm = {int(k): float(v) for k, v in self.spikes.items()}
            object.__setattr__(self, "spikes", norm)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    # -- serialization ----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        import dataclasses
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {unknown}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["algorithms"] = list(self.algorithms)
        if self.spikes is not None:
            out["spikes"] = {str(k): v for k, v in self.spikes.items()}
        return out

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def save(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # -- resolution --------------------------------------------------------

    def domain(self) -> Domain:
        if self.domain_kind == "ball":
            if not isinstance(self.domain_size, (int, float)):
                raise ConfigurationError("ball domain_size must be a number")
            return Ball(radius=float(self.domain_size), dim=self.d)
        size = self.domain_size
        halfwidths = np.full(self.d, float(size)) if isinstance(size, (int, float)) \
            else np.asarray(size, dtype=float)
        if halfwidths.shape != (self.d,):
            raise ConfigurationError(
                f"box domain_size must be a scalar or a length-{self.d} list")
        return Box(halfwidths=halfwidths)

    def norm_bound(self) -> float:
        """D in the bound formulas: the largest action norm in the domain."""
        dom = self.domain()
        if isinstance(dom, Ball):
            return dom.radius
        return float(np.linalg.norm(dom.halfwidths))

    def resolved_delta(self, algorithm: str) -> float:
        if algorithm == ALGORITHM_BASELINE:
            return 0.0
        if self.delta == "auto":
            return delta_policy(self.C, self.T)
        return float(self.delta)

    def resolved_eta(self) -> float:
        # Presets that reference delta use the shrunk algorithm's value so
        # the paired baseline plays with the identical step size.
        delta = self.delta_for_bounds()
        nu = 1.0 if self.domain_kind == "ball" else 2.0 * self.d
        return resolve_eta(self.eta, nu, delta, self.d, self.T)

    def delta_for_bounds(self) -> float:
        return self.resolved_delta(ALGORITHM_SHRUNK) or delta_policy(self.C, self.T)

    def schedule(self, direction: np.ndarray | None) -> PerturbationSchedule:
        if self.perturbation == "none":
            kind: Any = NoPerturbation()
        elif self.perturbation == "sinusoidal":
            if direction is None:
                raise ConfigurationError("sinusoidal schedule needs a direction")
            kind = SinusoidalPerturbation(
                epsilon=self.epsilon, direction=direction, offset=self.offset,
                boundary_threshold=self.boundary_threshold)
        else:
            kind = SpikePerturbation(self.spikes or {})
        return PerturbationSchedule(kind, budget=self.C,
                                    allow_large_budget=self.allow_large_budget)

    def config_hash(self) -> str:
        payload = self.to_dict()
        payload.pop("out_dir")  # where artifacts land must not change identity
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def run_id(self) -> str:
        return f"{self.config_hash()}-s{self.master_seed}"


@dataclass(frozen=True)
class RunArtifacts:
    trajectory_csv: Path
    summary_json: Path
    plot_svg: Path
    resolved_config: dict[str, Any]


@dataclass(frozen=True)
class SweepArtifacts:
    runs: tuple[RunArtifacts, ...]
    table_csv: Path
    summary_json: Path
    plot_svg: Path


def _resolve_out_dir(config: ExperimentConfig, out_dir=None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    if config.out_dir:
        return Path(config.out_dir)
    return Path(os.environ.get(ENV_OUT_DIR, "runs")) / f"run-{config.run_id()}"


def _fmt(value: float) -> str:
    # repr round-trips doubles exactly, keeping the CSV bit-faithful.
    return repr(float(value))


def run_experiment(config: ExperimentConfig, out_dir=None) -> RunArtifacts:
    """Execute all reps and algorithms of a configuration and write artifacts.

    Args:
        config: the experiment description.
        out_dir: overrides config.out_dir and the environment default.

    Returns:
        Paths of the three artifacts plus the resolved-parameter snapshot.
    """
    out = _resolve_out_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    domain = config.domain()
    eta = config.resolved_eta()
    run_id = config.run_id()
    root = RngStream(config.master_seed)

    rows: list[dict[str, Any]] = []
    per_algo: dict[str, dict[str, list]] = {
        a: {"final_regret": [], "budget_used": [], "clip_events": [],
            "cap_events": []} for a in config.algorithms}

    for rep in range(config.reps):
        rep_stream = fork_stream(root, rep)
        seq = gen_linear_sequence(fork_stream(rep_stream, _ROLE_THETA),
                                  config.T, config.d, config.G)
        direction = None
        if config.perturbation == "sinusoidal":
            direction = sample_unit_sphere(
                fork_stream(rep_stream, _ROLE_ADVERSARY), config.d)
        schedule = config.schedule(direction)
        for algorithm in config.algorithms:
            delta = config.resolved_delta(algorithm)
            learner = LearnerConfig(domain=domain, horizon=config.T,
                                    eta=eta, delta=delta)
            oracle = LossOracle(seq, schedule, domain)
            mu_stream = fork_stream(rep_stream, _ROLE_EXPLORE)
            records = run_episode(learner, oracle, mu_stream)
            report = compute_regret(records, oracle)
            sigmas = np.array([r.sigma for r in records])
            budget_running = np.cumsum(np.abs(sigmas))
            for i, record in enumerate(records):
                rows.append({
                    "run_id": run_id, "algorithm": algorithm, "rep": rep,
                    "t": record.t, "loss": record.loss,
                    "cum_loss": float(report.cumulative_loss[i]),
                    "regret": float(report.regret[i]),
                    "deviation_track": float(report.deviation_track[i]),
                    "sigma": record.sigma,
                    "budget_used": float(budget_running[i]),
                    "step_local_norm": record.step_local_norm,
                })
            stats = per_algo[algorithm]
            stats["final_regret"].append(report.final_regret)
            stats["budget_used"].append(report.budget_used)
            stats["clip_events"].append(oracle.accountant.clip_events)
            stats["cap_events"].append(oracle.accountant.cap_events)

    rows.sort(key=lambda r: (r["algorithm"], r["rep"], r["t"]))
    csv_path = out / "trajectory.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row["run_id"], row["algorithm"], row["rep"], row["t"],
                _fmt(row["loss"]), _fmt(row["cum_loss"]), _fmt(row["regret"]),
                _fmt(row["deviation_track"]), _fmt(row["sigma"]),
                _fmt(row["budget_used"]), _fmt(row["step_local_norm"]),
            ])

    summary = _build_summary(config, eta, per_algo)
    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    annotation = f"run {run_id} seed {config.master_seed}"
    svg_path = render_run_plot(csv_path, out / "regret_curve.svg", annotation)
    return RunArtifacts(trajectory_csv=csv_path, summary_json=summary_path,
                        plot_svg=svg_path, resolved_config=summary["resolved"])


def _build_summary(config: ExperimentConfig, eta: float,
                   per_algo: dict[str, dict[str, list]]) -> dict[str, Any]:
    nu = 1.0 if config.domain_kind == "ball" else 2.0 * config.d
    delta_bound = config.delta_for_bounds()
    D = config.norm_bound()
    inputs = BoundInputs(d=config.d, nu=nu, T=config.T, G=config.G, D=D,
                         C=config.C, delta=delta_bound, gamma=config.gamma)
    bounds: dict[str, Any] = {"expected_regret": expected_bound(inputs)}
    try:
        bounds["highprob_regret"] = highprob_bound(inputs)
        bounds["highprob_intervals_S"] = highprob_interval_count(inputs)
    except ConfigurationError as exc:
        bounds["highprob_regret"] = None
        bounds["highprob_note"] = str(exc)

    algo_stats = {}
    for algorithm, stats in per_algo.items():
        finals = np.array(stats["final_regret"])
        mean = float(finals.mean())
        algo_stats[algorithm] = {
            "final_regret_per_rep": [float(v) for v in finals],
            "mean_final_regret": mean,
            "median_final_regret": float(np.median(finals)),
            "max_final_regret": float(finals.max()),
            "regret_interval_2C": [mean - 2.0 * config.C, mean + 2.0 * config.C],
            "realized_budget_per_rep": [float(v) for v in stats["budget_used"]],
            "clip_events_per_rep": stats["clip_events"],
            "cap_events_per_rep": stats["cap_events"],
        }

    return {
        "run_id": config.run_id(),
        "master_seed": config.master_seed,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "resolved": {
            "eta": eta,
            "nu": nu,
            "norm_bound_D": D,
            "delta": {a: config.resolved_delta(a) for a in config.algorithms},
            "delta_for_bounds": delta_bound,
        },
        "bounds": bounds,
        "per_algorithm": algo_stats,
    }


def sweep(base_config: ExperimentConfig, epsilon_values: list[float],
          budgets: list[float] | None = None, out_dir=None) -> SweepArtifacts:
    """run_experiment once per epsilon (paired seeds) plus aggregate artifacts.

    Args:
        base_config: template configuration; epsilon (and optionally C) are
            overridden per grid point.
        epsilon_values: non-empty list of epsilon values.
        budgets: optional per-epsilon budgets C, same length.
        out_dir: root directory of the sweep artifacts.

    Returns:
        SweepArtifacts with the per-run artifacts and the aggregates.
    """
    if not epsilon_values:
        raise ConfigurationError("epsilon_values must be non-empty")
    if budgets is not None and len(budgets) != len(epsilon_values):
        raise ConfigurationError(
            f"got {len(budgets)} budgets for {len(epsilon_values)} epsilon values")
    root = Path(out_dir) if out_dir is not None else \
        (Path(base_config.out_dir) if base_config.out_dir
         else Path(os.environ.get(ENV_OUT_DIR, "runs")) / f"sweep-{base_config.run_id()}")
    # The grid varies only the loss process (epsilon, and optionally C), so
    # the step size is resolved once from the template: every grid point
    # plays with the identical eta even when a per-point C would move the
    # delta policy that an eta preset reads.
    shared_eta = base_config.resolved_eta()
    runs = []
    table_rows = []
    for i, eps in enumerate(epsilon_values):
        C = base_config.C if budgets is None else float(budgets[i])
        sub = replace(base_config, epsilon=float(eps), C=C, eta=shared_eta,
                      out_dir=None)
        artifacts = run_experiment(sub, out_dir=root / f"eps-{eps:g}")
        runs.append(artifacts)
        with open(artifacts.summary_json) as fh:
            summary = json.load(fh)
        for algorithm, stats in sorted(summary["per_algorithm"].items()):
            table_rows.append({
                "epsilon": float(eps), "algorithm": algorithm, "C": C,
                "mean_final_regret": stats["mean_final_regret"],
                "median_final_regret": stats["median_final_regret"],
                "max_final_regret": stats["max_final_regret"],
                "mean_realized_budget": float(np.mean(stats["realized_budget_per_rep"])),
            })

    table_rows.sort(key=lambda r: (r["epsilon"], r["algorithm"]))
    table_path = root / "sweep_table.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ("epsilon", "algorithm", "C", "mean_final_regret",
                  "median_final_regret", "max_final_regret", "mean_realized_budget")
        writer.writerow(header)
        for row in table_rows:
            writer.writerow([_fmt(row["epsilon"]), row["algorithm"], _fmt(row["C"]),
                             _fmt(row["mean_final_regret"]),
                             _fmt(row["median_final_regret"]),
                             _fmt(row["max_final_regret"]),
                             _fmt(row["mean_realized_budget"])])

    summary = {
        "master_seed": base_config.master_seed,
        "base_config": base_config.to_dict(),
        "base_config_hash": base_config.config_hash(),
        "epsilon_values": [float(e) for e in epsilon_values],
        "budgets": None if budgets is None else [float(b) for b in budgets],
        "table": table_rows,
        "runs": [str(r.summary_json) for r in runs],
    }
    summary_path = root / "sweep_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    annotation = (f"sweep {base_config.config_hash()} "
                  f"seed {base_config.master_seed}")
    svg_path = render_sweep_plot(table_path, root / "sweep_regret_vs_epsilon.svg",
                                 annotation)
    return SweepArtifacts(runs=tuple(runs), table_csv=table_path,
                          summary_json=summary_path, plot_svg=svg_path)


def lowerbound_demo(epsilon: float, T: int,
                    learner_config: LearnerConfig | None = None,
                    master_seed: int = 0) -> dict[str, Any]:
    """Run a learner against the constant-feedback adversary and report the gap.

    The adversary answers +epsilon to every query, then reveals a hidden
    minimum elsewhere; the certified optimality gap of the returned best
    iterate is exactly 2 * epsilon, and at the sequence level this scales
    to a regret floor of 2 * C with C = epsilon * T.
    """
    if epsilon <= 0.0:
        raise ConfigurationError(f"epsilon must be > 0, got {epsilon}")
    if T < 1:
        raise ConfigurationError(f"T must be >= 1, got {T}")
    if learner_config is None:
        domain = Ball(radius=5.0, dim=5)
        delta = delta_policy(0.0, T)
        eta = resolve_eta("theory", 1.0, delta, domain.dim, T)
        learner_config = LearnerConfig(domain=domain, horizon=T, eta=eta,
                                       delta=delta)
    root = RngStream(master_seed)
    adversary = BlackBoxAdversary(learner_config.domain, epsilon,
                                  fork_stream(root, _ROLE_BLACKBOX))
    records = run_episode(learner_config, adversary.as_oracle(T),
                          fork_stream(root, _ROLE_EXPLORE))
    x_hat = best_iterate(records)
    gap = adversary.finalize(x_hat)
    return {
        "epsilon": epsilon,
        "T": T,
        "queries": adversary.query_count,
        "gap": gap,
        "gap_expected": 2.0 * epsilon,
        "sequence_budget_C": epsilon * T,
        "regret_floor_2C": 2.0 * epsilon * T,
        "master_seed": master_seed,
    }


def emit_plot(artifacts, out_svg=None) -> Path:
    """Re-render the figure for a run or sweep artifact set.

    Accepts RunArtifacts, SweepArtifacts, or a path (artifact directory or
    one of its summary files). Rendering is pure: same files, same bytes.
    """
    if isinstance(artifacts, SweepArtifacts):
        return _emit_sweep_plot(artifacts.summary_json, out_svg)
    if isinstance(artifacts, RunArtifacts):
        return _emit_run_plot(artifacts.summary_json, out_svg)
    path = Path(artifacts)
    if path.is_dir():
        if (path / "sweep_summary.json").exists():
            return _emit_sweep_plot(path / "sweep_summary.json", out_svg)
        if (path / "summary.json").exists():
            return _emit_run_plot(path / "summary.json", out_svg)
        raise ConfigurationError(f"no summary artifacts under {path}")
    if path.name == "sweep_summary.json":
        return _emit_sweep_plot(path, out_svg)
    if path.name == "summary.json":
        return _emit_run_plot(path, out_svg)
    raise ConfigurationError(f"unrecognized artifact reference {path}")


def _emit_run_plot(summary_path: Path, out_svg=None) -> Path:
    summary_path = Path(summary_path)
    if not summary_path.exists():
        raise ConfigurationError(f"missing summary {summary_path}")
    with open(summary_path) as fh:
        summary = json.load(fh)
    run_dir = summary_path.parent
    annotation = f"run {summary['run_id']} seed {summary['master_seed']}"
    target = Path(out_svg) if out_svg else run_dir / "regret_curve.svg"
    return render_run_plot(run_dir / "trajectory.csv", target, annotation)


def _emit_sweep_plot(summary_path: Path, out_svg=None) -> Path:
    summary_path = Path(summary_path)
    if not summary_path.exists():
        raise ConfigurationError(f"missing sweep summary {summary_path}")
    with open(summary_path) as fh:
        summary = json.load(fh)
    sweep_dir = summary_path.parent
    annotation = (f"sweep {summary['base_config_hash']} "
                  f"seed {summary['master_seed']}")
    target = Path(out_svg) if out_svg else sweep_dir / "sweep_regret_vs_epsilon.svg"
    return render_sweep_plot(sweep_dir / "sweep_table.csv", target, annotation)
