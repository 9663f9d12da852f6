"""Experiment configuration, suite execution, and report emission.

A suite is a single JSON document listing experiments; each experiment
names a registered learner, data distribution, and loss, fixes ``n``,
``trials`` and a mandatory ``seed``, picks a CMI computation mode
(``exact`` | ``mc`` | ``both``), and lists the bound checks to run.

Determinism contract: rerunning an identical (config, seed) pair yields a
bit-identical report in exact mode, and identical Monte-Carlo numbers via
the seed-derivation rule hash(seed, experiment-id, trial).  Worker-pool
size never affects results: experiments are independent pure computations
assembled in config order.  Exact mode is never silently downgraded to
Monte Carlo -- an infeasible exact request is an error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping

import numpy as np

from . import __version__
from ._seeding import derive_seed
from .algkernel import (
    AlgorithmKernel,
    CmiEstimate,
    Supersample,
    cmi_distributional,
    cmi_exact_fixed,
    ecmi_fixed,
    ucmi_fixed,
)
from .bounds import (
    BoundReport,
    GapEstimate,
    LossSpec,
    Population,
    THEOREMS,
    check_auroc,
    check_theorem,
    estimate_gap,
    with_fingerprint,
    zero_one_loss,
)
from .info_core import LOG2, FiniteDistribution
from .learners import (
    ConstantHypothesis,
    parity_kernel,
    parity_learn,
    parity_population,
    pathological_erm,
    pathological_kernel,
    pathological_selection_entropy,
    threshold_kernel,
    threshold_learn,
    threshold_selection_entropy,
)

JOBS_ENV_VAR = "CMI_LAB_JOBS"


class ConfigError(ValueError):
    """Malformed configuration document."""


class UnknownComponentError(ConfigError):
    """A learner / distribution / loss / theorem id is not registered."""


# ---------------------------------------------------------------------------
# component registries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearnerBundle:
    fit: Callable[[tuple, np.random.Generator], Any]
    kernel: AlgorithmKernel
    inner_mi: Callable[[Supersample], float] | None = None
    score_of: Callable[[Any, Any], float] | None = None


def _threshold_score(w, z) -> float:
    x = z[0]
    t = w.t
    return float(x) if t == math.inf else float(x) - float(t)


def _make_threshold(params: Mapping[str, Any]) -> LearnerBundle:
    return LearnerBundle(
        fit=lambda ds, rng: threshold_learn(ds),
        kernel=threshold_kernel(),
        inner_mi=threshold_selection_entropy,
        score_of=_threshold_score,
    )


def _make_pathological(params: Mapping[str, Any]) -> LearnerBundle:
    g = int(params.get("grid_decimals", 2))
    return LearnerBundle(
        fit=lambda ds, rng: pathological_erm(ds, grid_decimals=g),
        kernel=pathological_kernel(g),
        inner_mi=pathological_selection_entropy,
        score_of=_threshold_score,
    )


def _make_parity(params: Mapping[str, Any]) -> LearnerBundle:
    d = int(params["d"])
    return LearnerBundle(
        fit=lambda ds, rng: parity_learn(ds, d),
        kernel=parity_kernel(d),
    )


def _make_constant(params: Mapping[str, Any]) -> LearnerBundle:
    hyp = ConstantHypothesis(int(params.get("bit", 0)))
    return LearnerBundle(
        fit=lambda ds, rng: hyp,
        kernel=AlgorithmKernel.constant(hyp),
        inner_mi=lambda ss: 0.0,
        score_of=lambda w, z: 0.0,
    )


LEARNERS: dict[str, Callable[[Mapping[str, Any]], LearnerBundle]] = {
    "threshold": _make_threshold,
    "pathological_threshold": _make_pathological,
    "parity": _make_parity,
    "constant": _make_constant,
}


def grid_threshold_distribution(
    size: int = 64,
    theta_index: int | None = None,
    noise: float = 0.0,
    step: float = 0.01,
) -> FiniteDistribution:
    """Uniform distribution over a 1-D grid of labeled points.

    Point i sits at x = i * step with true label 1[i >= theta_index]; each
    label is flipped with probability ``noise``.
    """
    if theta_index is None:
        theta_index = size // 2
    if not 0.0 <= noise <= 0.5:
        raise ConfigError(f"noise must lie in [0, 0.5], got {noise!r}")
    atoms = []
    for i in range(size):
        x = i * step
        true_y = 1 if i >= theta_index else 0
        atoms.append(((x, true_y), (1.0 - noise) / size))
        if noise > 0.0:
            atoms.append(((x, 1 - true_y), noise / size))
    return FiniteDistribution(tuple(atoms))


def _make_grid_threshold(params: Mapping[str, Any]) -> FiniteDistribution:
    return grid_threshold_distribution(
        size=int(params.get("size", 64)),
        theta_index=params.get("theta_index"),
        noise=float(params.get("noise", 0.0)),
        step=float(params.get("step", 0.01)),
    )


def _make_finite(params: Mapping[str, Any]) -> FiniteDistribution:
    atoms = []
    for point, mass in params["atoms"]:
        label = tuple(point) if isinstance(point, list) else point
        atoms.append((label, float(mass)))
    return FiniteDistribution(tuple(atoms))


def _make_parity_uniform(params: Mapping[str, Any]) -> FiniteDistribution:
    return parity_population(tuple(int(b) for b in params["w_star"]))


DISTRIBUTIONS: dict[str, Callable[[Mapping[str, Any]], FiniteDistribution]] = {
    "grid_threshold": _make_grid_threshold,
    "finite": _make_finite,
    "parity_uniform": _make_parity_uniform,
}

LOSSES: dict[str, Callable[[Mapping[str, Any]], LossSpec]] = {
    "zero_one": lambda params: zero_one_loss(),
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremRequest:
    theorem_id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    learner_id: str
    learner_params: dict
    distribution_id: str
    distribution_params: dict
    loss_id: str
    loss_params: dict
    n: int
    trials: int
    seed: int
    theorems: tuple[TheoremRequest, ...]
    cmi_mode: str = "mc"
    cmi_trials: int = 500

    @classmethod
    def from_obj(cls, obj: Mapping[str, Any]) -> "ExperimentConfig":
        try:
            learner = obj["learner"]
            dist = obj["distribution"]
            loss = obj.get("loss", {"id": "zero_one"})
            seed = obj["seed"]
            exp_id = obj["id"]
            n = int(obj["n"])
            trials = int(obj.get("trials", 1000))
        except KeyError as exc:
            raise ConfigError(f"experiment missing required key: {exc}") from exc
        theorems = []
        for item in obj.get("theorems", ()):
            if isinstance(item, str):
                theorems.append(TheoremRequest(item))
            else:
                theorems.append(TheoremRequest(item["id"], dict(item.get("params", {}))))
        cmi = obj.get("cmi", {})
        mode = cmi.get("mode", "mc")
        if mode not in ("exact", "mc", "both"):
            raise ConfigError(f"unknown cmi mode {mode!r}")
        config = cls(
            experiment_id=str(exp_id),
            learner_id=learner["id"],
            learner_params=dict(learner.get("params", {})),
            distribution_id=dist["id"],
            distribution_params=dict(dist.get("params", {})),
            loss_id=loss["id"],
            loss_params=dict(loss.get("params", {})),
            n=n,
            trials=trials,
            seed=int(seed),
            theorems=tuple(theorems),
            cmi_mode=mode,
            cmi_trials=int(cmi.get("trials", 500)),
        )
        config.validate_ids()
        return config

    def validate_ids(self) -> None:
        if self.learner_id not in LEARNERS:
            raise UnknownComponentError(f"unknown learner id {self.learner_id!r}")
        if self.distribution_id not in DISTRIBUTIONS:
            raise UnknownComponentError(f"unknown distribution id {self.distribution_id!r}")
        if self.loss_id not in LOSSES:
            raise UnknownComponentError(f"unknown loss id {self.loss_id!r}")
        for req in self.theorems:
            if req.theorem_id not in THEOREMS:
                raise UnknownComponentError(f"unknown theorem id {req.theorem_id!r}")

    @property
    def fingerprint(self) -> str:
        return (
            f"{self.experiment_id}:{self.learner_id}:{self.distribution_id}:"
            f"{self.loss_id}:n={self.n}"
        )


def config_hash(obj: Any) -> str:
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    name: str
    ok: bool
    detail: str = ""

    def to_json_obj(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


@dataclass(frozen=True)
class ExperimentResult:
    experiment_id: str
    cmi: dict[str, CmiEstimate]
    reports: tuple[BoundReport, ...]

    def to_json_obj(self) -> dict:
        return {
            "id": self.experiment_id,
            "cmi": {mode: est.to_json_obj() for mode, est in self.cmi.items()},
            "reports": [r.to_json_obj() for r in self.reports],
        }


@dataclass(frozen=True)
class SuiteReport:
    version: str
    config_hash: str
    experiments: tuple[ExperimentResult, ...]
    properties: tuple[PropertyResult, ...]
    wall_times: dict[str, float]

    @property
    def all_satisfied(self) -> bool:
        ok_reports = all(r.satisfied for e in self.experiments for r in e.reports)
        ok_props = all(p.ok for p in self.properties)
        return ok_reports and ok_props

    def to_json_obj(self) -> dict:
        return {
            "version": self.version,
            "config_hash": self.config_hash,
            "experiments": [e.to_json_obj() for e in self.experiments],
            "properties": [p.to_json_obj() for p in self.properties],
            "wall_times": self.wall_times,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "SuiteReport":
        experiments = tuple(
            ExperimentResult(
                experiment_id=e["id"],
                cmi={m: CmiEstimate.from_json_obj(c) for m, c in e["cmi"].items()},
                reports=tuple(BoundReport.from_json_obj(r) for r in e["reports"]),
            )
            for e in obj["experiments"]
        )
        properties = tuple(
            PropertyResult(p["name"], p["ok"], p.get("detail", "")) for p in obj["properties"]
        )
        return cls(
            version=obj["version"],
            config_hash=obj["config_hash"],
            experiments=experiments,
            properties=properties,
            wall_times=dict(obj["wall_times"]),
        )

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BoundReport.CSV_COLUMNS)
        for exp in self.experiments:
            for report in exp.reports:
                writer.writerow(report.csv_row())
        return buf.getvalue()


def _compute_cmi(
    config: ExperimentConfig,
    bundle: LearnerBundle,
    population: Population,
    seed: int,
) -> dict[str, CmiEstimate]:
    sampler = population.supersample_sampler(config.n)
    out: dict[str, CmiEstimate] = {}
    modes = ("exact", "mc") if config.cmi_mode == "both" else (config.cmi_mode,)
    for mode in modes:
        if mode == "exact":
            est = cmi_distributional(bundle.kernel, sampler, mode="exact")
        else:
            est = cmi_distributional(
                bundle.kernel,
                sampler,
                mode="mc",
                trials=config.cmi_trials,
                seed=derive_seed(seed, config.experiment_id, "cmi"),
                evaluator=bundle.inner_mi,
            )
        out[mode] = with_fingerprint(est, config.fingerprint)
    return out


def run_experiment(config: ExperimentConfig, seed_override: int | None = None) -> tuple[ExperimentResult, list[PropertyResult]]:
    seed = config.seed if seed_override is None else seed_override
    bundle = LEARNERS[config.learner_id](config.learner_params)
    dist = DISTRIBUTIONS[config.distribution_id](config.distribution_params)
    population = Population.from_finite(dist)
    loss = LOSSES[config.loss_id](config.loss_params)

    cmi_estimates = _compute_cmi(config, bundle, population, seed)
    primary = cmi_estimates.get("exact") or cmi_estimates["mc"]

    gap: GapEstimate | None = None
    reports: list[BoundReport] = []
    for req in config.theorems:
        params = dict(req.params)
        cmi_for_check = primary
        if "cmi_override" in params:
            cmi_for_check = with_fingerprint(
                CmiEstimate(value=float(params.pop("cmi_override")), method="exact"),
                config.fingerprint,
            )
        rhs_override = params.pop("rhs_override", None)
        if req.theorem_id == "auroc":
            reports.append(
                check_auroc(
                    learner=bundle.fit,
                    population=population,
                    score_of=bundle.score_of or (lambda w, z: 0.0),
                    is_positive=lambda z: z[1] == 1,
                    epsilon=float(params.get("epsilon", 0.3)),
                    n=config.n,
                    trials=int(params.get("trials", 200)),
                    seed=derive_seed(seed, config.experiment_id),
                    cmi=cmi_for_check,
                    rhs_override=rhs_override,
                )
            )
            continue
        if gap is None:
            gap = with_fingerprint(
                estimate_gap(
                    bundle.fit,
                    population,
                    loss,
                    config.n,
                    config.trials,
                    derive_seed(seed, config.experiment_id),
                ),
                config.fingerprint,
            )
        reports.append(
            check_theorem(
                req.theorem_id,
                cmi_for_check,
                gap,
                config.n,
                scale=float(params.get("scale", 1.0)),
                rhs_override=rhs_override,
            )
        )

    properties = [
        PropertyResult(
            name=f"{config.experiment_id}:cmi-range",
            ok=all(
                -1e-9 <= est.value <= config.n * LOG2 + 1e-9
                for est in cmi_estimates.values()
            ),
            detail=f"0 <= cmi <= n log 2 for n={config.n}",
        )
    ]
    if len(cmi_estimates) == 2:
        exact, mc = cmi_estimates["exact"], cmi_estimates["mc"]
        gap_val = abs(exact.value - mc.value)
        tol = 3.0 * mc.ci_halfwidth + 1e-9
        properties.append(
            PropertyResult(
                name=f"{config.experiment_id}:exact-mc-agreement",
                ok=gap_val <= tol,
                detail=f"|exact - mc| = {gap_val:.6g} <= {tol:.6g}",
            )
        )
    return ExperimentResult(config.experiment_id, cmi_estimates, tuple(reports)), properties


def _resolve_jobs(jobs: int | None) -> int:
    if jobs is not None:
        return max(1, int(jobs))
    env = os.environ.get(JOBS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"bad {JOBS_ENV_VAR} value {env!r}") from exc
    return 1


def load_config(source: str | Mapping[str, Any]) -> tuple[dict, list[ExperimentConfig]]:
    if isinstance(source, Mapping):
        obj = dict(source)
    else:
        with open(source) as fh:
            obj = json.load(fh)
    if not isinstance(obj, dict) or "experiments" not in obj:
        raise ConfigError("config must be a JSON object with an 'experiments' list")
    configs = [ExperimentConfig.from_obj(e) for e in obj["experiments"]]
    return obj, configs


def run_suite(
    source: str | Mapping[str, Any],
    *,
    seed_override: int | None = None,
    jobs: int | None = None,
) -> SuiteReport:
    """Execute every experiment in the config and assemble a SuiteReport.

    Experiments are scheduled on a worker pool of ``jobs`` threads (default
    from the CMI_LAB_JOBS environment variable, else 1) and assembled in
    config order, so the report does not depend on the pool size.
    """
    obj, configs = load_config(source)
    n_jobs = _resolve_jobs(jobs)
    results: list[tuple[ExperimentResult, list[PropertyResult]]] = []
    wall: dict[str, float] = {}

    def timed_run(cfg: ExperimentConfig):
        start = time.perf_counter()
        out = run_experiment(cfg, seed_override=seed_override)
        return out, time.perf_counter() - start

    if n_jobs == 1 or len(configs) <= 1:
        timed = [timed_run(cfg) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            timed = list(pool.map(timed_run, configs))
    for cfg, (out, elapsed) in zip(configs, timed):
        results.append(out)
        wall[cfg.experiment_id] = elapsed

    experiments = tuple(res for res, _ in results)
    properties = tuple(p for _, props in results for p in props)
    return SuiteReport(
        version=__version__,
        config_hash=config_hash(obj),
        experiments=experiments,
        properties=properties,
        wall_times=wall,
    )


def emit(report: SuiteReport, fmt: str, path: str | None) -> str:
    """Serialize a report to CSV (one row per experiment-theorem pair) or
    JSON (lossless round trip) and optionally write it to ``path``."""
    if fmt == "csv":
        text = report.csv_text()
    elif fmt == "json":
        text = json.dumps(report.to_json_obj(), indent=2, sort_keys=True) + "\n"
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"failed to write report to {path!r}: {exc}") from exc
    return text


def bundled_suite_path() -> str:
    """Path of the reference suite configuration shipped with the package."""
    return str(resources.files("cmi_lab").joinpath("data/suite_reference.json"))


# ---------------------------------------------------------------------------
# single-computation entry points used by the CLI subcommands
# ---------------------------------------------------------------------------


def single_cmi(config: ExperimentConfig, seed_override: int | None = None) -> dict:
    seed = config.seed if seed_override is None else seed_override
    bundle = LEARNERS[config.learner_id](config.learner_params)
    dist = DISTRIBUTIONS[config.distribution_id](config.distribution_params)
    estimates = _compute_cmi(config, bundle, Population.from_finite(dist), seed)
    return {
        "id": config.experiment_id,
        "cmi": {mode: est.to_json_obj() for mode, est in estimates.items()},
    }


def _draw_candidates(config: ExperimentConfig, seed: int, count: int) -> list[Supersample]:
    dist = DISTRIBUTIONS[config.distribution_id](config.distribution_params)
    sampler = Population.from_finite(dist).supersample_sampler(config.n)
    return [sampler.draw(derive_seed(seed, config.experiment_id, "cand", i)) for i in range(count)]


def single_ucmi(
    config: ExperimentConfig, seed_override: int | None = None, candidates: int = 8
) -> dict:
    seed = config.seed if seed_override is None else seed_override
    bundle = LEARNERS[config.learner_id](config.learner_params)
    values = [
        ucmi_fixed(ss, bundle.kernel).value
        for ss in _draw_candidates(config, seed, candidates)
    ]
    return {"id": config.experiment_id, "ucmi_per_candidate_nats": values, "max_nats": max(values)}


def single_ecmi(
    config: ExperimentConfig, seed_override: int | None = None, candidates: int = 8
) -> dict:
    seed = config.seed if seed_override is None else seed_override
    bundle = LEARNERS[config.learner_id](config.learner_params)
    loss = LOSSES[config.loss_id](config.loss_params)
    rows = []
    for ss in _draw_candidates(config, seed, candidates):
        e = ecmi_fixed(ss, bundle.kernel, loss)
        c = cmi_exact_fixed(ss, bundle.kernel)
        rows.append({"ecmi_nats": e.value, "cmi_nats": c.value})
    return {"id": config.experiment_id, "candidates": rows}


def single_gap(config: ExperimentConfig, seed_override: int | None = None) -> dict:
    seed = config.seed if seed_override is None else seed_override
    bundle = LEARNERS[config.learner_id](config.learner_params)
    dist = DISTRIBUTIONS[config.distribution_id](config.distribution_params)
    loss = LOSSES[config.loss_id](config.loss_params)
    est = estimate_gap(
        bundle.fit,
        Population.from_finite(dist),
        loss,
        config.n,
        config.trials,
        derive_seed(seed, config.experiment_id),
    )
    return {"id": config.experiment_id, "gap": est.to_json_obj()}


def single_auroc(config: ExperimentConfig, seed_override: int | None = None) -> dict:
    import dataclasses

    requested = tuple(req for req in config.theorems if req.theorem_id == "auroc")
    narrowed = dataclasses.replace(
        config, theorems=requested or (TheoremRequest("auroc"),)
    )
    result, _ = run_experiment(narrowed, seed_override=seed_override)
    return result.to_json_obj()
