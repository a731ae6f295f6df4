"""Experiment configuration, dispatch and structured reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import platform
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bounds import (
    hs_centered_projector_norm,
    khintchine_t_bound,
    required_parameters,
    simplex_moments,
    simplex_moments_mc,
    tv_lower_bound_expression,
)
from .embedding import certify_distortion, dvoretzky_dimension, norm_identity_check
from .linalg import BipartiteDims
from .locking import (
    LockingScheme,
    adversary_conditionals,
    build_adversarial_povm,
    data_hiding_eval,
    fhs_parameter_check,
    hellinger_locking_bound,
    identification_check,
    key_length_lower_bound,
    locking_accounting,
    uniform_prior,
    verify_locking,
)
from .measurement import validate_povm
from .parallel import map_trials
from .sampling import Seed, sample_sphere, substream
from .uncertainty import (
    SearchOptions,
    StateSubset,
    entropic_comparison_value,
    estimate_r,
    haar_ensemble,
    worst_case_search,
)

EXPERIMENTS = ("uncertainty", "worst_case", "locking", "adversary", "data_hiding", "bounds", "embedding", "moments")
PROVENANCE = ("exact", "monte_carlo", "search_lower_bound", "closed_form")
GIB = 1024**3


class ConfigError(ValueError):
    """Configuration does not satisfy the schema."""


class InfeasibleError(RuntimeError):
    """Estimated memory exceeds the configured cap."""


@dataclass
class ExperimentConfig:
    experiment: str
    dims: tuple = (2, 2)
    t: int = 1
    eps: float = 0.1
    trials: int = 100
    seed: int = 0
    stream_id: int = 0
    subset: str = "full_sphere"
    output_path: str | None = None
    restarts: int = 20
    max_iter: int = 5000
    support_size: int = 2
    sampler: str = "haar"
    memory_cap_gib: float = 4.0

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("missing required field 'experiment'")
        data = dict(data)
        if "dims" in data:
            dims = data["dims"]
            if not isinstance(dims, (list, tuple)) or len(dims) != 2:
                raise ConfigError("dims must be a pair [d_a, d_b]")
            data["dims"] = tuple(dims)
        cfg = cls(**data)
        try:
            cfg.validate()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config value: {exc}") from exc
        return cfg

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["dims"] = list(self.dims)
        return out

    @property
    def bipartite(self) -> BipartiteDims:
        return BipartiteDims(*self.dims)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        for name in ("t", "trials", "restarts", "max_iter", "support_size"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not all(isinstance(x, int) and x >= 1 for x in self.dims):
            raise ConfigError(f"dims must be positive integers, got {self.dims!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0.0 < float(self.eps) < 1.0:
            raise ConfigError("eps must lie in (0, 1)")
        if self.memory_cap_gib <= 0:
            raise ConfigError("memory_cap_gib must be positive")
        if self.subset not in ("full_sphere", "separable"):
            raise ConfigError("subset must be 'full_sphere' or 'separable'")
        if self.sampler not in ("haar", "sphere"):
            raise ConfigError("sampler must be 'haar' or 'sphere'")
        d_a, d_b = self.dims
        if self.experiment in ("locking", "adversary", "data_hiding") and d_a & (d_a - 1):
            raise ConfigError("locking experiments need d_a = 2^n")
        if self.experiment == "data_hiding" and self.t != 1:
            raise ConfigError("data_hiding uses t = 1")
        if self.experiment == "bounds" and d_a < 2:
            raise ConfigError("bounds needs d_a >= 2")
        if self.experiment == "embedding" and d_b < 2:
            raise ConfigError("embedding needs d_b >= 2")
        if self.experiment == "adversary" and self.support_size > d_a:
            raise ConfigError("support_size exceeds the number of messages")

    def memory_estimate(self) -> int:
        d = self.dims[0] * self.dims[1]
        return d * d * self.t * 16


# ---------------------------------------------------------------------------
# report assembly


def encode_complex_array(a) -> dict:
    """``{"shape": [...], "data": [re, im, re, im, ...]}`` in row-major order."""
    a = np.asarray(a, dtype=np.complex128)
    flat = np.stack([a.real.ravel(), a.imag.ravel()], axis=1).ravel()
    return {"shape": list(a.shape), "data": flat.tolist()}


def decode_complex_array(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=np.float64).reshape(-1, 2)
    return (data[:, 0] + 1j * data[:, 1]).reshape(obj["shape"])


class _Scalars:
    def __init__(self):
        self.items: dict = {}

    def add(self, name: str, value, provenance: str, std_error=None):
        if provenance not in PROVENANCE:
            raise ValueError(f"bad provenance {provenance!r}")
        value = float(value)
        if math.isnan(value) or (std_error is not None and math.isnan(float(std_error))):
            raise ValueError(f"scalar {name!r} is NaN")
        entry = {"value": value, "provenance": provenance}
        if std_error is not None:
            entry["std_error"] = float(std_error)
        self.items[name] = entry


def _search_opts(cfg: ExperimentConfig) -> SearchOptions:
    return SearchOptions(restarts=cfg.restarts, max_iter=cfg.max_iter)


def _seed(cfg: ExperimentConfig) -> Seed:
    return Seed(cfg.seed, cfg.stream_id)


def _exp_moments(cfg, out, table, threads, arrays):
    d = cfg.dims[0] * cfg.dims[1]
    m = simplex_moments(d)
    out.add("mean", m.mean, "closed_form")
    out.add("variance", m.variance, "closed_form")
    out.add("covariance", m.covariance, "closed_form")
    mc = simplex_moments_mc(d, cfg.trials, substream(_seed(cfg), 0))
    for name, est in mc.items():
        out.add(f"{name}_mc", est.value, "monte_carlo", est.std_error)


def _exp_uncertainty(cfg, out, table, threads, arrays):
    dims = cfg.bipartite
    est = estimate_r(dims, cfg.t, cfg.trials, _seed(cfg), sampler=cfg.sampler, threads=threads)
    out.add("r_mean", est.mean, "monte_carlo", est.std_error)
    out.add("fidelity_mean", est.fidelity_mean, "monte_carlo", est.fidelity_std_error)
    out.add("r_upper_bound", 1.0 / math.sqrt(dims.d_b), "closed_form")
    out.add("fidelity_lower_bound", math.sqrt(1.0 - 1.0 / dims.d_b), "closed_form")


def _exp_worst_case(cfg, out, table, threads, arrays):
    dims = cfg.bipartite
    subset = StateSubset(cfg.subset)
    opts = _search_opts(cfg)
    seed = _seed(cfg)
    states: dict = {}

    def one(i):
        rng = substream(seed, i)
        ens = haar_ensemble(dims, cfg.t, rng)
        rep = worst_case_search(ens, subset, opts, rng=rng)
        states[i] = rep.worst_state
        return {
            "trial": i,
            "y": rep.y,
            "epsilon_fidelity": rep.epsilon_fidelity,
            "epsilon_metric": rep.epsilon_metric,
            "epsilon_entropic": rep.epsilon_entropic,
            "iterations": rep.iterations,
            "converged": rep.converged,
        }

    rows = map_trials(one, cfg.trials, threads)
    table.extend(rows)
    best = max(range(len(rows)), key=lambda i: rows[i]["y"])
    arrays["worst_state"] = encode_complex_array(states[best])
    for key in ("y", "epsilon_fidelity", "epsilon_metric", "epsilon_entropic"):
        vals = np.array([r[key] for r in rows])
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None
        out.add(f"{key}_mean", vals.mean(), "search_lower_bound", se)
        out.add(f"{key}_median", np.median(vals), "search_lower_bound")
    out.add("entropic_comparison", entropic_comparison_value(cfg.t, dims.d_a), "closed_form")


def _exp_locking(cfg, out, table, threads, arrays):
    d_a, d_b = cfg.dims
    n = d_a.bit_length() - 1
    seed = _seed(cfg)
    rng = substream(seed, 0)
    scheme = LockingScheme.haar(n, d_b, cfg.t, rng)
    out.add("identification_deviation", identification_check(scheme), "exact")
    rep = worst_case_search(scheme.ensemble, StateSubset("full_sphere"), _search_opts(cfg), rng=substream(seed, 1))
    out.add("y_sup", rep.y, "search_lower_bound")
    arrays["worst_state"] = encode_complex_array(rep.worst_state)
    effects = list(sample_sphere(scheme.dims.d, substream(seed, 2), size=cfg.trials))
    ver = verify_locking(scheme, uniform_prior(n), effects)
    out.add("max_posterior_hellinger", ver.max_hellinger, "monte_carlo")
    out.add("max_posterior_tv", ver.max_tv, "monte_carlo")
    out.add("chain_bound", math.sqrt(2.0) * rep.y, "search_lower_bound")
    out.add("hellinger_locking_bound_uniform", hellinger_locking_bound(rep.y, n, n), "search_lower_bound")
    out.add("key_length_lower_bound", key_length_lower_bound(cfg.eps, n), "closed_form")
    fhs = fhs_parameter_check(cfg.eps, d_b, cfg.t, scheme.dims.d)
    out.add("fhs_d_b_min", fhs["d_b_min"], "closed_form")
    out.add("fhs_t_min", fhs["t_min_exclusive"], "closed_form")
    out.add("fhs_probability_bound", fhs["probability_bound"], "closed_form")
    acc = locking_accounting(n, cfg.eps)
    out.add("qubits_leading", acc["qubits_leading"], "closed_form")
    out.add("key_bits_leading", acc["key_bits_leading"], "closed_form")


def _exp_adversary(cfg, out, table, threads, arrays):
    d_a, d_b = cfg.dims
    n = d_a.bit_length() - 1
    seed = _seed(cfg)

    def one(i):
        rng = substream(seed, i)
        scheme = LockingScheme.haar(n, d_b, cfg.t, rng)
        support = sorted(rng.choice(d_a, size=cfg.support_size, replace=False).tolist())
        povm = build_adversarial_povm(scheme, support)
        report = validate_povm(povm.as_list())
        cond = adversary_conditionals(scheme, povm)
        return {
            "trial": i,
            "completeness_residual": report.completeness_residual,
            "min_eigenvalue": report.min_eigenvalue,
            "min_conditional": min(cond.values()),
            "failed": bool(not report.valid or abs(min(cond.values()) - 1.0) > 1e-9),
        }

    rows = map_trials(one, cfg.trials, threads)
    table.extend(rows)
    out.add("failures", sum(r["failed"] for r in rows), "exact")
    out.add("min_conditional", min(r["min_conditional"] for r in rows), "exact")
    out.add("max_completeness_residual", max(r["completeness_residual"] for r in rows), "exact")
    out.add("min_effect_eigenvalue", min(r["min_eigenvalue"] for r in rows), "exact")


def _exp_data_hiding(cfg, out, table, threads, arrays):
    d_a, d_b = cfg.dims
    n = d_a.bit_length() - 1
    seed = _seed(cfg)
    ens = haar_ensemble(cfg.bipartite, 1, substream(seed, 0))
    res = data_hiding_eval(ens, uniform_prior(n), cfg.trials, substream(seed, 1), _search_opts(cfg), True)
    out.add("max_sampled_hellinger", res.max_sampled, "monte_carlo")
    out.add("max_searched_hellinger", res.max_searched, "search_lower_bound")
    out.add("separable_sup_y", res.separable_sup_y, "search_lower_bound")
    out.add("entangled_sup_y", res.entangled_sup_y, "search_lower_bound")


def _exp_bounds(cfg, out, table, threads, arrays):
    d_a, d_b = cfg.dims
    tv = tv_lower_bound_expression(d_a, d_b)
    out.add("tv_lower_bound_expression", tv.value, "closed_form")
    out.add("tv_lower_bound_simplified", tv.simplified, "closed_form")
    out.add("hs_centered_projector_norm_sq", hs_centered_projector_norm(d_a, d_b), "closed_form")
    seed = _seed(cfg)
    ens = haar_ensemble(cfg.bipartite, cfg.t, substream(seed, 0))
    kh = khintchine_t_bound(ens, n_sign_samples=cfg.trials, rng=substream(seed, 1))
    out.add("khintchine_analytic_bound", kh.analytic_bound, "closed_form")
    out.add("khintchine_estimate", kh.estimate, "exact" if kh.exact else "monte_carlo", None if kh.exact else kh.std_error)
    out.add("khintchine_floor", 1.0 / (2.0 * math.sqrt(2.0 * cfg.t)), "closed_form")
    req = required_parameters(cfg.eps)
    out.add("t_min", req["t_min"], "closed_form")
    out.add("d_b_min_coefficient", req["d_b_min_coefficient"], "closed_form")


def _exp_embedding(cfg, out, table, threads, arrays):
    dims = cfg.bipartite
    seed = _seed(cfg)
    ens = haar_ensemble(dims, cfg.t, substream(seed, 0))
    r_hat = estimate_r(dims, cfg.t, max(cfg.trials, 2), Seed(cfg.seed, cfg.stream_id + 1), sampler="sphere", threads=threads)
    dist = certify_distortion(ens, cfg.trials, _search_opts(cfg), substream(seed, 1), r_hat=r_hat.mean)
    states = sample_sphere(dims.d, substream(seed, 2), size=min(cfg.trials, 100))
    residual = max(norm_identity_check(ens, s) for s in states)
    out.add("r_hat", r_hat.mean, "monte_carlo", r_hat.std_error)
    out.add("distortion", dist.distortion, "search_lower_bound")
    out.add("min_ratio", dist.min_ratio, "search_lower_bound")
    out.add("max_ratio", dist.max_ratio, "search_lower_bound")
    out.add("median_norm", dist.median_norm, "monte_carlo")
    out.add("norm_identity_residual", residual, "exact")
    dv = dvoretzky_dimension(dims.d_a * cfg.t, dims.d_b, cfg.eps)
    out.add("dvoretzky_dimension", dv["dimension"], "closed_form")
    out.add("dvoretzky_prior_art", dv["prior_art"], "closed_form")


_DISPATCH = {
    "moments": _exp_moments,
    "uncertainty": _exp_uncertainty,
    "worst_case": _exp_worst_case,
    "locking": _exp_locking,
    "adversary": _exp_adversary,
    "data_hiding": _exp_data_hiding,
    "bounds": _exp_bounds,
    "embedding": _exp_embedding,
}


def run(config, threads: int | None = None) -> dict:
    """Run one experiment and return its report as a JSON-ready dict.

    Raises
    ------
    ConfigError
        On schema violations.
    InfeasibleError
        When the pre-flight memory estimate exceeds ``memory_cap_gib``.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    cfg.validate()
    if cfg.memory_estimate() > cfg.memory_cap_gib * GIB:
        raise InfeasibleError(
            f"estimated {cfg.memory_estimate() / GIB:.2f} GiB for the ensemble exceeds the cap of {cfg.memory_cap_gib} GiB"
        )
    scalars = _Scalars()
    table: list = []
    arrays: dict = {}
    start = time.perf_counter()
    _DISPATCH[cfg.experiment](cfg, scalars, table, threads, arrays)
    report = {
        "config": cfg.to_dict(),
        "results": scalars.items,
        "per_trial": table,
        "arrays": arrays,
        "versions": {"qlock": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "wall_time": time.perf_counter() - start,
    }
    if cfg.output_path:
        write_report(report, cfg.output_path)
    return report


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_report(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def sweep(configs, threads: int | None = None) -> str:
    """Run homogeneous configs and return a CSV table, one row per config."""
    cfgs = [c if isinstance(c, ExperimentConfig) else ExperimentConfig.from_dict(c) for c in configs]
    kinds = {c.experiment for c in cfgs}
    if len(kinds) > 1:
        raise ConfigError(f"sweep needs a single experiment kind, got {sorted(kinds)}")
    base_cols = ["experiment", "d_a", "d_b", "t", "eps", "trials", "seed"]
    rows, scalar_cols = [], []
    for cfg in cfgs:
        rep = run(dataclasses.replace(cfg, output_path=None), threads=threads)
        row = {
            "experiment": cfg.experiment, "d_a": cfg.dims[0], "d_b": cfg.dims[1], "t": cfg.t,
            "eps": cfg.eps, "trials": cfg.trials, "seed": cfg.seed,
        }
        for name, entry in rep["results"].items():
            row[name] = repr(entry["value"])
            if name not in scalar_cols:
                scalar_cols.append(name)
            if "std_error" in entry:
                row[f"{name}_se"] = repr(entry["std_error"])
                if f"{name}_se" not in scalar_cols:
                    scalar_cols.append(f"{name}_se")
        rows.append(row)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=base_cols + sorted(scalar_cols), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
