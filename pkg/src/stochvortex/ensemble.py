"""Experiment configuration, reproducible ensembles and their statistics.

Runs are independent and seeded by ``(master_seed, run)``, so results do not
depend on how runs are spread over workers.  Per-run results are reduced in
run order, which makes every summary field independent of completion order.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import galerkin
from .basis import SpectralField, as_wave, lambda_array
from .biot_savart import KernelConfig
from .observables import pair_array, sobolev_norm
from .particles import NoiseConfig, simulate_run

SYSTEMS = ("particle", "galerkin")
_MODE_RE = re.compile(r"^w\[(-?\d+),(-?\d+)\]$")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "experiment"
    system: str = "particle"
    vortex_count: int = 64
    noise_cutoff: int = 8
    galerkin_cutoff: int = 5
    kernel_cutoff: int | None = None        # None: exact periodic kernel
    grid_resolution: int | None = 256
    dt: float = 1e-3
    t_final: float = 0.5
    sample_times: tuple = (0.0, 0.25, 0.5)
    lags: tuple = ()
    ensemble_size: int = 100
    master_seed: int = 0
    observables: tuple = ("w[1,0]",)
    scheme: str = "euler"
    output: str = ""

    def __post_init__(self):
        for name in ("sample_times", "lags", "observables"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self):
        if self.system not in SYSTEMS:
            raise ConfigError("system", f"must be one of {SYSTEMS}")
        for name in ("vortex_count", "noise_cutoff", "galerkin_cutoff", "ensemble_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigError(name, f"must be an integer >= 1, got {v!r}")
        if self.kernel_cutoff is not None and self.kernel_cutoff < 1:
            raise ConfigError("kernel_cutoff", "must be >= 1 or null")
        for name in ("dt", "t_final"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(name, f"must be a positive finite number, got {v!r}")
        if not self.sample_times:
            raise ConfigError("sample_times", "at least one sample time is required")
        for t in self.sample_times:
            if not 0 <= t <= self.t_final:
                raise ConfigError("sample_times", f"{t} outside [0, t_final]")
            if not _is_multiple(t, self.dt):
                raise ConfigError("sample_times", f"{t} is not a multiple of dt")
        if list(self.sample_times) != sorted(set(self.sample_times)):
            raise ConfigError("sample_times", "must be strictly increasing")
        for lag in self.lags:
            if lag < 0 or not _is_multiple(lag, self.dt):
                raise ConfigError("lags", f"lag {lag} must be a nonnegative multiple of dt")
        if not _is_multiple(self.t_final, self.dt):
            raise ConfigError("t_final", "must be a multiple of dt")
        if not isinstance(self.master_seed, (int, np.integer)) or self.master_seed < 0:
            raise ConfigError("master_seed", "must be a nonnegative integer")
        if self.scheme not in ("euler", "heun"):
            raise ConfigError("scheme", "must be 'euler' or 'heun'")
        if not self.observables:
            raise ConfigError("observables", "at least one observable is required")
        for name in self.observables:
            try:
                parse_observable(name)
            except ValueError as exc:
                raise ConfigError("observables", str(exc)) from None
        if self.system == "galerkin":
            try:
                galerkin.GalerkinConfig(self.galerkin_cutoff, self.dt)
            except ValueError as exc:
                raise ConfigError("dt", str(exc)) from None
            for name in self.observables:
                kind, l = parse_observable(name)
                if kind == "mode" and l.norm2 > self.galerkin_cutoff ** 2:
                    raise ConfigError("observables", f"{name} outside galerkin_cutoff")
        try:
            self.kernel
        except ValueError as exc:
            raise ConfigError("grid_resolution", str(exc)) from None

    # -- derived ------------------------------------------------------------
    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def record_steps(self) -> list[int]:
        return [int(round(t / self.dt)) for t in self.sample_times]

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(self.kernel_cutoff, self.grid_resolution)

    # -- serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("sample_times", "lags", "observables"):
            d[name] = list(d[name])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)


def _is_multiple(t: float, dt: float) -> bool:
    q = t / dt
    return abs(q - round(q)) < 1e-9 * max(1.0, abs(q))


def parse_observable(name: str):
    """``"w[k1,k2]"`` (mode coefficient) or ``"sobolev"`` (``H^-1.5`` norm)."""
    m = _MODE_RE.match(name.replace(" ", ""))
    if m:
        return "mode", as_wave((int(m.group(1)), int(m.group(2))))
    if name == "sobolev":
        return "sobolev", None
    raise ValueError(f"unknown observable {name!r}; expected 'w[k1,k2]' or 'sobolev'")


# -- single runs ------------------------------------------------------------------

@dataclass
class RunResult:
    run: int
    values: np.ndarray            # (n_obs, n_times)
    degenerate: bool = False
    failed: bool = False
    close_fraction: float = 0.0
    min_distance: float = math.inf


def _observe_field(cfg: ExperimentConfig, coeffs: np.ndarray, modes: np.ndarray,
                   sobolev_cutoff: int) -> np.ndarray:
    """Observables from spectral coefficients ``(T, L)`` aligned with ``modes``."""
    index = {tuple(k): i for i, k in enumerate(modes)}
    low = (modes ** 2).sum(axis=1) <= sobolev_cutoff ** 2
    out = np.empty((len(cfg.observables), coeffs.shape[0]))
    for o, name in enumerate(cfg.observables):
        kind, l = parse_observable(name)
        if kind == "mode":
            out[o] = coeffs[:, index[tuple(l)]]
        else:
            out[o] = [sobolev_norm(SpectralField(sobolev_cutoff, c)) for c in coeffs[:, low]]
    return out


def run_single(cfg: ExperimentConfig, run: int) -> RunResult:
    """One run of the configured system, observed at ``cfg.sample_times``.

    The Sobolev observable is truncated at ``galerkin_cutoff`` for both
    systems so the two are directly comparable.
    """
    M = cfg.galerkin_cutoff
    if cfg.system == "particle":
        noise = NoiseConfig(cfg.noise_cutoff, cfg.master_seed, cfg.dt, run=run)
        traj = simulate_run(cfg.vortex_count, noise, cfg.n_steps, cfg.record_steps,
                            kernel=cfg.kernel, scheme=cfg.scheme)
        reach = [math.isqrt(l.norm2 - 1) + 1 for k, l in map(parse_observable, cfg.observables)
                 if k == "mode"]
        modes = lambda_array(max([M] + reach))
        coeffs = pair_array(traj.intensities[None], traj.positions, modes)
        return RunResult(run, _observe_field(cfg, coeffs, modes, M),
                         degenerate=traj.degenerate, failed=not traj.finite,
                         close_fraction=traj.close_fraction, min_distance=traj.min_distance)
    gcfg = galerkin.GalerkinConfig(M, cfg.dt, cfg.master_seed)
    traj = galerkin.simulate(gcfg, cfg.n_steps, cfg.record_steps, run=run)
    if not traj.finite:
        return RunResult(run, np.full((len(cfg.observables), len(cfg.sample_times)), np.nan),
                         failed=True)
    return RunResult(run, _observe_field(cfg, traj.coeffs, gcfg.modes, M))


def _run_chunk(cfg_dict: dict, runs: list[int]) -> list[RunResult]:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return [run_single(cfg, r) for r in runs]


# -- statistics -------------------------------------------------------------------

def batch_means_se(series, n_batches: int = 20) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batches."""
    x = np.asarray(series, dtype=float)
    n_batches = min(n_batches, len(x))
    if n_batches < 2:
        return math.nan
    size = len(x) // n_batches
    means = x[:size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def lag_products(values: np.ndarray, times, lag: float, dt: float) -> np.ndarray:
    """Per-run time-averaged ``a(t) a(t + lag)`` over all admissible origins.

    ``values`` has shape ``(runs, times)``; each run is one batch.
    """
    times = np.asarray(times, dtype=float)
    steps = np.rint(times / dt).astype(np.int64)
    where = {s: i for i, s in enumerate(steps)}
    h = int(round(lag / dt))
    pairs = [(i, where[s + h]) for i, s in enumerate(steps) if s + h in where]
    if not pairs:
        raise ValueError(f"lag {lag} not realisable on the sample grid")
    i0 = np.array([p[0] for p in pairs])
    i1 = np.array([p[1] for p in pairs])
    return (values[:, i0] * values[:, i1]).mean(axis=1)


@dataclass
class EnsembleSummary:
    config: dict
    config_hash: str
    master_seed: int
    ensemble_size: int
    count: int
    degenerate_runs: list
    failed_runs: list
    times: list
    observables: list
    mean: dict = field(default_factory=dict)          # name -> list over times
    variance: dict = field(default_factory=dict)
    fourth_moment: dict = field(default_factory=dict)
    standard_error: dict = field(default_factory=dict)
    autocovariance: dict = field(default_factory=dict)  # name -> {lag: [value, se]}
    close_fraction: float = 0.0
    min_distance: float = math.inf
    samples: np.ndarray | None = field(default=None, repr=False)  # (count, obs, times)

    @property
    def degenerate_count(self) -> int:
        return len(self.degenerate_runs)

    def stat(self, name: str, t: float) -> dict:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return dict(mean=self.mean[name][i], variance=self.variance[name][i],
                    fourth_moment=self.fourth_moment[name][i],
                    se=self.standard_error[name][i], count=self.count)

    def to_dict(self, include_samples: bool = False) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "samples"}
        d["autocovariance"] = {k: {repr(float(lag)): v for lag, v in tab.items()}
                               for k, tab in self.autocovariance.items()}
        if include_samples and self.samples is not None:
            d["samples"] = self.samples.tolist()
        return d

    def to_json(self, include_samples: bool = False) -> str:
        return json.dumps(self.to_dict(include_samples), sort_keys=True, indent=1,
                          default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSummary":
        d = json.loads(text)
        d["autocovariance"] = {k: {float(lag): v for lag, v in tab.items()}
                               for k, tab in d["autocovariance"].items()}
        if "samples" in d:
            d["samples"] = np.asarray(d["samples"], dtype=float)
        return cls(**d)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    def timeseries_rows(self):
        """``(t, name, value)`` rows of ensemble means for CSV output."""
        for name in self.observables:
            for t, v in zip(self.times, self.mean[name]):
                yield t, f"mean:{name}", v
            for t, v in zip(self.times, self.variance[name]):
                yield t, f"var:{name}", v


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if o == math.inf:
        return None
    raise TypeError(type(o))


def summarize(cfg: ExperimentConfig, results: list[RunResult]) -> EnsembleSummary:
    results = sorted(results, key=lambda r: r.run)
    good = [r for r in results if not (r.degenerate or r.failed)]
    samples = (np.stack([r.values for r in good]) if good
               else np.zeros((0, len(cfg.observables), len(cfg.sample_times))))
    n = len(good)
    s = EnsembleSummary(
        config=cfg.to_dict(), config_hash=cfg.config_hash(), master_seed=cfg.master_seed,
        ensemble_size=cfg.ensemble_size, count=n,
        degenerate_runs=[r.run for r in results if r.degenerate and not r.failed],
        failed_runs=[r.run for r in results if r.failed],
        times=[float(t) for t in cfg.sample_times], observables=list(cfg.observables),
        samples=samples)
    for o, name in enumerate(cfg.observables):
        x = samples[:, o, :]
        s.mean[name] = x.mean(axis=0).tolist() if n else [math.nan] * x.shape[1]
        var = x.var(axis=0, ddof=1) if n > 1 else np.full(x.shape[1], math.nan)
        s.variance[name] = var.tolist()
        s.fourth_moment[name] = (x ** 4).mean(axis=0).tolist() if n else [math.nan] * x.shape[1]
        s.standard_error[name] = np.sqrt(var / max(n, 1)).tolist()
        tab = {}
        for lag in cfg.lags:
            if n == 0:
                tab[float(lag)] = [math.nan, math.nan]
                continue
            per_run = lag_products(x, cfg.sample_times, lag, cfg.dt)
            se = per_run.std(ddof=1) / math.sqrt(n) if n > 1 else math.nan
            tab[float(lag)] = [float(per_run.mean()), float(se)]
        s.autocovariance[name] = tab
    if cfg.system == "particle" and results:
        s.close_fraction = float(np.mean([r.close_fraction for r in results]))
        s.min_distance = float(min(r.min_distance for r in results))
    return s


def run_ensemble(cfg: ExperimentConfig, workers: int = 1,
                 chunk: int | None = None) -> EnsembleSummary:
    """Run ``cfg.ensemble_size`` independent runs and summarise them."""
    runs = list(range(cfg.ensemble_size))
    if workers <= 1:
        results = [run_single(cfg, r) for r in runs]
    else:
        chunk = chunk or max(1, len(runs) // (4 * workers))
        parts = [runs[i:i + chunk] for i in range(0, len(runs), chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, cfg.to_dict(), p) for p in parts]
            results = [r for f in futures for r in f.result()]
    return summarize(cfg, results)


# -- comparison -------------------------------------------------------------------

@dataclass
class LagComparison:
    lag: float
    a: float
    b: float
    difference: float
    combined_se: float
    passed: bool


@dataclass
class ComparisonReport:
    observable: str
    n_se: float
    abs_tol: float | None
    rows: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def lines(self) -> list[str]:
        out = []
        for r in self.rows:
            out.append(f"lag={r.lag:g} a={r.a:.5f} b={r.b:.5f} diff={r.difference:+.5f} "
                       f"se={r.combined_se:.5f} {'PASS' if r.passed else 'FAIL'}")
        return out


def compare_autocovariance(a: EnsembleSummary, b: EnsembleSummary, lags=None,
                           observable: str | None = None, n_se: float = 3.0,
                           abs_tol: float | None = None) -> ComparisonReport:
    """Per-lag difference of stationary autocovariances.

    A lag passes when ``|diff| <= n_se * combined_se`` or, if ``abs_tol`` is
    given, when ``|diff| < abs_tol``.
    """
    if observable is None and set(a.observables) != set(b.observables):
        raise ValueError(f"observables differ: {a.observables} vs {b.observables}; "
                         "name one to compare")
    name = observable or a.observables[0]
    if name not in a.observables or name not in b.observables:
        raise ValueError(f"observable {name!r} not in both summaries")
    ta, tb = a.autocovariance[name], b.autocovariance[name]
    lags = sorted(ta) if lags is None else [float(x) for x in lags]
    rows = []
    for lag in lags:
        if lag not in ta or lag not in tb:
            raise ValueError(f"lag {lag} missing from a summary")
        va, sa = ta[lag]
        vb, sb = tb[lag]
        d = va - vb
        se = math.sqrt(sa ** 2 + sb ** 2)
        ok = abs(d) <= n_se * se or (abs_tol is not None and abs(d) < abs_tol)
        rows.append(LagComparison(lag, va, vb, d, se, bool(ok)))
    return ComparisonReport(name, n_se, abs_tol, rows)
