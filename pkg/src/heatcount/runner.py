"""Run configuration, experiment orchestration and on-disk outputs."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from heatcount import __version__, ibm
from heatcount.engine import CountingVariant, HeatCountingModel
from heatcount.ergotropy import ergotropy_series
from heatcount.model import ModelParams, RCParams, map_to_rc, reorganization_energy
from heatcount.statistics import (
    DEFAULT_CHI_EPS,
    EXACT,
    cf_scan,
    distribution_from_cf,
    moment_series,
    resolve_threads,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXPERIMENTS = ("benchmark-dynamics", "cf-scan", "moments", "ergotropy", "distribution")

COLUMNS = {
    "benchmark-dynamics": ("t_ps", "sx_rcme", "sx_exact", "abs_err"),
    "cf-scan": ("chi", "re_F_rc", "im_F_rc", "re_F_ex", "im_F_ex", "re_R_rc", "im_R_rc"),
    "moments": ("t_ps", "mean_F_rc", "mean_F_ex", "mean_R_rc", "var_F_rc", "var_F_ex", "var_R_rc"),
    "ergotropy": ("t_ps", "tls_ergotropy", "es_ergotropy", "sx_rcme"),
    "distribution": ("q", "p_F_rc", "p_F_ex", "p_R_rc"),
}

_CHI_SCAN = {"start": -3.0, "stop": 3.0, "num": 241}
DEFAULT_GRIDS = {
    "benchmark-dynamics": {"t": {"start": 0.0, "stop": 300.0, "step": 0.1}},
    "cf-scan": {"chi": _CHI_SCAN, "t": {"values": [1000.0]}},
    "moments": {"t": {"start": 0.0, "stop": 500.0, "step": 0.5}},
    "ergotropy": {"t": {"start": 0.0, "stop": 300.0, "step": 0.05}},
    "distribution": {"chi": _CHI_SCAN, "t": {"values": [1000.0]},
                     "q": {"start": -1.0, "stop": 2.0, "num": 601}},
}


class ConfigError(ValueError):
    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class GridSpec:
    start: float | None = None
    stop: float | None = None
    step: float | None = None
    num: int | None = None
    values: tuple | None = None

    @classmethod
    def from_dict(cls, d, name):
        if isinstance(d, (list, tuple)):
            d = {"values": d}
        if not isinstance(d, dict):
            raise ConfigError("grid must be an object or a list of values", field=f"grids.{name}")
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", field=f"grids.{name}")
        if "values" in d:
            return cls(values=tuple(float(v) for v in d["values"]))
        try:
            g = cls(start=float(d["start"]), stop=float(d["stop"]),
                    step=None if d.get("step") is None else float(d["step"]),
                    num=None if d.get("num") is None else int(d["num"]))
        except KeyError as exc:
            raise ConfigError(f"missing {exc.args[0]!r}", field=f"grids.{name}") from None
        if (g.step is None) == (g.num is None):
            raise ConfigError("give exactly one of 'step' or 'num'", field=f"grids.{name}")
        return g

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.num is not None:
            return np.linspace(self.start, self.stop, self.num)
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items() if v is not None}


@dataclass
class RunConfig:
    experiment: str = "benchmark-dynamics"
    model: ModelParams = field(default_factory=ModelParams)
    overrides: RCParams | None = None
    grids: dict = field(default_factory=dict)
    chi_eps: float = DEFAULT_CHI_EPS
    output_dir: Path = Path("results")
    threads: int | str = "auto"
    plot: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}", field="experiment")
        merged = {k: GridSpec.from_dict(v, k) for k, v in DEFAULT_GRIDS[self.experiment].items()}
        merged.update({k: v if isinstance(v, GridSpec) else GridSpec.from_dict(v, k)
                       for k, v in self.grids.items()})
        self.grids = merged
        self.output_dir = Path(self.output_dir)
        if not self.chi_eps > 0:
            raise ConfigError("chi_eps must be positive", field="chi_eps")

    def grid(self, name) -> np.ndarray:
        return self.grids[name].array()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model.to_dict(),
            "overrides": None if self.overrides is None else self.overrides.to_dict(),
            "grids": {k: g.to_dict() for k, g in self.grids.items()},
            "chi_eps": self.chi_eps,
            "output_dir": str(self.output_dir),
            "threads": self.threads,
            "plot": self.plot,
        }


_TOP_KEYS = {f.name for f in fields(RunConfig)}


def _line_of(text, key):
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def config_from_dict(d: dict, experiment: str | None = None, text: str = "") -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", field=key, line=_line_of(text, key))
    kwargs: dict[str, Any] = {k: v for k, v in d.items() if k not in ("model", "overrides")}
    if experiment is not None:
        kwargs["experiment"] = experiment
    model = d.get("model") or {}
    model_fields = {f.name for f in fields(ModelParams)}
    for key in model:
        if key not in model_fields:
            raise ConfigError(f"unknown model parameter {key!r}", field=f"model.{key}",
                              line=_line_of(text, key))
    try:
        kwargs["model"] = ModelParams(**model)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field="model", line=_line_of(text, "model")) from None
    if d.get("overrides"):
        try:
            kwargs["overrides"] = RCParams(**d["overrides"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field="overrides", line=_line_of(text, "overrides")) from None
    try:
        return RunConfig(**kwargs)
    except ConfigError as exc:
        if exc.line is None and exc.field:
            exc.line = _line_of(text, exc.field.split(".")[-1])
            exc.args = (f"{exc.args[0]} (line {exc.line})",) if exc.line else exc.args
        raise


def load_config(path, experiment: str | None = None) -> RunConfig:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return config_from_dict(d, experiment, text)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "info" | "warning" | "error"
    code: str
    message: str


def validate(config: RunConfig) -> list[Diagnostic]:
    """Dry-run checks; writes nothing."""
    out = []
    p = config.model
    try:
        rc = config.overrides or map_to_rc(p)
        reorg = reorganization_energy(p, cutoff_override=200 * p.omega0)
        target = rc.lambda_rc**2 / rc.omega_rc
        rel = abs(reorg - target) / target if target > 0 else math.inf
        if rel < 1e-3:
            level = "info"
        else:
            # explicit overrides are allowed to depart from the mapping
            level = "warning" if config.overrides is not None else "error"
        out.append(Diagnostic(level, "reorganization",
                              f"int J/w = {reorg:.6g} eV, lambda^2/Omega = {target:.6g} eV (rel {rel:.2e})"))
    except ValueError as exc:
        out.append(Diagnostic("error", "rc-mapping", str(exc)))
        return out

    x = p.beta * rc.omega_rc
    M = p.m_rc
    top = math.exp(-x * (M - 1)) * (1 - math.exp(-x)) / (1 - math.exp(-x * M))
    out.append(Diagnostic("warning" if top >= 1e-6 else "info", "truncation-thermal",
                          f"thermal occupation of RC level {M - 1}: {top:.3e}"))
    # the RC swings out to displacement 2 lambda/Omega; Poisson weight it carries above the cutoff
    mean_n = (2 * rc.lambda_rc / rc.omega_rc) ** 2
    tail = _poisson_tail(mean_n, M)
    out.append(Diagnostic("warning" if tail >= 1e-3 else "info", "truncation-displacement",
                          f"coherent-state weight above RC level {M - 1} at maximal displacement: {tail:.3e}"))

    for name, g in config.grids.items():
        arr = g.array()
        if arr.size == 0:
            out.append(Diagnostic("error", "grid", f"grid '{name}' is empty"))
        elif name == "t" and (arr[0] < 0 or np.any(np.diff(arr) < 0)):
            out.append(Diagnostic("error", "grid", "time grid must be non-negative and ascending"))
    if config.experiment in ("cf-scan", "distribution") and config.grid("t").size != 1:
        out.append(Diagnostic("error", "grid", f"{config.experiment} takes exactly one time"))
    if config.experiment == "distribution":
        chi = config.grid("chi")
        d = np.diff(chi)
        if chi.size < 3 or not np.allclose(d, d[0]) or not np.allclose(chi, -chi[::-1]):
            out.append(Diagnostic("error", "grid", "distribution needs a uniform chi grid symmetric about 0"))
    if config.experiment == "benchmark-dynamics" and p.delta != 0:
        out.append(Diagnostic("error", "regime", "the exact benchmark needs delta = 0"))
    return out


def _poisson_tail(mean, M):
    """P(n >= M) for a Poisson distribution."""
    term = math.exp(-mean)
    head = 0.0
    for n in range(M):
        head += term
        term *= mean / (n + 1)
    return max(0.0, 1.0 - head)


def has_errors(diagnostics) -> bool:
    return any(d.level == "error" for d in diagnostics)


class RunFailed(RuntimeError):
    def __init__(self, message, manifest=None):
        super().__init__(message)
        self.manifest = manifest


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {name: body[:, i] for i, name in enumerate(header)}


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_json(path: Path, obj) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def verify_manifest(path) -> bool:
    path = Path(path)
    manifest = json.loads(path.read_text())
    return all(sha256(path.parent / name) == digest for name, digest in manifest["outputs"].items())


def _nan_like(x):
    return np.full(np.shape(x), np.nan)


def _benchmark(config, model, threads):
    t = config.grid("t")
    sx = model.dynamics_chi0(t).sx
    ex = ibm.exact_coherence(t, model.params)
    return [t, sx, ex, np.abs(sx - ex)], {}, {}


def _cf_scan(config, model, threads):
    chi = config.grid("chi")
    t = config.grid("t")
    F = cf_scan(CountingVariant.FULL, chi, t, model, threads)
    R = cf_scan(CountingVariant.RESIDUAL, chi, t, model, threads)
    ex = cf_scan(EXACT, chi, t, model).values[:, 0] if model.params.delta == 0 else _nan_like(chi)
    failures = {**{f"F:{k}": v for k, v in F.failures.items()}, **{f"R:{k}": v for k, v in R.failures.items()}}
    f, r = F.values[:, 0], R.values[:, 0]
    return [chi, f.real, f.imag, np.real(ex), np.imag(ex), r.real, r.imag], failures, {}


def _moments(config, model, threads):
    t = config.grid("t")
    F = moment_series(CountingVariant.FULL, t, config.chi_eps, model)
    R = moment_series(CountingVariant.RESIDUAL, t, config.chi_eps, model)
    if model.params.delta == 0:
        E = moment_series(EXACT, t, None, model)
        em, ev = E.mean, E.variance
    else:
        em, ev = _nan_like(t), _nan_like(t)
    return [t, F.mean, em, R.mean, F.variance, ev, R.variance], {}, {"chi_eps": config.chi_eps}


def _ergotropy(config, model, threads):
    rep = ergotropy_series(model, config.grid("t"))
    return [rep.t_grid, rep.tls_ergotropy, rep.es_ergotropy, rep.sx], {}, {}


def _distribution(config, model, threads):
    chi = config.grid("chi")
    t = config.grid("t")
    q = config.grid("q")
    cols, failures, meta = [q], {}, {}
    variants = [CountingVariant.FULL, EXACT, CountingVariant.RESIDUAL]
    for v in variants:
        if v == EXACT and model.params.delta != 0:
            cols.append(_nan_like(q))
            continue
        series = cf_scan(v, chi, t, model, threads)
        failures.update({f"{series.variant}:{k}": e for k, e in series.failures.items()})
        P, info = distribution_from_cf(series, 0, q)
        meta[series.variant] = info
        cols.append(P)
    return cols, failures, {"window": meta}


_RUNNERS = {
    "benchmark-dynamics": _benchmark,
    "cf-scan": _cf_scan,
    "moments": _moments,
    "ergotropy": _ergotropy,
    "distribution": _distribution,
}


def run(config: RunConfig, serial: bool = False) -> dict:
    """Run one experiment, write ``<experiment>.csv`` and ``manifest.json``.

    Raises :class:`RunFailed` if validation fails or some grid points could not
    be computed; in the latter case the partial outputs and a manifest flagged
    ``partial`` are still written.
    """
    diags = validate(config)
    if has_errors(diags):
        raise RunFailed("; ".join(d.message for d in diags if d.level == "error"))
    for d in diags:
        if d.level == "warning":
            log.warning("%s: %s", d.code, d.message)

    threads = 1 if serial else resolve_threads(config.threads)
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    model = HeatCountingModel(config.model, config.overrides)
    columns, failures, meta = _RUNNERS[config.experiment](config, model, threads)

    outputs = {}
    csv_path = out_dir / f"{config.experiment}.csv"
    write_csv(csv_path, COLUMNS[config.experiment], columns)
    outputs[csv_path.name] = sha256(csv_path)
    if config.plot:
        from heatcount.plotting import quicklook

        svg = quicklook(config.experiment, COLUMNS[config.experiment], columns, out_dir)
        outputs[svg.name] = sha256(svg)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "heatcount",
        "tool_version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "experiment": config.experiment,
        "config": config.to_dict(),
        "rc_params": model.rc.to_dict(),
        "threads": threads,
        "wall_time_s": time.perf_counter() - started,
        "outputs": outputs,
        "partial": bool(failures),
        "failures": {str(k): v for k, v in failures.items()},
        "diagnostics": [asdict(d) for d in diags],
        "metadata": meta,
    }
    _atomic_write_json(out_dir / "manifest.json", manifest)
    if failures:
        raise RunFailed(f"{len(failures)} grid points failed; partial outputs written", manifest)
    return manifest
