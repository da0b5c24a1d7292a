"""
Reproduceerbare experimenten: config parsen, trials uitvoeren (eventueel in
parallel), en rows.jsonl / summary.csv / manifest.json schrijven.

Configformaat:

    # commentaar
    [experiment]
    kind = contact_survival
    seed = 42
    trials = 200

    [contact_survival]
    lams = 1.0, 1.5, 2.0
    t_max = 50

Trial i gebruikt uitsluitend derive_trial_seed(seed, i); rijen worden in
trial-volgorde geschreven, dus het aantal workers verandert geen byte.
"""

import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import Config
from ..errors import ConfigurationError, DiagnosticError
from ..models import (
    ExperimentKind, config_digest, record_run_finish, record_run_start, registry_engine
)
from ..utils.export import read_jsonl, write_column_csv, write_csv, write_json, write_jsonl
from ..utils.rng import MASK64, StreamKind, derive_seed, derive_trial_seed
from ..utils.stats import mean_estimate
from . import contact, networks, neural, percolation, walks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

ROWS_FILE = "rows.jsonl"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"
SUMMARY_COLUMNS = ["group", "metric", "mean", "ci", "count", "censored"]
RESERVED = ("trial", "seed", "group")

KIND_DESCRIPTIONS = {
    ExperimentKind.percolation_scan: "spanning probability of bond/site percolation over a p-grid",
    ExperimentKind.contact_survival: "contact process survival and extinction times over a lambda grid",
    ExperimentKind.idle_contact: "idle contact process survival over a gamma grid",
    ExperimentKind.exit_laws: "random-walk interval exit, first passage or planar disk exit laws",
    ExperimentKind.resistance_scaling: "effective resistance and escape probability on percolation clusters",
    ExperimentKind.neural_phase: "activity of neuron 0 over a (beta, s) grid of the dynamic synapse model",
}


# --- parameterschema's ---

@dataclass(frozen=True)
class Param:
    type: str                                   # int | float | str | bool | ints | floats
    default: object
    check: Callable[[object], bool] = lambda v: True
    rule: str = ""
    choices: Tuple[str, ...] = ()


def _positive(v) -> bool:
    return v > 0


def _unit(v) -> bool:
    return 0.0 <= v <= 1.0


def _all(pred):
    return lambda values: len(values) > 0 and all(pred(v) for v in values)


def _increasing(values) -> bool:
    return len(values) > 0 and all(b > a for a, b in zip(values, values[1:]))


INITIAL_CHOICES = contact.INITIAL_KINDS

SCHEMAS: Dict[ExperimentKind, Dict[str, Param]] = {
    ExperimentKind.percolation_scan: {
        "d": Param("int", 2, lambda v: v in (1, 2, 3), "must be 1, 2 or 3"),
        "L": Param("int", 64, lambda v: v >= 2, "must be >= 2"),
        "mode": Param("str", "bond", choices=("bond", "site")),
        "boundary": Param("str", "open", choices=("open", "periodic")),
        "p_min": Param("float", 0.3, _unit, "must lie in [0, 1]"),
        "p_max": Param("float", 0.7, _unit, "must lie in [0, 1]"),
        "p_step": Param("float", 0.05, _positive, "must be > 0"),
        "axis": Param("int", 0, lambda v: v >= 0, "must be >= 0"),
    },
    ExperimentKind.contact_survival: {
        "d": Param("int", 1, lambda v: v in (1, 2, 3), "must be 1, 2 or 3"),
        "L": Param("int", 200, lambda v: v >= 2, "must be >= 2"),
        "lams": Param("floats", [1.0, 1.6, 2.0], _all(lambda v: v >= 0), "must be >= 0"),
        "t_max": Param("float", 100.0, _positive, "must be > 0"),
        "initial": Param("str", "single_origin", choices=INITIAL_CHOICES),
        "p_site": Param("float", 0.7, _unit, "must lie in [0, 1]"),
        "strip_width": Param("int", 1, lambda v: v >= 0, "must be >= 0"),
        "strip_period": Param("int", 5, _positive, "must be > 0"),
        "lam_big": Param("float", 10.0, lambda v: v >= 0, "must be >= 0"),
        "burn_in": Param("float", 10.0, lambda v: v >= 0, "must be >= 0"),
        "bisect": Param("bool", False),
        "bracket": Param("floats", [1.0, 2.5], lambda v: len(v) == 2 and 0 <= v[0] < v[1],
                         "must be two increasing rates >= 0"),
        "bisect_trials": Param("int", 100, lambda v: v >= 1, "must be >= 1"),
        "bisect_iterations": Param("int", 8, lambda v: v >= 1, "must be >= 1"),
        "threshold": Param("float", 0.05, lambda v: 0 < v < 1, "must lie in (0, 1)"),
    },
    ExperimentKind.idle_contact: {
        "d": Param("int", 1, lambda v: v in (1, 2, 3), "must be 1, 2 or 3"),
        "L": Param("int", 200, lambda v: v >= 2, "must be >= 2"),
        "lam": Param("float", 1.0, lambda v: v >= 0, "must be >= 0"),
        "gammas": Param("floats", [0.0, 1.0, 10.0], _all(lambda v: v >= 0), "must be >= 0"),
        "t_max": Param("float", 50.0, _positive, "must be > 0"),
        "background": Param("str", "idle", choices=("idle", "vacant")),
        "shared_clock": Param("bool", False),
    },
    ExperimentKind.exit_laws: {
        "law": Param("str", "interval", choices=("interval", "first_passage", "planar")),
        "n": Param("int", 100, lambda v: v >= 1, "must be >= 1"),
        "norm": Param("str", "euclidean", choices=("euclidean", "sup")),
        "method": Param("str", "reflection", choices=("reflection", "path")),
        "ks_threshold": Param("float", 0.02, _positive, "must be > 0"),
    },
    ExperimentKind.resistance_scaling: {
        "d": Param("int", 2, lambda v: v in (2, 3), "must be 2 or 3"),
        "p": Param("float", 0.7, _unit, "must lie in [0, 1]"),
        "mode": Param("str", "bond", choices=("bond", "site")),
        "radii": Param("ints", [4, 8, 16], lambda v: _increasing(v) and v[0] >= 1,
                       "must be positive and strictly increasing"),
        "max_resamples": Param("int", 100, lambda v: v >= 0, "must be >= 0"),
        "policy": Param("str", "exterior", choices=("exterior", "exclude")),
    },
    ExperimentKind.neural_phase: {
        "N": Param("int", 50, lambda v: v >= 0, "must be >= 0"),
        "p_nn": Param("float", 0.2, _unit, "must lie in [0, 1]"),
        "mu": Param("float", 1.0, _positive, "must be > 0"),
        "t_max": Param("float", 20.0, _positive, "must be > 0"),
        "betas": Param("floats", [0.0, 0.5, 1.0], _all(lambda v: v >= 0), "must be >= 0"),
        "ss": Param("floats", [1.5, 2.0, 3.0], _all(_positive), "must be > 0"),
    },
}

EXPERIMENT_KEYS = {
    "kind": Param("str", None, choices=tuple(k.value for k in ExperimentKind)),
    "seed": Param("int", None, lambda v: 0 <= v <= MASK64, "must be a 64-bit unsigned integer"),
    "trials": Param("int", 100, lambda v: v >= 0, "must be >= 0"),
    "workers": Param("int", None, lambda v: v >= 1, "must be >= 1"),
    "out": Param("str", None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    seed: int
    trials: int
    workers: int
    out: Path
    params: Dict[str, object] = field(default_factory=dict)

    def echo(self) -> dict:
        """Canonieke weergave zonder workers/out: dit bepaalt de inhoud van rows.jsonl."""
        return {"kind": self.kind.value, "seed": self.seed, "trials": self.trials,
                "params": dict(sorted(self.params.items()))}


def _convert(raw: str, param: Param, key: str, line: int):
    try:
        if param.type == "int":
            value = int(raw)
        elif param.type == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
        elif param.type == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            value = low in ("true", "1", "yes")
        elif param.type in ("ints", "floats"):
            cast = int if param.type == "ints" else float
            value = [cast(part) for part in raw.split(",") if part.strip()]
        else:
            value = raw
    except ValueError:
        raise ConfigurationError(f"cannot parse {raw!r} as {param.type}", key=key, line=line)
    if param.choices and value not in param.choices:
        raise ConfigurationError(f"must be one of {', '.join(param.choices)}", key=key, line=line)
    if not param.check(value):
        raise ConfigurationError(f"value {raw!r} out of range: {param.rule}", key=key, line=line)
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse en valideer een experimentconfig; de eerste fout komt terug met regelnummer."""
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    section_lines: Dict[str, int] = {}
    current: Optional[str] = None
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split(" #", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigurationError(f"duplicate section [{current}]", line=number)
            sections[current] = {}
            section_lines[current] = number
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"expected 'key = value', got {line!r}", line=number)
        if current is None:
            raise ConfigurationError("key outside of a section", key=key.strip(), line=number)
        key, value = key.strip(), value.strip()
        if key in sections[current]:
            raise ConfigurationError("duplicate key", key=key, line=number)
        sections[current][key] = (value, number)

    if "experiment" not in sections:
        raise ConfigurationError("missing [experiment] section")
    head = sections["experiment"]
    values: Dict[str, object] = {}
    for key, (raw, number) in head.items():
        if key not in EXPERIMENT_KEYS:
            raise ConfigurationError("unknown key", key=key, line=number)
        values[key] = _convert(raw, EXPERIMENT_KEYS[key], key, number)
    for required in ("kind", "seed"):
        if required not in values:
            raise ConfigurationError("missing required key", key=required,
                                     line=section_lines["experiment"])
    kind = ExperimentKind(values["kind"])

    for name, number in section_lines.items():
        if name not in ("experiment", kind.value):
            raise ConfigurationError(f"unknown section [{name}] for kind {kind.value}", line=number)
    schema = SCHEMAS[kind]
    params = {key: (list(param.default) if isinstance(param.default, list) else param.default)
              for key, param in schema.items()}
    for key, (raw, number) in sections.get(kind.value, {}).items():
        if key not in schema:
            raise ConfigurationError("unknown key", key=key, line=number)
        params[key] = _convert(raw, schema[key], key, number)
    _cross_check(kind, params, sections.get(kind.value, {}))

    out = values.get("out")
    return ExperimentConfig(
        kind=kind,
        seed=int(values["seed"]),
        trials=int(values.get("trials", EXPERIMENT_KEYS["trials"].default)),
        workers=int(values.get("workers") or Config.WORKERS),
        out=Path(out) if out else Config.OUT_DIR / kind.value,
        params=params,
    )


def _cross_check(kind: ExperimentKind, params: dict, lines: Dict[str, Tuple[str, int]]) -> None:
    """Controles die meer dan één key betreffen."""
    def where(key):
        return lines.get(key, ("", None))[1]

    if kind is ExperimentKind.percolation_scan:
        if params["p_max"] < params["p_min"]:
            raise ConfigurationError("p_max must be >= p_min", key="p_max", line=where("p_max"))
        if params["axis"] >= params["d"]:
            raise ConfigurationError("axis must be < d", key="axis", line=where("axis"))
        if params["boundary"] == "periodic" and params["L"] < 3:
            raise ConfigurationError("periodic lattices need L >= 3", key="L", line=where("L"))
    if kind is ExperimentKind.contact_survival and params["strip_period"] <= params["strip_width"]:
        raise ConfigurationError("strip_period must exceed strip_width", key="strip_period",
                                 line=where("strip_period"))
    if kind is ExperimentKind.resistance_scaling:
        mode = percolation.PercolationMode(params["mode"])
        if params["p"] <= networks.CRITICAL_P[(params["d"], mode)]:
            raise ConfigurationError("p must be supercritical", key="p", line=where("p"))


def with_overrides(config: ExperimentConfig, seed: Optional[int] = None, trials: Optional[int] = None,
                   workers: Optional[int] = None, out: Optional[Path] = None) -> ExperimentConfig:
    if seed is not None and not (0 <= seed <= MASK64):
        raise ConfigurationError("must be a 64-bit unsigned integer", key="seed")
    if trials is not None and trials < 0:
        raise ConfigurationError("must be >= 0", key="trials")
    if workers is not None and workers < 1:
        raise ConfigurationError("must be >= 1", key="workers")
    changes = {k: v for k, v in
               {"seed": seed, "trials": trials, "workers": workers,
                "out": Path(out) if out is not None else None}.items() if v is not None}
    return replace(config, **changes)


# --- trials per soort ---

def _grid(lo: float, hi: float, step: float) -> List[float]:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(count)]


def _trial_percolation(params: dict, seed: int) -> List[dict]:
    lattice = percolation.build_lattice(params["d"], params["L"], params["boundary"])
    rows = []
    # dezelfde uniformen voor elke p: monotone koppeling over het grid
    for p in _grid(params["p_min"], params["p_max"], params["p_step"]):
        sample = percolation.sample_percolation(lattice, params["mode"], p, seed)
        labeling = percolation.label_clusters(sample)
        largest = int(labeling.sizes.max()) if labeling.sizes.size else 0
        rows.append({
            "group": f"p={p}",
            "p": p,
            "spanning": percolation.spanning_present(labeling, params["axis"]),
            "open_fraction": sample.open_fraction,
            "largest_fraction": largest / lattice.n_vertices,
        })
    return rows


def _initial_args(params: dict) -> dict:
    return {"p_site": params["p_site"], "w": params["strip_width"], "k": params["strip_period"],
            "lam_big": params["lam_big"], "burn_in": params["burn_in"]}


def _trial_contact(params: dict, seed: int) -> List[dict]:
    window = percolation.build_lattice(params["d"], params["L"])
    initial = contact.gen_initial(params["initial"], _initial_args(params), window,
                                  derive_seed(seed, StreamKind.initial))
    rows = []
    for k, lam in enumerate(params["lams"]):
        traj = contact.simulate_contact(contact.ContactParams(lam, window), initial, params["t_max"],
                                        derive_seed(seed, k), record=False)
        rows.append({
            "group": f"lam={lam}",
            "lam": lam,
            "alive": not traj.extinct,
            "extinction_time": traj.extinction_time,
            "events": traj.n_events,
        })
    return rows


def _trial_idle(params: dict, seed: int) -> List[dict]:
    window = percolation.build_lattice(params["d"], params["L"])
    origin = window.center()
    rows = []
    for k, gamma in enumerate(params["gammas"]):
        idle = contact.IdleParams(contact.ContactParams(params["lam"], window), gamma,
                                  shared_clock=params["shared_clock"])
        traj = contact.simulate_idle_contact(idle, [origin], params["t_max"], derive_seed(seed, k),
                                             background=params["background"])
        rows.append({
            "group": f"gamma={gamma}",
            "gamma": gamma,
            "alive": not traj.extinct,
            "extinction_time": traj.extinction_time,
            "strong": contact.origin_occupied_late(traj, origin),
            "events": traj.n_events,
        })
    return rows


def _trial_exit(params: dict, seed: int) -> List[dict]:
    n = params["n"]
    law = params["law"]
    if law == "interval":
        rec = walks.interval_exit(n, seed)
        return [{"group": law, "time": rec.time, "scaled": rec.time / (n * n)}]
    if law == "first_passage":
        if params["method"] == "path":
            rec = walks.first_passage(n, seed)
        else:
            rec = walks.first_passage_reflection(n, seed)
        scaled = None if rec.censored else rec.time / (n * n)
        return [{"group": law, "time": None if rec.censored else rec.time, "scaled": scaled,
                 "censored": rec.censored}]
    rec = walks.planar_disk_exit(n, seed, params["norm"])
    return [{"group": law, "time": rec.time, "scaled": rec.scaled_time, "angle": rec.angle,
             "max_before": rec.max_before}]


def _trial_resistance(params: dict, seed: int) -> List[dict]:
    cells = networks.resistance_trial(params["d"], params["p"], params["radii"], seed,
                                      params["mode"], params["max_resamples"], params["policy"])
    rows = []
    for cell in cells:
        censored = math.isinf(cell["R_eff"])
        rows.append({
            "group": f"n={cell['n']}",
            "n": cell["n"],
            "R_eff": None if censored else cell["R_eff"],
            "p_esc": cell["p_esc"],
            "ratio": cell["ratio"],
            "resamples": cell["resamples"],
            "censored": censored,
        })
    return rows


def _trial_neural(params: dict, seed: int) -> List[dict]:
    rows = []
    cells = [(b, s) for b in params["betas"] for s in params["ss"]]
    for k, (beta, s) in enumerate(cells):
        np_params = neural.NeuralParams(params["N"], params["p_nn"], beta, s, params["mu"], params["t_max"])
        log = neural.simulate_neural(np_params, derive_seed(seed, k))
        rows.append({
            "group": f"beta={beta},s={s}",
            "beta": beta,
            "s": s,
            "activity": neural.activity(log, 0),
            "spikes": int(log.spikes_of(0).size),
        })
    return rows


TRIALS = {
    ExperimentKind.percolation_scan: _trial_percolation,
    ExperimentKind.contact_survival: _trial_contact,
    ExperimentKind.idle_contact: _trial_idle,
    ExperimentKind.exit_laws: _trial_exit,
    ExperimentKind.resistance_scaling: _trial_resistance,
    ExperimentKind.neural_phase: _trial_neural,
}


def run_trial(kind: str, params: dict, master_seed: int, index: int) -> List[dict]:
    """Alle rijen van trial `index`; hangt alleen af van (kind, params, master_seed, index)."""
    seed = derive_trial_seed(master_seed, index)
    rows = TRIALS[ExperimentKind(kind)](params, seed)
    return [{"trial": index, "seed": seed, **row} for row in rows]


def _trial_job(args) -> List[dict]:
    return run_trial(*args)


def iter_trial_rows(config: ExperimentConfig, workers: int) -> Iterable[dict]:
    """Rijen in trial-volgorde; executor.map levert de resultaten op volgorde af."""
    jobs = ((config.kind.value, config.params, config.seed, i) for i in range(config.trials))
    if workers <= 1 or config.trials <= 1:
        for job in jobs:
            yield from _trial_job(job)
        return
    chunksize = max(1, config.trials // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for rows in pool.map(_trial_job, jobs, chunksize=chunksize):
            yield from rows


# --- samenvatting ---

def _metric_value(value):
    if isinstance(value, bool):
        return float(value)
    if isinstance(value, (int, float)):
        return float(value)
    return None


def summarize_rows(rows: Sequence[dict]) -> List[dict]:
    """
    Per (group, metric): gemiddelde, 95%-halfbreedte, aantal en aantal gecensureerde
    (null) waarden. Groepen in volgorde van eerste voorkomen, metrics alfabetisch.
    """
    if not rows:
        return [{"group": "all", "metric": "trials", "mean": None, "ci": None, "count": 0, "censored": 0}]
    groups: Dict[str, Dict[str, List[Optional[float]]]] = {}
    for row in rows:
        bucket = groups.setdefault(str(row.get("group", "all")), {})
        for key in sorted(row):
            if key in RESERVED or key == "censored":
                continue
            value = row[key]
            if value is not None and _metric_value(value) is None:
                continue
            bucket.setdefault(key, []).append(None if value is None else _metric_value(value))
    summary = []
    for group, metrics in groups.items():
        for metric in sorted(metrics):
            values = metrics[metric]
            finite = [v for v in values if v is not None]
            est = mean_estimate(finite)
            summary.append({
                "group": group,
                "metric": metric,
                "mean": est.mean if finite else None,
                "ci": est.ci if finite else None,
                "count": len(finite),
                "censored": len(values) - len(finite),
            })
    return summary


# --- soort-specifieke rapporten ---

def _report_file(written: List[Path], path: Path) -> Path:
    # eerst registreren, dan schrijven
    written.append(path)
    return path


def _lambda_c_report(config: ExperimentConfig) -> dict:
    params = config.params
    window = percolation.build_lattice(params["d"], params["L"])
    try:
        lam_c = contact.estimate_lambda_c(
            window, params["t_max"], params["bisect_trials"], tuple(params["bracket"]),
            threshold=params["threshold"], iterations=params["bisect_iterations"],
            master_seed=derive_seed(config.seed, StreamKind.bisection))
    except DiagnosticError as e:
        logger.warning(f"lambda_c bisection skipped: {e}")
        return {"lambda_c": None, "diagnostic": str(e)}
    return {"lambda_c": lam_c, "threshold": params["threshold"], "t_max": params["t_max"]}


def _reports(config: ExperimentConfig, rows: List[dict], out: Path, written: List[Path]) -> dict:
    params = config.params
    if not rows:
        return {}
    if config.kind is ExperimentKind.contact_survival:
        return _lambda_c_report(config) if params["bisect"] else {}
    if config.kind is ExperimentKind.exit_laws:
        law = params["law"]
        threshold = params["ks_threshold"]
        scaled = [r["scaled"] for r in rows if r.get("scaled") is not None]
        # empirische steekproef apart, voor plots buiten stochlab
        write_column_csv(_report_file(written, out / "samples.csv"), "scaled", scaled)
        if law == "interval":
            report = walks.compare_law(scaled, walks.limit_exit_cdf, threshold)
            laplace = {str(s): walks.empirical_laplace(scaled, s).value for s in (0.5, 1.0, 2.0)}
            return {"law": report.as_dict(), "laplace": laplace}
        if law == "first_passage":
            censored = sum(1 for r in rows if r.get("censored"))
            upper = walks.CAP_FACTOR * 1.0
            report = walks.compare_law(scaled, walks.levy_cdf, threshold, censored=censored, upper=upper)
            return {"law": report.as_dict()}
        angles = [r["angle"] for r in rows]
        report = walks.compare_law(angles, lambda x: np.clip(np.asarray(x) / (2 * math.pi), 0, 1), threshold)
        return {"angle_uniformity": report.as_dict()}
    if config.kind is ExperimentKind.resistance_scaling:
        radii = params["radii"]
        per_trial: Dict[int, List[dict]] = {}
        for r in rows:
            per_trial.setdefault(r["trial"], []).append({
                "n": r["n"], "R_eff": math.inf if r["R_eff"] is None else r["R_eff"],
                "p_esc": r["p_esc"], "ratio": r["ratio"], "resamples": r["resamples"],
            })
        table = networks.summarize_scaling(params["d"], params["p"], radii,
                                           [per_trial[k] for k in sorted(per_trial)])
        write_csv(_report_file(written, out / "scaling.csv"),
                  ["n", "mean_R", "ci_R", "mean_pesc", "ci_pesc", "trials", "censored",
                   "mean_ratio", "ci_ratio", "pesc_log_n"], table.to_rows())
        return {"model": table.model, "resamples": table.resamples, "exploratory": True}
    if config.kind is ExperimentKind.neural_phase:
        summary = {s["group"]: s for s in summarize_rows(rows) if s["metric"] == "activity"}
        matrix = []
        flags = {}
        for beta in params["betas"]:
            row = {"beta": beta}
            for s in params["ss"]:
                group = f"beta={beta},s={s}"
                mean = summary[group]["mean"]
                row[f"s={s}"] = mean
                flags[group] = {"nontrivial": (mean or 0.0) > neural.ACTIVITY_THRESHOLD,
                                "s_caveat": s == 2}
            matrix.append(row)
        write_csv(_report_file(written, out / "phase_map.csv"),
                  ["beta"] + [f"s={s}" for s in params["ss"]], matrix)
        return {"cells": flags, "threshold": neural.ACTIVITY_THRESHOLD}
    return {}


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "click", "SQLAlchemy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    files: List[Path]
    rows_written: int = 0
    error: Optional[str] = None


def _registry_call(fn, *args):
    try:
        return fn(*args)
    except Exception as e:
        logger.warning(f"run registry unavailable, skipping: {e}")
        return None


def run_experiment(config: ExperimentConfig, registry_url: Optional[str] = None) -> RunResult:
    """Voer alle trials uit en schrijf de drie uitvoerbestanden; bij een fout worden ze verwijderd."""
    out = Path(config.out)
    written: List[Path] = []
    started = time.perf_counter()
    engine = run_id = None
    if registry_url:
        engine = _registry_call(registry_engine, registry_url)
        if engine is not None:
            run_id = _registry_call(record_run_start, engine, config.kind, config.seed, config.trials,
                                    config.workers, str(out), config.echo())
    logger.info(f"run {config.kind.value}: seed={config.seed} trials={config.trials} "
                f"workers={config.workers} -> {out}")
    exit_code = EXIT_OK
    error = None
    rows_written = 0
    try:
        out.mkdir(parents=True, exist_ok=True)
        rows_path = out / ROWS_FILE
        written.append(rows_path)
        rows = list(iter_trial_rows(config, config.workers))
        rows_written = write_jsonl(rows_path, rows)
        # samenvatting uit de geschreven bytes, zodat herberekening exact hetzelfde geeft
        summary = summarize_rows(read_jsonl(rows_path))
        summary_path = out / SUMMARY_FILE
        written.append(summary_path)
        write_csv(summary_path, SUMMARY_COLUMNS, summary)
        reports = _reports(config, read_jsonl(rows_path), out, written)
        manifest_path = out / MANIFEST_FILE
        written.append(manifest_path)
        write_json(manifest_path, {
            "config": config.echo(),
            "config_digest": config_digest(config.echo()),
            "workers": config.workers,
            "rows_written": rows_written,
            "wall_time_s": time.perf_counter() - started,
            "versions": _versions(),
            "reports": reports,
            "files": [p.name for p in written],
        })
    except ConfigurationError as e:
        exit_code, error = EXIT_CONFIG, str(e)
        logger.error(f"configuration error: {e}")
    except Exception as e:
        exit_code, error = EXIT_RUNTIME, str(e)
        logger.exception(f"run {config.kind.value} failed")
    if exit_code != EXIT_OK:
        for path in written:
            path.unlink(missing_ok=True)
        written = []
        rows_written = 0
    if run_id is not None:
        _registry_call(record_run_finish, engine, run_id, exit_code, rows_written,
                       time.perf_counter() - started)
    logger.info(f"run {config.kind.value} finished with exit code {exit_code}")
    return RunResult(exit_code, written, rows_written, error)
