"""Monte Carlo size/power experiments over grids of simulation scenarios."""

import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .changepoint import resolve_weights
from .covariance import KernelSpec, fit_covariance
from .datagen import ScenarioConfig, generate_panel
from .errors import DegenerateDataError, EstimationError, InputError, ParameterError
from .limit import NullDistribution, StatisticKind, decide, sample_mvn
from .panel import cusum_statistic, ratio_statistic
from .rng import check_seed, derive_seed

DEGENERATE_LIMIT = 0.01
KINDS = (StatisticKind.RATIO, StatisticKind.CUSUM)


@dataclass(frozen=True)
class ExperimentGrid:
    scenarios: List[ScenarioConfig]
    replications: int = 2000
    null_draws: int = 1000
    alpha: float = 0.05
    kernel: KernelSpec = field(default_factory=KernelSpec)
    weights: str = "t2"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenarios", list(self.scenarios))
        if self.replications < 1:
            raise ParameterError(f"replications must be >= 1, got {self.replications}")
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.null_draws < 100:
            raise ParameterError(f"null_draws must be >= 100, got {self.null_draws}")
        resolve_weights(self.weights)
        check_seed(self.seed)
        ids = [s.scenario_id for s in self.scenarios]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ParameterError(f"duplicate scenario ids: {', '.join(dup)}")


@dataclass(frozen=True)
class RejectionRow:
    scenario: str
    kind: str
    rejections: int
    replications: int
    degenerate: int = 0

    @property
    def rate(self):
        return self.rejections / self.replications if self.replications else float("nan")

    @property
    def mcse(self):
        p = self.rate
        return math.sqrt(p * (1 - p) / self.replications) if self.replications else float("nan")

    @property
    def failed(self):
        total = self.replications + self.degenerate
        return self.degenerate > DEGENERATE_LIMIT * total


@dataclass(frozen=True)
class RejectionTable:
    rows: List[RejectionRow]

    def get(self, scenario, kind):
        kind = StatisticKind(kind).value
        for row in self.rows:
            if row.scenario == scenario and row.kind == kind:
                return row
        raise KeyError((scenario, kind))


def replication_seed(master_seed, scenario_id, index):
    return derive_seed(master_seed, scenario_id, index)


def run_replication(config, grid, index):
    """One draw of the full testing procedure.

    Returns a dict mapping statistic kind to the reject flag, or ``None``
    when the data were degenerate.
    """
    seed = replication_seed(grid.seed, config.scenario_id, index)
    data = generate_panel(config.with_seed(seed))
    try:
        fit = fit_covariance(data, grid.kernel, grid.weights)
        draws = sample_mvn(fit.limit, grid.null_draws, derive_seed(seed, "null"))
        out = {}
        for kind in KINDS:
            null = NullDistribution.from_draws(draws, kind, fit.limit, seed)
            if kind is StatisticKind.CUSUM:
                res = decide(cusum_statistic(data), null, grid.alpha, fit.sigma)
            else:
                res = decide(ratio_statistic(data), null, grid.alpha)
            out[kind.value] = res.reject
        return out
    except (DegenerateDataError, EstimationError):
        return None


def _run_chunk(args):
    config, grid, start, stop = args
    return [run_replication(config, grid, i) for i in range(start, stop)]


def _chunks(grid, size):
    for k, config in enumerate(grid.scenarios):
        for start in range(0, grid.replications, size):
            yield k, (config, grid, start, min(start + size, grid.replications))


def run_experiment(grid, jobs=1, chunk_size=100, progress=None):
    """Rejection rates of both tests for every scenario of ``grid``.

    The outcome depends only on the grid (including its master seed), not
    on ``jobs`` or ``chunk_size``.
    """
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    tasks = list(_chunks(grid, chunk_size))
    counts = [{k.value: 0 for k in KINDS} for _ in grid.scenarios]
    valid = [0] * len(grid.scenarios)
    degenerate = [0] * len(grid.scenarios)

    if jobs == 1:
        results = map(_run_chunk, (t for _, t in tasks))
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_run_chunk, [t for _, t in tasks])
    try:
        for (k, _), chunk in zip(tasks, results):
            for outcome in chunk:
                if outcome is None:
                    degenerate[k] += 1
                    continue
                valid[k] += 1
                for kind, rejected in outcome.items():
                    counts[k][kind] += int(rejected)
            if progress is not None:
                progress(len(chunk))
    finally:
        if pool is not None:
            pool.shutdown()

    rows = []
    for k, config in enumerate(grid.scenarios):
        for kind in KINDS:
            rows.append(RejectionRow(config.scenario_id, kind.value,
                                     counts[k][kind.value], valid[k], degenerate[k]))
    return RejectionTable(rows)


COLUMNS = ("scenario", "kind", "rate", "mcse", "rejections", "replications", "degenerate", "failed")


def _cells(row, digits):
    return [
        row.scenario,
        row.kind,
        f"{row.rate:.{digits}f}",
        f"{row.mcse:.{digits}f}",
        str(row.rejections),
        str(row.replications),
        str(row.degenerate),
        "yes" if row.failed else "no",
    ]


def emit_table(table, fmt="csv"):
    """Render a rejection table as CSV or a Markdown pipe table."""
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in table.rows:
            w.writerow(_cells(row, 6))
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |",
                 "|" + "|".join(["---"] * len(COLUMNS)) + "|"]
        for row in table.rows:
            lines.append("| " + " | ".join(_cells(row, 4)) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "json-report":
        import json

        rows = [
            {"scenario": r.scenario, "kind": r.kind, "rate": round(r.rate, 6),
             "mcse": round(r.mcse, 6), "rejections": r.rejections,
             "replications": r.replications, "degenerate": r.degenerate,
             "failed": r.failed}
            for r in table.rows
        ]
        return json.dumps(rows, indent=2) + "\n"
    raise ParameterError(f"unknown table format {fmt!r}")


# --- grids -----------------------------------------------------------------

PROCESSES = ("iid", "ar1(0.3)", "garch11(1,0.1,0.2)")
INNOVATIONS = ("gaussian", "t5")


def paper_grid(replications=2000, null_draws=1000, seed=0, kernel=None, alpha=0.05):
    """Every cell of the three published tables.

    Null cells (tau = T), mid-panel alternatives (tau = floor(T/2) with
    33%, 66% and 100% of panels shifted) and the early-change cells.
    """
    scenarios = []
    for T in (10, 25):
        for N in (50, 200):
            for innov in INNOVATIONS:
                for proc in PROCESSES:
                    scenarios.append(ScenarioConfig(N, T, T, proc, innov))
    for frac in (0.33, 0.66, 1.0):
        for T in (10, 25):
            for N in (50, 200):
                for innov in INNOVATIONS:
                    for proc in PROCESSES:
                        scenarios.append(ScenarioConfig(N, T, T // 2, proc, innov, frac))
    for T, tau in ((10, 3), (25, 5)):
        for N in (50, 200):
            scenarios.append(ScenarioConfig(N, T, tau, "iid", "gaussian", 1.0))
    return ExperimentGrid(scenarios, replications, null_draws, alpha,
                          kernel or KernelSpec(), "t2", seed)


PRESETS = {"tables-1-2-3": paper_grid}


def _scenario_from_dict(d, where):
    d = dict(d)
    try:
        T = int(d.pop("T"))
        N = int(d.pop("N"))
    except KeyError as exc:
        raise InputError(f"{where}: missing required key {exc.args[0]!r}") from None
    kwargs = {
        "tau": int(d.pop("tau", T)),
        "process": d.pop("process", "iid"),
        "innovations": d.pop("innovations", "gaussian"),
        "change_fraction": float(d.pop("change_fraction", 0.0)),
        "change_range": tuple(d.pop("change_range", (1.0, 3.0))),
        "mu_law": d.pop("mu_law", "normal"),
        "sigma": float(d.pop("sigma", 1.0)),
        "name": str(d.pop("name", "")),
    }
    if d:
        raise InputError(f"{where}: unknown keys {sorted(d)}")
    return ScenarioConfig(N, T, **kwargs)


def grid_from_mapping(doc):
    """Build an ExperimentGrid from a parsed config document."""
    doc = dict(doc)
    raw = doc.pop("scenario", [])
    if not raw:
        raise InputError("config defines no [[scenario]] entries")
    scenarios = [_scenario_from_dict(s, f"scenario #{k + 1}") for k, s in enumerate(raw)]
    kernel = KernelSpec(doc.pop("kernel", "parzen"), float(doc.pop("bandwidth", 2.0)))
    grid = ExperimentGrid(
        scenarios,
        replications=int(doc.pop("replications", 2000)),
        null_draws=int(doc.pop("null_draws", 1000)),
        alpha=float(doc.pop("alpha", 0.05)),
        kernel=kernel,
        weights=doc.pop("weights", "t2"),
        seed=int(doc.pop("seed", 0)),
    )
    if doc:
        raise InputError(f"config: unknown keys {sorted(doc)}")
    return grid


def load_grid(path):
    """Read an ExperimentGrid from a TOML file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return grid_from_mapping(doc)


def default_jobs():
    return max(1, os.cpu_count() or 1)
