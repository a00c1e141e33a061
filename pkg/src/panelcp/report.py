"""Reading panel CSV files and testing them end to end."""

import csv
import json

import numpy as np

from .covariance import KernelSpec, fit_covariance
from .errors import InputError, UnsupportedHorizonError
from .limit import NullDistribution, StatisticKind, decide, sample_mvn
from .panel import PanelDataset, cusum_statistic, ratio_statistic
from .rng import derive_seed


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_panel_csv(path):
    """Parse a CSV with one row per panel and T numeric columns.

    A header row is recognised when none of its cells after the first is
    numeric. A leading non-numeric column is taken as panel IDs.

    Returns
    -------
    (PanelDataset, list of str)
        The data and the panel IDs (``"1"``, ``"2"``, ... if absent).
    """
    try:
        with open(path, newline="") as fh:
            rows = [(k + 1, r) for k, r in enumerate(csv.reader(fh))
                    if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except csv.Error as exc:
        raise InputError(f"{path}: malformed CSV ({exc})") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    first = [c.strip() for c in rows[0][1]]
    if not any(_is_number(c) for c in first[1:]) and not (len(first) == 1 and _is_number(first[0])):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: header only, no data rows")

    has_ids = not _is_number(rows[0][1][0].strip())
    ids, values = [], []
    width = None
    for lineno, row in rows:
        cells = [c.strip() for c in row]
        if has_ids:
            ids.append(cells[0])
            cells = cells[1:]
        else:
            ids.append(str(len(ids) + 1))
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise InputError(
                f"{path}: row {lineno} has {len(cells)} values, expected {width} (ragged rows)"
            )
        parsed = []
        for col, c in enumerate(cells, start=2 if has_ids else 1):
            try:
                v = float(c)
            except ValueError:
                raise InputError(
                    f"{path}: row {lineno}, column {col}: non-numeric value {c!r}"
                ) from None
            if not np.isfinite(v):
                raise InputError(f"{path}: row {lineno}, column {col}: non-finite value {c!r}")
            parsed.append(v)
        values.append(parsed)
    if width < 2:
        raise InputError(f"{path}: need at least 2 time points per panel, got {width}")
    return PanelDataset(np.array(values)), ids


def run_test(data, kinds=("ratio", "cusum"), kernel=None, weights="t2",
               alpha=0.05, null_draws=2000, seed=0):
    """Run the selected tests on a dataset and return a JSON-ready report."""
    kinds = [StatisticKind(k) for k in kinds]
    if not kinds:
        raise InputError("no statistic selected")
    T = data.horizon
    if StatisticKind.RATIO in kinds and T < 4:
        raise UnsupportedHorizonError(f"ratio statistic requires T ≥ 4, got T={T}")
    kernel = kernel or KernelSpec()
    fit = fit_covariance(data, kernel, weights)
    draws = sample_mvn(fit.limit, null_draws, derive_seed(seed, "null"))
    lam = fit.limit.matrix
    report = {
        "n_panels": data.n_panels,
        "horizon": T,
        "alpha": alpha,
        "seed": seed,
        "null_draws": null_draws,
        "kernel": {"kind": kernel.kind, "bandwidth": kernel.bandwidth},
        "weights": weights if isinstance(weights, str) else "custom",
        "tau_hat": fit.changepoint.tau_hat,
        "sigma_hat": fit.sigma,
        "rho_hat": [float(v) for v in fit.structure.rho],
        "lambda": {
            "diagonal": [float(v) for v in np.diag(lam)],
            "min_eigenvalue_before_repair": fit.limit.min_eigenvalue,
            "repaired": fit.limit.repaired,
            "matrix": [[float(v) for v in row] for row in lam],
        },
        "tests": {},
    }
    for kind in kinds:
        null = NullDistribution.from_draws(draws, kind, fit.limit, seed)
        if kind is StatisticKind.CUSUM:
            res = decide(cusum_statistic(data), null, alpha, fit.sigma)
        else:
            res = decide(ratio_statistic(data), null, alpha)
        report["tests"][kind.value] = {
            "statistic": res.statistic_value,
            "critical_value": res.critical_value,
            "p_value": res.p_value,
            "reject": res.reject,
            "sigma_hat_used": res.sigma_hat_used,
        }
    return report


def report_json(report):
    return json.dumps(report, indent=2) + "\n"


def report_text(report):
    lines = [
        f"panels N = {report['n_panels']}, length T = {report['horizon']}",
        f"estimated change point tau_hat = {report['tau_hat']}"
        + (" (no change)" if report["tau_hat"] == report["horizon"] else ""),
        f"sigma_hat = {report['sigma_hat']:.6g}",
        f"kernel = {report['kernel']['kind']} (h = {report['kernel']['bandwidth']:g}), "
        f"null draws = {report['null_draws']}, seed = {report['seed']}",
        "rho_hat[0..] = " + " ".join(f"{v:.4f}" for v in report["rho_hat"][:6])
        + (" ..." if len(report["rho_hat"]) > 6 else ""),
        "",
        f"{'test':<7}{'statistic':>12}{'critical':>12}{'p-value':>10}  decision (alpha = {report['alpha']:g})",
    ]
    for kind, t in report["tests"].items():
        lines.append(
            f"{kind:<7}{t['statistic']:>12.5g}{t['critical_value']:>12.5g}{t['p_value']:>10.4f}  "
            + ("reject H0" if t["reject"] else "do not reject H0")
        )
    return "\n".join(lines) + "\n"
