"""Timing harness comparing the QFIM routes on random full-rank states."""

import csv
import io
import time

import numpy as np

from . import _kernels
from .ensembles import random_density, random_derivatives
from .solvers import ALL_METHODS, MethodChoice, Method, _DISPATCH, relative_deviation

FIELDS = ["dim", "method", "backend", "trials", "mean_s", "std_s", "max_s", "max_rel_dev", "agree"]


def _warm_up(choice):
    rng = np.random.default_rng(0)
    rho, d = random_density(2, rng), random_derivatives(2, 1, rng)
    for m in ALL_METHODS:
        _DISPATCH[m](rho, d, choice)


def run_bench(dims, trials, seed, methods=ALL_METHODS, n_params=2, choice=None, tol=1e-6):
    """Return one row per (dim, method) with timing statistics.

    Instances are drawn from ``default_rng([seed, dim])`` so each dimension's
    ensemble is independent of which other dimensions are requested.
    ``max_rel_dev`` is measured against the vectorized route.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if any(d < 2 for d in dims):
        raise ValueError(f"dims must all be >= 2, got {list(dims)}")
    choice = choice or MethodChoice()
    methods = [Method.parse(m) for m in methods]
    _warm_up(choice)
    rows = []
    for dim in dims:
        rng = np.random.default_rng([seed, dim])
        times = {m: [] for m in methods}
        devs = {m: 0.0 for m in methods}
        for _ in range(trials):
            rho = random_density(dim, rng)
            d = random_derivatives(dim, n_params, rng)
            ref = _DISPATCH[Method.VECTORIZED](rho, d, choice).h
            for m in methods:
                start = time.perf_counter()
                h = _DISPATCH[m](rho, d, choice).h
                times[m].append(time.perf_counter() - start)
                devs[m] = max(devs[m], relative_deviation(h, ref))
        for m in methods:
            t = np.array(times[m])
            rows.append({
                "dim": dim,
                "method": m.value,
                "backend": _kernels.BACKEND,
                "trials": trials,
                "mean_s": float(t.mean()),
                "std_s": float(t.std()),
                "max_s": float(t.max()),
                "max_rel_dev": devs[m],
                "agree": devs[m] <= tol,
            })
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.6e}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def summarize(rows) -> str:
    """One line per dimension juxtaposing the vectorized and eigen timings."""
    by = {(r["dim"], r["method"]): r for r in rows}
    lines = []
    for dim in sorted({r["dim"] for r in rows}):
        v, e = by.get((dim, "vectorized")), by.get((dim, "eigen"))
        if v and e:
            lines.append(
                f"dim={dim:3d}  M={dim * dim}x{dim * dim}  vectorized {v['mean_s'] * 1e3:9.3f} ms  "
                f"eigen {e['mean_s'] * 1e3:9.3f} ms  ratio {v['mean_s'] / e['mean_s']:7.2f}"
            )
    return "\n".join(lines)
