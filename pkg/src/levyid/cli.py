"""Command-line front end: config-driven verification runs, JSON reports.

Subcommands
    simulate          sample an ensemble and check first moments
    verify-isonat     size-biased tilting identity, weighted vs companion sum
    verify-condition  hidden + visible decomposition identity
    levy-check        Laplace exponent, jump-measure representations, splits
    permanental       finite-state permanental identity battery
    limit             thinning ladder converging to the tilt companion
    suite             run a list of the above as one batch

Reports are JSON tagged "schema": "levy-id/1" and embed the resolved config.
Identical config + seed give byte-identical reports apart from the timestamp
block. Exit codes: 0 all verdicts pass, 1 a verification failed, 2 config or
usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from .core import (
    ConvSpec,
    ExpDecayKernel,
    IndicatorKernel,
    JumpLaw,
    JumpLawSpec,
    Kernel,
    LevyFunctionalPanel,
    PanelEntry,
    PermanentalSpec,
    PoissonSpec,
    PowerCutoffKernel,
    ProcessSpec,
    SatoSpec,
    TabulatedKernel,
    TemperedStableSpec,
    TimeGrid,
    make_grid,
    mean_function,
)
from .identities import verify_decomposition_identity, verify_tilting_identity
from .levymeasure import (
    laplace_exponent_check,
    levy_functional_mc,
    levy_functional_quadrature,
    validate_levy_conditions,
)
from .limits import DEFAULT_DELTAS, verify_thinning_limit
from .permanental import (
    default_state_panel,
    green_matrix,
    levy_functional_permanental,
    local_time_mean,
    marginal_levy_functional,
    permanental_mean,
    sample_local_times,
    sample_permanental,
    spec_to_chain,
    verify_permanental_identity,
)
from .processes import sample_ensemble, values_at
from .randkit import RngStream
from .statlab import IdentityReport

SCHEMA = "levy-id/1"
DEFAULT_GRID = (0.5, 1.0, 1.5, 2.0)
DEFAULT_N = 200_000
DEFAULT_B = 500
DEFAULT_Z = 3.0
REPR_Z = 4.0          # looser gate for the probabilistic nu representations
SPLIT_TOL = 1e-8      # quadrature additivity of the y(a) split
SPLIT_POINTS = (0.5, 1.0, 2.0)
MIXING_MEANS = (1.0, 5.0)
# base rung size for the thinning ladder; per-rung samples scale as n/delta,
# and the base keeps the final comparison's resolution at the level of the
# O(delta) thinning residual rather than far below it
DEFAULT_LIMIT_N = 100


class ConfigError(Exception):
    """Malformed or inconsistent configuration input."""


def _get(section, key, default=None, required=False):
    if not isinstance(section, dict):
        raise ConfigError(f"expected an object while looking for {key!r}")
    if key not in section:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    return section[key]


def _num(value, key):
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r} must be a number") from exc


def parse_law(obj) -> JumpLaw:
    kind = _get(obj, "kind", required=True)
    try:
        if kind == "exponential":
            return JumpLaw.exponential(_num(_get(obj, "mean", required=True), "mean"))
        if kind == "gamma":
            return JumpLaw.gamma(
                _num(_get(obj, "shape", required=True), "shape"),
                _num(_get(obj, "rate", required=True), "rate"),
            )
        if kind == "constant":
            return JumpLaw.constant(_num(_get(obj, "value", required=True), "value"))
        if kind == "discrete":
            atoms = _get(obj, "atoms", required=True)
            return JumpLaw.discrete(tuple((float(x), float(p)) for x, p in atoms))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad jump law: {exc}") from exc
    raise ConfigError(f"unknown jump-law kind {kind!r}")


def parse_kernel(obj) -> Kernel:
    kind = _get(obj, "kind", required=True)
    try:
        if kind == "indicator":
            return IndicatorKernel(_num(_get(obj, "length", required=True), "length"))
        if kind == "exp-decay":
            return ExpDecayKernel(_num(_get(obj, "decay", required=True), "decay"))
        if kind == "power-cutoff":
            return PowerCutoffKernel(
                _num(_get(obj, "power", required=True), "power"),
                _num(_get(obj, "length", required=True), "length"),
            )
        if kind == "tabulated":
            return TabulatedKernel(
                tuple(float(x) for x in _get(obj, "knots", required=True)),
                tuple(float(v) for v in _get(obj, "values", required=True)),
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel: {exc}") from exc
    raise ConfigError(f"unknown kernel kind {kind!r}")


def parse_process(obj) -> ProcessSpec:
    family = _get(obj, "family", required=True)
    try:
        if family == "poisson":
            rate = obj.get("lambda", obj.get("rate"))
            if rate is None:
                raise ConfigError("poisson needs 'lambda' (or 'rate')")
            return PoissonSpec(_num(rate, "lambda"))
        if family == "tempered-stable":
            return TemperedStableSpec(_num(_get(obj, "alpha", required=True), "alpha"))
        if family == "sato":
            bd = _get(obj, "bdlp", required=True)
            bdlp = JumpLawSpec(
                _num(_get(bd, "rate", required=True), "rate"),
                parse_law(_get(bd, "law", required=True)),
            )
            cutoff = obj.get("cutoff")
            return SatoSpec(
                _num(_get(obj, "H", required=True), "H"),
                bdlp,
                None if cutoff is None else _num(cutoff, "cutoff"),
            )
        if family == "conv":
            kernel = parse_kernel(_get(obj, "kernel", required=True))
            drv = _get(obj, "driver", required=True)
            if _get(drv, "family", default="") == "tempered-stable":
                z = TemperedStableSpec(_num(_get(drv, "alpha", required=True), "alpha"))
            else:
                z = JumpLawSpec(
                    _num(_get(drv, "rate", required=True), "rate"),
                    parse_law(_get(drv, "law", required=True)),
                )
            return ConvSpec(kernel, z)
        if family == "permanental":
            rates = _get(obj, "rates", required=True)
            kill = _get(obj, "kill", required=True)
            beta = _num(obj.get("beta", 1.0), "beta")
            return PermanentalSpec(
                tuple(tuple(float(r) for r in row) for row in rates),
                tuple(float(k) for k in kill),
                beta,
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad process spec: {exc}") from exc
    raise ConfigError(f"unknown process family {family!r}")


def default_panel(points) -> LevyFunctionalPanel:
    """Six exponential-functional entries spread over the grid."""
    pts = [float(p) for p in points]
    t0, tl = pts[0], pts[-1]
    tm = pts[(len(pts) - 1) // 2]
    entries = (
        PanelEntry((1.0,), (tm,)),
        PanelEntry((0.5,), (tl,)),
        PanelEntry((2.0,), (t0,)),
        PanelEntry((0.7, 0.9), (t0, tl)),
        PanelEntry(tuple(0.25 for _ in pts), tuple(pts)),
        PanelEntry((0.4, 1.1), (tm, tl)),
    )
    return LevyFunctionalPanel(entries)


def parse_panel(obj, points) -> LevyFunctionalPanel:
    if obj is None:
        return default_panel(points)
    try:
        entries = tuple(
            PanelEntry(
                tuple(float(a) for a in _get(e, "alphas", required=True)),
                tuple(float(t) for t in _get(e, "times", required=True)),
            )
            for e in obj
        )
        return LevyFunctionalPanel(entries)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad panel: {exc}") from exc


def _check_panel_on_grid(panel: LevyFunctionalPanel, grid: TimeGrid) -> None:
    for entry in panel:
        for t in entry.times:
            if not grid.contains(t):
                raise ConfigError(f"panel time {t} is not a grid point")


def _parse_mc(cfg):
    mc = cfg.get("mc", {})
    try:
        n = int(_get(mc, "N", DEFAULT_N))
        b = int(_get(mc, "B", DEFAULT_B))
        z = float(_get(mc, "z_crit", DEFAULT_Z))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad mc section: {exc}") from exc
    if n < 1 or b < 1 or z <= 0:
        raise ConfigError("mc requires N >= 1, B >= 1, z_crit > 0")
    return n, b, z


def _parse_grid(cfg) -> TimeGrid:
    pts = cfg.get("grid", list(DEFAULT_GRID))
    try:
        return make_grid([float(p) for p in pts])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc


def _parse_a(cfg, grid: TimeGrid) -> float:
    pts = list(grid.points)
    a = _get(cfg.get("identity", {}), "a", pts[(len(pts) - 1) // 2])
    a = _num(a, "a")
    if not grid.contains(a):
        raise ConfigError(f"identity point a={a} is not a grid point")
    return a


def _grid_spec(cfg) -> ProcessSpec:
    spec = parse_process(_get(cfg, "process", required=True))
    if isinstance(spec, PermanentalSpec):
        raise ConfigError("this command works on time-indexed families; "
                          "use the 'permanental' subcommand")
    return spec


def _panel_dicts(panel: LevyFunctionalPanel) -> list:
    return [{"alphas": list(e.alphas), "times": list(e.times)} for e in panel]


def _report_csv(report: IdentityReport):
    header = ["entry", "alphas", "times", "lhs", "lhs_se", "rhs", "rhs_se", "z", "pass"]
    rows = []
    for k, e in enumerate(report.panel):
        rows.append([
            k,
            ";".join(f"{a:g}" for a in e.alphas),
            ";".join(f"{t:g}" for t in e.times),
            report.lhs[k], report.lhs_se[k], report.rhs[k], report.rhs_se[k],
            report.z[k], report.entry_pass[k],
        ])
    return header, rows


# one handler per subcommand; each returns (resolved_config, results, ok, csv)

def _cmd_simulate(cfg, seed, workers):
    spec = parse_process(_get(cfg, "process", required=True))
    n, b, z_crit = _parse_mc(cfg)
    rng = RngStream(seed)
    if isinstance(spec, PermanentalSpec):
        chain = spec_to_chain(spec)
        green = green_matrix(chain)
        draws = sample_permanental(rng.substream(0), green, spec.beta, size=n)
        expected = permanental_mean(green.matrix, spec.beta)
        labels = [f"state_{j}" for j in range(chain.n)]
    else:
        grid = _parse_grid(cfg)
        draws = sample_ensemble(
            lambda s, m: values_at(s, spec, grid.points, m), rng.substream(0), n, workers
        )
        expected = np.array([mean_function(spec, t) for t in grid.points])
        labels = [f"t_{t:g}" for t in grid.points]
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / math.sqrt(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (mean - expected) / se,
                     np.where(mean == expected, 0.0, np.inf))
    ok = bool(np.all(np.abs(z) <= z_crit))
    results = {
        "moments": [
            {"point": labels[j], "sample_mean": float(mean[j]), "se": float(se[j]),
             "expected": float(expected[j]), "z": float(z[j]),
             "pass": bool(abs(z[j]) <= z_crit)}
            for j in range(len(labels))
        ],
        "n": n,
        "pass": ok,
    }
    resolved = {
        "process": cfg["process"],
        "mc": {"N": n, "B": b, "z_crit": z_crit},
    }
    if not isinstance(spec, PermanentalSpec):
        resolved["grid"] = [float(t) for t in grid.points]
    csv_payload = (["path"] + labels,
                   [[i] + list(row) for i, row in enumerate(draws)])
    return resolved, results, ok, csv_payload


def _identity_command(cfg, seed, workers, verifier):
    spec = _grid_spec(cfg)
    grid = _parse_grid(cfg)
    a = _parse_a(cfg, grid)
    panel = parse_panel(cfg.get("panel"), grid.points)
    _check_panel_on_grid(panel, grid)
    n, b, z_crit = _parse_mc(cfg)
    try:
        report = verifier(RngStream(seed), spec, a, grid, panel,
                          n, z_crit=z_crit, b=b, workers=workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    resolved = {
        "process": cfg["process"],
        "grid": [float(t) for t in grid.points],
        "identity": {"a": a},
        "panel": _panel_dicts(panel),
        "mc": {"N": n, "B": b, "z_crit": z_crit},
    }
    return resolved, report.to_dict(), report.overall_pass, _report_csv(report)


def _cmd_verify_isonat(cfg, seed, workers):
    return _identity_command(cfg, seed, workers, verify_tilting_identity)


def _cmd_verify_condition(cfg, seed, workers):
    return _identity_command(cfg, seed, workers, verify_decomposition_identity)


def _cmd_levy_check(cfg, seed, workers):
    spec = _grid_spec(cfg)
    grid = _parse_grid(cfg)
    panel = parse_panel(cfg.get("panel"), grid.points)
    _check_panel_on_grid(panel, grid)
    n, b, z_crit = _parse_mc(cfg)
    levy = cfg.get("levy", {})
    n_mc = int(_get(levy, "n", max(1, n // 2)))
    mixing_mean = _num(_get(levy, "mixing_mean", MIXING_MEANS[0]), "mixing_mean")
    theta = _num(_get(levy, "theta", 1.0), "theta")
    split_a = [_num(x, "split_a") for x in _get(levy, "split_a", list(SPLIT_POINTS))]
    rng = RngStream(seed)

    lap = laplace_exponent_check(rng.substream(0), spec, panel, n,
                                 z_crit=z_crit, b=b, workers=workers)
    conds = validate_levy_conditions(spec, grid)

    reprs = []
    reprs_ok = True
    for k, entry in enumerate(panel):
        quad = levy_functional_quadrature(spec, entry)
        mc = levy_functional_mc(rng.substream(10, k), spec, entry, n_mc,
                                mixing_mean=mixing_mean, theta=theta, b=b)
        if mc.se > 0:
            zk = (mc.value - quad.value) / mc.se
        else:
            zk = 0.0 if mc.value == quad.value else math.inf
        ok_k = abs(zk) <= REPR_Z
        reprs_ok &= ok_k
        reprs.append({
            "alphas": list(entry.alphas), "times": list(entry.times),
            "mc": mc.value, "mc_se": mc.se, "quadrature": quad.value,
            "z": float(zk), "pass": bool(ok_k),
        })

    splits = []
    splits_ok = True
    for a_s in split_a:
        worst = 0.0
        for entry in panel:
            full = levy_functional_quadrature(spec, entry).value
            zero = levy_functional_quadrature(spec, entry, restriction="zero", a=a_s).value
            pos = levy_functional_quadrature(spec, entry, restriction="positive", a=a_s).value
            worst = max(worst, abs(zero + pos - full))
        ok_s = worst <= SPLIT_TOL
        splits_ok &= ok_s
        splits.append({"a": a_s, "max_residual": worst, "pass": bool(ok_s)})

    results = {
        "laplace_exponent": lap.to_dict(),
        "conditions": conds.to_dict(),
        "representation": {"entries": reprs, "z_crit": REPR_Z, "n": n_mc,
                           "pass": bool(reprs_ok)},
        "split_additivity": {"cases": splits, "tolerance": SPLIT_TOL,
                             "pass": bool(splits_ok)},
    }
    ok = lap.overall_pass and conds.ok and reprs_ok and splits_ok

    if isinstance(spec, PoissonSpec):
        # representation is invariant in the mixing law; try a second one
        mix = []
        mix_ok = True
        for k, entry in enumerate(panel):
            e1 = levy_functional_mc(rng.substream(11, k), spec, entry, n_mc,
                                    mixing_mean=MIXING_MEANS[0], b=b)
            e2 = levy_functional_mc(rng.substream(12, k), spec, entry, n_mc,
                                    mixing_mean=MIXING_MEANS[1], b=b)
            pooled = math.hypot(e1.se, e2.se)
            zk = (e1.value - e2.value) / pooled if pooled > 0 else 0.0
            ok_k = abs(zk) <= REPR_Z
            mix_ok &= ok_k
            mix.append({"alphas": list(entry.alphas), "times": list(entry.times),
                        "means": list(MIXING_MEANS), "lhs": e1.value, "rhs": e2.value,
                        "z": float(zk), "pass": bool(ok_k)})
        results["mixing_invariance"] = {"entries": mix, "z_crit": REPR_Z,
                                        "pass": bool(mix_ok)}
        ok = ok and mix_ok

    resolved = {
        "process": cfg["process"],
        "grid": [float(t) for t in grid.points],
        "panel": _panel_dicts(panel),
        "mc": {"N": n, "B": b, "z_crit": z_crit},
        "levy": {"n": n_mc, "mixing_mean": mixing_mean, "theta": theta,
                 "split_a": split_a},
    }
    return resolved, results, ok, _report_csv(lap)


def _cmd_permanental(cfg, seed, workers):
    spec = parse_process(_get(cfg, "process", required=True))
    if not isinstance(spec, PermanentalSpec):
        raise ConfigError("the permanental command needs a permanental process")
    chain = spec_to_chain(spec)
    green = green_matrix(chain)
    n, b, z_crit = _parse_mc(cfg)
    a_raw = _get(cfg.get("identity", {}), "a", 0)
    a = int(a_raw)
    if a != a_raw or not 0 <= a < chain.n:
        raise ConfigError(f"identity state a={a_raw} must be a state index")
    panel_cfg = cfg.get("panel")
    panel = (default_state_panel(chain.n, a) if panel_cfg is None
             else parse_panel(panel_cfg, range(chain.n)))
    for entry in panel:
        for t in entry.times:
            if t != int(t) or not 0 <= int(t) < chain.n:
                raise ConfigError(f"panel state {t} out of range")
    rng = RngStream(seed)

    report = verify_permanental_identity(rng.substream(0), chain, a, panel,
                                         n, z_crit=z_crit, b=b)

    loc = sample_local_times(rng.substream(1), chain, a, size=n)
    expected = local_time_mean(green.matrix, a)
    mean = loc.mean(axis=0)
    se = loc.std(axis=0, ddof=1) / math.sqrt(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (mean - expected) / se,
                     np.where(mean == expected, 0.0, np.inf))
    loc_ok = bool(np.all(np.abs(z) <= z_crit))
    loc_rows = [
        {"state": j, "sample_mean": float(mean[j]), "se": float(se[j]),
         "expected": float(expected[j]), "z": float(z[j]),
         "pass": bool(abs(z[j]) <= z_crit)}
        for j in range(chain.n)
    ]

    m_weights = np.ones(chain.n)
    n_nu = min(n, 50_000)
    marg = []
    marg_ok = True
    for x in range(chain.n):
        entry = PanelEntry((1.0,), (float(x),))
        est = levy_functional_permanental(rng.substream(2, x), chain,
                                          m_weights, entry, n_nu, b=b)
        oracle = marginal_levy_functional(green.matrix, 1.0, x)
        zk = (est.value - oracle) / est.se if est.se > 0 else math.inf
        ok_x = abs(zk) <= REPR_Z
        marg_ok &= ok_x
        marg.append({"state": x, "mc": est.value, "mc_se": est.se,
                     "oracle": float(oracle), "z": float(zk), "pass": bool(ok_x)})

    ok = report.overall_pass and loc_ok and marg_ok
    results = {
        "identity": report.to_dict(),
        "local_time_means": {"states": loc_rows, "n": n, "pass": loc_ok},
        "levy_marginals": {"states": marg, "z_crit": REPR_Z, "n": n_nu,
                           "pass": bool(marg_ok)},
    }
    resolved = {
        "process": cfg["process"],
        "identity": {"a": a},
        "panel": _panel_dicts(panel),
        "mc": {"N": n, "B": b, "z_crit": z_crit},
    }
    return resolved, results, ok, _report_csv(report)


def _cmd_limit(cfg, seed, workers):
    spec = _grid_spec(cfg)
    grid = _parse_grid(cfg)
    a = _parse_a(cfg, grid)
    panel = parse_panel(cfg.get("panel"), grid.points)
    _check_panel_on_grid(panel, grid)
    _, b, z_crit = _parse_mc(cfg)
    lim = cfg.get("limit", {})
    # the ladder has its own base size: per-rung samples grow as n/delta, and
    # mc.N (sized for direct identity checks) would swamp the O(delta)
    # residual the final rung is allowed to carry
    n = int(_get(lim, "n", DEFAULT_LIMIT_N))
    deltas = [_num(d, "deltas") for d in _get(lim, "deltas", list(DEFAULT_DELTAS))]
    n_max = int(_get(lim, "n_max", 2_000_000))
    try:
        report = verify_thinning_limit(RngStream(seed), spec, a, grid, panel, n,
                                       deltas=deltas, n_max=n_max,
                                       z_crit=z_crit, b=b, workers=workers)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    resolved = {
        "process": cfg["process"],
        "grid": [float(t) for t in grid.points],
        "identity": {"a": a},
        "panel": _panel_dicts(panel),
        "mc": {"B": b, "z_crit": z_crit},
        "limit": {"deltas": deltas, "n": n, "n_max": n_max},
    }
    header = ["delta", "n_used", "distance", "distance_se", "ess"]
    rows = [[report.deltas[k], report.n_used[k], report.distances[k],
             report.distance_ses[k], report.ess[k]]
            for k in range(len(report.deltas))]
    return resolved, report.to_dict(), report.overall_pass, (header, rows)


_JOB_HANDLERS = {}


def _cmd_suite(cfg, seed, workers):
    jobs = _get(cfg, "jobs", required=True)
    if not isinstance(jobs, list) or not jobs:
        raise ConfigError("suite config needs a nonempty 'jobs' list")
    job_results, resolved_jobs, rows = [], [], []
    all_ok = True
    for j, job in enumerate(jobs):
        name = str(_get(job, "name", f"job{j}"))
        command = _get(job, "command", required=True)
        if command not in _JOB_HANDLERS:
            raise ConfigError(f"job {name!r}: unknown command {command!r}")
        jcfg = _get(job, "config", required=True)
        jseed = int(_get(jcfg, "seed", seed + j + 1))
        resolved, results, ok, _ = _JOB_HANDLERS[command](jcfg, jseed, workers)
        all_ok &= ok
        job_results.append({"name": name, "command": command, "seed": jseed,
                            "results": results,
                            "verdict": "pass" if ok else "fail"})
        resolved_jobs.append({"name": name, "command": command,
                              "config": {**resolved, "seed": jseed}})
        rows.append([name, command, "pass" if ok else "fail"])
    results = {"jobs": job_results, "pass": bool(all_ok)}
    resolved = {"jobs": resolved_jobs}
    return resolved, results, bool(all_ok), (["job", "command", "verdict"], rows)


_JOB_HANDLERS.update({
    "simulate": _cmd_simulate,
    "verify-isonat": _cmd_verify_isonat,
    "verify-condition": _cmd_verify_condition,
    "levy-check": _cmd_levy_check,
    "permanental": _cmd_permanental,
    "limit": _cmd_limit,
})
_HANDLERS = {**_JOB_HANDLERS, "suite": _cmd_suite}


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)  # strict JSON has no inf/nan
    return obj


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _write_csv(path, payload):
    header, rows = payload
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(_to_jsonable(list(row)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyid",
        description="Monte-Carlo checks of jump-measure identities for "
                    "nonnegative infinitely divisible processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "sample an ensemble and check first moments",
        "verify-isonat": "size-biased tilting identity",
        "verify-condition": "hidden + visible decomposition identity",
        "levy-check": "Laplace exponent and jump-measure representation checks",
        "permanental": "finite-state permanental identity battery",
        "limit": "thinning-limit convergence to the tilt companion",
        "suite": "run a batch of jobs from one config",
    }
    for name in ("simulate", "verify-isonat", "verify-condition", "levy-check",
                 "permanental", "limit", "suite"):
        q = sub.add_parser(name, help=helps[name])
        q.add_argument("--config", metavar="PATH", help="JSON config file")
        q.add_argument("--seed", metavar="U64", type=int,
                       help="master seed; overrides the config's seed")
        q.add_argument("--out", metavar="PATH",
                       help="write the JSON report here instead of stdout")
        q.add_argument("--workers", metavar="N", type=int, default=0,
                       help="sampler threads (default: machine parallelism)")
        q.add_argument("--csv", metavar="PATH", help="also write result rows as CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        if seed < 0:
            raise ConfigError("seed must be nonnegative")
        workers = args.workers if args.workers > 0 else (os.cpu_count() or 1)
        resolved, results, ok, csv_payload = _HANDLERS[args.command](cfg, seed, workers)
    except ConfigError as exc:
        print(f"levyid: config error: {exc}", file=sys.stderr)
        return 2
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "config": resolved,
        "seed": seed,
        "results": results,
        "verdict": "pass" if ok else "fail",
        "timestamp": {
            "utc": datetime.now(timezone.utc).isoformat(),
            "runtime_seconds": round(time.perf_counter() - started, 3),
        },
    }
    text = json.dumps(_to_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and csv_payload is not None:
        _write_csv(args.csv, csv_payload)
    if not ok:
        print(f"levyid: {args.command}: verification failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
