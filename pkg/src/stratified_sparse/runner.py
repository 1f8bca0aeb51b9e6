"""Suite runner: executes a named experiment, writes CSV tables and a check report."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import scipy.linalg

from . import dyadic, groups, multipliers, pieces, propagators, sparse, spectral, weights
from .config import SUITES, ExperimentConfig

SCHEMA = 1


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    relation: str  # "<=", ">=", "==" or "finite"

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if self.relation == "finite":
            return math.isfinite(v)
        if math.isnan(v):
            return False
        return {"<=": v <= t, ">=": v >= t, "==": v == t, "<": v < t, ">": v > t}[self.relation]

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class RunReport:
    suite: str
    config: ExperimentConfig
    checks: list[Check]
    header: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    wall_clock: float = 0.0
    partial: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and not self.partial

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _model(cfg: ExperimentConfig):
    return groups.build_group(cfg.model, max_size=cfg.max_size, seed=cfg.seed)


def _spec(cfg: ExperimentConfig, theta=None, beta=None):
    return multipliers.oscillating_multiplier(cfg.theta if theta is None else theta,
                                              cfg.beta if beta is None else beta,
                                              cfg.nu, cfg.epsilon, cfg.slack)


# ----------------------------------------------------------------------
# suites: each returns (header, rows, checks)

def suite_group(cfg):
    g = _model(cfg)
    rows = [[r, s] for r, s in groups.growth_table(g)]
    checks = [Check("quasi_triangle", g.quasi_triangle, 1.0, ">=")]
    try:
        slope = groups.fitted_growth_exponent(g)
        checks.append(Check("growth_exponent_rel_err", abs(slope - g.Q) / g.Q, 0.2, "<="))
    except ValueError:
        pass
    checks.append(Check("doubling_constant", groups.doubling_constant(g), 1.0, "finite"))
    return ["radius", "ball_size"], rows, checks


def suite_spectrum(cfg):
    g = _model(cfg)
    L = spectral.assemble_sublaplacian(g, cfg.s0)
    dec = spectral.spectral_decompose(L)
    rows = [[i, lam, math.sqrt(lam)] for i, lam in enumerate(dec.eigenvalues)]
    checks = [Check("reconstruction_error", spectral.reconstruction_error(L, dec), 1e-10, "<="),
              Check("smallest_eigenvalue", float(dec.eigenvalues[0]), 0.0, "==")]
    return ["index", "lambda", "sqrt_lambda"], rows, checks


def suite_heat(cfg):
    g = _model(cfg)
    L = spectral.assemble_sublaplacian(g, cfg.s0)
    dec = spectral.spectral_decompose(L)
    t = cfg.t / cfg.s0**2
    p = spectral.heat_kernel(dec, t)
    delta = np.zeros(g.size)
    delta[g.identity] = 1.0
    oracle = scipy.linalg.expm(-t * L.matrix) @ delta
    err = float(np.linalg.norm(p - oracle) / np.linalg.norm(oracle))
    fit = spectral.gaussian_decay_report(g, p, cfg.t)
    rows = [[i, g.norms[i], p[i]] for i in range(g.size)]
    checks = [Check("expm_rel_err", err, 1e-8, "<="),
              Check("mass_minus_one", abs(float(p.sum()) - 1.0), 1e-10, "<="),
              Check("gaussian_c", fit.c, 0.0, ">")]
    return ["point", "norm", "p_t"], rows, checks


def suite_spectral(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    spec = _spec(cfg)
    cases = {"heat": lambda s: np.exp(-np.asarray(s) ** 2 / cfg.s0**2), "oscillating": spec.m}
    mu = dec.frequencies[dec.frequencies > 0]
    for j in spec.support_indices(float(mu.min()), float(mu.max())):
        cases[f"piece_{j}"] = spec.piece(j)
    rows, worst = [], 0.0
    for name, m in cases.items():
        e = spectral.plancherel_check(dec, m)
        worst = max(worst, e)
        rows.append([name, e])
    return ["multiplier", "plancherel_rel_err"], rows, [Check("plancherel_rel_err", worst, 1e-10, "<=")]


def suite_multiplier_check(cfg):
    spec = _spec(cfg)
    js = range(0, 9) if cfg.theta > 0 else range(-8, 1)
    rep = multipliers.class_membership_report(spec, js)
    rows = [list(r) for r in rep.table()]
    checks = [Check(f"spread_{k}", v, 10.0, "<=") for k, v in rep.spread.items()]
    return ["j", "s", "cond1", "cond2"], rows, checks


def suite_decay(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    spec = _spec(cfg)
    mu = dec.frequencies[dec.frequencies > 0]
    js = spec.support_indices(float(mu.min()), float(mu.max()))
    norms = pieces.frequency_piece_norms(dec, spec, js)
    rows, gap = [], 0.0
    for j in js:
        T = dec.operator(spec.piece(j))
        pw = spectral.power_iteration_norm(T, iters=2000, tol=1e-14)
        gap = max(gap, abs(pw - norms[j]) / max(norms[j], 1e-300) if norms[j] > 0 else pw)
        rows.append([j, norms[j], pw])
    slope, usable = pieces.l2_decay_slope(dec, spec, js)
    predicted = -spec.theta * spec.beta / 2
    checks = [Check("usable_j", len(usable), 5, ">="),
              Check("slope_rel_err", abs(slope - predicted) / abs(predicted) if predicted else abs(slope), 0.15, "<="),
              Check("power_iteration_gap", gap, 1e-6, "<=")]
    return ["j", "max_abs_m_j", "power_iteration"], rows, checks


def suite_sparse_check(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    spec = _spec(cfg)
    fam = dyadic.build_dyadic_grids(g, cfg.mu, cfg.seed)
    res = sparse.domination_experiment(dec, spec, fam, cfg.r1, cfg.r2, cfg.trials, cfg.seed)
    rows = [[t, res.inner[t], res.forms[t], res.ratios[t]] for t in range(cfg.trials)]
    rows.append(["max", float("nan"), float("nan"), res.max_ratio])
    rows.append(["median", float("nan"), float("nan"), res.median_ratio])
    sp = sparse.sparsify([c.points for c in res.collection.cubes], g.size)
    checks = [Check("sparse_violations", len(sp.verify()), 0, "=="),
              Check("eta", sp.eta, 0.5, ">="),
              Check("max_ratio", res.max_ratio, 0.0, "finite"),
              Check("dual_gap", res.dual_gap, 1e-10, "<="),
              Check("clamped_fraction", res.collection.clamped_fraction, 0.3, "<=")]
    return ["trial", "inner_product", "sparse_form", "ratio"], rows, checks


def suite_grids(cfg):
    g = _model(cfg)
    fam = dyadic.build_dyadic_grids(g, cfg.mu, cfg.seed)
    rows, bad = [], 0
    for i, grid in enumerate(fam.grids):
        rep = dyadic.verify_grid_axioms(grid)
        bad += sum(rep.summary().values())
        for k in grid.levels:
            rows.append([i, k, grid.cell_count(k), grid.c1, grid.C1, int(rep.passed)])
    checks = [Check("axiom_violations", bad, 0, "=="),
              Check("uncovered_balls", len(fam.uncovered), 0, "=="),
              Check("covering_constant", fam.C, 0.0, "finite"),
              Check("grid_count", len(fam), 1, ">=")]
    return ["grid", "level", "cubes", "c1", "C1", "axioms_pass"], rows, checks


def suite_weights(cfg):
    g = _model(cfg)
    rows, low = [], math.inf
    for a in cfg.a:
        w = weights.power_weight(g, a)
        for p in cfg.p:
            for q in cfg.q:
                ap, rh = w.ap(p), w.rh(q)
                low = min(low, ap, rh)
                rows.append([a, p, ap, q, rh])
    return ["a", "p", "Ap", "q", "RHq"], rows, [Check("min_characteristic", low, 1.0, ">=")]


def suite_quantitative(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    spec = _spec(cfg)
    rep = weights.quantitative_suite(dec, spec.m, cfg.beta, cfg.mode, avals=cfg.a, trials=cfg.trials,
                                     seed=cfg.seed)
    rows = [[c.p, c.a, c.lower, c.upper, c.ceiling, c.characteristic, c.exponent, "pass" if c.passed else "fail"]
            for c in rep.cells]
    checks = [Check("failed_cells", sum(not c.passed for c in rep.cells), 0, "=="),
              Check("cells", len(rep.cells), 1, ">=")]
    return ["p", "a", "lower", "upper", "ceiling", "characteristic", "exponent", "verdict"], rows, checks


def suite_riesz(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    mu = np.unique(dec.frequencies)
    quad = np.array([propagators.riesz_scalar(x, 1.0, cfg.t) for x in mu])
    closed = propagators.riesz_closed_form_k1(mu, cfg.t)
    err = float(np.max(np.abs(quad - closed) / np.abs(closed)))
    sigma = propagators.riesz_multiplier(cfg.k, cfg.alpha, cfg.t)
    rows = [[x, complex(v).real, complex(v).imag] for x, v in zip(mu, sigma(mu))]
    zero = propagators.riesz_scalar(0.0, cfg.k, cfg.t)
    checks = [Check("k1_closed_form_rel_err", err, 1e-8, "<="),
              Check("value_at_zero_minus_one", abs(zero - 1), 0.0, "==")]
    return ["sqrt_lambda", "re_sigma", "im_sigma"], rows, checks


def suite_dispersive(cfg):
    g = _model(cfg)
    dec = spectral.decompose(g, cfg.s0)
    rng = np.random.default_rng(cfg.seed)
    f = rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)
    t, s = cfg.t, 0.37 * cfg.t
    u = propagators.dispersive_apply(dec, cfg.alpha, t, f)
    us = propagators.dispersive_apply(dec, cfg.alpha, s, u)
    ust = propagators.dispersive_apply(dec, cfg.alpha, s + t, f)
    u0 = propagators.dispersive_apply(dec, cfg.alpha, 0.0, f)
    iso = abs(np.linalg.norm(u) - np.linalg.norm(f)) / np.linalg.norm(f)
    group_err = float(np.linalg.norm(us - ust) / np.linalg.norm(f))
    rows = [[i, u[i].real, u[i].imag] for i in range(g.size)]
    checks = [Check("l2_isometry_rel_err", iso, 1e-10, "<="),
              Check("group_property_rel_err", group_err, 1e-9, "<="),
              Check("t0_identity_max_err", float(np.max(np.abs(u0 - f))), 0.0, "==")]
    return ["point", "re_u", "im_u"], rows, checks


SUITE_FUNCS = {
    "group": suite_group, "spectrum": suite_spectrum, "heat": suite_heat, "spectral": suite_spectral,
    "multiplier-check": suite_multiplier_check, "decay": suite_decay, "sparse-check": suite_sparse_check,
    "grids": suite_grids, "weights": suite_weights, "quantitative": suite_quantitative,
    "riesz": suite_riesz, "dispersive": suite_dispersive,
}
assert set(SUITE_FUNCS) == set(SUITES)


def run_experiment(cfg: ExperimentConfig, suite: str, out: str | Path | None = None) -> RunReport:
    if suite not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    start = time.perf_counter()
    header, rows, checks = SUITE_FUNCS[suite](cfg)
    elapsed = time.perf_counter() - start
    report = RunReport(suite, cfg, checks, header, rows, elapsed, partial=elapsed > cfg.budget)
    if out is not None:
        write_report(report, out)
    return report


# ----------------------------------------------------------------------
# output

def _header_lines(report: RunReport) -> list[str]:
    lines = [f"# schema={SCHEMA} suite={report.suite} config_hash={report.config.hash}"]
    lines += [f"# {line}" for line in report.config.canonical().splitlines()]
    return lines


def table_csv(report: RunReport) -> str:
    buf = io.StringIO()
    buf.write("\n".join(_header_lines(report)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    for row in report.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def checks_csv(report: RunReport) -> str:
    buf = io.StringIO()
    buf.write("\n".join(_header_lines(report)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "threshold", "relation", "verdict"])
    for c in report.checks:
        w.writerow([c.name, fmt(c.value), fmt(c.threshold), c.relation, c.verdict])
    if report.partial:
        w.writerow(["budget", fmt(report.wall_clock), fmt(report.config.budget), "<=", "fail"])
    return buf.getvalue()


def write_report(report: RunReport, out: str | Path) -> dict[str, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.suite.replace("-", "_")
    paths = {"table": out / f"{stem}.csv", "checks": out / f"{stem}_checks.csv",
             "meta": out / f"{stem}_meta.json"}
    paths["table"].write_text(table_csv(report))
    paths["checks"].write_text(checks_csv(report))
    meta = {"suite": report.suite, "config_hash": report.config.hash, "seed": report.config.seed,
            "wall_clock_s": report.wall_clock, "partial": report.partial,
            "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}
    paths["meta"].write_text(json.dumps(meta, indent=2) + "\n")
    return paths


def read_checks(path: str | Path) -> tuple[str, dict[str, tuple[float, str]]]:
    """``(suite, {name: (value, verdict)})`` from a checks CSV."""
    suite = ""
    rows = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    for line in lines:
        if line.startswith("# schema="):
            suite = dict(part.split("=", 1) for part in line[2:].split())["suite"]
    body = [l for l in lines if not l.startswith("#")]
    for rec in csv.DictReader(body):
        rows[rec["name"]] = (float(rec["value"]), rec["verdict"])
    return suite, rows


@dataclass(frozen=True)
class DiffRow:
    name: str
    value_a: float
    value_b: float
    ratio: float
    verdict_a: str
    verdict_b: str
    status: str  # "same", "changed" or "absent"


def _as_rows(report) -> tuple[str, dict[str, tuple[float, str]]]:
    if isinstance(report, RunReport):
        return report.suite, {c.name: (float(c.value), c.verdict) for c in report.checks}
    return read_checks(report)


def compare_runs(report_a, report_b) -> list[DiffRow]:
    """Per-check value ratios ``b / a`` and verdict changes."""
    suite_a, a = _as_rows(report_a)
    suite_b, b = _as_rows(report_b)
    if suite_a != suite_b:
        raise ValueError(f"cannot compare suite {suite_a!r} with {suite_b!r}")
    out = []
    for name in list(a) + [n for n in b if n not in a]:
        if name not in a or name not in b:
            va, da = a.get(name, (math.nan, ""))
            vb, db = b.get(name, (math.nan, ""))
            out.append(DiffRow(name, va, vb, math.nan, da, db, "absent"))
            continue
        (va, da), (vb, db) = a[name], b[name]
        if va == vb:
            ratio = 1.0
        elif va == 0:
            ratio = math.inf
        else:
            ratio = vb / va
        out.append(DiffRow(name, va, vb, ratio, da, db, "same" if da == db else "changed"))
    return out
