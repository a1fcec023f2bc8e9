"""Experiment orchestration: config files, verification sweeps, identity batches.

Two entry points tie the library together:

* ``run_verify`` sweeps a time grid, computing the exact evolved-commutator
  norm for a pair of observables on a model chain and every requested
  analytic bound, and tabulates values, applicability, and violations.
* ``run_identities`` replays the algebraic identities behind the
  impurity-improved bound (decoupled blocking, commuting split, off-diagonal
  block decomposition, phase conjugation, interpolant endpoint and
  derivative, and the local-commutator approximation inequality) on a
  concrete model and reports measured residuals against fixed thresholds.

Reports are written as CSV (canonical, byte-stable across reruns and thread
counts) plus a JSON mirror carrying the config echo and wall-clock timings.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundOutcome,
    LRParameters,
    apriori_bound,
    derivative_bound_constant,
    main_bound,
    main_constant,
    single_impurity_bound,
    uniform_impurity_bound,
)
from .dynamics import DecoupledDynamics, EvolutionContext, commutator_norm_evolved
from .geometry import ChainGeometry, SiteSupport, SupportError
from .model import (
    ImpuritySpec,
    ModelFormatError,
    NNInteraction,
    _fmt_path,
    _parse_matrix,
    build_decoupled_hamiltonian,
    build_nn_hamiltonian,
    build_perturbed_hamiltonian,
    decoupled_split,
    impurity_window,
    load_model,
)
from .operators import (
    DenseOperator,
    commutator,
    conditional_expectation,
    embed_local,
    local_commutator_epsilon,
    operator_norm,
)
from .serialize import fmt_float, render_csv, render_json

VIOLATION_TOL = 1e-9
IDENTITY_TOL = 1e-9
FD_STEP = 1e-4
FD_REL_TOL = 1e-6
RICHARDSON_REL_TOL = 1e-5
EPSILON_MAX_DIM = 256

BOUND_ORDER = ("apriori", "main", "corollary", "single_impurity")
DEFAULT_BOUNDS = ("apriori", "main")


class ConfigError(ValueError):
    """An experiment configuration file is malformed or inconsistent."""


@dataclass(frozen=True)
class ObservableSpec:
    """A single-site observable: the site index plus a local matrix."""

    site: int
    matrix: np.ndarray
    label: str

    @classmethod
    def from_json(cls, node, local_dim: int, where: str) -> ObservableSpec:
        if not isinstance(node, dict):
            raise ConfigError(f"{where}: expected an object with keys 'site' and 'op'")
        unknown = set(node) - {"site", "op"}
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        if "site" not in node or not isinstance(node["site"], int) or isinstance(node["site"], bool):
            raise ConfigError(f"{where}: 'site' must be an integer")
        if "op" not in node:
            raise ConfigError(f"{where}: missing 'op' (a named Pauli or an inline matrix)")
        op = node["op"]
        try:
            matrix = _parse_matrix(op, local_dim, _fmt_path(where, "op"))
        except ModelFormatError as exc:
            raise ConfigError(str(exc)) from exc
        label = op if isinstance(op, str) else "matrix"
        return cls(int(node["site"]), matrix, label)

    def operator(self) -> DenseOperator:
        return DenseOperator.single_site(self.site, self.matrix)

    @property
    def support(self) -> SiteSupport:
        return SiteSupport.single(self.site)

    def norm(self) -> float:
        return operator_norm(self.matrix)

    def echo(self) -> dict:
        if self.label != "matrix":
            return {"site": self.site, "op": self.label}
        rows = [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]
        return {"site": self.site, "op": rows}


class ExperimentConfig:
    """A verification or identity run: model, decay rate, observables, times.

    Construct directly from a loaded model for programmatic use, or with
    ``from_json`` from a config file whose `model` key names a model file
    (resolved relative to the config's own directory).
    """

    def __init__(
        self,
        geom: ChainGeometry,
        phi: NNInteraction,
        imp: ImpuritySpec,
        mu: float,
        observable_a: ObservableSpec,
        observable_b: ObservableSpec,
        t_grid,
        bound_set=DEFAULT_BOUNDS,
        model_path: str | None = None,
        out: str | None = None,
        seed: int | None = None,
    ):
        if mu <= 0:
            raise ConfigError(f"mu must be positive, got {mu}")
        grid = tuple(float(t) for t in t_grid)
        if not grid:
            raise ConfigError("t_grid must be nonempty")
        if any(not np.isfinite(t) for t in grid):
            raise ConfigError(f"t_grid entries must be finite, got {list(grid)}")
        for name, obs in (("observable_a", observable_a), ("observable_b", observable_b)):
            try:
                geom.check_site(obs.site)
            except SupportError as exc:
                raise ConfigError(f"{name}: {exc}") from exc
            if obs.matrix.shape != (geom.local_dim, geom.local_dim):
                raise ConfigError(
                    f"{name}: matrix shape {obs.matrix.shape} does not match local dimension {geom.local_dim}"
                )
        seen = []
        for name in bound_set:
            if name == "double_commutator":
                raise ConfigError(
                    "the double-commutator bound takes a third observable and a second time, which "
                    "verify records have no field for; use the identities suite or the bounds API"
                )
            if name not in BOUND_ORDER:
                raise ConfigError(f"unknown bound name {name!r}; known: {list(BOUND_ORDER)}")
            if name not in seen:
                seen.append(name)
        if not seen:
            raise ConfigError("bound set must name at least one bound")
        self.geom = geom
        self.phi = phi
        self.imp = imp
        self.mu = float(mu)
        self.observable_a = observable_a
        self.observable_b = observable_b
        self.t_grid = grid
        self.bound_set = tuple(n for n in BOUND_ORDER if n in seen)
        self.model_path = model_path
        self.out = out
        self.seed = None if seed is None else int(seed)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        path = str(path)
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top-level value must be an object")
        known = {"model", "mu", "observable_a", "observable_b", "t_grid", "bounds", "out", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        missing = {"model", "mu", "observable_a", "observable_b", "t_grid"} - set(doc)
        if missing:
            raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
        model_ref = doc["model"]
        if not isinstance(model_ref, str):
            raise ConfigError(f"{path}.model: expected a file path string")
        model_path = model_ref
        if not os.path.isabs(model_path):
            model_path = os.path.join(os.path.dirname(os.path.abspath(path)), model_path)
        geom, phi, imp = load_model(model_path)
        if not isinstance(doc["mu"], (int, float)) or isinstance(doc["mu"], bool):
            raise ConfigError(f"{path}.mu: expected a number")
        if not isinstance(doc["t_grid"], list):
            raise ConfigError(f"{path}.t_grid: expected a list of numbers")
        for i, t in enumerate(doc["t_grid"]):
            if not isinstance(t, (int, float)) or isinstance(t, bool):
                raise ConfigError(f"{path}.t_grid[{i}]: expected a number")
        bounds = doc.get("bounds", list(DEFAULT_BOUNDS))
        if not isinstance(bounds, list) or not all(isinstance(b, str) for b in bounds):
            raise ConfigError(f"{path}.bounds: expected a list of bound names")
        out = doc.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"{path}.out: expected a path string")
        seed = doc.get("seed")
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise ConfigError(f"{path}.seed: expected an integer")
        if out is not None and not os.path.isabs(out):
            out = os.path.join(os.path.dirname(os.path.abspath(path)), out)
        obs_a = ObservableSpec.from_json(doc["observable_a"], geom.local_dim, f"{path}.observable_a")
        obs_b = ObservableSpec.from_json(doc["observable_b"], geom.local_dim, f"{path}.observable_b")
        return cls(
            geom,
            phi,
            imp,
            float(doc["mu"]),
            obs_a,
            obs_b,
            doc["t_grid"],
            bound_set=tuple(bounds),
            model_path=model_path,
            out=out,
            seed=seed,
        )

    def echo(self) -> dict:
        return {
            "model": self.model_path,
            "chain": {
                "half_length": self.geom.half_length,
                "local_dim": self.geom.local_dim,
                "impurity_sites": [int(x) for x in self.imp.sites],
                "couplings": {str(x): float(self.imp.coupling(x)) for x in self.imp.sites},
                "interaction_strength": self.phi.strength,
            },
            "mu": self.mu,
            "observable_a": self.observable_a.echo(),
            "observable_b": self.observable_b.echo(),
            "t_grid": list(self.t_grid),
            "bounds": list(self.bound_set),
            "out": self.out,
            "seed": self.seed,
        }

    def parameters(self, radius: int | None = None) -> LRParameters:
        return LRParameters.compute(self.mu, self.phi.strength, radius)


# ---------------------------------------------------------------------------
# verification sweep

@dataclass(frozen=True)
class ExperimentRecord:
    """One grid point: exact commutator norm against every requested bound."""

    t: float
    distance: int
    window_size: int
    exact_norm: float
    bounds: tuple
    wall_time_ms: float

    def bound(self, name: str) -> BoundOutcome:
        for n, outcome in self.bounds:
            if n == name:
                return outcome
        raise KeyError(f"bound {name!r} not evaluated in this record")

    def violations(self, tol: float = VIOLATION_TOL) -> list:
        out = []
        for name, outcome in self.bounds:
            if outcome.applicable and self.exact_norm > outcome.value + tol:
                out.append(
                    f"t = {fmt_float(self.t)}: exact norm {fmt_float(self.exact_norm)} exceeds "
                    f"{name} bound {fmt_float(outcome.value)}"
                )
        return out


def _best_single_impurity(params, local_dim, support_a, support_b, imp, t, scale) -> BoundOutcome:
    if imp.is_empty():
        return BoundOutcome.not_applicable("model has no impurities")
    window = impurity_window(support_a, support_b, imp)
    if not window:
        return BoundOutcome.not_applicable(
            f"no impurity site in the window [{support_a.hi + 3}, {support_b.lo - 3}]"
        )
    outcomes = [
        single_impurity_bound(params, local_dim, support_a, support_b, imp, site, t, scale)
        for site in window
    ]
    applicable = [o for o in outcomes if o.applicable]
    if not applicable:
        return outcomes[0]
    return min(applicable, key=lambda o: o.value)


def _evaluate_bounds(cfg: ExperimentConfig, params: LRParameters, t: float, scale: float) -> tuple:
    sa, sb = cfg.observable_a.support, cfg.observable_b.support
    d = sa.distance(sb)
    out = []
    for name in cfg.bound_set:
        if name == "apriori":
            outcome = BoundOutcome(apriori_bound(params, t, d, scale), True)
        elif name == "main":
            outcome = main_bound(params, cfg.geom.local_dim, sa, sb, cfg.imp, t, scale)
        elif name == "corollary":
            try:
                outcome = uniform_impurity_bound(params, cfg.geom.local_dim, sa, sb, cfg.imp, t, scale)
            except ValueError as exc:
                outcome = BoundOutcome.not_applicable(str(exc))
        else:
            outcome = _best_single_impurity(params, cfg.geom.local_dim, sa, sb, cfg.imp, t, scale)
        out.append((name, outcome))
    return tuple(out)


@dataclass(frozen=True)
class VerifyReport:
    """Everything a verification sweep produced, ready to serialize."""

    config: dict
    parameters: LRParameters
    bound_set: tuple
    records: tuple
    improvement_points: tuple
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def csv_header(self) -> tuple:
        cols = ["t", "dAB", "N", "exact_norm"]
        for name in self.bound_set:
            cols.append(name)
            if name != "apriori":
                cols.append(f"{name}_applicable")
        return tuple(cols)

    def to_csv(self) -> str:
        rows = []
        for r in self.records:
            row = [r.t, r.distance, r.window_size, r.exact_norm]
            for name, outcome in r.bounds:
                row.append(outcome.value)
                if name != "apriori":
                    row.append(outcome.applicable)
            rows.append(row)
        return render_csv(self.csv_header(), rows)

    def to_json_doc(self) -> dict:
        p = self.parameters
        return {
            "config": self.config,
            "derived_parameters": {
                "mu": p.mu,
                "phi_norm": p.phi_norm,
                "c_mu": p.c_mu,
                "K_mu": p.K_mu,
                "C0": p.C0,
                "v": p.v,
                "series_radius": p.series_radius,
                "main_constant": main_constant(p, int(self.config["chain"]["local_dim"])),
                "derivative_bound_constant": derivative_bound_constant(p),
            },
            "records": [
                {
                    "t": r.t,
                    "dAB": r.distance,
                    "N": r.window_size,
                    "exact_norm": r.exact_norm,
                    "bounds": {
                        name: {
                            "value": outcome.value,
                            "applicable": outcome.applicable,
                            "reason": outcome.reason,
                            "window": [int(x) for x in outcome.window],
                            "prefactor_product": outcome.prefactor_product,
                        }
                        for name, outcome in r.bounds
                    },
                }
                for r in self.records
            ],
            "timings_ms": [r.wall_time_ms for r in self.records],
            "improvement_points": [
                {"t": t, "main": m, "apriori": a} for t, m, a in self.improvement_points
            ],
            "violations": list(self.violations),
        }

    def to_json(self) -> str:
        return render_json(self.to_json_doc())

    def diagnostic_dump(self) -> list:
        lines = []
        for msg in self.violations:
            lines.append(f"VIOLATION: {msg}")
        for r in self.records:
            if not r.violations():
                continue
            lines.append(
                f"  record t = {fmt_float(r.t)}: dAB = {r.distance}, N = {r.window_size}, "
                f"exact = {fmt_float(r.exact_norm)}"
            )
            for name, outcome in r.bounds:
                val = "n/a" if outcome.value is None else fmt_float(outcome.value)
                lines.append(f"    {name}: value = {val}, applicable = {outcome.applicable}, reason = {outcome.reason}")
        return lines

    def summary_lines(self) -> list:
        lines = [
            f"records: {len(self.records)}",
            f"violations: {len(self.violations)}",
            f"improvement points (main < apriori): {len(self.improvement_points)}",
        ]
        if self.improvement_points:
            t, m, a = self.improvement_points[0]
            lines.append(
                f"  first at t = {fmt_float(t)}: main {fmt_float(m)} < apriori {fmt_float(a)}"
            )
        return lines


def find_improvement_points(records) -> tuple:
    """Grid points where the impurity-improved bound strictly beats the a-priori one."""
    out = []
    for r in records:
        try:
            apriori = r.bound("apriori")
            main = r.bound("main")
        except KeyError:
            continue
        if main.applicable and main.window and apriori.applicable and main.value < apriori.value:
            out.append((r.t, main.value, apriori.value))
    return tuple(out)


def run_verify(cfg: ExperimentConfig, threads: int = 1, write: bool = True) -> VerifyReport:
    """Sweep the time grid, compare exact norms with all requested bounds.

    Records at distinct grid points may be computed concurrently; emission is
    ordered by grid index, so the CSV bytes never depend on scheduling.  When
    the config carries an output prefix and `write` is true, the CSV and its
    JSON mirror are written to `<prefix>.csv` / `<prefix>.json`.
    """
    params = cfg.parameters()
    ctx = EvolutionContext(build_perturbed_hamiltonian(cfg.phi, cfg.imp, cfg.geom), cfg.geom)
    a = cfg.observable_a.operator()
    b = cfg.observable_b.operator()
    scale = cfg.observable_a.norm() * cfg.observable_b.norm()
    sa, sb = cfg.observable_a.support, cfg.observable_b.support
    d = sa.distance(sb)
    window = impurity_window(sa, sb, cfg.imp)

    def one(t: float) -> ExperimentRecord:
        start = time.perf_counter()
        exact = commutator_norm_evolved(ctx, a, b, t)
        outcomes = _evaluate_bounds(cfg, params, t, scale)
        wall = (time.perf_counter() - start) * 1e3
        return ExperimentRecord(t, d, len(window), exact, outcomes, wall)

    if threads > 1 and len(cfg.t_grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(one, cfg.t_grid))
    else:
        records = tuple(one(t) for t in cfg.t_grid)

    violations = tuple(msg for r in records for msg in r.violations())
    report = VerifyReport(
        config=cfg.echo(),
        parameters=params,
        bound_set=cfg.bound_set,
        records=records,
        improvement_points=find_improvement_points(records),
        violations=violations,
    )
    if write and cfg.out is not None:
        write_report(report, cfg.out)
    return report


def write_report(report, prefix: str) -> tuple:
    """Write `<prefix>.csv` and `<prefix>.json`; returns the two paths."""
    prefix = str(prefix)
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    csv_path, json_path = prefix + ".csv", prefix + ".json"
    with open(csv_path, "w") as fh:
        fh.write(report.to_csv())
    with open(json_path, "w") as fh:
        fh.write(report.to_json())
    return csv_path, json_path


# ---------------------------------------------------------------------------
# identity batch

@dataclass(frozen=True)
class IdentityCheck:
    """One replayed identity: measured residual against a fixed threshold."""

    name: str
    residual: float | None
    threshold: float
    status: str  # "pass", "fail", "skipped", or "error"
    detail: str = ""

    @classmethod
    def measured(cls, name: str, residual: float, threshold: float, detail: str = "") -> IdentityCheck:
        status = "pass" if residual <= threshold else "fail"
        return cls(name, float(residual), threshold, status, detail)


@dataclass(frozen=True)
class IdentitiesReport:
    config: dict
    site: int
    t: float
    checks: tuple
    wall_time_ms: float

    @property
    def ok(self) -> bool:
        return all(c.status in ("pass", "skipped") for c in self.checks)

    def csv_header(self) -> tuple:
        return ("check", "residual", "threshold", "status")

    def to_csv(self) -> str:
        return render_csv(
            self.csv_header(),
            ((c.name, c.residual, c.threshold, c.status) for c in self.checks),
        )

    def to_json_doc(self) -> dict:
        return {
            "config": self.config,
            "decoupling_site": self.site,
            "t": self.t,
            "checks": [
                {
                    "name": c.name,
                    "residual": c.residual,
                    "threshold": c.threshold,
                    "status": c.status,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
            "wall_time_ms": self.wall_time_ms,
        }

    def to_json(self) -> str:
        return render_json(self.to_json_doc())

    def summary_lines(self) -> list:
        lines = []
        for c in self.checks:
            res = "-" if c.residual is None else fmt_float(c.residual)
            line = f"{c.status.upper():7s} {c.name}: residual {res} (threshold {fmt_float(c.threshold)})"
            if c.detail:
                line += f" [{c.detail}]"
            lines.append(line)
        lines.append(f"identity batch: {'ok' if self.ok else 'FAILED'}")
        return lines


def pick_decoupling_site(cfg: ExperimentConfig) -> int:
    """First impurity site usable for the decoupling comparison.

    The site must lie strictly between the observables (one-site buffer on
    the left) and at least two sites from either chain end so both touching
    bonds plus a neighbour exist.
    """
    lo = max(cfg.observable_a.support.hi + 2, -cfg.geom.half_length + 2)
    hi = min(cfg.observable_b.support.lo - 1, cfg.geom.half_length - 2)
    for site in cfg.imp.sites:
        if lo <= site <= hi:
            return site
    raise ConfigError(
        f"identity batch needs an impurity site in [{lo}, {hi}] "
        f"(strictly between the observables, away from the chain ends); "
        f"model has impurities at {list(cfg.imp.sites)}"
    )


def _norm(m) -> float:
    return operator_norm(m)


def run_identities(cfg: ExperimentConfig, write: bool = True) -> IdentitiesReport:
    """Replay the identity suite behind the impurity-improved bound.

    Geometry problems (no usable impurity site, overlapping supports) are
    reported as per-check errors, not raised, so one bad identity never
    hides the rest.  Exit-code policy is the caller's: `ok` is true iff
    every check passed or was skipped.
    """
    start = time.perf_counter()
    checks = []
    t = max((abs(t) for t in cfg.t_grid), default=0.0)
    geom, phi, imp = cfg.geom, cfg.phi, cfg.imp
    a = cfg.observable_a.operator()
    b = cfg.observable_b.operator()
    site = pick_decoupling_site(cfg)  # ConfigError propagates: nothing below can run without it
    dd = DecoupledDynamics(phi, imp, site, geom)

    def guarded(name: str, threshold: float, fn) -> None:
        try:
            residual, detail = fn()
        except (SupportError, ValueError) as exc:
            checks.append(IdentityCheck(name, None, threshold, "error", str(exc)))
            return
        checks.append(IdentityCheck.measured(name, residual, threshold, detail))

    def check_blocking():
        res = max(dd.blocking_residual(a, b, ss) for ss in (0.5 * t, t))
        return res, f"observables on opposite sides of site {site}, decoupled evolution"

    def check_split():
        left, right = decoupled_split(phi, imp, site, geom)
        total = build_decoupled_hamiltonian(phi, imp, site, geom)
        r1 = _norm((left + right - total).matrix)
        r2 = _norm(commutator(left, right).matrix)
        return max(r1, r2), "left + right reassembly and [left, right] = 0"

    def check_blocks():
        diff = (build_nn_hamiltonian(phi, geom) - build_decoupled_hamiltonian(phi, imp, site, geom)).matrix
        acc = np.zeros_like(diff)
        for j, k in dd.block_pairs():
            acc += dd.block(j, k).matrix
        return _norm(acc - diff), "off-diagonal blocks sum to the decoupling defect"

    def check_phase():
        res = 0.0
        for j, k in dd.block_pairs():
            for s in (0.3 * t, 0.7 * t, t):
                lhs = dd.decoupled.evolve(dd.block(j, k), s)
                rhs = dd.phase(j, k, s) * dd.reduced.evolve(dd.block(j, k), s)
                res = max(res, _norm((lhs - rhs).matrix))
        return res, "decoupled evolution = phase * reduced evolution on each block"

    def check_endpoint():
        res = max(dd.interpolant_norm(a, b, j, k, t, t) for j, k in dd.block_pairs())
        return res, "interpolant vanishes at s = t"

    def check_derivative():
        s = 0.4 * t
        worst = 0.0
        for j, k in dd.block_pairs():
            analytic = dd.interpolant_derivative(a, b, j, k, s, t)
            fd = dd.interpolant_derivative_fd(a, b, j, k, s, t, step=FD_STEP)
            denom = max(_norm(analytic.matrix), 1e-300)
            worst = max(worst, _norm((analytic - fd).matrix) / denom)
        return worst, f"central difference, step {fmt_float(FD_STEP)}, s = 0.4 t"

    def check_derivative_richardson():
        s = 0.4 * t
        worst = 0.0
        for j, k in dd.block_pairs():
            analytic = dd.interpolant_derivative(a, b, j, k, s, t)
            fd1 = dd.interpolant_derivative_fd(a, b, j, k, s, t, step=FD_STEP)
            fd2 = dd.interpolant_derivative_fd(a, b, j, k, s, t, step=0.5 * FD_STEP)
            extrap = (4.0 * fd2.matrix - fd1.matrix) / 3.0
            denom = max(_norm(analytic.matrix), 1e-300)
            worst = max(worst, _norm(analytic.matrix - extrap) / denom)
        return worst, "step-halved extrapolation cancels the quadratic truncation term"

    def check_projection():
        evolved = dd.full.evolve(a, t)
        keep = SiteSupport(
            max(a.support.lo - 1, -geom.half_length),
            min(a.support.hi + 1, geom.half_length),
        )
        eps = local_commutator_epsilon(evolved, keep, geom)
        projected = conditional_expectation(evolved, keep, geom)
        lhs = _norm((evolved - projected).matrix)
        excess = lhs - eps * _norm(evolved.matrix)
        return max(excess, 0.0), (
            f"||(id - E)(evolved A)|| = {fmt_float(lhs)} vs eps * norm = "
            f"{fmt_float(eps * _norm(evolved.matrix))} on keep = {keep}"
        )

    guarded("decoupled_blocking", IDENTITY_TOL, check_blocking)
    guarded("commuting_split", IDENTITY_TOL, check_split)
    guarded("offdiagonal_decomposition", IDENTITY_TOL, check_blocks)
    guarded("phase_conjugation", IDENTITY_TOL, check_phase)
    guarded("interpolant_endpoint", IDENTITY_TOL, check_endpoint)
    if t > 0:
        guarded("interpolant_derivative_fd", FD_REL_TOL, check_derivative)
        guarded("interpolant_derivative_richardson", RICHARDSON_REL_TOL, check_derivative_richardson)
    else:
        checks.append(IdentityCheck("interpolant_derivative_fd", None, FD_REL_TOL, "skipped", "needs t > 0"))
        checks.append(
            IdentityCheck("interpolant_derivative_richardson", None, RICHARDSON_REL_TOL, "skipped", "needs t > 0")
        )
    if geom.total_dim <= EPSILON_MAX_DIM:
        guarded("local_projection_inequality", IDENTITY_TOL, check_projection)
    else:
        checks.append(
            IdentityCheck(
                "local_projection_inequality",
                None,
                IDENTITY_TOL,
                "skipped",
                f"unitary-set enumeration too large for total dimension {geom.total_dim} > {EPSILON_MAX_DIM}",
            )
        )

    wall = (time.perf_counter() - start) * 1e3
    report = IdentitiesReport(config=cfg.echo(), site=site, t=t, checks=tuple(checks), wall_time_ms=wall)
    if write and cfg.out is not None:
        write_report(report, cfg.out)
    return report


# ---------------------------------------------------------------------------
# constants table

CONSTANTS_CSV_HEADER = ("mu", "phi_norm", "D", "c_mu", "K_mu", "C0", "v", "C_thm31", "C_mu_lem44", "series_radius")


def constants_rows(mus, phi_norm: float, local_dim: int, radius: int | None = None) -> list:
    """One row of derived constants per decay rate, in the fixed CSV column order."""
    rows = []
    for mu in mus:
        p = LRParameters.compute(float(mu), float(phi_norm), radius)
        rows.append(
            (
                p.mu,
                p.phi_norm,
                int(local_dim),
                p.c_mu,
                p.K_mu,
                p.C0,
                p.v,
                main_constant(p, int(local_dim)),
                derivative_bound_constant(p),
                p.series_radius,
            )
        )
    return rows


def constants_csv(mus, phi_norm: float, local_dim: int, radius: int | None = None) -> str:
    return render_csv(CONSTANTS_CSV_HEADER, constants_rows(mus, phi_norm, local_dim, radius))
