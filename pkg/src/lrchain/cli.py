"""Command-line front end.

Subcommands:

* ``constants``  - derived bound constants per decay rate, as a CSV table;
* ``verify``     - exact-vs-bound sweep over a time grid (config-driven);
* ``identities`` - residuals of the algebraic identities behind the bounds;
* ``disorder``   - Monte Carlo sweep over random heavy-tailed field chains.

Exit codes: 0 on success, 1 when a bound is violated or an identity check
fails, 2 for configuration problems.  With ``--out PREFIX`` each subcommand
writes ``PREFIX.csv`` (canonical, byte-stable) and ``PREFIX.json`` (mirror
with config echo and timings); without it the CSV goes to stdout.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .disorder import DisorderConfig, monte_carlo_sweep
from .harness import (
    CONSTANTS_CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    constants_rows,
    run_identities,
    run_verify,
)
from .model import ModelFormatError
from .serialize import render_csv, render_json

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _parent_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="PATH", help="JSON configuration file")
    parent.add_argument("--out", metavar="PREFIX", help="write PREFIX.csv and PREFIX.json instead of stdout")
    parent.add_argument("--seed", metavar="U64", type=int, help="override the configured seed")
    parent.add_argument("--threads", metavar="N", type=int, default=1, help="worker threads (default 1)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrchain",
        description="Finite spin-chain commutator bounds: exact dynamics vs analytic constants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _parent_flags()

    p_const = sub.add_parser(
        "constants",
        parents=[parent],
        help="tabulate derived constants (c_mu, K_mu, C0, v, ...) per decay rate",
    )
    p_const.add_argument("--mu", metavar="LIST", help="comma-separated decay rates (overrides config)")
    p_const.add_argument("--phi-norm", metavar="X", type=float, help="interaction strength (overrides config)")
    p_const.add_argument("--local-dim", metavar="D", type=int, help="on-site dimension (overrides config)")
    p_const.add_argument("--radius", metavar="R", type=int, help="lattice-sum radius (default: adaptive)")

    sub.add_parser("verify", parents=[parent], help="sweep a time grid: exact commutator norms vs bounds")
    sub.add_parser("identities", parents=[parent], help="replay the algebraic identities and report residuals")
    sub.add_parser("disorder", parents=[parent], help="Monte Carlo sweep over random sparse-field chains")
    return parser


def _check_seed(seed) -> int | None:
    if seed is None:
        return None
    if not 0 <= seed < (1 << 64):
        raise ConfigError(f"--seed must fit in 64 bits, got {seed}")
    return int(seed)


def _check_threads(threads: int) -> int:
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    return threads


def _load_json_config(path: str) -> dict:
    import json

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level value must be an object")
    return doc


def _cmd_constants(args) -> int:
    doc = _load_json_config(args.config) if args.config else {}
    unknown = set(doc) - {"mu", "phi_norm", "D", "radius"}
    if unknown:
        raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
    mus = doc.get("mu")
    if args.mu is not None:
        try:
            mus = [float(s) for s in args.mu.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"--mu: {exc}") from exc
    if isinstance(mus, (int, float)):
        mus = [float(mus)]
    if not mus:
        raise ConfigError("constants needs decay rates: --mu or a config with a 'mu' list")
    phi_norm = args.phi_norm if args.phi_norm is not None else doc.get("phi_norm")
    if phi_norm is None:
        raise ConfigError("constants needs --phi-norm or a config with 'phi_norm'")
    local_dim = args.local_dim if args.local_dim is not None else doc.get("D")
    if local_dim is None:
        raise ConfigError("constants needs --local-dim or a config with 'D'")
    radius = args.radius if args.radius is not None else doc.get("radius")

    rows = constants_rows(mus, float(phi_norm), int(local_dim), radius)
    csv_text = render_csv(CONSTANTS_CSV_HEADER, rows)
    if args.out:
        json_doc = {
            "config": {
                "mu": [float(m) for m in mus],
                "phi_norm": float(phi_norm),
                "D": int(local_dim),
                "radius": radius,
            },
            "header": list(CONSTANTS_CSV_HEADER),
            "rows": [list(r) for r in rows],
        }
        paths = _write_pair(args.out, csv_text, render_json(json_doc))
        print(f"wrote {paths[0]} and {paths[1]}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def _write_pair(prefix: str, csv_text: str, json_text: str) -> tuple:
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    csv_path, json_path = prefix + ".csv", prefix + ".json"
    with open(csv_path, "w") as fh:
        fh.write(csv_text)
    with open(json_path, "w") as fh:
        fh.write(json_text)
    return csv_path, json_path


def _experiment_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("this subcommand needs --config pointing at an experiment JSON file")
    cfg = ExperimentConfig.from_json(args.config)
    seed = _check_seed(args.seed)
    if args.out or seed is not None:
        cfg = ExperimentConfig(
            cfg.geom,
            cfg.phi,
            cfg.imp,
            cfg.mu,
            cfg.observable_a,
            cfg.observable_b,
            cfg.t_grid,
            bound_set=cfg.bound_set,
            model_path=cfg.model_path,
            out=args.out or cfg.out,
            seed=seed if seed is not None else cfg.seed,
        )
    return cfg


def _cmd_verify(args) -> int:
    cfg = _experiment_config(args)
    report = run_verify(cfg, threads=_check_threads(args.threads))
    if cfg.out:
        print(f"wrote {cfg.out}.csv and {cfg.out}.json")
        for line in report.summary_lines():
            print(line)
    else:
        sys.stdout.write(report.to_csv())
        for line in report.summary_lines():
            print(line, file=sys.stderr)
    if not report.ok:
        for line in report.diagnostic_dump():
            print(line, file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_identities(args) -> int:
    cfg = _experiment_config(args)
    report = run_identities(cfg)
    if cfg.out:
        print(f"wrote {cfg.out}.csv and {cfg.out}.json")
        for line in report.summary_lines():
            print(line)
    else:
        sys.stdout.write(report.to_csv())
        for line in report.summary_lines():
            print(line, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILURE


def _cmd_disorder(args) -> int:
    if not args.config:
        raise ConfigError("disorder needs --config pointing at a sweep JSON file")
    try:
        cfg = DisorderConfig.from_json(args.config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    seed = _check_seed(args.seed)
    if seed is not None:
        cfg = DisorderConfig(
            mu=cfg.mu,
            J=cfg.J,
            a=cfg.a,
            b=cfg.b,
            L=cfg.L,
            n_realizations=cfg.n_realizations,
            seed=seed,
            t_grid=cfg.t_grid,
            L_exact=cfg.L_exact,
            epsilon=cfg.epsilon,
        )
    start = time.perf_counter()
    report = monte_carlo_sweep(cfg, threads=_check_threads(args.threads))
    wall_ms = (time.perf_counter() - start) * 1e3
    if args.out:
        paths = _write_pair(args.out, report.to_csv(), report.to_json(wall_ms))
        print(f"wrote {paths[0]} and {paths[1]}")
        for line in report.summary_lines():
            print(line)
    else:
        sys.stdout.write(report.to_csv())
        for line in report.summary_lines():
            print(line, file=sys.stderr)
    return EXIT_FAILURE if report.violation_count else EXIT_OK


_COMMANDS = {
    "constants": _cmd_constants,
    "verify": _cmd_verify,
    "identities": _cmd_identities,
    "disorder": _cmd_disorder,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ModelFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
