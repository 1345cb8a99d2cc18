"""Command-line pipeline: simulate, check, diagnose, superpose.

Exit codes::

    0  every asserted check passed
    1  at least one asserted check failed (listed on stderr)
    2  usage or configuration error
    3  a referenced file or directory is missing
    4  the integration produced non-finite values

``NSSP_THREADS`` caps the FFT thread count.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, load_config, parse_config
from .lab.dynamic import (
    gronwall_envelope,
    monitor_ladder,
    nonlinear_cancellation,
    partial_cancellation,
    tail_quotient,
)
from .lab.static import (
    check_band_tail,
    check_bernstein,
    check_linf_bound,
    check_orthogonality,
    check_product_support,
    hhalf_equivalence,
    poly_superposition_identity,
    power_sum_bounds,
    superposition_identity,
    weighted_rearrangement,
)
from .lab.superposition import fit_superposition_config, superposition_diagnostics
from .solver import BlowUpSuspected, make_initial, run

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_BLOWUP = 4

CONFIG_COPY = "config.toml"
STATIC_CHECKS = "static_checks.csv"
DYNAMIC_CHECKS = "checks.csv"
SUPERPOSITION_CHECKS = "superposition_checks.csv"
LADDER_TABLE = "ladder.csv"


def _say(*parts) -> None:
    print(*parts, file=sys.stderr)


def _finish(reports, label: str) -> int:
    failed = [r for r in reports if not r.passed]
    print(f"{label}: {len(reports)} checks, {len(reports) - len(failed)} passed, {len(failed)} failed")
    for r in failed:
        where = " ".join(f"{key}={val:g}" for key, val in (("t", r.time), ("k", r.k), ("sigma", r.sigma)) if val is not None)
        _say(f"FAIL {r.name} {where} lhs={r.lhs:.17g} rhs={r.rhs:.17g} {r.context}".rstrip())
    return EXIT_CHECKS_FAILED if failed else EXIT_OK


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "seed_override", None) is not None:
        changes["seed"] = args.seed_override
    if getattr(args, "oversample", None) is not None:
        changes["oversample"] = args.oversample
    if getattr(args, "out", None) is not None:
        changes["output_dir"] = args.out
    return cfg.replace(**changes) if changes else cfg


def _initial_field(cfg: RunConfig, seed: int | None = None):
    return make_initial(
        cfg.initial_kind,
        cfg.grid(),
        seed=cfg.seed if seed is None else seed,
        spectrum_slope=cfg.spectrum_slope,
        amplitude=cfg.amplitude,
    )


def cmd_simulate(args) -> int:
    cfg = _effective_config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_COPY).write_text(cfg.to_toml())
    u0 = _initial_field(cfg)
    try:
        record = run(u0, cfg.solver_config(), cfg.k_ladder, cfg.oversample)
    except BlowUpSuspected as exc:
        if exc.record is not None:
            io.save_trajectory(out, exc.record, cfg.checkpoint_every, {"blow_up_time": exc.time})
        _say(f"blow-up suspected near t={exc.time}: {exc}")
        return EXIT_BLOWUP
    io.save_trajectory(out, record, cfg.checkpoint_every)
    last = record.diagnostics[-1]
    print(f"simulate: {len(record)} samples to t={last.t:g}, energy={last.energy:.17g}, wrote {out}")
    return EXIT_OK


def static_battery(u, cfg: RunConfig) -> list:
    """Field checks parameterised by the ladder and sigma list of ``cfg``."""
    ladder = cfg.k_ladder
    n = u.grid.n
    reports = []
    for a, k in enumerate(ladder):
        for l in ladder[a:]:
            reports.append(check_orthogonality(u, k, l))
        for alpha in (0.5, 1.0, 2.0):
            reports.append(check_bernstein(u, k, alpha))
        if k <= n:
            reports.append(check_product_support(u, k, k))
        for sigma in cfg.sigma_list:
            if sigma < 0:
                reports.append(check_linf_bound(u, k, sigma, cfg.oversample))
        reports.append(partial_cancellation(u, k))
    mean_free = not u.coeffs[(slice(None),) + (0,) * u.dim].any()
    if mean_free:
        for k, l in zip(ladder, ladder[1:]):
            reports.append(check_band_tail(u, k, l, cfg.oversample))
    reports.append(nonlinear_cancellation(u, cfg.dealias, cfg.nonlinear_form))
    for k in (1, 2, 3):
        reports.append(superposition_identity(u, k))
    reports.append(hhalf_equivalence(u, 1))
    for s in (1, 2, 3):
        reports.extend(poly_superposition_identity(u, 1, s))
        for l1 in (1, 2):
            for i in range(1, 2 * s):
                reports.extend(weighted_rearrangement(u, l1, i, s))
    for i in range(1, 11):
        for j in range(1, 11):
            reports.append(power_sum_bounds(i, j))
    return reports


def cmd_check(args) -> int:
    if args.checkpoint is not None:
        path = Path(args.checkpoint)
        if not path.is_file():
            _say(f"checkpoint not found: {path}")
            return EXIT_MISSING
        u, _ = io.read_checkpoint(path)
        cfg = RunConfig(dim=u.grid.dim, n=u.grid.n, nu=u.grid.nu, initial_kind=_any_kind(u.grid.dim))
        if args.config is not None:
            cfg = load_config(args.config)
        fields = [u]
        out = Path(args.out) if args.out else path.parent
    else:
        cfg = _effective_config(args)
        fields = [_initial_field(cfg, cfg.seed + i) for i in range(cfg.ensemble_size)]
        out = Path(cfg.output_dir)
    reports = []
    for u in fields:
        reports.extend(static_battery(u, cfg))
    out.mkdir(parents=True, exist_ok=True)
    io.write_checks_csv(out / STATIC_CHECKS, reports)
    return _finish(reports, "check")


def _any_kind(dim: int) -> str:
    return "taylor_green_2d" if dim == 2 else "random_divfree"


def _trajectory_config(directory: Path, args) -> RunConfig:
    if getattr(args, "config", None) is not None:
        return load_config(args.config)
    copy = directory / CONFIG_COPY
    if copy.is_file():
        return parse_config(copy.read_text(), str(copy))
    return RunConfig()


def _load(directory: Path):
    if not directory.is_dir():
        raise FileNotFoundError(f"trajectory directory not found: {directory}")
    return io.load_trajectory(directory)


def cmd_diagnose(args) -> int:
    directory = Path(args.trajectory)
    traj = _load(directory)
    cfg = _trajectory_config(directory, args)
    if args.oversample is not None:
        traj.oversample = args.oversample
    reports = []
    sigmas = [None] + [sigma for sigma in cfg.sigma_list if -1.0 <= sigma < 0.0]
    for sigma in sigmas:
        for result in monitor_ladder(traj, traj.k_ladder, sigma).values():
            reports.extend(result.reports)
    for k in traj.k_ladder:
        reports.append(tail_quotient(traj, k).report)
    for sigma in cfg.sigma_list:
        if -1.0 < sigma < 0.0:
            reports.extend(gronwall_envelope(traj, sigma).reports)
    out = Path(args.out) if args.out else directory
    out.mkdir(parents=True, exist_ok=True)
    io.write_checks_csv(out / DYNAMIC_CHECKS, reports)
    return _finish(reports, "diagnose")


def cmd_superpose(args) -> int:
    directory = Path(args.trajectory)
    traj = _load(directory)
    cfg = _trajectory_config(directory, args)
    s_max = args.s_max if args.s_max is not None else cfg.s_max
    l1 = args.l1 if args.l1 is not None else (cfg.l1 or None)
    i = cfg.i_max or None
    sup_cfg = fit_superposition_config(traj, s=args.s, l1=l1, i=i, s_max=s_max)
    report = superposition_diagnostics(traj, sup_cfg, s_max)
    out = Path(args.out) if args.out else directory
    out.mkdir(parents=True, exist_ok=True)
    io.write_checks_csv(out / SUPERPOSITION_CHECKS, report.reports)
    table = {"t": report.times}
    for idx in sorted(report.rung_series):
        table[f"W_{idx}"] = report.weighted_sums[idx]
        table[f"G_{idx}"] = report.gradient_sums[idx]
        table[f"H_{idx}"] = report.rung_series[idx]
    table["h1_direct"] = report.h1_direct
    io.write_table_csv(out / LADDER_TABLE, table)
    c = report.config
    print(
        f"superpose: m={c.m:.6g} C1={c.c1_fitted:.6g} C2={c.c2_fitted:.6g} m_tilde={c.m_tilde:.6g} "
        f"s={c.s} l1={c.l1} a(s)={c.a_s:.6g} s_min(nu/40)={report.s_min_nu40} s_min(nu/4)={report.s_min_nu4}"
    )
    return _finish(report.reports, "superpose")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nssp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a configured run and write CSV and checkpoints")
    p.add_argument("--config", required=True, help="TOML file or a bundled name (taylor_green_2d, random_3d)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed-override", type=int)
    p.add_argument("--oversample", type=int, choices=(1, 2))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="static inequality battery on a checkpoint or a configured ensemble")
    p.add_argument("checkpoint", nargs="?", help="checkpoint file (.nssp)")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--seed-override", type=int)
    p.add_argument("--oversample", type=int, choices=(1, 2))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("diagnose", help="differential inequality, Gronwall envelope and tail quotient")
    p.add_argument("trajectory", help="directory written by simulate")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--oversample", type=int, choices=(1, 2))
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("superpose", help="polynomial ladder diagnostics")
    p.add_argument("trajectory", help="directory written by simulate")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--s", type=int)
    p.add_argument("--l1", type=int)
    p.add_argument("--s-max", type=int)
    p.set_defaults(func=cmd_superpose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check" and args.checkpoint is None and args.config is None:
        parser.error("check needs a checkpoint path or --config")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _say(f"missing file: {exc}")
        return EXIT_MISSING
    except ConfigError as exc:
        _say(f"config error: {exc}")
        return EXIT_USAGE
    except ValueError as exc:
        _say(f"usage error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
